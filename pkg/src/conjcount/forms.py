"""
Indefinite binary quadratic forms and their link to hyperbolic classes of SL2(Z).

A primitive form [a, b, c] of non-square discriminant d corresponds to its
automorph, the generator of the form's stabilizer. ``build_frame`` computes
the matrix T whose columns are the fixed points of the automorph, which
diagonalizes it; every count in :mod:`conjcount.counting` is done in that
frame.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .exactnum import IMat2, QMat2, QuadRat

__all__ = [
    "InvalidForm", "QForm", "PellSolution", "ClassFrame", "MatrixClass",
    "pell_fundamental", "pell_bruteforce", "automorph", "class_of_matrix",
    "act", "reduce_form", "is_reduced", "reduction_cycle", "equivalent",
    "build_frame", "parse_form",
]


class InvalidForm(ValueError):
    """Raised for non-indefinite, square-discriminant or imprimitive input."""


def _is_square(n):
    if n < 0:
        return False
    r = math.isqrt(n)
    return r * r == n


@dataclass(frozen=True)
class QForm:
    a: int
    b: int
    c: int

    def __post_init__(self):
        for name in ("a", "b", "c"):
            object.__setattr__(self, name, int(getattr(self, name)))
        d = self.disc
        if d <= 0:
            raise InvalidForm(f"form [{self.a},{self.b},{self.c}] has discriminant {d} <= 0")
        if _is_square(d):
            raise InvalidForm(f"form [{self.a},{self.b},{self.c}] has square discriminant {d}")
        if math.gcd(self.a, self.b, self.c) != 1:
            raise InvalidForm(f"form [{self.a},{self.b},{self.c}] is not primitive")

    @property
    def disc(self):
        return self.b * self.b - 4 * self.a * self.c

    @property
    def d(self):
        return self.disc

    def __call__(self, x, y):
        return self.a * x * x + self.b * x * y + self.c * y * y

    def gram2(self):
        """Twice the Gram matrix, (2a, b; b, 2c), as an IMat2."""
        return IMat2(2 * self.a, self.b, self.b, 2 * self.c)

    def __str__(self):
        return f"[{self.a},{self.b},{self.c}]"


def parse_form(text):
    """Parse 'a,b,c' (brackets and spaces allowed)."""
    parts = text.strip().strip("[]()").replace(" ", "").split(",")
    if len(parts) != 3:
        raise InvalidForm(f"expected a,b,c but got {text!r}")
    try:
        a, b, c = (int(p) for p in parts)
    except ValueError as exc:
        raise InvalidForm(f"non-integer coefficient in {text!r}") from exc
    return QForm(a, b, c)


@dataclass(frozen=True)
class PellSolution:
    d: int
    t0: int
    u0: int

    @property
    def eps(self):
        return QuadRat(self.d, Fraction(self.t0, 2), Fraction(self.u0, 2))

    @property
    def log_eps(self):
        return math.log((self.t0 + self.u0 * math.sqrt(self.d)) / 2)


def _check_disc(d):
    d = int(d)
    if d <= 0:
        raise InvalidForm(f"discriminant {d} is not positive")
    if _is_square(d):
        raise InvalidForm(f"discriminant {d} is a perfect square")
    if d % 4 not in (0, 1):
        raise InvalidForm(f"discriminant {d} is not 0 or 1 mod 4")
    return d


def _pell_one(m):
    """Fundamental solution of x^2 - m y^2 = 1 from the continued fraction of sqrt(m)."""
    a0 = math.isqrt(m)
    P, Q, a = 0, 1, a0
    h_prev, h = 1, a0
    k_prev, k = 0, 1
    while h * h - m * k * k != 1:
        P = a * Q - P
        Q = (m - P * P) // Q
        a = (a0 + P) // Q
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
    return h, k


def _icbrt_solve(x1):
    """Integer t > 2 with t^3 - 3t = 2*x1, or None."""
    target = 2 * x1
    lo, hi = 2, 3
    while hi ** 3 - 3 * hi < target:
        hi *= 2
    while lo < hi:
        mid = (lo + hi) // 2
        if mid ** 3 - 3 * mid < target:
            lo = mid + 1
        else:
            hi = mid
    return lo if lo ** 3 - 3 * lo == target else None


def pell_fundamental(d):
    """Minimal positive (t0, u0) with t0^2 - d u0^2 = 4."""
    d = _check_disc(d)
    if d % 4 == 0:
        x, y = _pell_one(d // 4)
        return PellSolution(d, 2 * x, y)
    # d = 1 mod 4: the "=4" unit is either 2(x1 + y1 sqrt d)/2 or its cube root
    x1, y1 = _pell_one(d)
    t = _icbrt_solve(x1)
    if t is not None:
        u2, rem = divmod(t * t - 4, d)
        if rem == 0 and _is_square(u2):
            return PellSolution(d, t, math.isqrt(u2))
    return PellSolution(d, 2 * x1, 2 * y1)


def pell_bruteforce(d, cap=10 ** 6):
    """Search u = 1, 2, ... for 4 + d u^2 square; None if nothing up to cap."""
    d = _check_disc(d)
    for u in range(1, cap + 1):
        s = 4 + d * u * u
        t = math.isqrt(s)
        if t * t == s:
            return PellSolution(d, t, u)
    return None


def automorph(q, pell=None):
    pell = pell or pell_fundamental(q.disc)
    t0, u0 = pell.t0, pell.u0
    num11, num22 = t0 - q.b * u0, t0 + q.b * u0
    if num11 % 2 or num22 % 2:
        raise ArithmeticError(f"parity failure building automorph of {q}")
    return IMat2(num11 // 2, -q.c * u0, q.a * u0, num22 // 2)


def act(q, g):
    """The form (x, y) -> q(g (x, y)), i.e. Gram matrix g^T G g."""
    a11, a12, a21, a22 = g.entries()
    a = q(a11, a21)
    c = q(a12, a22)
    b = 2 * q.a * a11 * a12 + q.b * (a11 * a22 + a12 * a21) + 2 * q.c * a21 * a22
    return QForm(a, b, c)


@dataclass(frozen=True)
class MatrixClass:
    """phi^{-1} of a hyperbolic matrix: m = sign * automorph(form)^power.

    ``power`` is None when it exceeds the search bound.
    """
    form: QForm
    power: int | None
    sign: int


def class_of_matrix(m, max_power=10_000):
    if m.det != 1:
        raise ValueError(f"expected det 1, got {m.det}")
    tr = m.trace
    if abs(tr) <= 2:
        raise ValueError(f"matrix {m} is not hyperbolic (|trace| = {abs(tr)})")
    sign = 1 if tr > 0 else -1
    mm = m * sign
    a11, a12, a21, a22 = mm.entries()
    u = math.gcd(a21, a22 - a11, a12)
    q = QForm(a21 // u, (a22 - a11) // u, -a12 // u)
    pell = pell_fundamental(q.disc)
    # (t_k + u_k sqrt d)/2 = eps^k, stepped with the integer recurrence
    t_k, u_k, d = pell.t0, pell.u0, q.disc
    power = None
    for k in range(1, max_power + 1):
        if t_k == mm.trace and u_k == u:
            power = k
            break
        if t_k > mm.trace:
            break
        t_k, u_k = (t_k * pell.t0 + d * u_k * pell.u0) // 2, (t_k * pell.u0 + u_k * pell.t0) // 2
    return MatrixClass(q, power, sign)


def is_reduced(q):
    """0 < b < sqrt d and sqrt d - b < 2|a| < sqrt d + b, decided in integers."""
    d, b, a2 = q.disc, q.b, 2 * abs(q.a)
    if b <= 0 or b * b >= d:
        return False
    if (a2 + b) ** 2 <= d:
        return False
    return a2 - b <= 0 or (a2 - b) ** 2 < d


def _normalize(b, c, d, s):
    """r = -b mod 2|c| placed in (sqrt d - 2|c|, sqrt d) or (-|c|, |c|]."""
    m = 2 * abs(c)
    if c * c < d:
        return s - ((s + b) % m)
    r = (-b) % m
    return r - m if r > abs(c) else r


def _rho(q, s):
    """One reduction step and the SL2(Z) matrix realizing it."""
    d = q.disc
    r = _normalize(q.b, q.c, d, s)
    k = (q.b + r) // (2 * q.c)
    return QForm(q.c, r, (r * r - d) // (4 * q.c)), IMat2(0, -1, 1, k)


def reduce_form(q):
    """Reduced form equivalent to q and g in SL2(Z) with act(q, g) equal to it."""
    s = math.isqrt(q.disc)
    g = IMat2.identity()
    while not is_reduced(q):
        q, step = _rho(q, s)
        g = g @ step
    return q, g


def reduction_cycle(q):
    """The rho-cycle of reduced forms through the reduction of q."""
    start, _ = reduce_form(q)
    s = math.isqrt(start.disc)
    cycle = [start]
    cur, _ = _rho(start, s)
    while cur != start:
        cycle.append(cur)
        cur, _ = _rho(cur, s)
    return cycle


def equivalent(q1, q2):
    if q1.disc != q2.disc:
        return False
    r2, _ = reduce_form(q2)
    return r2 in reduction_cycle(q1)


@dataclass(frozen=True)
class ClassFrame:
    form: QForm
    pell: PellSolution
    theta1: QuadRat
    theta2: QuadRat
    T: QMat2
    Tinv: QMat2
    M: IMat2
    eps: QuadRat
    nu: int = 1
    mu_primitive: float = field(default=0.0)

    @property
    def d(self):
        return self.form.disc

    @property
    def mu(self):
        """Length of the class P^nu, nu times 2 log eps."""
        return self.nu * self.mu_primitive

    @property
    def delta(self):
        """det T = theta1 - theta2 = sqrt(d)/a."""
        return self.theta1 - self.theta2


def build_frame(q, nu=1):
    if int(nu) < 1:
        raise ValueError(f"class power must be >= 1, got {nu}")
    d = q.disc
    pell = pell_fundamental(d)
    sq = QuadRat.sqrt(d)
    theta1 = (sq - q.b) / (2 * q.a)
    theta2 = (-sq - q.b) / (2 * q.a)
    for th in (theta1, theta2):
        if q.a * th * th + q.b * th + q.c != 0:
            raise ArithmeticError(f"root check failed for {q}")
    T = QMat2(d, theta1, theta2, 1, 1)
    Tinv = T.inverse()
    M = automorph(q, pell)
    eps = pell.eps
    diag = QMat2(d, eps, 0, 0, eps.inverse())
    if T @ diag @ Tinv != M:
        raise ArithmeticError(f"diagonalization check failed for {q}")
    return ClassFrame(q, pell, theta1, theta2, T, Tinv, M, eps, int(nu), 2.0 * pell.log_eps)
