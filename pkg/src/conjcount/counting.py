"""
Orbit enumeration and counting for hyperbolic conjugacy classes of SL2(Z).

A coset <M> N (M the automorph, N an integer matrix of determinant n) is
represented in the frame of the class axis by gamma' = T^-1 N T = (A B; C D).
With z' = x + iy the base point in that frame,

    Q_N = (x^2 + y^2) AC + BD + x (AD + BC)
    r^2 = (Q_N^2 + n^2 y^2) / (n^2 y^2)

and the coset is counted at level X when r^2 <= X^2. Left multiplication by
M scales v = |Az'+B|^2 / |Cz'+D|^2 by eps^4 and leaves Q_N alone, so the
canonical representative is the one with v in [1, eps^4).

Decisions are exact: Q_N and the two window quantities are integer quadratic
forms in (a, b, c, d) divided by a common denominator, with values in
Z + Z sqrt(d). Floats are used only as a certified fast path.
"""
from __future__ import annotations

import bisect
import functools
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _accel, _kernels
from .exactnum import HPoint, IMat2, QMat2, QuadRat, as_fraction, sign_pq
from .forms import ClassFrame, QForm, build_frame
from .huber import HuberWindow, coeff_A

__all__ = [
    "PSL2", "SL2", "HorizonExceeded", "CertificationError", "OracleNotStabilized",
    "OrbitPoint", "RadiusList", "SpectralDatum",
    "conj_entries", "fq_value", "radius2", "canonicalize",
    "enumerate_orbit", "radius_list", "count", "count_fq", "weighted_count",
    "main_term", "sl2z_spectral_datum", "error_term",
    "oracle_bfs", "oracle_bfs_count", "x_to_t", "t_to_x", "clear_cache",
]

PSL2 = "psl2"
SL2 = "sl2"


class HorizonExceeded(ValueError):
    """A count was requested beyond the certified horizon of a RadiusList."""


class CertificationError(RuntimeError):
    """Box doubling changed the enumeration output."""


class OracleNotStabilized(RuntimeError):
    """The breadth-first oracle did not settle."""


def _check_mode(mode):
    mode = str(mode).lower()
    if mode not in (PSL2, SL2):
        raise ValueError(f"sign mode must be psl2 or sl2, got {mode!r}")
    return mode


def _default_z(frame):
    return HPoint.i(frame.d)


def _as_frame(form_or_frame):
    if isinstance(form_or_frame, ClassFrame):
        return form_or_frame
    if isinstance(form_or_frame, QForm):
        return build_frame(form_or_frame)
    raise TypeError(f"expected QForm or ClassFrame, got {type(form_or_frame).__name__}")


# ------------------------------------------------------------ exact QuadRat route


def conj_entries(N, frame):
    """T^-1 N T over Q(sqrt d)."""
    return frame.Tinv @ N @ frame.T


def _qn(g, z):
    A, B, C, D = g.entries()
    return (z.x * z.x + z.y * z.y) * A * C + B * D + z.x * (A * D + B * C)


def fq_value(N, frame):
    """F = 2(AC + BD), a rational number."""
    A, B, C, D = conj_entries(N, frame).entries()
    F = 2 * (A * C + B * D)
    if F.q != 0:
        raise ArithmeticError(f"2(AC+BD) is irrational for {N}: {F}")
    return F.p


def radius2(N, frame, z=None):
    z = z or _default_z(frame)
    n = N.det
    q = _qn(conj_entries(N, frame), z)
    ny2 = n * n * z.y * z.y
    return (q * q + ny2) / ny2


def _window_v(g, z):
    A, B, C, D = g.entries()
    z2 = z.x * z.x + z.y * z.y
    top = z2 * A * A + 2 * z.x * A * B + B * B
    bot = z2 * C * C + 2 * z.x * C * D + D * D
    return top / bot


def canonicalize(N, frame, z=None):
    """(M^m N, m) with v in [1, eps^4); comparisons exact."""
    z = z or _default_z(frame)
    v = _window_v(conj_entries(N, frame), z)
    e4 = frame.eps ** 4
    # float guess, then exact correction
    m = -math.floor(math.log(float(v)) / math.log(float(e4))) if float(v) > 0 else 0
    v = v * e4 ** m
    while v < 1:
        v, m = v * e4, m + 1
    while v >= e4:
        v, m = v / e4, m - 1
    M = frame.M
    return (M ** m) @ N, m


def _psl2_sign(entries):
    for e in entries:
        if e:
            return 1 if e > 0 else -1
    return 1


# ------------------------------------------------------------ compiled integer forms

_MONO = [(i, j) for i in range(4) for j in range(i, 4)]


def _lin_coeffs(frame):
    """lin[e][j]: coefficient of (a, b, c, d)[j] in entry e of T^-1 N T."""
    cols = []
    for j in range(4):
        basis = [0, 0, 0, 0]
        basis[j] = 1
        cols.append(conj_entries(IMat2(*basis), frame).entries())
    return [[cols[j][e] for j in range(4)] for e in range(4)]


def _qprod(l1, l2):
    out = []
    for i, j in _MONO:
        out.append(l1[i] * l2[i] if i == j else l1[i] * l2[j] + l1[j] * l2[i])
    return out


def _comb(*terms):
    """Sum of scalar * coefficient-list."""
    acc = None
    for scale, coeffs in terms:
        cur = [scale * c for c in coeffs]
        acc = cur if acc is None else [a + b for a, b in zip(acc, cur)]
    return acc


@dataclass(frozen=True)
class _IntForm:
    """Integer quadratic form: value = (U . mono + sqrt(d) W . mono) / L."""
    U: tuple
    W: tuple
    L: int

    @classmethod
    def from_quad(cls, coeffs):
        L = 1
        for c in coeffs:
            L = math.lcm(L, c.p.denominator, c.q.denominator)
        U = tuple(int(c.p * L) for c in coeffs)
        W = tuple(int(c.q * L) for c in coeffs)
        return cls(U, W, L)

    def bound(self):
        return max(max(abs(u) for u in self.U), max(abs(w) for w in self.W), 1)

    def evaluate(self, monos):
        U = sum(u * m for u, m in zip(self.U, monos) if u)
        W = sum(w * m for w, m in zip(self.W, monos) if w)
        zero = monos[0] * 0
        return (U if not isinstance(U, int) else zero + U), (W if not isinstance(W, int) else zero + W)


def _monomials(arr):
    cols = [arr[:, k] for k in range(4)]
    return [cols[i] * cols[j] for i, j in _MONO]


def _signs(U, W, d):
    """Exact sign of U + W sqrt(d) elementwise (certified float, exact fallback)."""
    if len(U) == 0:
        return np.zeros(0, dtype=np.int64)
    sq = math.sqrt(d)
    fu = U.astype(np.float64)
    fw = W.astype(np.float64)
    val = fu + fw * sq
    mag = np.abs(fu) + np.abs(fw) * sq
    out = np.sign(val).astype(np.int64)
    unsure = np.nonzero(np.abs(val) <= 1e-9 * mag)[0]
    for i in unsure:
        out[i] = sign_pq(int(U[i]), int(W[i]), d)
    return out


class _Compiled:
    """Per (frame, z') data: integer forms for Q_N and the canonical window."""

    def __init__(self, frame, z):
        self.frame, self.z, self.d = frame, z, frame.d
        lin = _lin_coeffs(frame)
        A, B, C, D = lin
        z2 = z.x * z.x + z.y * z.y
        qn = _comb((z2, _qprod(A, C)), (1, _qprod(B, D)), (z.x, _qprod(A, D)), (z.x, _qprod(B, C)))
        top = _comb((z2, _qprod(A, A)), (2 * z.x, _qprod(A, B)), (1, _qprod(B, B)))
        bot = _comb((z2, _qprod(C, C)), (2 * z.x, _qprod(C, D)), (1, _qprod(D, D)))
        e4 = frame.eps ** 4
        self.qn = _IntForm.from_quad(qn)
        self.wlo = _IntForm.from_quad(_comb((1, top), (-1, bot)))
        self.whi = _IntForm.from_quad(_comb((e4, bot), (-1, top)))
        self.lin_f = np.array([[float(c) for c in row] for row in lin])
        self.zx, self.zy, self.z2 = float(z.x), float(z.y), float(z2)
        self.eps4 = float(e4)

    def scan_params(self, n, X, box_factor=1.0, qmax=None):
        fr = self.frame
        th1, th2 = float(fr.theta1), float(fr.theta2)
        x, y = self.zx, self.zy
        G = np.array([[th1 * x + th2, x + 1.0], [th1 * y, y]])
        Gi = np.linalg.inv(G)
        r1, r2 = np.linalg.norm(Gi, axis=1)
        delta = abs(th1 - th2)
        root = math.sqrt(n * y * X)
        eps = math.sqrt(math.sqrt(self.eps4))
        grow = box_factor * (1.0 + 1e-6)
        P1 = grow * delta * r1 * eps * root + 1e-6
        P2 = grow * delta * r2 * eps * root + 1e-6
        Q1 = grow * delta * r1 * root + 1e-6
        Q2 = grow * delta * r2 * root + 1e-6
        if qmax is None:
            qmax = n * y * math.sqrt(max(X * X - 1.0, 0.0))
        return _kernels.ScanParams(th1, th2, P1, Q1, P2, Q2, int(n), self.lin_f,
                                   x, self.z2, qmax, self.eps4)

    def exact_select(self, cands, R):
        """Rows of cands in the canonical window with Q_N^2 <= R; returns (rows, U, W) of Q_N."""
        if len(cands) == 0:
            empty = np.zeros(0, dtype=np.int64)
            return cands, empty, empty
        E = int(np.abs(cands).max())
        coeff = max(self.qn.bound(), self.wlo.bound(), self.whi.bound())
        arr = cands if 10 * coeff * E * E < 2 ** 62 else cands.astype(object)
        monos = _monomials(arr)
        lo_u, lo_w = self.wlo.evaluate(monos)
        hi_u, hi_w = self.whi.evaluate(monos)
        ok = (_signs(lo_u, lo_w, self.d) >= 0) & (_signs(hi_u, hi_w, self.d) > 0)
        qu, qw = self.qn.evaluate(monos)
        qu, qw = qu[ok], qw[ok]
        rows = cands[ok]
        keep = self.q2_le(qu, qw, R)
        return rows[keep], qu[keep], qw[keep]

    def q2_le(self, U, W, R):
        """Elementwise ((U + W sqrt d)/L)^2 <= R for a QuadRat R >= 0."""
        L, d = self.qn.L, self.d
        if len(U) == 0:
            return np.zeros(0, dtype=bool)
        if R.q == 0 and not np.any(W != 0):
            K = math.isqrt(math.floor(R.p * L * L))
            if K >= 2 ** 62:
                return np.ones(len(U), dtype=bool)
            return np.abs(U) <= K
        sq = math.sqrt(d)
        fq = np.abs(U.astype(np.float64) + W.astype(np.float64) * sq) / L
        mag = (np.abs(U.astype(np.float64)) + np.abs(W.astype(np.float64)) * sq) / L
        thr = math.sqrt(max(float(R), 0.0))
        out = fq <= thr
        unsure = np.nonzero(np.abs(fq - thr) <= 1e-9 * (mag + thr + 1e-300))[0]
        for i in unsure:
            out[i] = _le_exact(int(U[i]), int(W[i]), L, d, R)
        return out


def _le_exact(U, W, L, d, R):
    lhs = QuadRat(d, Fraction(U * U + d * W * W, L * L), Fraction(2 * U * W, L * L))
    return (R - lhs).sign() >= 0


@functools.lru_cache(maxsize=64)
def _compiled(frame, z):
    return _Compiled(frame, z)


# ------------------------------------------------------------ radius lists


@dataclass(frozen=True)
class OrbitPoint:
    rep: IMat2
    conj: QMat2
    F: Fraction | None
    r2: QuadRat
    m_shift: int = 0


@dataclass(frozen=True)
class SpectralDatum:
    s: float
    coeff: float

    def __post_init__(self):
        if not (0.5 < self.s <= 1.0):
            raise ValueError(f"spectral parameter s={self.s} outside (1/2, 1]")


class RadiusList:
    """Canonical representatives sorted by exact |Q_N|, complete up to X_max."""

    def __init__(self, frame, z, n, mode, X_max, reps, U, W, L):
        self.frame, self.z, self.n, self.mode = frame, z, int(n), mode
        self.X_max = as_fraction(X_max)
        self.d = frame.d
        self.L = L
        # Q_N scaled by L, made nonnegative
        s = _signs(U, W, self.d)
        s = np.where(s == 0, 1, s)
        U, W = U * s, W * s
        fq = (U.astype(np.float64) + W.astype(np.float64) * math.sqrt(self.d)) / L
        order = _exact_order(U, W, fq, self.d)
        self.reps, self.U, self.W, self.absq = reps[order], U[order], W[order], fq[order]
        ny = n * float(z.y)
        self.x = self.absq / ny  # x = tan v = sqrt(r^2 - 1)
        self.R_max = self._R(self.X_max)

    # squared Q_N bound at radius level X
    def _R(self, X):
        X = as_fraction(X)
        return self.n * self.n * self.z.y * self.z.y * (X * X - 1)

    def __len__(self):
        return len(self.U)

    def _le(self, i, R):
        return _le_exact(int(self.U[i]), int(self.W[i]), self.L, self.d, R)

    def count_q2(self, R):
        """Number of points with Q_N^2 <= R (R a QuadRat or rational)."""
        if not isinstance(R, QuadRat):
            R = QuadRat(self.d, as_fraction(R))
        if R.sign() < 0:
            return 0
        if (self.R_max - R).sign() < 0:
            raise HorizonExceeded(f"requested bound beyond certified horizon X_max={float(self.X_max):.6g}")
        thr = math.sqrt(float(R))
        idx = int(np.searchsorted(self.absq, thr, side="right"))
        while idx > 0 and not self._le(idx - 1, R):
            idx -= 1
        while idx < len(self) and self._le(idx, R):
            idx += 1
        return idx

    def count(self, X):
        X = as_fraction(X)
        if X < 1:
            return 0
        return self.count_q2(self._R(X))

    def count_fq(self, Xf):
        """Number of points with |F| <= Xf, F = 2 Q_N (base point i)."""
        Xf = as_fraction(Xf)
        if Xf < 0:
            return 0
        return self.count_q2(Xf * Xf / 4)

    def radii(self):
        """Float entry radii r = sqrt(1 + x^2), sorted."""
        return np.sqrt(1.0 + self.x * self.x)

    def jumps(self):
        """Distinct radii (float) with exact multiplicities."""
        if len(self) == 0:
            return np.zeros(0), np.zeros(0, dtype=np.int64)
        key_change = np.ones(len(self), dtype=bool)
        key_change[1:] = (self.U[1:] != self.U[:-1]) | (self.W[1:] != self.W[:-1])
        starts = np.nonzero(key_change)[0]
        mult = np.diff(np.append(starts, len(self)))
        return self.radii()[starts], mult

    def r2(self, i):
        q = QuadRat(self.d, Fraction(int(self.U[i]), self.L), Fraction(int(self.W[i]), self.L))
        ny2 = self.n * self.n * self.z.y * self.z.y
        return (q * q + ny2) / ny2

    def rep(self, i):
        return IMat2(*(int(v) for v in self.reps[i]))

    def point(self, i):
        N = self.rep(i)
        g = conj_entries(N, self.frame)
        A, B, C, D = g.entries()
        F = 2 * (A * C + B * D)
        return OrbitPoint(N, g, F.p if F.q == 0 else None, self.r2(i), 0)

    def points(self):
        return [self.point(i) for i in range(len(self))]

    def rep_set(self):
        return {tuple(int(v) for v in row) for row in self.reps}


def _exact_order(U, W, fq, d):
    if not np.any(W != 0):
        return np.argsort(U, kind="stable")
    order = list(np.argsort(fq, kind="stable"))
    # fix clusters whose floats are too close to trust
    i, m = 0, len(order)
    while i < m:
        j = i + 1
        while j < m and fq[order[j]] - fq[order[j - 1]] <= 1e-9 * (abs(fq[order[j]]) + 1.0):
            j += 1
        if j - i > 1:
            def cmp(a, b):
                return sign_pq(int(U[a]) - int(U[b]), int(W[a]) - int(W[b]), d)
            order[i:j] = sorted(order[i:j], key=functools.cmp_to_key(cmp))
        i = j
    return np.array(order, dtype=np.int64)


def _run_scan(comp, n, X, box_factor, backend, R, mode):
    cands = _kernels.scan(comp.scan_params(n, float(X), box_factor), backend)
    rows, U, W = comp.exact_select(cands, R)
    if mode == PSL2 and len(rows):
        lead = np.where(rows[:, 0] != 0, rows[:, 0], rows[:, 1])
        keep = lead > 0
        rows, U, W = rows[keep], U[keep], W[keep]
    return rows, U, W


def enumerate_orbit(frame, z=None, X=1, n=1, sign_mode=PSL2, *, backend=None, certify=True, threads=None):
    """Canonical representatives of det-n cosets with r <= X, as a RadiusList."""
    mode = _check_mode(sign_mode)
    z = z or _default_z(frame)
    n = int(n)
    if n < 1:
        raise ValueError(f"determinant must be >= 1, got {n}")
    X = as_fraction(X)
    comp = _compiled(frame, z)
    empty = np.zeros((0, 4), dtype=np.int64)
    if X < 1:
        return RadiusList(frame, z, n, mode, X, empty, empty[:, 0], empty[:, 0], comp.qn.L)
    if threads:
        _accel.set_threads(threads)
    R = n * n * z.y * z.y * (X * X - 1)
    rows, U, W = _run_scan(comp, n, X, 1.0, backend, R, mode)
    if certify:
        rows2, _, _ = _run_scan(comp, n, X, 2.0, backend, R, mode)
        a = {tuple(map(int, r)) for r in rows}
        b = {tuple(map(int, r)) for r in rows2}
        if a != b or len(a) != len(rows):
            raise CertificationError(
                f"box doubling changed the output: {len(a)} vs {len(b)} representatives")
    return RadiusList(frame, z, n, mode, X, rows, U, W, comp.qn.L)


_CACHE = {}


def clear_cache():
    _CACHE.clear()


def radius_list(frame, z=None, X=1, n=1, sign_mode=PSL2, **kw):
    """Cached enumerate_orbit, reusing any list with a large enough horizon."""
    mode = _check_mode(sign_mode)
    z = z or _default_z(frame)
    key = (frame.form, z, int(n), mode)
    X = as_fraction(X)
    have = _CACHE.get(key)
    if have is not None and have.X_max >= X:
        return have
    rl = enumerate_orbit(frame, z, X, n, mode, **kw)
    _CACHE[key] = rl
    return rl


def _fq_horizon(Xf, n):
    """A rational X with X^2 >= 1 + Xf^2 / (4 n^2)."""
    Xf = as_fraction(Xf)
    target = 1 + Xf * Xf / (4 * n * n)
    X = as_fraction(math.sqrt(float(target)))
    while X * X < target:
        X = X * (1 + Fraction(1, 10 ** 9)) + Fraction(1, 10 ** 9)
    return X


def count(frame, z=None, X=1, n=1, sign_mode=PSL2, **kw):
    """N(H, X; z'): cosets with r <= X (closed condition)."""
    X = as_fraction(X)
    if X < 1:
        return 0
    return radius_list(frame, z, X, n, sign_mode, **kw).count(X)


def count_fq(form, X, n=1, sign_mode=PSL2, **kw):
    """Classes of det-n matrices with |F| <= X, base point i."""
    frame = _as_frame(form)
    X = as_fraction(X)
    if X < 0:
        return 0
    rl = radius_list(frame, None, _fq_horizon(X, n), n, sign_mode, **kw)
    return rl.count_fq(X)


def weighted_count(frame, z=None, window=None, n=1, sign_mode=PSL2, **kw):
    """Sum of the trapezoid weight f(x^2 + 1) over orbit points, x = sqrt(r^2 - 1)."""
    if window is None:
        raise ValueError("a HuberWindow is required")
    hi = window.V if window.kind == "plus" else window.U
    Xhi = as_fraction(math.sqrt(hi * hi + 1.0)) * (1 + Fraction(1, 10 ** 6))
    rl = radius_list(frame, z, Xhi, n, sign_mode, **kw)
    xs = rl.x
    if window.X_exact is not None:
        inside = rl.count(window.X_exact)
    else:
        inside = int(np.searchsorted(xs, window.U, side="right"))
    if window.kind == "plus":
        tail = xs[inside:]
        w = np.clip((window.V - tail) / (window.V - window.U), 0.0, 1.0)
        return float(inside) + math.fsum(w)
    head = xs[:inside]
    w = np.clip((window.U - head) / (window.U - window.T), 0.0, 1.0)
    return math.fsum(w)


# ------------------------------------------------------------ spectral side


def sl2z_spectral_datum(frame):
    """The constant eigenfunction contribution for SL2(Z): [(1, (3/pi) mu/nu)]."""
    return [SpectralDatum(1.0, 3.0 / math.pi * frame.mu / frame.nu)]


def main_term(data, X):
    X = float(X)
    total = 0.0
    for datum in data:
        total += (coeff_A(datum.s) * datum.coeff * X ** datum.s).real
    return total


def error_term(frame, z=None, X=1, data=None, n=1, sign_mode=PSL2, **kw):
    data = sl2z_spectral_datum(frame) if data is None else data
    return count(frame, z, X, n, sign_mode, **kw) - main_term(data, X)


def x_to_t(X, mu):
    return 2.0 * math.asinh(X * math.sinh(mu / 2.0))


def t_to_x(t, mu):
    return math.sinh(t / 2.0) / math.sinh(mu / 2.0)


# ------------------------------------------------------------ independent oracle

_S = IMat2(0, -1, 1, 0)
_T = IMat2(1, 1, 0, 1)
_TI = IMat2(1, -1, 0, 1)


def _hermite_reps(n):
    """Upper-triangular (a b; 0 d), ad = n, 0 <= b < d: one per coset SL2(Z) \\ det-n."""
    return [IMat2(a, b, 0, n // a) for a in range(1, n + 1) if n % a == 0 for b in range(n // a)]


@dataclass
class OracleResult:
    r2: list = field(default_factory=list)
    exhausted: bool = True
    nodes: int = 0

    def count(self, X):
        X = as_fraction(X)
        if X < 1:
            return 0
        X2 = X * X
        return sum(1 for r in self.r2 if r <= X2)


def oracle_bfs(frame, z=None, X=1, n=1, sign_mode=PSL2, *, prune_factor=4.0, depth=None):
    """Breadth-first walk of the coset graph <M> \\ SL2(Z) tau by right generators.

    Nodes whose radius exceeds prune_factor * X are recorded but not
    expanded. Every node is canonicalized through the QuadRat route.
    """
    mode = _check_mode(sign_mode)
    z = z or _default_z(frame)
    X = as_fraction(X)
    result = OracleResult()
    if X < 1:
        return result
    limit = (as_fraction(prune_factor) * X) ** 2
    X2 = X * X
    seen = set()
    for tau in _hermite_reps(int(n)):
        queue = deque()

        def visit(g, dist):
            N = g @ tau
            Nc, m = canonicalize(N, frame, z)
            g = (frame.M ** m) @ g
            if mode == PSL2 and _psl2_sign(Nc.entries()) < 0:
                Nc, g = -Nc, -g
            key = Nc.entries()
            if key in seen:
                return
            seen.add(key)
            r = radius2(Nc, frame, z)
            if r <= X2:
                result.r2.append(r)
            if r <= limit:
                queue.append((g, dist))

        visit(IMat2.identity(), 0)
        while queue:
            g, dist = queue.popleft()
            if depth is not None and dist >= depth:
                result.exhausted = False
                continue
            for step in (_S, _T, _TI):
                visit(g @ step, dist + 1)
    result.nodes = len(seen)
    return result


def oracle_bfs_count(frame, z=None, X=1, depth=None, n=1, sign_mode=PSL2, *, prune_factor=3.0, strict=True):
    """Oracle count; stable means the walk exhausted and agreed with twice the pruning radius."""
    first = oracle_bfs(frame, z, X, n, sign_mode, prune_factor=prune_factor, depth=depth)
    second = oracle_bfs(frame, z, X, n, sign_mode, prune_factor=2 * prune_factor, depth=depth)
    stable = first.exhausted and second.exhausted and first.count(X) == second.count(X)
    if strict and not stable:
        raise OracleNotStabilized(
            f"oracle unsettled at X={float(X):g}: {first.count(X)} vs {second.count(X)}")
    return second.count(X)
