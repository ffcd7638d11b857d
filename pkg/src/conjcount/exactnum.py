"""
Exact arithmetic in Q and Q(sqrt d), 2x2 matrices over Z and Q(sqrt d),
the Moebius action on the upper half-plane and hyperbolic distance.

Rationals are ``fractions.Fraction``. Every comparison that decides whether
a lattice point is counted goes through :func:`quad_sign`, never floats.
"""
from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational

__all__ = [
    "QuadRat", "IMat2", "QMat2", "HPoint",
    "quad_sign", "sign_pq", "moebius_apply", "cosh_rho",
    "translation_length", "translation_unit",
    "rat_to_str", "rat_from_str", "as_fraction",
]


def as_fraction(x):
    """Exact Fraction from int, Fraction, float (exact binary value) or a string like '3/7' or '1e4'."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot make an exact rational from {type(x).__name__}")


def rat_to_str(x):
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def rat_from_str(s):
    num, sep, den = s.strip().partition("/")
    if not sep:
        return Fraction(int(num))
    return Fraction(int(num), int(den))


def sign_pq(p, q, d):
    """Sign of p + q*sqrt(d) for rationals (or ints) p, q and d > 0 non-square."""
    if q == 0:
        return (p > 0) - (p < 0)
    if p == 0:
        return (q > 0) - (q < 0)
    if p > 0 and q > 0:
        return 1
    if p < 0 and q < 0:
        return -1
    # opposite signs: compare p^2 against d q^2
    lhs = p * p
    rhs = d * q * q
    if p > 0:
        return 1 if lhs > rhs else -1
    return 1 if rhs > lhs else -1


class QuadRat:
    """Exact element p + q*sqrt(d) of Q(sqrt d).

    Arithmetic between two QuadRats requires the same d; ints and Fractions
    mix freely.
    """

    __slots__ = ("d", "p", "q")

    def __init__(self, d, p=0, q=0):
        d = int(d)
        if d <= 0:
            raise ValueError(f"d must be positive, got {d}")
        r = math.isqrt(d)
        if r * r == d:
            raise ValueError(f"d={d} is a perfect square")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "p", Fraction(p))
        object.__setattr__(self, "q", Fraction(q))

    @classmethod
    def _raw(cls, d, p, q):
        obj = object.__new__(cls)
        object.__setattr__(obj, "d", d)
        object.__setattr__(obj, "p", p)
        object.__setattr__(obj, "q", q)
        return obj

    @classmethod
    def sqrt(cls, d):
        return cls(d, 0, 1)

    def __setattr__(self, name, value):
        raise AttributeError("QuadRat is immutable")

    def _coerce(self, other):
        if isinstance(other, QuadRat):
            if other.d != self.d:
                raise ValueError(f"mixed discriminants: Q(sqrt {self.d}) vs Q(sqrt {other.d})")
            return other
        if isinstance(other, (int, Fraction)):
            return QuadRat._raw(self.d, Fraction(other), Fraction(0))
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadRat._raw(self.d, self.p + o.p, self.q + o.q)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadRat._raw(self.d, self.p - o.p, self.q - o.q)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o - self

    def __neg__(self):
        return QuadRat._raw(self.d, -self.p, -self.q)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return QuadRat._raw(self.d, self.p * other, self.q * other)
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        p = self.p * o.p + self.d * self.q * o.q
        q = self.p * o.q + self.q * o.p
        return QuadRat._raw(self.d, p, q)

    __rmul__ = __mul__

    def conj(self):
        return QuadRat._raw(self.d, self.p, -self.q)

    def norm(self):
        """Field norm p^2 - d q^2 (a Fraction)."""
        return self.p * self.p - self.d * self.q * self.q

    def inverse(self):
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of zero in Q(sqrt d)")
        return QuadRat._raw(self.d, self.p / n, -self.q / n)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return QuadRat._raw(self.d, self.p / other, self.q / other)
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o * self.inverse()

    def __pow__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        result = QuadRat._raw(self.d, Fraction(1), Fraction(0))
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def sign(self):
        return sign_pq(self.p, self.q, self.d)

    def is_rational(self):
        return self.q == 0

    def __eq__(self, other):
        if isinstance(other, QuadRat):
            return self.d == other.d and self.p == other.p and self.q == other.q
        if isinstance(other, (int, Fraction)):
            return self.q == 0 and self.p == other
        return NotImplemented

    def __hash__(self):
        return hash((self.d, self.p, self.q))

    def _cmp(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            raise TypeError(f"cannot compare QuadRat with {type(other).__name__}")
        return sign_pq(self.p - o.p, self.q - o.q, self.d)

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __bool__(self):
        return self.p != 0 or self.q != 0

    def __float__(self):
        return float(self.p) + float(self.q) * math.sqrt(self.d)

    def __repr__(self):
        return f"QuadRat(d={self.d}, p={self.p}, q={self.q})"

    def __str__(self):
        if self.q == 0:
            return str(self.p)
        tail = f"{self.q}*sqrt({self.d})" if self.q != 1 else f"sqrt({self.d})"
        if self.p == 0:
            return tail
        if self.q < 0:
            tail = f"{-self.q}*sqrt({self.d})" if self.q != -1 else f"sqrt({self.d})"
            return f"{self.p}-{tail}"
        return f"{self.p}+{tail}"

    def to_str(self):
        """Serialized form 'p_num/p_den q_num/q_den'."""
        return f"{rat_to_str(self.p)} {rat_to_str(self.q)}"

    @classmethod
    def from_str(cls, d, s):
        p, q = s.split()
        return cls(d, rat_from_str(p), rat_from_str(q))


def quad_sign(v):
    """Exact sign of a QuadRat (or plain rational): -1, 0 or +1."""
    if isinstance(v, QuadRat):
        return v.sign()
    return (v > 0) - (v < 0)


class IMat2:
    """2x2 integer matrix ((a11, a12), (a21, a22))."""

    __slots__ = ("a11", "a12", "a21", "a22", "det")

    def __init__(self, a11, a12, a21, a22):
        a11, a12, a21, a22 = int(a11), int(a12), int(a21), int(a22)
        object.__setattr__(self, "a11", a11)
        object.__setattr__(self, "a12", a12)
        object.__setattr__(self, "a21", a21)
        object.__setattr__(self, "a22", a22)
        object.__setattr__(self, "det", a11 * a22 - a12 * a21)

    def __setattr__(self, name, value):
        raise AttributeError("IMat2 is immutable")

    @classmethod
    def identity(cls, scale=1):
        return cls(scale, 0, 0, scale)

    def entries(self):
        return (self.a11, self.a12, self.a21, self.a22)

    @property
    def trace(self):
        return self.a11 + self.a22

    def __matmul__(self, other):
        if isinstance(other, QMat2):
            return QMat2.from_imat(other.d, self) @ other
        if not isinstance(other, IMat2):
            return NotImplemented
        return IMat2(
            self.a11 * other.a11 + self.a12 * other.a21,
            self.a11 * other.a12 + self.a12 * other.a22,
            self.a21 * other.a11 + self.a22 * other.a21,
            self.a21 * other.a12 + self.a22 * other.a22,
        )

    def __neg__(self):
        return IMat2(-self.a11, -self.a12, -self.a21, -self.a22)

    def __mul__(self, k):
        if isinstance(k, int):
            return IMat2(k * self.a11, k * self.a12, k * self.a21, k * self.a22)
        return NotImplemented

    __rmul__ = __mul__

    def adjugate(self):
        return IMat2(self.a22, -self.a12, -self.a21, self.a11)

    def inverse(self):
        """Integer inverse; only for det = +-1."""
        if self.det not in (1, -1):
            raise ValueError(f"matrix with det {self.det} has no integer inverse")
        return self.adjugate() * self.det

    def transpose(self):
        return IMat2(self.a11, self.a21, self.a12, self.a22)

    def __pow__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        result = IMat2.identity()
        base = self
        while k:
            if k & 1:
                result = result @ base
            base = base @ base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, IMat2):
            return self.entries() == other.entries()
        if isinstance(other, QMat2):
            return QMat2.from_imat(other.d, self) == other
        return NotImplemented

    def __hash__(self):
        return hash(self.entries())

    def __repr__(self):
        return "IMat2({}, {}, {}, {})".format(*self.entries())

    def __str__(self):
        return "({},{};{},{})".format(*self.entries())


class QMat2:
    """2x2 matrix over Q(sqrt d)."""

    __slots__ = ("d", "a11", "a12", "a21", "a22", "det")

    def __init__(self, d, a11, a12, a21, a22):
        entries = []
        for e in (a11, a12, a21, a22):
            if isinstance(e, QuadRat):
                if e.d != d:
                    raise ValueError(f"entry over Q(sqrt {e.d}) in a Q(sqrt {d}) matrix")
                entries.append(e)
            else:
                entries.append(QuadRat(d, e))
        object.__setattr__(self, "d", int(d))
        for name, e in zip(("a11", "a12", "a21", "a22"), entries):
            object.__setattr__(self, name, e)
        object.__setattr__(self, "det", entries[0] * entries[3] - entries[1] * entries[2])

    def __setattr__(self, name, value):
        raise AttributeError("QMat2 is immutable")

    @classmethod
    def from_imat(cls, d, m):
        return cls(d, *m.entries())

    @classmethod
    def identity(cls, d):
        return cls(d, 1, 0, 0, 1)

    def entries(self):
        return (self.a11, self.a12, self.a21, self.a22)

    @property
    def trace(self):
        return self.a11 + self.a22

    def __matmul__(self, other):
        if isinstance(other, IMat2):
            other = QMat2.from_imat(self.d, other)
        if not isinstance(other, QMat2):
            return NotImplemented
        return QMat2(
            self.d,
            self.a11 * other.a11 + self.a12 * other.a21,
            self.a11 * other.a12 + self.a12 * other.a22,
            self.a21 * other.a11 + self.a22 * other.a21,
            self.a21 * other.a12 + self.a22 * other.a22,
        )

    def __rmatmul__(self, other):
        if isinstance(other, IMat2):
            return QMat2.from_imat(self.d, other) @ self
        return NotImplemented

    def __neg__(self):
        return QMat2(self.d, -self.a11, -self.a12, -self.a21, -self.a22)

    def scale(self, k):
        return QMat2(self.d, *(k * e for e in self.entries()))

    def inverse(self):
        det = self.det
        if not det:
            raise ZeroDivisionError("singular matrix")
        inv = det.inverse()
        return QMat2(self.d, self.a22 * inv, -self.a12 * inv, -self.a21 * inv, self.a11 * inv)

    def __eq__(self, other):
        if isinstance(other, IMat2):
            other = QMat2.from_imat(self.d, other)
        if isinstance(other, QMat2):
            return self.d == other.d and self.entries() == other.entries()
        return NotImplemented

    def __hash__(self):
        return hash((self.d,) + self.entries())

    def to_float(self):
        return tuple(float(e) for e in self.entries())

    def __repr__(self):
        return "QMat2(d={}, {}, {}, {}, {})".format(self.d, *map(str, self.entries()))


class HPoint:
    """Point x + i*y of the upper half-plane with exact Q(sqrt d) coordinates."""

    __slots__ = ("x", "y")

    def __init__(self, x, y):
        if not isinstance(x, QuadRat) and not isinstance(y, QuadRat):
            raise TypeError("at least one coordinate must be a QuadRat (it fixes d)")
        d = x.d if isinstance(x, QuadRat) else y.d
        x = x if isinstance(x, QuadRat) else QuadRat(d, x)
        y = y if isinstance(y, QuadRat) else QuadRat(d, y)
        if x.d != y.d:
            raise ValueError("coordinates over different fields")
        if y.sign() != 1:
            raise ValueError(f"imaginary part must be positive, got {y}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __setattr__(self, name, value):
        raise AttributeError("HPoint is immutable")

    @classmethod
    def i(cls, d):
        return cls(QuadRat(d, 0), QuadRat(d, 1))

    @property
    def d(self):
        return self.x.d

    def __eq__(self, other):
        return isinstance(other, HPoint) and self.x == other.x and self.y == other.y

    def __hash__(self):
        return hash((self.x, self.y))

    def to_complex(self):
        return complex(float(self.x), float(self.y))

    def __repr__(self):
        return f"HPoint({self.x}, {self.y})"


def moebius_apply(g, z):
    """(a z + b) / (c z + d) with exact real and imaginary parts."""
    if isinstance(g, IMat2):
        g = QMat2.from_imat(z.d, g)
    if g.det.sign() != 1:
        raise ValueError(f"Moebius action needs det > 0, got det {g.det}")
    a, b, c, d = g.entries()
    x, y = z.x, z.y
    nr = a * x + b
    dr = c * x + d
    di = c * y
    den = dr * dr + di * di
    re = (nr * dr + a * c * y * y) / den
    im = g.det * y / den
    return HPoint(re, im)


def cosh_rho(z, w):
    """cosh of the hyperbolic distance, 1 + |z - w|^2 / (2 Im z Im w)."""
    dx = z.x - w.x
    dy = z.y - w.y
    return 1 + (dx * dx + dy * dy) / (2 * z.y * w.y)


def _check_hyperbolic(m):
    if m.det != 1:
        raise ValueError(f"expected det 1, got {m.det}")
    if abs(m.trace) <= 2:
        kind = "parabolic" if abs(m.trace) == 2 else "elliptic"
        raise ValueError(f"matrix {m} is {kind}, not hyperbolic (|trace| = {abs(m.trace)})")


def translation_length(m):
    """Displacement inf_z rho(z, m z) = 2 arccosh(|trace|/2) of a hyperbolic det-1 matrix."""
    _check_hyperbolic(m)
    t = abs(m.trace)
    if t < 10 ** 300:
        return 2.0 * math.acosh(t / 2)
    # arccosh(t/2) = log t - O(t^-2); math.log accepts arbitrary ints
    return 2.0 * math.log(t)


def translation_unit(m, d=None):
    """The eigenvalue (|t| + u sqrt d)/2 > 1 of m as an exact QuadRat.

    With d omitted the field is Q(sqrt(t^2 - 4)) reduced by its largest
    square factor; with d given, t^2 - 4 must equal u^2 d.
    """
    _check_hyperbolic(m)
    t = abs(m.trace)
    disc = t * t - 4
    if d is None:
        u, d = _split_square(disc)
    else:
        u2, rem = divmod(disc, d)
        u = math.isqrt(u2)
        if rem or u * u != u2:
            raise ValueError(f"t^2 - 4 = {disc} is not a square multiple of d = {d}")
    return QuadRat(d, Fraction(t, 2), Fraction(u, 2))


def _split_square(n):
    """n = u^2 * core with core squarefree-ish (largest square found by trial division up to n^(1/3))."""
    u = 1
    core = n
    f = 2
    while f * f * f <= n:
        while core % (f * f) == 0:
            core //= f * f
            u *= f
        f += 1
    r = math.isqrt(core)
    if r * r == core:
        return u * r, 1
    return u, core
