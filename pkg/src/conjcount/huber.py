"""
Special functions behind the Huber transform of the trapezoid test functions.

Associated Legendre functions P^mu_nu are evaluated on the imaginary axis
z = ix, off the cut. Three representations are implemented:

* ``series``: the hypergeometric series in w = (1 - z)/2, valid for |x| < sqrt 3;
* ``connection``: the same function continued to |w| > 1 by the 1/w connection
  formula, valid for |x| > sqrt 3;
* ``asymptotic``: the convergent large-argument expansion in 1/z^2, valid for
  |x| > 1.

``auto`` uses the series up to |x| = 1.3 and the large-argument expansion beyond.
At half-integer s the Gamma factors of the two outer representations hit
poles; those points are delegated to mpmath.
"""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy import integrate, special

__all__ = [
    "NonConvergence", "SpectralParam", "HuberWindow",
    "legendre_p", "xi_closed", "xi_ode",
    "coeff_A", "coeff_B", "coeff_D", "huber_prefactor", "J_function", "I_function",
    "huber_closed", "huber_quadrature", "huber_asymptotic", "huber_bottom",
]

SERIES_LIMIT = 1.3
_SQRT_PI = math.sqrt(math.pi)


class NonConvergence(ArithmeticError):
    """A series or quadrature did not reach its tolerance."""


@dataclass(frozen=True)
class SpectralParam:
    s: complex

    @classmethod
    def from_t(cls, t):
        return cls(0.5 + 1j * t)

    @property
    def t(self):
        return (self.s - 0.5) / 1j

    @property
    def lam(self):
        return self.s * (1 - self.s)

    @property
    def regime(self):
        s = complex(self.s)
        if abs(s.real - 0.5) < 1e-15 and s.imag == 0:
            return "bottom"
        if abs(s.real - 0.5) < 1e-15:
            return "principal"
        if s.imag == 0 and 0.5 < s.real <= 1:
            return "small"
        return "other"


@dataclass(frozen=True)
class HuberWindow:
    """Trapezoid test function: plus uses (U, V), minus uses (T, U); Y is the ramp width."""
    kind: str
    U: float
    other: float
    X_exact: object = None  # exact X with U^2 = X^2 - 1, when known

    def __post_init__(self):
        if self.kind not in ("plus", "minus"):
            raise ValueError(f"window kind must be plus or minus, got {self.kind!r}")
        U, W = self.U, self.other
        if self.kind == "plus" and not (0 < U < W < 2 * U):
            raise ValueError(f"need 0 < U < V < 2U, got U={U}, V={W}")
        if self.kind == "minus" and not (0 < U / 2 < W < U):
            raise ValueError(f"need U/2 < T < U, got T={W}, U={U}")

    @classmethod
    def plus(cls, X, Y):
        from fractions import Fraction
        Xf = Fraction(X)
        U = math.sqrt(float(Xf * Xf - 1))
        return cls("plus", U, U + float(Y), Xf)

    @classmethod
    def minus(cls, X, Y):
        from fractions import Fraction
        Xf = Fraction(X)
        U = math.sqrt(float(Xf * Xf - 1))
        return cls("minus", U, U - float(Y), Xf)

    @property
    def V(self):
        return self.other if self.kind == "plus" else None

    @property
    def T(self):
        return self.other if self.kind == "minus" else None

    @property
    def Y(self):
        return abs(self.other - self.U)

    @property
    def X(self):
        return math.sqrt(self.U * self.U + 1.0)

    @property
    def bounds(self):
        """(lo, hi): the ramp runs from lo to hi."""
        return (self.U, self.other) if self.kind == "plus" else (self.other, self.U)

    def weight(self, x):
        lo, hi = self.bounds
        return np.clip((hi - np.asarray(x, dtype=float)) / (hi - lo), 0.0, 1.0)


# ------------------------------------------------------------------ Legendre


def _hyp_series(a, b, c, w, tol=1e-17, max_terms=20000):
    """Gauss series sum (a)_k (b)_k / ((c)_k k!) w^k for |w| < 1."""
    if abs(w) >= 1:
        raise NonConvergence(f"hypergeometric series needs |w| < 1, got |w|={abs(w):.4f}")
    total = 1.0 + 0j
    term = 1.0 + 0j
    small = 0
    for k in range(max_terms):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * w
        total += term
        if term == 0:
            return total
        if abs(term) <= tol * abs(total):
            small += 1
            if small >= 2:
                return total
        else:
            small = 0
    raise NonConvergence(f"hypergeometric series did not converge (a={a}, b={b}, c={c}, |w|={abs(w):.4f})")


def _near_int(v):
    return abs(v - round(v.real)) < 1e-13


def _degenerate(nu):
    """nu + 1/2 an integer: the outer representations have Gamma poles."""
    return _near_int(complex(nu) + 0.5)


class _Legendre:
    """P^mu_nu(z) for fixed integer mu <= 0 and complex nu."""

    def __init__(self, mu, nu):
        if mu not in (0, -1, -2):
            raise ValueError(f"order must be 0, -1 or -2, got {mu}")
        self.mu, self.nu = mu, complex(nu)
        nu, mu = self.nu, float(mu)
        self.inv_g1m = 1.0 / math.gamma(1.0 - mu)
        self.degenerate = _degenerate(nu)
        if not self.degenerate:
            rg = special.rgamma
            self.c1 = 2.0 ** nu * special.gamma(nu + 0.5) / _SQRT_PI * rg(nu - mu + 1.0)
            self.c2 = special.gamma(-nu - 0.5) / (2.0 ** (nu + 1.0) * _SQRT_PI) * rg(-nu - mu)
            # connection coefficients for F(-nu, nu+1; 1-mu; w), |w| > 1
            a, b, c = -nu, nu + 1.0, 1.0 - mu
            self.k1 = special.gamma(c) * special.gamma(b - a) * rg(b) * rg(c - a)
            self.k2 = special.gamma(c) * special.gamma(a - b) * rg(a) * rg(c - b)

    def _prefactor(self, z):
        mu = self.mu
        if mu == 0:
            return self.inv_g1m
        return self.inv_g1m * ((z + 1) / (z - 1)) ** (mu / 2)

    def series(self, z):
        w = (1 - z) / 2
        return self._prefactor(z) * _hyp_series(-self.nu, self.nu + 1, 1 - self.mu, w)

    def connection(self, z):
        if self.degenerate or _near_int(2 * self.nu + 1):
            raise ValueError("connection formula is singular when 2s is an integer")
        w = (1 - z) / 2
        a, b, c = -self.nu, self.nu + 1.0, 1.0 - self.mu
        mw = -w
        f1 = self.k1 * mw ** (-a) * _hyp_series(a, a - c + 1, a - b + 1, 1 / w)
        f2 = self.k2 * mw ** (-b) * _hyp_series(b, b - c + 1, b - a + 1, 1 / w)
        return self._prefactor(z) * (f1 + f2)

    def asymptotic(self, z):
        if self.degenerate:
            raise ValueError("large-argument expansion is singular at half-integer s")
        nu, mu = self.nu, self.mu
        common = 1.0 if mu == 0 else ((z + 1) ** (-mu / 2)) * ((z - 1) ** (-mu / 2))
        iz2 = 1 / (z * z)
        t1 = self.c1 * z ** (nu + mu) * _hyp_series(-(nu + mu) / 2, (1 - nu - mu) / 2, 0.5 - nu, iz2)
        t2 = 0j
        if self.c2 != 0:
            t2 = self.c2 * z ** (mu - nu - 1) * _hyp_series((nu - mu + 2) / 2, (nu - mu + 1) / 2, nu + 1.5, iz2)
        return common * (t1 + t2)

    def mp(self, z):
        return complex(mpmath.legenp(self.nu, self.mu, z, type=3))

    def __call__(self, x, branch="auto"):
        z = complex(0.0, x)
        if branch == "auto":
            if abs(x) <= SERIES_LIMIT:
                branch = "series"
            else:
                branch = "mpmath" if self.degenerate else "asymptotic"
        if branch == "series":
            return self.series(z)
        if branch == "asymptotic":
            return self.asymptotic(z)
        if branch == "connection":
            return self.connection(z)
        if branch == "mpmath":
            return self.mp(z)
        raise ValueError(f"unknown branch {branch!r}")


@lru_cache(maxsize=256)
def _legendre(mu, nu):
    return _Legendre(mu, nu)


def legendre_p(order, nu, x, branch="auto"):
    """P^order_nu(i x); negative x gives P^order_nu(-i|x|)."""
    return _legendre(int(order), complex(nu))(float(x), branch)


# ------------------------------------------------------------------ xi and coefficients


def huber_prefactor(s):
    """Gamma((s+1)/2) Gamma(1 - s/2) / (2 sqrt(pi))."""
    s = complex(s)
    return complex(special.gamma((s + 1) / 2) * special.gamma(1 - s / 2)) / (2 * _SQRT_PI)


def _pair0(s, x):
    P = _legendre(0, complex(s) - 1)
    return P(x) + P(-x)


def xi_closed(s, v):
    s = complex(s)
    if abs(v) >= math.pi / 2:
        raise ValueError("v must lie in (-pi/2, pi/2)")
    return huber_prefactor(s) * _pair0(s, math.tan(v))


def xi_ode(lam, v, rtol=1e-11):
    """Solve xi'' + lam sec^2(v) xi = 0 with xi(0) = 1, xi'(0) = 0."""
    v = float(v)
    if abs(v) > math.pi / 2 - 1e-6:
        raise ValueError(f"v={v} is within 1e-6 of pi/2")
    if v == 0:
        return complex(1.0) if isinstance(lam, complex) else 1.0
    lam_c = complex(lam)
    real = lam_c.imag == 0
    vv = abs(v)  # the solution is even

    def rhs(u, y):
        c = math.cos(u)
        return [y[1], -lam_c * y[0] / (c * c)]

    y0 = np.array([1.0, 0.0], dtype=complex)
    sol = integrate.solve_ivp(rhs, (0.0, vv), y0, method="DOP853", rtol=rtol, atol=rtol * 1e-3)
    if not sol.success:
        raise NonConvergence(f"ODE solver failed: {sol.message}")
    val = complex(sol.y[0, -1])
    return val.real if real else val


def _gamma_c(z):
    return complex(special.gamma(complex(z)))


def coeff_B(s):
    s = complex(s)
    return (2 ** (s - 2) * 2 * cmath.cos(math.pi / 2 * (s - 1))
            * _gamma_c((s + 1) / 2) * _gamma_c(1 - s / 2) * _gamma_c(s - 0.5)
            / (math.pi * _gamma_c(s + 2)))


def coeff_D(s):
    s = complex(s)
    return (2 * cmath.cos(math.pi / 2 * s)
            * _gamma_c((s + 1) / 2) * _gamma_c(1 - s / 2) * _gamma_c(0.5 - s)
            / (math.pi * _gamma_c(3 - s) * 2 ** (s + 1)))


def coeff_A(s):
    """A(s) by direct Gamma evaluation (not through B)."""
    s = complex(s)
    return (2 ** (s - 1) * 2 * cmath.cos(math.pi / 2 * (s - 1))
            * _gamma_c((s + 1) / 2) * _gamma_c(1 - s / 2) * _gamma_c(s - 0.5)
            / (math.pi * _gamma_c(s + 1)))


# ------------------------------------------------------------------ Huber transform


def _conj_symmetric(s):
    s = complex(s)
    return s.imag == 0 or abs(s.real - 0.5) < 1e-15


def J_function(s, A):
    """(A^2 + 1)(P^-2_{s-1}(iA) + P^-2_{s-1}(-iA))."""
    P = _legendre(-2, complex(s) - 1)
    return (A * A + 1) * (P(A) + P(-A))


def I_function(s, A, epsrel=1e-12):
    """Quadrature of (P^0_{s-1}(ix) + P^0_{s-1}(-ix)) (A - x) over [0, A]."""
    return _quad_complex(lambda x: _pair0(s, x) * (A - x), 0.0, A, _breaks(0.0, A), epsrel, _conj_symmetric(s))


def huber_closed(window, s):
    lo, hi = window.bounds
    return huber_prefactor(s) * (J_function(s, hi) - J_function(s, lo)) / (hi - lo)


def _breaks(a, b):
    """Log-spaced interior points so quad sees the slow oscillation in log x."""
    pts = [SERIES_LIMIT] if a < SERIES_LIMIT < b else []
    lo = max(a, 1.0)
    k = 1
    while lo * 1.5 ** k < b:
        if lo * 1.5 ** k > a:
            pts.append(lo * 1.5 ** k)
        k += 1
    return sorted(pts)


def _quad_complex(fn, a, b, points, epsrel, real_only):
    edges = [a] + [p for p in points if a < p < b] + [b]
    total = 0j
    for lo, hi in zip(edges[:-1], edges[1:]):
        parts = [lambda x: fn(x).real] if real_only else [lambda x: fn(x).real, lambda x: fn(x).imag]
        vals = []
        for part in parts:
            with warnings.catch_warnings():
                # judged below from the error estimate instead
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                val, err = integrate.quad(part, lo, hi, epsabs=0.0, epsrel=epsrel, limit=400)
            if not math.isfinite(val) or (err > 1e3 * epsrel * abs(val) and err > 1e-13):
                raise NonConvergence(f"quadrature on [{lo:g}, {hi:g}] stalled: estimate {val:.3e} +- {err:.1e}")
            vals.append(val)
        total += complex(vals[0], vals[1] if len(vals) > 1 else 0.0)
    return total.real if real_only else total


def huber_quadrature(window, s, epsrel=1e-11):
    """K(s) times the integral of f(x^2 + 1)(P^0_{s-1}(ix) + P^0_{s-1}(-ix)) over x >= 0."""
    lo, hi = window.bounds

    def integrand_ramp(x):
        return _pair0(s, x) * (hi - x) / (hi - lo)

    flat = _quad_complex(lambda x: _pair0(s, x), 0.0, lo, _breaks(0.0, lo), epsrel, _conj_symmetric(s))
    ramp = _quad_complex(integrand_ramp, lo, hi, _breaks(lo, hi), epsrel, _conj_symmetric(s))
    return huber_prefactor(s) * (flat + ramp)


def huber_asymptotic(window, t, X=None, Y=None):
    """Leading terms a X^s + b X^(1-s), s = 1/2 + it.

    Returns (a, b, value) with a = B(s)(s + 1) and b = D(s)(2 - s).
    """
    X = window.X if X is None else X
    s = 0.5 + 1j * t
    a = coeff_B(s) * (s + 1)
    b = coeff_D(s) * (2 - s)
    value = a * X ** s + b * X ** (1 - s)
    return a, b, value


def huber_bottom(window, X=None):
    """d(f, 0) at s = 1/2 and its ratio to sqrt(X) log X."""
    X = window.X if X is None else X
    val = huber_closed(window, 0.5).real
    return val, val / (math.sqrt(X) * math.log(X))
