"""
Experiment drivers: error-exponent fits, mean-square integrals, Hecke
tables and the sandwich and sign-convention audits.

All drivers are deterministic functions of their arguments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .counting import (PSL2, SL2, _as_frame, count_fq, main_term, radius_list,
                       sl2z_spectral_datum, weighted_count)
from .huber import HuberWindow, coeff_A

__all__ = [
    "FitReport", "MeanSquareReport", "HeckeRow", "SandwichReport", "ConventionReport",
    "sigma", "fq_constant", "exponent_fit", "mean_square", "hecke_table",
    "sandwich_audit", "convention_audit", "log_grid", "window_sups",
]


def sigma(n):
    """Sum of divisors by trial division."""
    n = int(n)
    if n < 1:
        raise ValueError(f"sigma needs n >= 1, got {n}")
    total = 0
    k = 1
    while k * k <= n:
        if n % k == 0:
            total += k
            if k * k != n:
                total += n // k
        k += 1
    return total


def fq_constant(frame):
    """6 log(eps)/pi, the growth rate of the |F| <= X count."""
    return 6.0 * math.log(float(frame.eps)) / math.pi


def log_grid(lo, hi, num):
    return list(np.geomspace(lo, hi, int(num)))


def _step_data(rl):
    """Jump radii and the count just after each jump."""
    r, mult = rl.jumps()
    return r, np.cumsum(mult)


def _main_vec(data, x):
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for datum in data:
        total += (coeff_A(datum.s) * datum.coeff).real * x ** datum.s
    return total


@dataclass
class FitReport:
    X_grid: list
    sup_error: list
    jumps: list
    slope: float
    intercept: float
    residuals: list


def window_sups(r, after, count_at, data, X_grid, min_jumps=3):
    """sup |E| over each [X, 2X] from the jump radii r and counts after each jump.

    Both one-sided limits are taken at every jump; the window ends use the
    exact count_at(X).
    """
    before_all = after - np.diff(np.append(0, after))
    sups, njumps = [], []
    for X in X_grid:
        lo, hi = np.searchsorted(r, X, side="left"), np.searchsorted(r, 2 * X, side="right")
        if hi - lo < min_jumps:
            raise ValueError(f"window [{X:g}, {2 * X:g}] has only {hi - lo} jumps")
        M = _main_vec(data, r[lo:hi])
        ends = [count_at(X) - main_term(data, X), count_at(2 * X) - main_term(data, 2 * X)]
        sup = max(np.max(np.abs(after[lo:hi] - M)), np.max(np.abs(before_all[lo:hi] - M)), *map(abs, ends))
        sups.append(float(sup))
        njumps.append(int(hi - lo))
    return sups, njumps


def exponent_fit(frame, z=None, X_grid=None, data=None, *, min_jumps=3, **kw):
    """Least-squares slope of log sup|E| over [X, 2X] against log X."""
    X_grid = sorted(X_grid or log_grid(1e2, 1e5, 20))
    data = sl2z_spectral_datum(frame) if data is None else data
    horizon = 2 * max(X_grid)
    rl = radius_list(frame, z, Fraction(horizon) * Fraction(1001, 1000), **kw)
    r, after = _step_data(rl)
    sups, njumps = window_sups(r, after, lambda X: rl.count(Fraction(X)), data, X_grid, min_jumps)
    lx, ly = np.log(X_grid), np.log(sups)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return FitReport(list(map(float, X_grid)), sups, njumps, float(slope), float(intercept), list(map(float, resid)))


@dataclass
class MeanSquareReport:
    X: float
    integral: float
    ratio: float
    riemann: float | None = None
    riemann_rel: float | None = None


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def _interval_integral(N, a, b, data):
    """Integral of (N - M(x))^2 over [a, b] with N constant."""
    if b <= a:
        return 0.0
    if not data:
        return N * N * (b - a)
    if len(data) == 1 and data[0].s == 1.0:
        c = main_term(data, 1.0)
        # antiderivative -(N - c x)^3 / (3c), free of cancellation
        return ((N - c * a) ** 3 - (N - c * b) ** 3) / (3.0 * c)
    x = 0.5 * (b - a) * _GL_NODES + 0.5 * (a + b)
    M = _main_vec(data, x)
    return 0.5 * (b - a) * float(np.dot(_GL_WEIGHTS, (N - M) ** 2))


def mean_square(frame, z=None, X=100, data=None, *, riemann_points=10 ** 6, **kw):
    """(1/X) times the integral of E^2 over [X, 2X], exact piecewise."""
    data = sl2z_spectral_datum(frame) if data is None else data
    X = float(X)
    rl = radius_list(frame, z, Fraction(2 * X) * Fraction(1001, 1000), **kw)
    r, after = _step_data(rl)
    lo, hi = np.searchsorted(r, X, side="right"), np.searchsorted(r, 2 * X, side="right")
    edges = np.concatenate([[X], r[lo:hi], [2 * X]])
    levels = np.concatenate([[rl.count(Fraction(X))], after[lo:hi]])
    total = math.fsum(_interval_integral(float(N), float(a), float(b), data)
                      for N, a, b in zip(levels, edges[:-1], edges[1:]))
    integral = total / X
    report = MeanSquareReport(X, integral, integral / (X * math.log(X) ** 2))
    if riemann_points:
        xs = X + (np.arange(riemann_points) + 0.5) * (X / riemann_points)
        idx = np.searchsorted(r, xs, side="right")
        N = np.where(idx > 0, after[np.maximum(idx - 1, 0)], 0)
        E = N - _main_vec(data, xs)
        approx = float(np.mean(E * E))
        report.riemann = approx
        report.riemann_rel = abs(approx - integral) / integral if integral else 0.0
    return report


@dataclass
class HeckeRow:
    n: int
    count: int
    ratio: float
    error: float
    scaled_error: float


def hecke_table(form, n_list=(1, 2, 3, 4, 6), X=10 ** 4, **kw):
    frame = _as_frame(form)
    C = fq_constant(frame)
    rows = []
    for n in n_list:
        P = count_fq(frame, X, n, **kw)
        dens = sigma(n) / n
        err = P - C * dens * X
        rows.append(HeckeRow(int(n), P, P / (dens * X), err, err * n ** (2 / 3) / (sigma(n) * X ** (2 / 3))))
    return rows


@dataclass
class SandwichReport:
    X: float
    Y: float
    lower: float
    count: int
    upper: float
    holds: bool
    gap: float


def sandwich_audit(frame, z=None, X=100, Y=None, **kw):
    X = Fraction(X)
    Y = float(X) ** (2 / 3) if Y is None else float(Y)
    plus, minus = HuberWindow.plus(X, Y), HuberWindow.minus(X, Y)
    up = weighted_count(frame, z, plus, **kw)
    low = weighted_count(frame, z, minus, **kw)
    rl = radius_list(frame, z, X, **kw)
    N = rl.count(X)
    return SandwichReport(float(X), Y, low, N, up, bool(low <= N <= up), up - low)


@dataclass
class ConventionReport:
    X: float
    psl2: int
    sl2: int
    ratio: Fraction
    constant: float
    psl2_normalized: float
    sl2_normalized: float
    factor: int = field(default=0)


def convention_audit(form, X=10 ** 4, **kw):
    frame = _as_frame(form)
    C = fq_constant(frame)
    p = count_fq(frame, X, 1, PSL2, **kw)
    s = count_fq(frame, X, 1, SL2, **kw)
    rp, rs = p / (C * X), s / (C * X)
    # which convention reproduces the constant: the one whose ratio is closer to 1
    factor = 1 if abs(rp - 1) <= abs(rs - 1) else 2
    return ConventionReport(float(X), p, s, Fraction(p, s), C, rp, rs, factor)
