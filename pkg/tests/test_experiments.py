import math
from fractions import Fraction as F

import numpy as np
import pytest

from conjcount.counting import SpectralDatum, count, count_fq, main_term, radius_list, sl2z_spectral_datum
from conjcount.experiments import (convention_audit, exponent_fit, fq_constant, hecke_table, log_grid,
                                   mean_square, sandwich_audit, sigma, window_sups)
from conjcount.forms import QForm

# Fitted at X = 1e4 on [1,0,-3] for n in {1,2,3,4,6}; largest |scaled error| observed was 0.148.
HECKE_SCALED_BOUND = 0.5


def test_sigma():
    assert [sigma(n) for n in range(1, 13)] == [1, 3, 4, 7, 6, 12, 8, 15, 13, 18, 12, 28]
    with pytest.raises(ValueError):
        sigma(0)


def test_log_grid():
    g = log_grid(1e2, 1e5, 4)
    assert g == pytest.approx([1e2, 1e3, 1e4, 1e5])
    assert np.allclose(np.diff(np.log(log_grid(3, 300, 9))), math.log(100) / 8)


def test_fit_small_grid_and_determinism(frame12):
    grid = log_grid(1e2, 1e3, 6)
    a = exponent_fit(frame12, X_grid=grid)
    b = exponent_fit(frame12, X_grid=grid)
    assert a == b
    assert math.isfinite(a.slope) and 0 < a.slope < 1
    assert all(j >= 3 for j in a.jumps)
    assert len(a.residuals) == len(grid)


def test_fit_flags_sparse_windows(frame12):
    with pytest.raises(ValueError, match="jumps"):
        exponent_fit(frame12, X_grid=[2.0, 4.0], min_jumps=10 ** 6)


def test_fit_sup_includes_both_limits(frame12):
    rl = radius_list(frame12, None, 401)
    data = sl2z_spectral_datum(frame12)
    sups, _ = window_sups(*_steps(rl), lambda X: rl.count(F(X)), data, [100.0, 200.0])
    # brute force on a fine grid never exceeds the jump-based sup
    for X, sup in zip([100.0, 200.0], sups):
        xs = np.linspace(X, 2 * X, 4001)
        dense = max(abs(rl.count(F(x)) - main_term(data, x)) for x in xs)
        assert dense <= sup + 1e-9
        assert sup - dense < 3  # a jump's one-sided limit is only a multiplicity away


def _steps(rl):
    r, mult = rl.jumps()
    return r, np.cumsum(mult)


def test_fit_rescaling_invariance(frame12):
    """Scaling every radius by c and reading the grid at c X leaves the slope unchanged."""
    rl = radius_list(frame12, None, 2001)
    data = sl2z_spectral_datum(frame12)
    grid = log_grid(1e2, 1e3, 5)
    r, after = _steps(rl)
    base, _ = window_sups(r, after, lambda X: rl.count(F(X)), data, grid)
    c = 3.7
    scaled_data = [SpectralDatum(d.s, d.coeff / c ** d.s) for d in data]
    scaled, _ = window_sups(r * c, after, lambda X: rl.count(F(X / c)), scaled_data, [c * x for x in grid])
    s1 = np.polyfit(np.log(grid), np.log(base), 1)[0]
    s2 = np.polyfit(np.log([c * x for x in grid]), np.log(scaled), 1)[0]
    assert s2 == pytest.approx(s1, abs=1e-9)


def test_mean_square_empty_data_exact(frame12):
    X = 20.0
    rep = mean_square(frame12, None, X, data=[], riemann_points=0)
    rl = radius_list(frame12, None, 2 * X)
    r = np.sort(rl.radii())
    edges = [X] + [v for v in r if X < v < 2 * X] + [2 * X]
    total = sum(rl.count(F((a + b) / 2)) ** 2 * (b - a) for a, b in zip(edges[:-1], edges[1:]))
    assert rep.integral == pytest.approx(total / X, rel=1e-12)


def test_mean_square_cross_check(frame12):
    for X in (100.0, 300.0):
        rep = mean_square(frame12, None, X)
        assert rep.integral >= 0
        assert rep.riemann_rel < 1e-3
        assert rep.ratio == pytest.approx(rep.integral / (X * math.log(X) ** 2))


def test_mean_square_gauss_path(frame12):
    # s != 1 data goes through per-interval Gauss quadrature
    data = [SpectralDatum(0.9, 2.0)]
    rep = mean_square(frame12, None, 100.0, data=data)
    assert rep.riemann_rel < 1e-3


def test_hecke_table(frame12):
    rows = hecke_table(QForm(1, 0, -3))
    C = fq_constant(frame12)
    assert rows[0].n == 1 and rows[0].count == count_fq(QForm(1, 0, -3), 10 ** 4)
    for row in rows:
        assert abs(row.ratio / C - 1) < 0.03
        assert abs(row.scaled_error) < HECKE_SCALED_BOUND


def test_sandwich_audit(frame12):
    reports = [sandwich_audit(frame12, None, X) for X in (50, 137, 400)]
    assert all(r.holds for r in reports)
    collapsed = sandwich_audit(frame12, None, 200, Y=1e-7)
    assert collapsed.lower == collapsed.count == collapsed.upper
    gaps = [sandwich_audit(frame12, None, 400, Y=Y).gap for Y in (10, 20, 40, 80)]
    slope = np.polyfit(np.log([10, 20, 40, 80]), np.log(gaps), 1)[0]
    print(f"sandwich gap slope in Y at X=400: {slope:.3f}")
    assert all(a < b for a, b in zip(gaps, gaps[1:]))


def test_convention_audit():
    a = convention_audit(QForm(1, 0, -3), 2000)
    assert a.ratio == F(1, 2) and a.factor == 1
    assert a == convention_audit(QForm(1, 0, -3), 2000)
    for X in (10, 100):
        b = convention_audit(QForm(1, 1, -1), X)
        assert b.ratio == F(1, 2)
