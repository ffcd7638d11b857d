import math
import random
from fractions import Fraction as F

import numpy as np
import pytest

from conjcount import _kernels
from conjcount.counting import (PSL2, SL2, HorizonExceeded, SpectralDatum, canonicalize,
                                conj_entries, count, count_fq, enumerate_orbit, error_term,
                                fq_value, main_term, oracle_bfs_count, radius2, radius_list,
                                sl2z_spectral_datum, t_to_x, weighted_count, x_to_t)
from conjcount.exactnum import HPoint, IMat2, QMat2, QuadRat
from conjcount.forms import QForm, build_frame
from conjcount.huber import HuberWindow, coeff_A

LOG_EPS12 = math.log(2 + math.sqrt(3))
# a base point off the axis, and one with irrational coordinates
Z_OFF = HPoint(QuadRat(12, F(1, 2)), QuadRat(12, 1))
Z_IRR = HPoint(QuadRat(12, F(1, 3), F(1, 5)), QuadRat(12, F(1, 2), F(1, 7)))


def random_sl2(rng, det=1):
    while True:
        a, b, c = (rng.randint(-9, 9) for _ in range(3))
        if a and (det + b * c) % a == 0:
            return IMat2(a, b, c, (det + b * c) // a)


def test_conj_entries_example(frame12):
    s3 = QuadRat(12, 0, F(1, 2))
    g = conj_entries(IMat2(1, 1, 0, 1), frame12)
    expected = QMat2(12, (2 * s3 + 1) / (2 * s3), 1 / (2 * s3), -1 / (2 * s3), (2 * s3 - 1) / (2 * s3))
    assert g == expected
    A, B, C, D = g.entries()
    assert A * C + B * D == QuadRat(12, F(-1, 6))
    assert conj_entries(IMat2.identity(), frame12) == QMat2.identity(12)
    assert conj_entries(frame12.M, frame12) == QMat2(12, frame12.eps, 0, 0, frame12.eps.inverse())


def test_fq_value_examples(frame12):
    assert fq_value(IMat2.identity(), frame12) == 0
    N = IMat2(1, 1, 0, 1)
    assert abs(fq_value(N, frame12)) == F(1, 3)


@pytest.mark.parametrize("form", [(1, 0, -3), (1, 0, -2), (2, 0, -5), (-3, 0, 7)])
def test_fq_matches_polynomial_for_b_zero(form):
    q = QForm(*form)
    fr = build_frame(q)
    rng = random.Random(1)
    a, c = q.a, q.c
    for det in (1, 2, 3):
        for _ in range(30):
            al, be, ga, de = random_sl2(rng, det).entries()
            poly = al * al - F(a, c) * be * be + F(c, a) * ga * ga - de * de
            assert abs(fq_value(IMat2(al, be, ga, de), fr)) == abs(poly)


def test_invariance_under_M_and_sign(frames):
    rng = random.Random(2)
    for fr in frames.values():
        for _ in range(100):
            N = random_sl2(rng)
            F0, r0 = fq_value(N, fr), radius2(N, fr, Z_IRR if fr.d == 12 else None)
            for g in (fr.M @ N, -N, fr.M.inverse() @ N):
                assert fq_value(g, fr) == F0
                assert radius2(g, fr, Z_IRR if fr.d == 12 else None) == r0


def test_radius2_examples(frame12):
    assert radius2(IMat2.identity(), frame12) == 1
    assert radius2(IMat2(1, 1, 0, 1), frame12) == QuadRat(12, F(37, 36))
    for n in (2, 3, 7):
        assert radius2(IMat2.identity(n), frame12) == 1


def test_canonicalize_examples(frame12):
    M, I = frame12.M, IMat2.identity()
    assert canonicalize(I, frame12) == (I, 0)
    assert canonicalize(M ** 3, frame12) == (I, -3)
    rng = random.Random(4)
    for _ in range(50):
        N, _ = canonicalize(random_sl2(rng), frame12, Z_IRR)
        assert canonicalize(N, frame12, Z_IRR) == (N, 0)
        assert canonicalize(M @ N, frame12, Z_IRR) == (N, -1)


def test_canonical_window_exact(frame12):
    e4 = frame12.eps ** 4
    rng = random.Random(8)
    for _ in range(50):
        N, _ = canonicalize(random_sl2(rng), frame12, Z_OFF)
        A, B, C, D = conj_entries(N, frame12).entries()
        x, y = Z_OFF.x, Z_OFF.y
        top = (A * x + B) ** 2 + (A * y) ** 2
        bot = (C * x + D) ** 2 + (C * y) ** 2
        assert bot <= top < e4 * bot


def test_enumerate_small(frame12):
    assert len(enumerate_orbit(frame12, None, F(1, 2))) == 0
    rl = enumerate_orbit(frame12, None, 1)
    assert len(rl) == 1 and rl.rep(0) == IMat2.identity() and rl.r2(0) == 1


@pytest.mark.parametrize("n", [1, 2, 3, 6])
def test_radius_identity_on_points(frame12, n):
    rl = enumerate_orbit(frame12, None, 30, n)
    assert len(rl) > 0
    for p in rl.points():
        assert p.rep.det == n
        assert p.r2 * n * n - n * n - QuadRat(12, p.F * p.F / 4) == 0
        assert radius2(p.rep, frame12) == p.r2


def test_points_are_canonical_and_distinct(frames):
    for fr in frames.values():
        rl = enumerate_orbit(fr, None, 40)
        reps = [p.rep for p in rl.points()]
        assert len(set(reps)) == len(reps)
        for N in reps:
            assert canonicalize(N, fr)[1] == 0
            first = next(e for e in N.entries() if e)
            assert first > 0


def test_sl2_mode_doubles(frame12):
    rl_p = enumerate_orbit(frame12, None, 50, sign_mode=PSL2)
    rl_s = enumerate_orbit(frame12, None, 50, sign_mode=SL2)
    assert len(rl_s) == 2 * len(rl_p)
    assert {tuple(r) for r in rl_s.rep_set()} == rl_p.rep_set() | {tuple(-v for v in r) for r in rl_p.rep_set()}


@pytest.mark.parametrize("backend", _kernels.available_backends())
def test_backends_agree(frames, backend):
    for fr in frames.values():
        ref = enumerate_orbit(fr, Z_IRR if fr.d == 12 else None, 200, backend="numpy")
        got = enumerate_orbit(fr, Z_IRR if fr.d == 12 else None, 200, backend=backend)
        assert np.array_equal(ref.reps, got.reps)


def test_thread_count_determinism(frame12):
    from conjcount import _accel
    if not _accel.HAVE_NUMBA:
        pytest.skip("numba not installed")
    a = enumerate_orbit(frame12, None, 500, backend="numba", threads=1)
    b = enumerate_orbit(frame12, None, 500, backend="numba", threads=4)
    assert np.array_equal(a.reps, b.reps)


def test_box_doubling_certificate(frames):
    # enumerate_orbit raises CertificationError if doubling changes anything
    for fr in frames.values():
        for X in (10, 57, 200):
            enumerate_orbit(fr, None, X, certify=True)
        enumerate_orbit(fr, None, 100, n=4, certify=True)


@pytest.mark.parametrize("z,X", [(Z_OFF, 2), (Z_OFF, 10), (Z_IRR, 5), (None, 7)])
def test_count_matches_oracle_other_points(frame12, z, X):
    assert count(frame12, z, X) == oracle_bfs_count(frame12, z, X)


@pytest.mark.parametrize("n", [2, 3])
def test_hecke_count_matches_oracle(frame12, n):
    # det-n walks need a wider pruning radius than det 1
    assert count(frame12, None, 5, n=n) == oracle_bfs_count(frame12, None, 5, n=n, prune_factor=6)


def test_oracle_flags_instability(frame12):
    from conjcount.counting import OracleNotStabilized
    with pytest.raises(OracleNotStabilized):
        oracle_bfs_count(frame12, None, 5, n=3, prune_factor=3)


def test_oracle_trivial(frame12):
    assert oracle_bfs_count(frame12, None, F(1, 2)) == 0
    assert oracle_bfs_count(frame12, None, 1) == 1


def test_count_examples_and_monotone(frame12, fresh_cache):
    assert count(frame12, None, 0.5) == 0
    assert count(frame12, None, 1) == 1
    Xs = np.linspace(1, 300, 97)
    vals = [count(frame12, None, F(x)) for x in Xs]
    assert all(a <= b for a, b in zip(vals, vals[1:]))
    ratio = count(frame12, None, 1000) / 1000
    assert abs(ratio / (12 * LOG_EPS12 / math.pi) - 1) < 0.25


def test_right_continuity_at_jump(frame12):
    rl = radius_list(frame12, None, 100)
    r2 = rl.r2(5)
    # exact boundary: a rational X with X^2 = r2 exists only for rational r2
    if r2.q == 0 and math.isqrt(r2.p.numerator) ** 2 == r2.p.numerator \
            and math.isqrt(r2.p.denominator) ** 2 == r2.p.denominator:
        X = F(math.isqrt(r2.p.numerator), math.isqrt(r2.p.denominator))
        assert rl.count(X) > rl.count(X - F(1, 10 ** 12))
    # count_q2 at exactly the jump includes it
    R = rl._R(1) + (r2 - 1) * rl.n ** 2 * rl.z.y ** 2
    assert rl.count_q2(R) >= 6


def test_horizon_exceeded(frame12):
    rl = enumerate_orbit(frame12, None, 10)
    with pytest.raises(HorizonExceeded):
        rl.count(11)


def test_count_fq_relation(frame12):
    rl = enumerate_orbit(frame12, None, 60, n=2)
    for Xf in (1, 10, 50, 200):
        assert count_fq(frame12, Xf, 2) == sum(1 for p in rl.points() if abs(p.F) <= Xf)


def test_weighted_count_sandwich(frame12):
    rng = random.Random(9)
    for _ in range(10):
        X = F(rng.randint(20, 4000), 10)
        Y = float(X) ** (2 / 3)
        if Y >= math.sqrt(float(X * X - 1)) / 2:
            continue
        lo = weighted_count(frame12, None, HuberWindow.minus(X, Y))
        hi = weighted_count(frame12, None, HuberWindow.plus(X, Y))
        assert lo <= count(frame12, None, X) <= hi


def test_weighted_count_limits(frame12):
    X = F(50)
    U = math.sqrt(float(X * X - 1))
    thin = HuberWindow("plus", U, U * (1 + 1e-12), X)
    assert weighted_count(frame12, None, thin) == pytest.approx(count(frame12, None, X), abs=1e-6)
    tiny = HuberWindow.minus(F(1001, 1000), 0.01)
    assert weighted_count(frame12, Z_OFF, tiny) == 0
    with pytest.raises(ValueError):
        HuberWindow("plus", 10.0, 25.0)


def test_main_term_examples(frame12):
    assert main_term([], 10) == 0
    data = sl2z_spectral_datum(frame12)
    assert len(data) == 1 and data[0].s == 1
    assert data[0].coeff == pytest.approx(3 / math.pi * 2 * LOG_EPS12, rel=1e-14)
    assert data[0].coeff == pytest.approx(2.515204, abs=1e-6)
    assert main_term(data, 7) == pytest.approx(12 * LOG_EPS12 / math.pi * 7, rel=1e-13)
    assert main_term([SpectralDatum(0.75, 1.0)], 16) == pytest.approx(coeff_A(0.75).real * 8, rel=1e-13)
    with pytest.raises(ValueError):
        SpectralDatum(0.5, 1.0)


def test_spectral_datum_nu(frame12):
    fr2 = build_frame(frame12.form, nu=2)
    assert sl2z_spectral_datum(fr2)[0].coeff == pytest.approx(sl2z_spectral_datum(frame12)[0].coeff)
    assert fr2.mu == pytest.approx(2 * frame12.mu)


def test_error_term(frame12):
    assert error_term(frame12, None, 0.5) == pytest.approx(-12 * LOG_EPS12 / math.pi * 0.5)
    rl = radius_list(frame12, None, 100)
    r, mult = rl.jumps()
    data = sl2z_spectral_datum(frame12)
    for k in (3, 10, 40):
        before = rl.count(F(r[k]) * (1 - F(1, 10 ** 9)))
        after = rl.count(F(r[k]) * (1 + F(1, 10 ** 9)))
        assert after - before == mult[k]


def test_error_scaled_bounded(frame12):
    data = sl2z_spectral_datum(frame12)
    ratios = [abs(error_term(frame12, None, F(x), data)) / x ** (2 / 3) for x in np.geomspace(1e2, 1e5, 12)]
    assert max(ratios) < 1.0  # observed max 0.21


def test_x_t_conversion(frame12):
    mu = frame12.mu
    assert x_to_t(1, mu) == pytest.approx(mu, rel=1e-14)
    assert t_to_x(10, mu) == pytest.approx(math.sinh(5) / math.sinh(mu / 2), rel=1e-14)
    for X in np.geomspace(1, 1e6, 25):
        assert t_to_x(x_to_t(X, mu), mu) == pytest.approx(X, rel=1e-12)
