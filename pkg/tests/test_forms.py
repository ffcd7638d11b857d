import itertools
import math
import random
from fractions import Fraction as F

import numpy as np
import pytest

from conjcount.exactnum import IMat2, QMat2, QuadRat
from conjcount.forms import (InvalidForm, QForm, act, automorph, build_frame, class_of_matrix,
                             equivalent, is_reduced, parse_form, pell_bruteforce, pell_fundamental,
                             reduce_form, reduction_cycle)

PELL_CAP = 2000


def discriminants(limit):
    return [d for d in range(5, limit + 1) if d % 4 in (0, 1) and math.isqrt(d) ** 2 != d]


def random_form(rng, dmax=5000):
    while True:
        a, b, c = (rng.randint(-40, 40) for _ in range(3))
        d = b * b - 4 * a * c
        if a and 0 < d <= dmax and math.isqrt(d) ** 2 != d and math.gcd(a, b, c) == 1:
            return QForm(a, b, c)


def random_sl2(rng, bound=6, steps=4):
    g = IMat2.identity()
    gens = [IMat2(1, 1, 0, 1), IMat2(1, -1, 0, 1), IMat2(0, -1, 1, 0)]
    for _ in range(steps):
        g = g @ rng.choice(gens) ** rng.randint(1, bound)
    return g


@pytest.mark.parametrize("d,t0,u0,p,q", [
    (5, 3, 1, F(3, 2), F(1, 2)),   # (3 + sqrt 5)/2
    (12, 4, 1, F(2), F(1, 2)),     # 2 + sqrt 3
    (8, 6, 2, F(3), F(1)),         # 3 + 2 sqrt 2
])
def test_pell_examples(d, t0, u0, p, q):
    sol = pell_fundamental(d)
    assert (sol.t0, sol.u0) == (t0, u0)
    assert sol.eps == QuadRat(d, p, q)


@pytest.mark.parametrize("d", [0, -4, 9, 16, 6, 7])
def test_pell_rejects(d):
    with pytest.raises(ValueError):
        pell_fundamental(d)


def test_pell_minimality_exhaustive():
    """Every d <= 10^4: equation holds, and no u below min(u0, cap) solves it."""
    us = np.arange(1, PELL_CAP + 1, dtype=np.int64)
    for d in discriminants(10 ** 4):
        sol = pell_fundamental(d)
        assert sol.t0 ** 2 - d * sol.u0 ** 2 == 4 and sol.t0 > 0 and sol.u0 > 0
        s = 4 + d * us * us
        r = np.rint(np.sqrt(s.astype(np.float64))).astype(np.int64)
        hits = us[(r * r == s) | ((r + 1) ** 2 == s) | ((r - 1) ** 2 == s)]
        if sol.u0 <= PELL_CAP:
            assert hits.size and hits[0] == sol.u0, d
        else:
            assert hits.size == 0, d


def test_pell_bruteforce_agrees_small():
    for d in discriminants(400):
        brute = pell_bruteforce(d, cap=10 ** 5)
        if brute is not None:
            sol = pell_fundamental(d)
            assert (brute.t0, brute.u0) == (sol.t0, sol.u0)


def test_pell_large_discriminant():
    sol = pell_fundamental(10 ** 6 + 1)
    assert sol.t0 ** 2 - (10 ** 6 + 1) * sol.u0 ** 2 == 4
    assert sol.eps > 1


def test_qform_validation():
    for bad in [(1, 0, 1), (1, 2, 1), (2, 0, -2), (0, 0, 0)]:
        with pytest.raises(InvalidForm):
            QForm(*bad)
    assert parse_form("1,0,-3") == QForm(1, 0, -3)
    assert str(QForm(1, 0, -3)) == "[1,0,-3]"


@pytest.mark.parametrize("form,M", [((1, 0, -3), (2, 3, 1, 2)), ((1, 0, -2), (3, 4, 2, 3))])
def test_automorph_examples(form, M):
    q = QForm(*form)
    m = automorph(q)
    assert m == IMat2(*M)
    G = q.gram2()  # doubled Gram matrix as an IMat2
    assert m.transpose() @ G @ m == G
    assert act(q, m) == q


def test_automorph_invariants():
    rng = random.Random(7)
    for _ in range(200):
        q = random_form(rng)
        m = automorph(q)
        sol = pell_fundamental(q.disc)
        assert m.det == 1 and m.trace == sol.t0
        if q.a > 0:
            assert m.entries()[2] == q.a * sol.u0 > 0


@pytest.mark.parametrize("m,form", [((2, 3, 1, 2), (1, 0, -3)), ((3, 4, 2, 3), (1, 0, -2))])
def test_class_of_matrix_examples(m, form):
    mc = class_of_matrix(IMat2(*m))
    assert (mc.form, mc.power, mc.sign) == (QForm(*form), 1, 1)


def test_class_of_matrix_round_trip():
    rng = random.Random(11)
    for _ in range(50):
        q = random_form(rng)
        M = automorph(q)
        mc = class_of_matrix(M)
        assert (mc.form, mc.power, mc.sign) == (q, 1, 1)
        assert automorph(mc.form) == M


def test_class_of_matrix_powers_and_sign():
    M = automorph(QForm(1, 1, -1))
    for k in range(1, 6):
        mc = class_of_matrix(M ** k)
        assert (mc.form, mc.power, mc.sign) == (QForm(1, 1, -1), k, 1)
        mc = class_of_matrix(-(M ** k))
        assert (mc.power, mc.sign) == (k, -1)
    # the inverse is the automorph of the opposite form
    assert class_of_matrix(M.inverse()).form == QForm(-1, -1, 1)
    with pytest.raises(ValueError):
        class_of_matrix(IMat2(1, 1, 0, 1))


def test_reduce_examples():
    q, g = reduce_form(QForm(1, 0, -3))
    assert q == QForm(1, 2, -2) and g == IMat2(-1, -1, 0, -1)
    assert is_reduced(q)
    r = QForm(1, 2, -2)
    assert reduce_form(r) == (r, IMat2.identity())
    assert set(reduction_cycle(QForm(1, 0, -3))) == {QForm(1, 2, -2), QForm(-2, 2, 1)}


def test_reduce_transform_validity():
    rng = random.Random(3)
    for _ in range(100):
        q = random_form(rng)
        red, g = reduce_form(q)
        assert g.det == 1
        assert act(q, g) == red
        assert is_reduced(red)


def _brute_equivalent(q1, q2, bound=6):
    for a, b, c in itertools.product(range(-bound, bound + 1), repeat=3):
        if a == 0:
            continue
        if (1 + b * c) % a == 0:
            g = IMat2(a, b, c, (1 + b * c) // a)
            if act(q1, g) == q2:
                return True
    return False


def test_equivalence_examples():
    q = QForm(1, 0, -3)
    assert equivalent(q, q)
    assert equivalent(q, QForm(-3, 0, 1)) is _brute_equivalent(q, QForm(-3, 0, 1)) is True
    assert equivalent(q, QForm(-1, 0, 3)) is False
    assert not _brute_equivalent(q, QForm(-1, 0, 3))
    assert not equivalent(q, QForm(1, 1, -1))


def test_equivalence_is_an_equivalence_relation():
    rng = random.Random(5)
    bases = [QForm(1, 0, -3), QForm(-1, 0, 3), QForm(1, 0, -10), QForm(2, 0, -5),
             QForm(1, 1, -19), QForm(-1, 1, 19)]
    for d in sorted({q.disc for q in bases}):
        classes = [q for q in bases if q.disc == d]
        pool = [(i, act(classes[i], random_sl2(rng))) for i in range(len(classes)) for _ in range(15)]
        rel = {(x, y): equivalent(p, q) for x, (_, p) in enumerate(pool) for y, (_, q) in enumerate(pool)}
        n = len(pool)
        for x in range(n):
            assert rel[x, x]
            for y in range(n):
                assert rel[x, y] == rel[y, x]
                # generated from the same base, so equivalent by construction
                if pool[x][0] == pool[y][0]:
                    assert rel[x, y]
        for x, y, z in itertools.product(range(n), repeat=3):
            if rel[x, y] and rel[y, z]:
                assert rel[x, z]


def test_build_frame_example():
    fr = build_frame(QForm(1, 0, -3))
    s3 = QuadRat(12, 0, F(1, 2))  # sqrt(3) = sqrt(12)/2
    assert fr.theta1 == s3 and fr.theta2 == -s3
    assert fr.M == IMat2(2, 3, 1, 2)
    assert fr.mu == pytest.approx(2 * math.log(2 + math.sqrt(3)), rel=1e-14)
    lam1, lam2 = fr.eps, fr.eps.inverse()
    assert lam1 * lam2 == 1 and lam1 > 1
    assert fr.T @ QMat2(12, lam1, 0, 0, lam2) @ fr.Tinv == fr.M


@pytest.mark.parametrize("form", [(1, 0, -3), (1, 0, -2), (1, 1, -1), (3, 5, -7), (-2, 3, 4)])
def test_matrix_powers_closed_form(form):
    fr = build_frame(QForm(*form))
    lam1, lam2 = fr.eps, fr.eps.inverse()
    for n in range(1, 7):
        closed = fr.T @ QMat2(fr.d, lam1 ** n, 0, 0, lam2 ** n) @ fr.Tinv
        Mn = fr.M ** n
        assert closed == QMat2.from_imat(fr.d, Mn)
        assert Mn.trace == lam1 ** n + lam2 ** n


def test_nu_scales_mu():
    a, b = build_frame(QForm(1, 0, -3)), build_frame(QForm(1, 0, -3), nu=2)
    assert b.mu == pytest.approx(2 * a.mu)
    with pytest.raises(ValueError):
        build_frame(QForm(1, 0, -3), nu=0)
