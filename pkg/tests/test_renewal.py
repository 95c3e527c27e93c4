import math
import random
from fractions import Fraction

import numpy as np
import pytest

from kakutani import branch_systems as bs
from kakutani import renewal as rn
from kakutani.errors import BudgetExceeded
from kakutani.symbolic import CodedPoint, ExactLog, enumerate_words_by_scale


def test_dyadic_count_closed_form(dyadic):
    # alpha_u = 2^-|u|: 2^(n+1) - 1 words at t = n log 2
    for n in range(6):
        assert rn.count_Nv(dyadic, (), (), ExactLog(2**n)) == 2 ** (n + 1) - 1


def test_negative_time_counts_nothing(dyadic):
    assert rn.count_Nv(dyadic, (), (), -0.5) == 0


def test_count_matches_enumeration_two_fifths(two_fifths):
    for q in (Fraction(25, 6), Fraction(10), Fraction(57, 2)):
        assert rn.count_Nv(two_fifths, (), (), ExactLog(q)) == len(enumerate_words_by_scale(two_fifths, 1 / q))


def test_float_and_exact_routes_agree_off_ties(two_fifths):
    fl = bs.affine_float([0.4, 0.6])
    for t in (1.3, 2.71, 4.05):
        assert rn.count_Nv(two_fifths, (), (), t) == rn.count_Nv(fl, (), (), t)


def test_subtree_and_twisted_routes_agree(g_eps_dyadic, two_fifths):
    for sys in (g_eps_dyadic, two_fifths):
        for v, x in (((1,), ()), ((2, 1), (1,)), ((1, 1), (2, 2))):
            for t in (1.0, 2.5, 4.2):
                assert rn.subtree_count_Nv(sys, v, x, t) == rn.twisted_count_Nv(sys, v, x, t)


def test_coded_point_base(dyadic):
    # fixed point of branch 1 is 0; the count is affine-independent
    assert rn.count_Nv(dyadic, (), CodedPoint((), (1,)), 3 * math.log(2) + 1e-9) == 15


def test_renewal_identity_random(g_eps_dyadic):
    rng = random.Random(3)
    for n in (1, 2, 3):
        t = rng.uniform(2.0, 5.0)
        x = tuple(rng.choice((1, 2)) for _ in range(rng.randint(0, 3)))
        direct, decomposed = rn.renewal_identity(g_eps_dyadic, t, x, n)
        assert direct == decomposed


def test_distortion_epsilon(two_fifths, g_eps_dyadic):
    assert rn.distortion_epsilon(two_fifths, 3) == 0.0
    e3, e4 = rn.distortion_epsilon(g_eps_dyadic, 3), rn.distortion_epsilon(g_eps_dyadic, 4)
    assert e4 == pytest.approx(e3 / 2)


def test_prefix_comparison_bound(g_eps_dyadic):
    m = 3
    eps = rn.distortion_epsilon(g_eps_dyadic, m)
    x, y = (1, 2, 1, 1), (1, 2, 1, 2, 2)
    for t in (3.0, 5.0, 6.5):
        assert rn.count_Nv(g_eps_dyadic, (), x, t) <= rn.count_Nv(g_eps_dyadic, (), y, t + eps)


def test_budget_is_enforced(two_fifths):
    with pytest.raises(BudgetExceeded):
        rn.count_Nv(two_fifths, (), (), 30.0, max_nodes=10**6)


def test_series_reads_counts_off_one_traversal(two_fifths):
    grid = np.linspace(1.0, 6.0, 11)
    series = rn.renewal_asymptotic_series(two_fifths, (), grid)
    direct = [rn.count_Nv(two_fifths, (), (), t) for t in grid]
    assert list(series.counts) == direct


def test_cylinder_ratio_g_epsilon_exact(g_eps_dyadic):
    a = math.log(2)
    res = rn.cylinder_ratio(g_eps_dyadic, (1,), a * np.arange(4, 9))
    assert np.allclose(res.values, 2 / 3, atol=1e-12)


def test_query_validation():
    with pytest.raises(ValueError):
        rn.RenewalQuery(t=1.0, variant="M")
    with pytest.raises(ValueError):
        rn.RenewalQuery(t=1.0, v=(1,))
