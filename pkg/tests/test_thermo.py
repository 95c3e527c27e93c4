import math
from fractions import Fraction

import numpy as np
import pytest

from kakutani import branch_systems as bs
from kakutani import thermo as th
from kakutani.errors import DepthTooShallow


def test_index_round_trip():
    for idx in range(27):
        assert th.index_of_word(th.word_of_index(idx, 3, 3), 3) == idx


def test_cylinder_weights_are_left_eigenvector(g_eps_dyadic):
    k = 5
    weights, child = th.operator_tables(g_eps_dyadic, k)
    nu = th.cylinder_table(g_eps_dyadic, k)
    assert np.max(np.abs(th.apply_dual(weights, child, nu) - nu)) < 1e-15


def test_affine_eigendata_exact(two_fifths):
    g = th.leading_eigendata(two_fifths, 6)
    assert g.exact and g.lam == 1
    assert all(v == 1 for v in g.h)
    assert g.nu[0] == Fraction(2, 5) ** 6


def test_affine_lyapunov_is_entropy(two_fifths):
    g = th.leading_eigendata(two_fifths, 4)
    expect = -(0.4 * math.log(0.4) + 0.6 * math.log(0.6))
    assert g.lyapunov == pytest.approx(expect, abs=1e-12)


def test_dyadic_conjugate_lyapunov_is_log2(g_eps_dyadic):
    g = th.leading_eigendata(g_eps_dyadic, 8)
    assert abs(g.lam - 1.0) < 1e-6
    assert g.lyapunov == pytest.approx(math.log(2), abs=1e-4)


def test_hstar_relation_and_normalization(g_eps_dyadic):
    g = th.leading_eigendata(g_eps_dyadic, 7)
    hs = th.hstar_extend(g_eps_dyadic, g, 7)
    assert hs.residual < 1e-6
    assert hs[()] == pytest.approx(1.0, abs=1e-6)


def test_depth_checks(two_fifths):
    with pytest.raises(DepthTooShallow):
        th.leading_eigendata(two_fifths, 0)
    g = th.leading_eigendata(two_fifths, 4)
    with pytest.raises(DepthTooShallow):
        th.hstar_extend(two_fifths, g, 3)


def test_gibbs_weights_sum_to_one(golden):
    g = th.leading_eigendata(golden, 6)
    assert g.mu.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(g.mu > 0)
