from fractions import Fraction

import numpy as np
import pytest

from kakutani import branch_systems as bs
from kakutani import splitting as sp
from kakutani.errors import BudgetExceeded, EmptyInput


def _ends(sys, n):
    return sp.run_splitting(sys, stages=n, track_discrepancy=False)[1].all_endpoints()


def test_dyadic_stages_give_dyadic_grid(dyadic):
    # ties split together: stage n refines to the 2^n grid
    assert _ends(dyadic, 3) == [Fraction(k, 8) for k in range(9)]


def test_two_fifths_first_stages(two_fifths):
    assert _ends(two_fifths, 1) == [0, Fraction(2, 5), 1]
    assert _ends(two_fifths, 2) == [0, Fraction(2, 5), Fraction(16, 25), 1]


def test_two_fifths_stage_six_hand_computation(two_fifths):
    # stage 6 splits the interval of length 27/125 starting at 98/125 at ratio 2/5
    new = Fraction(98, 125) + Fraction(2, 5) * Fraction(27, 125)
    assert new == Fraction(544, 625)
    assert new in _ends(two_fifths, 6)
    assert Fraction(538, 625) not in _ends(two_fifths, 7)


def test_extracted_lengths_decrease_strictly(two_fifths):
    _, ledger = sp.run_splitting(two_fifths, stages=12, track_discrepancy=False)
    ls = ledger.extracted_lengths
    assert all(a > b for a, b in zip(ls, ls[1:]))


def test_partition_covers_unit_interval(two_fifths):
    state, _ = sp.run_splitting(two_fifths, stages=15, track_discrepancy=False)
    ivs = state.sorted_intervals()
    assert state.total_length() == 1
    assert ivs[0][0] == 0
    for (l0, len0, _), (l1, _, _) in zip(ivs, ivs[1:]):
        assert l0 + len0 == l1


def test_left_set_is_subset_of_endpoints(two_fifths):
    _, ledger = sp.run_splitting(two_fifths, stages=20, track_discrepancy=False)
    assert set(ledger.left_split()) <= set(ledger.all_endpoints())


def test_min_endpoints_stops_on_left_count(two_fifths):
    _, ledger = sp.run_splitting(two_fifths, min_endpoints=100, track_discrepancy=False)
    assert len(ledger.left_split()) >= 100
    assert ledger.history[-2].n_left < 100


def test_float_mode_matches_exact_mode():
    exact = _ends(bs.kakutani("2/5"), 10)
    flt = _ends(bs.affine_float([0.4, 0.6]), 10)
    assert np.allclose([float(x) for x in exact], flt, atol=1e-14)


def test_conjugated_endpoints_are_images(g_eps_dyadic):
    # every endpoint is g of a dyadic rational
    pts = np.asarray(_ends(g_eps_dyadic, 12), float)
    pre = g_eps_dyadic.conjugacy.ginv(pts) * 2**12
    assert np.max(np.abs(pre - np.round(pre))) < 1e-9


def test_interval_budget(two_fifths):
    with pytest.raises(BudgetExceeded):
        sp.run_splitting(two_fifths, stages=200, max_intervals=50)


def test_empirical_measure_closed_interval(dyadic):
    _, ledger = sp.run_splitting(dyadic, stages=3)
    assert sp.empirical_measure_on_interval(ledger, "all", (Fraction(1, 8), Fraction(3, 8))) == Fraction(3, 9)


def test_star_discrepancy_oracles():
    assert sp.star_discrepancy([Fraction(1, 2)]) == Fraction(1, 2)
    pts = [Fraction(2 * i - 1, 2 * 10) for i in range(1, 11)]
    assert sp.star_discrepancy(pts) == Fraction(1, 20)
    assert sp.star_discrepancy(np.array([0.05 + 0.1 * i for i in range(10)])) == pytest.approx(0.05)
    with pytest.raises(EmptyInput):
        sp.star_discrepancy([])
