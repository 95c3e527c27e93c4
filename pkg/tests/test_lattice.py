import math
from fractions import Fraction

import numpy as np
import pytest

from kakutani import branch_systems as bs
from kakutani import lattice as lat
from kakutani.errors import NotLattice


def test_lyndon_counts():
    # necklace counts for binary words of length 1..6
    counts = [sum(1 for w in lat.lyndon_words(2, 6) if len(w) == n) for n in range(1, 7)]
    assert counts == [2, 1, 2, 3, 6, 9]


def test_periodic_sums_affine(two_fifths):
    s = lat.periodic_sum(two_fifths, (1, 2))
    assert float(s) == pytest.approx(-math.log(0.4 * 0.6), abs=1e-14)


def test_periodic_sums_invariant_under_conjugacy(g_eps_dyadic):
    for w in ((1,), (1, 2), (1, 1, 2)):
        assert float(lat.periodic_sum(g_eps_dyadic, w)) == pytest.approx(len(w) * math.log(2), abs=1e-12)


def test_detect_dyadic_and_exact_span(dyadic):
    v = lat.detect_lattice(dyadic)
    assert v.is_lattice and v.a == pytest.approx(math.log(2), abs=1e-12)
    assert v.exact_span.arg == 2


def test_detect_rational_ratio_system():
    v = lat.detect_lattice(bs.affine(["1/4", "1/4", "1/2"]), max_period=4)
    assert v.is_lattice and v.a == pytest.approx(math.log(2), abs=1e-12)


def test_detect_nonlattice(two_fifths):
    assert not lat.detect_lattice(two_fifths).is_lattice


def test_reduction_needs_lattice(two_fifths):
    with pytest.raises(NotLattice):
        lat.reduce_to_affine(two_fifths, lat.detect_lattice(two_fifths, max_period=4))


def test_phi_reduction_preserves_periodic_sums():
    rng = np.random.default_rng(1)
    words = [(i, j) for i in (1, 2) for j in (1, 2)]
    # a one-block function plus a coboundary, the shape met for lattice systems
    c = {i: float(rng.uniform(0.5, 1.5)) for i in (1, 2)}
    f = {i: float(rng.uniform(-1, 1)) for i in (1, 2)}
    zeta = {(i, j): c[i] + f[j] - f[i] for i, j in words}
    reduced, _ = lat.phi_reduction(zeta, 2, 2)
    for w in ((1,), (2,), (1, 2), (1, 1, 2), (1, 2, 2, 2)):
        cyc = w + w
        full = sum(zeta[cyc[i:i + 2]] for i in range(len(w)))
        red = sum(reduced[(s,)] for s in w)
        assert red == pytest.approx(full, abs=1e-12)
    assert reduced[(1,)] == pytest.approx(c[1], abs=1e-12)


def test_profile_breakpoint_location():
    sys = bs.build_conjugated_system(bs.dyadic(), bs.Conjugacy.g_epsilon(0.1))
    bps = lat.profile_breakpoints(lat.profile_model_from_system(sys, math.log(2)))
    assert len(bps) == 1 and bps[0] == pytest.approx(0.5, abs=1e-11)


def test_profile_integrals_identity_conjugacy():
    # g' = 1: F = 1/2 everywhere, I_1 = 1/2
    model = lat.ProfileModel(math.log(2), (Fraction(1, 2), Fraction(1, 2)), lambda t: np.ones_like(np.asarray(t, float)))
    p = lat.lattice_profile_integrals(model)
    assert p.I == pytest.approx(0.5, abs=1e-12)
    assert p.predicted_ratio[(1,)] == pytest.approx(0.5, abs=1e-12)
