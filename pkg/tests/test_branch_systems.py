import json
import math
from fractions import Fraction

import numpy as np
import pytest

from kakutani import branch_systems as bs
from kakutani.errors import BadSymbol, ConfigInvalid, ConjugacyInvalid, GapOrOverlap, NotContracting, SystemInvalid


def test_affine_offsets_are_cumulative():
    s = bs.affine(["1/2", "3/10", "1/5"])
    assert s.offsets == (Fraction(0), Fraction(1, 2), Fraction(4, 5))
    assert s.m == 3
    assert s.is_exact and s.is_affine


def test_cylinder_lengths_are_products():
    s = bs.kakutani("2/5")
    lo, hi, length = s.cylinder((2, 1))
    assert (lo, hi, length) == (Fraction(2, 5), Fraction(16, 25), Fraction(6, 25))
    assert s.length((1, 1, 2)) == Fraction(12, 125)


def test_depth_k_cylinders_tile_unit_interval(golden):
    for s in (bs.kakutani("2/5"), golden):
        words = [(i, j, k) for i in (1, 2) for j in (1, 2) for k in (1, 2)]
        total = sum(float(s.length(w)) for w in words)
        assert total == pytest.approx(1.0, abs=1e-14)


def test_validation_reports_gap():
    rep = bs.validate_system(bs.affine(["1/2", "1/3"]))
    assert not rep.ok
    name, exc = rep.failures[0]
    assert isinstance(exc, GapOrOverlap)
    with pytest.raises(GapOrOverlap):
        rep.raise_first()


def test_validation_reports_non_contracting():
    rep = bs.validate_system(bs.affine(["1", "0"]))
    assert any(isinstance(e, NotContracting) for _, e in rep.failures)
    assert all(isinstance(e, SystemInvalid) for _, e in rep.failures)


def test_bad_symbol_rejected(dyadic):
    with pytest.raises(BadSymbol):
        dyadic.check_word((1, 3))


def test_parse_fraction_rejects_garbage():
    assert bs.parse_fraction("2/5") == Fraction(2, 5)
    with pytest.raises(ConfigInvalid):
        bs.parse_fraction("x/2")


def test_golden_ratios():
    s = bs.golden()
    phi = (math.sqrt(5) - 1) / 2
    assert float(s.ratios[0]) == pytest.approx(phi, rel=1e-15)
    assert float(s.ratios[1]) == pytest.approx(phi**2, rel=1e-15)


def test_g_epsilon_basic_properties():
    c = bs.Conjugacy.g_epsilon(0.1)
    x = np.linspace(0, 1, 101)
    assert c.g(0.0) == pytest.approx(0.0, abs=1e-15)
    assert c.g(1.0) == pytest.approx(1.0, abs=1e-15)
    assert np.all(np.diff(c.g(x)) > 0)
    assert np.max(np.abs(c.ginv(c.g(x)) - x)) < 1e-13
    assert c.derivative_range == (0.9, 1.1)
    a, l = 0.3, 0.2
    assert c.chord(a, l) == pytest.approx(c.g(a + l) - c.g(a), abs=1e-15)


def test_g_epsilon_derivative_matches_finite_difference():
    c = bs.Conjugacy.g_epsilon(0.2)
    x = np.linspace(0.05, 0.95, 19)
    h = 1e-6
    fd = (c.g(x + h) - c.g(x - h)) / (2 * h)
    assert np.max(np.abs(fd - c.dg(x))) < 1e-8


def test_bad_conjugacy_rejected():
    with pytest.raises(ConjugacyInvalid):
        bs.Conjugacy.g_epsilon(1.5).check()


def test_conjugated_system_intertwines(g_eps_dyadic):
    base = bs.dyadic()
    c = g_eps_dyadic.conjugacy
    x = np.linspace(0, 1, 257)
    for i in (1, 2):
        lhs = g_eps_dyadic.branch(i, c.g(x))
        rhs = c.g(base.branch(i, x))
        assert np.max(np.abs(np.asarray(lhs, float) - rhs)) < 1e-12
    assert bs.conjugacy_residual(g_eps_dyadic, base, c) < 1e-12


def test_conjugated_first_cylinder_length(g_eps_dyadic):
    assert float(g_eps_dyadic.length((1,))) == pytest.approx(0.5 + 0.1 / math.pi, abs=1e-15)


def test_map_word_record(dyadic):
    rec = bs.map_word(dyadic, (2, 1))
    assert (rec.left, rec.right, rec.length) == (Fraction(1, 2), Fraction(3, 4), Fraction(1, 4))


def test_system_dict_round_trip(tmp_path):
    s = bs.build_conjugated_system(bs.kakutani("2/5"), bs.Conjugacy.g_epsilon(0.05))
    path = tmp_path / "sys.json"
    path.write_text(json.dumps(s.as_dict()))
    back = bs.load_system(path)
    assert back.ratios == s.ratios
    assert back.conjugacy.epsilon == pytest.approx(0.05)
    assert float(back.length((2, 1))) == pytest.approx(float(s.length((2, 1))), abs=1e-15)
