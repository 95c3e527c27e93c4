from fractions import Fraction

import pytest

from kakutani import branch_systems as bs
from kakutani.symbolic import (CodedPoint, ExactLog, birkhoff_chord_sum, enumerate_words_by_scale, format_word,
                               minimal_period, parse_word)


def test_word_round_trip():
    assert parse_word("2,1") == (2, 1)
    assert parse_word("") == ()
    assert format_word((1, 2, 2)) == "1,2,2"


def test_minimal_period():
    assert minimal_period((1, 2, 1, 2)) == (1, 2)
    assert minimal_period((1, 1, 2)) == (1, 1, 2)


def test_coded_point_shift_and_prepend():
    x = CodedPoint((2,), (1,))
    assert x.prepend((1,)).prefix(3) == (1, 2, 1)
    assert x.shift().prefix(3) == (1, 1, 1)


def test_exact_log_arithmetic():
    a, b = ExactLog(8), ExactLog(2)
    assert (a - b) == ExactLog(4)
    assert (a + b).arg == 16
    assert b < a
    assert a.exp_neg() == Fraction(1, 8)
    assert not ExactLog(Fraction(1, 2)).is_nonnegative()
    assert float(ExactLog(Fraction(10**40 + 1, 10**40))) > 0


def test_birkhoff_sum_is_minus_log_length():
    s = bs.kakutani("2/5")
    val = birkhoff_chord_sum(s, (1, 2, 2))
    assert val == ExactLog(Fraction(125, 18))


def test_enumerate_by_scale_dyadic():
    words = enumerate_words_by_scale(bs.dyadic(), Fraction(1, 8))
    assert len(words) == 15
    assert () in words and (2, 1, 1) in words


def test_enumerate_closed_threshold():
    # alpha = 2/5: words with alpha_u >= 6/25 are (), (1), (2), (2,2)... (2,1) and (1,2) tie at 6/25
    words = enumerate_words_by_scale(bs.kakutani("2/5"), Fraction(6, 25))
    assert words == {(), (1,), (2,), (1, 2), (2, 1), (2, 2)}
