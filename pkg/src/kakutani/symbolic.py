"""Words, coded points, chord potentials and scale-threshold enumeration.

A word is a tuple of 1-based symbols; ``()`` is the empty word.  The chord
potential of a nonempty word ``w`` is ``-log(alpha_w / alpha_{w[1:]})`` so its
Birkhoff sum along ``w`` telescopes to ``-log alpha_w``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering

from .branch_systems import BranchSystem
from .errors import BudgetExceeded, EmptyWord, NoConvergence

Word = tuple

FLOAT_RTOL = 1e-12
DEFAULT_WORD_CAP = 10**7


def parse_word(text: str) -> Word:
    """``"2,1"`` -> ``(2, 1)``; the empty string is the empty word."""
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(int(s) for s in text.split(","))
    except ValueError as exc:
        from .errors import ConfigInvalid

        raise ConfigInvalid(f"malformed word {text!r}") from exc


def format_word(word) -> str:
    return ",".join(str(s) for s in word)


def minimal_period(word: Word) -> Word:
    n = len(word)
    for p in range(1, n + 1):
        if n % p == 0 and word[:p] * (n // p) == word:
            return word[:p]
    return word


@dataclass(frozen=True)
class CodedPoint:
    """The eventually periodic sequence ``head tail tail tail ...``.

    Construction canonicalizes: the tail is reduced to its minimal period and
    trailing head symbols that agree with the rotated tail are absorbed.
    """

    head: Word
    tail: Word

    def __post_init__(self):
        head, tail = tuple(self.head), tuple(self.tail)
        if not tail:
            raise ValueError("a coded point needs a nonempty periodic tail")
        tail = minimal_period(tail)
        while head and head[-1] == tail[-1]:
            head = head[:-1]
            tail = (tail[-1],) + tail[:-1]
        object.__setattr__(self, "head", head)
        object.__setattr__(self, "tail", tail)

    def prefix(self, n: int) -> Word:
        out = list(self.head[:n])
        while len(out) < n:
            out.extend(self.tail[: n - len(out)])
        return tuple(out)

    def prepend(self, u: Word) -> "CodedPoint":
        return CodedPoint(tuple(u) + self.head, self.tail)

    def shift(self) -> "CodedPoint":
        if self.head:
            return CodedPoint(self.head[1:], self.tail)
        return CodedPoint((), self.tail[1:] + self.tail[:1])

    def __str__(self):
        return f"{format_word(self.head)}({format_word(self.tail)})"


@total_ordering
class ExactLog:
    """The real number ``log q`` for a positive rational ``q``.

    Sums and differences stay exact; comparisons between two ExactLogs are
    exact, comparisons with floats go through ``float``.
    """

    __slots__ = ("arg",)

    def __init__(self, arg):
        arg = Fraction(arg)
        if arg <= 0:
            raise ValueError("log argument must be positive")
        self.arg = arg

    def __float__(self):
        # log of a ratio of big integers without overflow; log1p near 1
        if Fraction(1, 2) < self.arg < 2:
            return math.log1p(float(self.arg - 1))
        return math.log(self.arg.numerator) - math.log(self.arg.denominator)

    def __repr__(self):
        return f"ExactLog({self.arg})"

    def __add__(self, other):
        if isinstance(other, ExactLog):
            return ExactLog(self.arg * other.arg)
        return float(self) + other

    __radd__ = __add__

    def __neg__(self):
        return ExactLog(1 / self.arg)

    def __sub__(self, other):
        if isinstance(other, ExactLog):
            return ExactLog(self.arg / other.arg)
        return float(self) - other

    def __rsub__(self, other):
        return other - float(self)

    def __eq__(self, other):
        if isinstance(other, ExactLog):
            return self.arg == other.arg
        if isinstance(other, (int, float)):
            return float(self) == other
        return NotImplemented

    def __lt__(self, other):
        if isinstance(other, ExactLog):
            return self.arg < other.arg
        return float(self) < other

    def __hash__(self):
        return hash(("ExactLog", self.arg))

    def exp_neg(self) -> Fraction:
        """``exp(-log q) = 1/q`` exactly."""
        return 1 / self.arg

    def is_nonnegative(self) -> bool:
        return self.arg >= 1


def threshold_from_t(t):
    """``(lambda, exact)`` for ``lambda = exp(-t)``."""
    if isinstance(t, ExactLog):
        return t.exp_neg(), True
    return math.exp(-float(t)), False


def passes(value, lam, exact: bool) -> bool:
    """Closed threshold test ``value >= lam`` (relative slack in float mode)."""
    if exact:
        return value >= lam
    return float(value) >= float(lam) * (1.0 - FLOAT_RTOL)


# ---------------------------------------------------------------------------
# Coding map
# ---------------------------------------------------------------------------


def coding_point(sys: BranchSystem, x: CodedPoint, tol: float = 1e-15):
    """Point of ``[0, 1]`` coded by ``x``.

    Systems with an affine model solve the fixed point of the periodic tail in
    closed form (exactly, as a Fraction, in exact mode) and push it through the
    conjugacy.  Custom oracles shrink nested cylinders until their length is at
    most ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if sys.has_model:
        left, length = sys.model_interval(x.tail)
        if sys.is_exact:
            y = left / (1 - length)
            hl, hlen = sys.model_interval(x.head)
            return hl + hlen * y
        ctx = sys.mp
        left, length = sys._to_mp(left), sys._to_mp(length)
        y = left / (1 - length)
        hl, hlen = sys.model_interval(x.head)
        s = sys._to_mp(hl) + sys._to_mp(hlen) * y
        return sys.conjugacy.g_mp(ctx, s)
    n = len(x.head) + len(x.tail)
    while n <= sys.max_depth:
        lo, hi, length = sys.cylinder(x.prefix(n))
        if length <= tol:
            return (lo + hi) / 2
        n += len(x.tail)
    raise NoConvergence(f"cylinder length did not reach {tol} within depth {sys.max_depth}")


# ---------------------------------------------------------------------------
# Chord potential
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChordPotentialValue:
    word: Word
    value: float
    ratio: Fraction | None = None  # alpha_{w[1:]} / alpha_w, kept in exact mode


def chord_potential(sys: BranchSystem, w) -> ChordPotentialValue:
    w = sys.check_word(w)
    if not w:
        raise EmptyWord("the chord potential is defined on nonempty words")
    num = sys.length(w[1:])
    den = sys.length(w)
    if sys.is_exact:
        ratio = num / den
        return ChordPotentialValue(w, float(ExactLog(ratio)), ratio)
    return ChordPotentialValue(w, float(sys.mp.log(num / den)))


def birkhoff_chord_sum(sys: BranchSystem, w):
    """``S_|w| gamma(w) = -log alpha_w``; an :class:`ExactLog` in exact mode."""
    w = sys.check_word(w)
    if not w:
        raise EmptyWord("Birkhoff sums need a nonempty word")
    alpha = sys.length(w)
    if sys.is_exact:
        return ExactLog(1 / alpha)
    return float(-sys.mp.log(alpha))


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------


def enumerate_words_by_scale(sys: BranchSystem, lam, max_words: int = DEFAULT_WORD_CAP) -> set:
    """All words ``v`` (including the empty word) with ``alpha_v >= lam``.

    Words are grown by appending symbols, so a failed word prunes its whole
    subtree (cylinders are nested).  ``lam`` may be a Fraction (exact test) or
    a float (relative slack ``1e-12``).
    """
    exact = sys.is_exact and isinstance(lam, (Fraction, int))
    if isinstance(lam, ExactLog):
        lam, exact = lam.exp_neg(), sys.is_exact
    if not (0 < float(lam) <= 1 or (not exact and float(lam) <= 1 + FLOAT_RTOL)):
        raise ValueError("lambda must lie in (0, 1]")
    if exact:
        lam = Fraction(lam)
    out = set()
    stack = [()]
    while stack:
        v = stack.pop()
        length = sys.length(v) if v else 1
        if not passes(length, lam, exact):
            continue
        out.add(v)
        if len(out) > max_words:
            raise BudgetExceeded(f"more than {max_words} words above the threshold")
        for i in range(sys.m, 0, -1):
            stack.append(v + (i,))
    return out
