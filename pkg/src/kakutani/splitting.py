"""Generalized Kakutani splitting.

At every stage all intervals of maximal length are split simultaneously,
each interval ``T_v([0, 1])`` being replaced by its children ``T_{v i}([0, 1])``.
Ties are exact in exact mode and use a relative tolerance of ``1e-12``
otherwise.

Two point sets are tracked: ``E`` holds every endpoint of the current
partition and ``L`` the distinct left endpoints of intervals split so far
(an interval split during the current stage counts as already split).
"""
from __future__ import annotations

import heapq
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

try:  # much faster rational arithmetic and hashing when available
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    _Q = Fraction

from .branch_systems import BranchSystem, require_valid
from .errors import BudgetExceeded, EmptyInput, EmptyLedger

TIE_RTOL = 1e-12
DEDUP_TOL = 1e-14
DEFAULT_INTERVAL_CAP = 5 * 10**6


def _to_fraction(x):
    if isinstance(x, Fraction) or not hasattr(x, "denominator") or isinstance(x, float):
        return x
    return Fraction(int(x.numerator), int(x.denominator))


@dataclass
class StageRecord:
    stage: int
    max_length: object
    intervals_split: int
    n_endpoints: int
    n_left: int
    discrepancy: float | None


@dataclass
class PartitionState:
    """Current intervals as ``(left, length, word)`` triples plus the stage counter."""

    intervals: list
    stage: int
    exact: bool

    def sorted_intervals(self) -> list:
        return sorted(self.intervals, key=lambda iv: iv[0])

    def total_length(self):
        return sum((iv[1] for iv in self.intervals), Fraction(0) if self.exact else 0)


@dataclass
class SplitLedger:
    exact: bool
    endpoints_seen: dict = field(default_factory=dict)  # point -> first stage
    left_seen: dict = field(default_factory=dict)  # point -> stage first split
    split_words: set = field(default_factory=set)
    history: list = field(default_factory=list)
    extracted_lengths: list = field(default_factory=list)

    def _dedup(self, table: dict) -> list:
        items = sorted(table.items())
        if self.exact:
            return [(_to_fraction(x), s) for x, s in items]
        if not items:
            return items
        out = [list(items[0])]
        for x, s in items[1:]:
            if abs(x - out[-1][0]) <= DEDUP_TOL:
                out[-1][1] = min(out[-1][1], s)
            else:
                out.append([x, s])
        return [tuple(p) for p in out]

    def all_endpoints(self) -> list:
        """Sorted ``E``."""
        return [x for x, _ in self._dedup(self.endpoints_seen)]

    def left_split(self) -> list:
        """Sorted ``L``."""
        return [x for x, _ in self._dedup(self.left_seen)]

    def points(self, which: str) -> list:
        if which == "all":
            return self.all_endpoints()
        if which == "left":
            return self.left_split()
        raise ValueError("which must be 'all' or 'left'")

    @property
    def stage(self) -> int:
        return len(self.history)

    def endpoint_rows(self) -> list[dict]:
        """One row per point of ``E`` or ``L`` with membership and first stage."""
        ends = dict(self._dedup(self.endpoints_seen))
        lefts = dict(self._dedup(self.left_seen))
        rows = []
        for x in sorted(set(ends) | set(lefts)):
            member = "both" if x in ends and x in lefts else ("E" if x in ends else "L")
            first = min(s for s in (ends.get(x), lefts.get(x)) if s is not None)
            exact = f"{x.numerator}/{x.denominator}" if isinstance(x, Fraction) else ""
            rows.append({"value_exact": exact, "value_float": repr(float(x)),
                         "first_stage_seen": first, "set_membership": member})
        return rows

    def stage_rows(self) -> list[dict]:
        rows = []
        for h in self.history:
            ml = h.max_length
            rows.append({
                "stage": h.stage,
                "max_length": f"{ml.numerator}/{ml.denominator}" if isinstance(ml, Fraction) else repr(float(ml)),
                "intervals_split": h.intervals_split,
                "n_endpoints": h.n_endpoints,
                "n_left": h.n_left,
                "star_discrepancy_left": "" if h.discrepancy is None else repr(h.discrepancy),
            })
        return rows


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------


def _children_exact(offsets, ratios, left, length, word):
    for i, (o, r) in enumerate(zip(offsets, ratios), start=1):
        yield left + length * o, length * r, word + (i,)


def _float_child_data(sys, word):
    lo, hi, length = sys.cylinder(word)
    return lo, length


def run_splitting(sys: BranchSystem, stages: int | None = None, min_endpoints: int | None = None,
                  max_intervals: int = DEFAULT_INTERVAL_CAP, track_discrepancy: bool = True):
    """Run the splitting procedure.

    Stop after ``stages`` stages, or as soon as ``#L >= min_endpoints``.
    Returns ``(PartitionState, SplitLedger)``.
    """
    if (stages is None) == (min_endpoints is None):
        raise ValueError("give exactly one of stages or min_endpoints")
    limit = stages if stages is not None else min_endpoints
    if limit is None or limit <= 0:
        raise ValueError("the stopping value must be positive")
    require_valid(sys)
    if not sys.has_model:
        raise ValueError("splitting needs an affine model (affine or conjugated system)")
    exact = sys.is_exact
    ledger = SplitLedger(exact)
    zero, one = (_Q(0), _Q(1)) if exact else (0.0, 1.0)
    offsets = [_Q(o.numerator, o.denominator) for o in sys.offsets] if exact else None
    ratios = [_Q(r.numerator, r.denominator) for r in sys.ratios] if exact else None
    ledger.endpoints_seen[zero] = 0
    ledger.endpoints_seen[one] = 0
    left_floats: list = []

    if exact:
        classes: dict = {one: [(zero, ())]}
        heap = [-one]
    else:
        counter = 0
        heap = [(-1.0, counter, 0.0, ())]

    n_intervals = 1
    stage = 0
    while True:
        if stages is not None and stage >= stages:
            break
        if min_endpoints is not None and len(ledger.left_seen) >= min_endpoints:
            break
        stage += 1
        if exact:
            key = -heapq.heappop(heap)
            batch = sorted(classes.pop(key))
            max_len = key
        else:
            top = heap[0][0]
            max_len = -top
            batch = []
            while heap and -heap[0][0] >= max_len * (1.0 - TIE_RTOL):
                _, _, left, word = heapq.heappop(heap)
                batch.append((left, word))
            batch.sort()
        ledger.extracted_lengths.append(_to_fraction(max_len))
        for left, word in batch:
            ledger.split_words.add(word)
            if left not in ledger.left_seen:
                ledger.left_seen[left] = stage
                left_floats.append(float(left))
            if exact:
                children = _children_exact(offsets, ratios, left, max_len, word)
            else:
                children = ((*_float_child_data(sys, word + (i,)), word + (i,)) for i in range(1, sys.m + 1))
            for c_left, c_len, c_word in children:
                if exact:
                    if c_len not in classes:
                        classes[c_len] = []
                        heapq.heappush(heap, -c_len)
                    classes[c_len].append((c_left, c_word))
                    right = c_left + c_len
                else:
                    c_left, c_len = float(c_left), float(c_len)
                    counter += 1
                    heapq.heappush(heap, (-c_len, counter, c_left, c_word))
                    right = c_left + c_len
                if c_left not in ledger.endpoints_seen:
                    ledger.endpoints_seen[c_left] = stage
                if right not in ledger.endpoints_seen:
                    ledger.endpoints_seen[right] = stage
        n_intervals += (sys.m - 1) * len(batch)
        if n_intervals > max_intervals:
            raise BudgetExceeded(f"interval count {n_intervals} exceeds cap {max_intervals}")
        disc = star_discrepancy(np.array(left_floats)) if track_discrepancy else None
        ledger.history.append(StageRecord(stage, _to_fraction(max_len), len(batch), len(ledger.endpoints_seen),
                                          len(ledger.left_seen), disc))

    if exact:
        intervals = [(_to_fraction(left), _to_fraction(length), word)
                     for length, group in classes.items() for left, word in group]
    else:
        intervals = [(left, -neg, word) for neg, _, left, word in heap]
    return PartitionState(intervals, stage, exact), ledger


# ---------------------------------------------------------------------------
# Measures
# ---------------------------------------------------------------------------


def empirical_measure_on_interval(ledger: SplitLedger, which: str, J) -> Fraction:
    """Share of the ``which`` points (``"all"`` or ``"left"``) in the closed interval ``J``."""
    pts = ledger.points(which)
    if not pts:
        raise EmptyLedger("the ledger holds no points")
    lo, hi = J
    if lo > hi or lo < 0 or hi > 1:
        raise ValueError("J must be a subinterval of [0, 1]")
    if not ledger.exact:
        lo, hi = float(lo), float(hi)
    inside = bisect_right(pts, hi) - bisect_left(pts, lo)
    return Fraction(inside, len(pts))


def star_discrepancy(points):
    """``max_i max(|i/N - x_i|, |(i-1)/N - x_i|)`` over the sorted points.

    Exact (a Fraction) when every point is a Fraction, a float otherwise.
    """
    if isinstance(points, np.ndarray):
        if points.size == 0:
            raise EmptyInput("star discrepancy of an empty set")
        x = np.sort(points.astype(float))
        n = x.size
        i = np.arange(1, n + 1)
        return float(max(np.max(np.abs(i / n - x)), np.max(np.abs((i - 1) / n - x))))
    pts = list(points)
    if not pts:
        raise EmptyInput("star discrepancy of an empty set")
    if all(isinstance(p, (Fraction, int)) for p in pts):
        pts = sorted(Fraction(p) for p in pts)
        n = len(pts)
        return max(max(abs(Fraction(i, n) - x), abs(Fraction(i - 1, n) - x))
                   for i, x in enumerate(pts, start=1))
    return star_discrepancy(np.array([float(p) for p in pts]))
