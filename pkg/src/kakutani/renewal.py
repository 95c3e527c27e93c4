"""Renewal counting functions on the preimage tree.

For a base word ``x`` and a (possibly empty) prefix word ``v``::

    N_v(t, x) = #{u : alpha_{v u x} / alpha_{v x} >= exp(-t)}

over all words ``u`` including the empty one, so the empty word contributes
``1{t >= 0}``.  With ``v`` empty this is ``N_*(t, x)``.  For an eventually
periodic base point the cylinder ratio is replaced by the derivative ratio
``T_{v u}'(pi x) / T_v'(pi x)``, giving ``N(t, x)``.

Counting goes through the word-tree kernels (compiled or pure Python) in
double precision, through an exact rational traversal when the system is
exact and ``t`` is an :class:`~kakutani.symbolic.ExactLog`, and through a
generic high-precision traversal for systems without a closed-form model.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .branch_systems import BranchSystem
from .errors import BudgetExceeded, ZeroDenominator
from .symbolic import FLOAT_RTOL, CodedPoint, ExactLog, passes, threshold_from_t

DEFAULT_NODE_CAP = 10**8

VARIANTS = ("N", "N*", "Nv")


@dataclass(frozen=True)
class RenewalQuery:
    """Base point, time and variant of a renewal count.

    ``variant`` is ``"N*"`` (or its alias ``"N"``) for the plain count and
    ``"Nv"`` for the subtree count below the word ``v``.
    """

    base: object = ()
    t: object = 0.0
    variant: str = "N*"
    v: tuple = ()

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if not isinstance(self.t, ExactLog) and not math.isfinite(float(self.t)):
            raise ValueError("t must be finite")
        if self.variant != "Nv" and self.v:
            raise ValueError("a prefix word is only meaningful for the Nv variant")


# ---------------------------------------------------------------------------
# Tree parameters
# ---------------------------------------------------------------------------


def _conj_code(sys: BranchSystem):
    c = sys.conjugacy
    if c.is_identity:
        return 0, 0.0, 1.0
    if c.kind == "g-epsilon":
        return 1, c.epsilon, c.derivative_range[1]
    return None


def _model_point(sys: BranchSystem, x: CodedPoint) -> float:
    left, length = sys.model_interval(x.tail)
    y = float(left) / (1.0 - float(length))
    hl, hlen = sys.model_interval(x.head)
    return float(hl) + float(hlen) * y


def _node_value(p, l, conj, eps, point_mode):
    # same expression as the kernels, used once for the normalizing root
    if conj == 0:
        return l
    if point_mode:
        return (1.0 + eps * math.sin(2.0 * math.pi * p)) * l
    return l + (eps / math.pi) * math.sin(math.pi * (2.0 * p + l)) * math.sin(math.pi * l)


@dataclass(frozen=True)
class TreeParams:
    offsets: np.ndarray
    ratios: np.ndarray
    a0: float
    L0: float
    off: float
    scale: float
    denom: float
    conj: int
    eps: float
    point_mode: int
    hi_g: float

    def args(self, lam: float, max_nodes: int):
        return (self.offsets, self.ratios, self.a0, self.L0, self.off, self.scale, self.denom,
                lam, FLOAT_RTOL, self.conj, self.eps, self.point_mode, self.hi_g, int(max_nodes))


def tree_params(sys: BranchSystem, v=(), x=()) -> TreeParams | None:
    """Kernel parameters for ``N_v(., x)``; None if the system has no closed form."""
    code = _conj_code(sys) if sys.has_model else None
    if code is None:
        return None
    conj, eps, hi_g = code
    v = sys.check_word(v)
    vl, vlen = sys.model_interval(v)
    off, scale = float(vl), float(vlen)
    if isinstance(x, CodedPoint):
        sys.check_word(x.head + x.tail)
        a0, L0, point_mode = _model_point(sys, x), 1.0, 1
    else:
        x = sys.check_word(x)
        xl, xlen = sys.model_interval(x)
        a0, L0, point_mode = float(xl), float(xlen), 0
    denom = _node_value(off + scale * a0, scale * L0, conj, eps, point_mode)
    return TreeParams(sys.offsets_f, sys.ratios_f, a0, L0, off, scale, denom, conj, eps,
                      point_mode, hi_g)


# ---------------------------------------------------------------------------
# Counting routes
# ---------------------------------------------------------------------------


def _exact_count(sys: BranchSystem, lam: Fraction, max_nodes: int) -> int:
    # affine: alpha_{vux} / alpha_{vx} = alpha_u, whatever v and x are
    ratios = sys.ratios
    count = visited = 0
    stack = [Fraction(1)]
    while stack:
        a = stack.pop()
        visited += 1
        if visited > max_nodes:
            raise BudgetExceeded(f"visited more than {max_nodes} words")
        if a >= lam:
            count += 1
            for r in ratios:
                if a * r >= lam:
                    stack.append(a * r)
    return count


def _generic_count(sys: BranchSystem, v, x, lam, exact: bool, max_nodes: int) -> int:
    """High-precision traversal for systems without a closed-form conjugacy.

    Depth is bounded through ``alpha_w <= c_M^|w|``: a word ``u`` is only
    explored while ``c_M^(|v|+|u|+|x|) / alpha_{vx}`` can still reach the
    threshold.
    """
    c = sys.c_m
    if isinstance(x, CodedPoint):
        p = float(_coding_point_float(sys, x))

        def weight(word):
            d = 1.0
            y = p
            for s in reversed(word):
                d *= float(sys.branch_derivative(s, y))
                y = float(sys.branch(s, y))
            return d

        base_len = 0
        denom = weight(tuple(v))
        value_of = lambda u: weight(tuple(v) + u) / denom  # noqa: E731
        bound_of = lambda u: c ** (len(v) + len(u)) / denom  # noqa: E731
    else:
        base_len = len(x)
        denom = sys.length(tuple(v) + tuple(x))
        value_of = lambda u: sys.length(tuple(v) + u + tuple(x)) / denom  # noqa: E731
        bound_of = lambda u: c ** (len(v) + len(u) + base_len) / float(denom)  # noqa: E731
    count = visited = 0
    stack = [()]
    while stack:
        u = stack.pop()
        visited += 1
        if visited > max_nodes:
            raise BudgetExceeded(f"visited more than {max_nodes} words")
        if passes(value_of(u), lam, exact):
            count += 1
        for i in range(sys.m, 0, -1):
            child = (i,) + u
            if passes(bound_of(child), lam, False):
                stack.append(child)
    return count


def _coding_point_float(sys, x):
    from .symbolic import coding_point

    return coding_point(sys, x, 1e-15)


def _check_budget(t, max_nodes):
    if float(t) > math.log(max_nodes):
        raise BudgetExceeded(f"exp(t) = {math.exp(min(float(t), 700.0)):.3g} exceeds the node cap {max_nodes}")


def count_Nv(sys: BranchSystem, v, x, t, max_nodes: int = DEFAULT_NODE_CAP) -> int:
    """``N_v(t, x)``; see the module docstring."""
    if float(t) < 0:
        return 0
    _check_budget(t, max_nodes)
    lam, exact = threshold_from_t(t)
    if sys.is_exact and exact:
        sys.check_word(v)
        if not isinstance(x, CodedPoint):
            sys.check_word(x)
        return _exact_count(sys, lam, max_nodes)
    params = tree_params(sys, v, x)
    if params is None:
        return _generic_count(sys, sys.check_word(v), x, lam, exact and sys.is_exact, max_nodes)
    count, _, overflow = kernels.count_tree(*params.args(float(lam), max_nodes))
    if overflow:
        raise BudgetExceeded(f"visited more than {max_nodes} words")
    return int(count)


def renewal_count(sys: BranchSystem, q: RenewalQuery, max_nodes: int = DEFAULT_NODE_CAP) -> int:
    """Evaluate the renewal count described by ``q``."""
    v = q.v if q.variant == "Nv" else ()
    return count_Nv(sys, v, q.base, q.t, max_nodes)


def subtree_count_Nv(sys: BranchSystem, v, x, t, max_nodes: int = DEFAULT_NODE_CAP) -> int:
    """``N_v(t, x)`` through the cylinder-count form."""
    return count_Nv(sys, v, x, t, max_nodes)


def twisted_count_Nv(sys: BranchSystem, v, x, t, max_nodes: int = DEFAULT_NODE_CAP) -> int:
    """``N_v(t, x)`` as a renewal count for the twisted potential.

    With ``phi_v(w) = alpha_{v w} / alpha_w`` the twisted potential is
    ``gamma_v(w) = gamma(w) + log phi_v(w[1:]) - log phi_v(w)`` and a word
    ``u`` is counted when the Birkhoff sum of ``gamma_v`` over the first
    ``|u|`` shifts of ``u x`` is at most ``t``.  The sum is accumulated
    letter by letter (products of exact ratios in exact mode), independently
    of the cylinder-count route.
    """
    if float(t) < 0:
        return 0
    _check_budget(t, max_nodes)
    v = sys.check_word(v)
    x = sys.check_word(x)
    lam, exact = threshold_from_t(t)
    exact = exact and sys.is_exact
    length = sys.length if exact else (lambda w: float(sys.length(w)))

    def phi(w):
        return length(v + w) / length(w)

    def step(w):
        # exp(-gamma_v(w)) for nonempty w
        return (length(w) / length(w[1:])) * (phi(w) / phi(w[1:]))

    dist = 1.0 if sys.is_affine or not v else sys.distortion
    count = visited = 0
    one = Fraction(1) if exact else 1.0
    stack = [((), one)]
    while stack:
        u, weight = stack.pop()
        visited += 1
        if visited > max_nodes:
            raise BudgetExceeded(f"visited more than {max_nodes} words")
        if passes(weight, lam, exact):
            count += 1
        for i in range(sys.m, 0, -1):
            child = (i,) + u
            w = weight * step(child + x)
            if passes(float(w) * dist, lam, False):
                stack.append((child, w))
    return count


# ---------------------------------------------------------------------------
# Renewal identity
# ---------------------------------------------------------------------------


def _words(m: int, n: int):
    return itertools.product(range(1, m + 1), repeat=n)


def renewal_identity(sys: BranchSystem, t, x=(), n: int = 1,
                     max_nodes: int = DEFAULT_NODE_CAP) -> tuple[int, int]:
    """``(direct, decomposed)`` for the n-fold iterated renewal identity.

    ``decomposed`` is::

        sum_{|u|=n} N_*(t - S_n gamma(u x), u x)
        + sum_{j=1}^{n-1} sum_{|u|=j} 1{t - S_j gamma(u x) >= 0} + 1{t >= 0}

    with ``S_j gamma(u x) = -log(alpha_{u x} / alpha_x)``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    x = sys.check_word(x)
    direct = count_Nv(sys, (), x, t, max_nodes)
    exact = isinstance(t, ExactLog) and sys.is_exact
    ax = sys.length(x)

    def birkhoff(ux):
        if exact:
            return ExactLog(ax / sys.length(ux))
        return float(sys.mp.log(sys.length(x) / sys.length(ux)))

    total = 1 if float(t) >= 0 else 0
    for j in range(1, n):
        for u in _words(sys.m, j):
            s = birkhoff(u + x)
            if exact:
                total += 1 if (t - s).is_nonnegative() else 0
            else:
                total += 1 if float(t) - s >= 0 else 0
    for u in _words(sys.m, n):
        s = birkhoff(u + x)
        total += count_Nv(sys, (), u + x, t - s, max_nodes)
    return direct, total


# ---------------------------------------------------------------------------
# Prefix comparison
# ---------------------------------------------------------------------------


def distortion_epsilon(sys: BranchSystem, m: int) -> float:
    """Shift ``eps_m`` with ``N_*(t, x) <= N_*(t + eps_m, x')`` when ``x, x'`` share ``m`` symbols.

    Zero for affine systems.  For a conjugacy ``g`` it is
    ``2 sup|g''/g'| (max_i alpha_i^l)^m``.
    """
    if sys.is_affine:
        return 0.0
    if not sys.has_model:
        raise ValueError("distortion bound needs an affine model")
    return 2.0 * sys.conjugacy.log_derivative_lipschitz * float(max(sys.ratios_f)) ** m


# ---------------------------------------------------------------------------
# Asymptotic series
# ---------------------------------------------------------------------------


@dataclass
class RenewalSeries:
    t: np.ndarray
    counts: np.ndarray
    normalized: np.ndarray
    limit: float
    band: tuple
    variant: str = "N*"
    base: object = ()
    v: tuple = ()
    window: tuple = ()
    residues: np.ndarray | None = None

    @property
    def band_ratio(self) -> float:
        lo, hi = self.band
        return hi / lo if lo > 0 else math.inf


def collect_values(sys: BranchSystem, v, x, t_max: float, max_nodes: int = DEFAULT_NODE_CAP):
    """Sorted node values ``alpha_{v u x} / alpha_{v x}`` above ``exp(-t_max)``."""
    _check_budget(t_max, max_nodes)
    params = tree_params(sys, v, x)
    if params is None:
        raise ValueError("value collection needs a closed-form system")
    vals, _, overflow = kernels.collect_tree(*params.args(math.exp(-t_max), max_nodes))
    if overflow:
        raise BudgetExceeded(f"visited more than {max_nodes} words")
    vals.sort()
    return vals


def counts_from_values(sorted_vals: np.ndarray, t_grid) -> np.ndarray:
    """Counts ``#{val >= exp(-t) (1 - rtol)}`` for each ``t`` (0 for ``t < 0``)."""
    t_grid = np.asarray(t_grid, dtype=float)
    out = np.zeros(t_grid.size, dtype=np.int64)
    for k, t in enumerate(t_grid):
        if t < 0:
            continue
        thr = math.exp(-t) * (1.0 - FLOAT_RTOL)
        out[k] = sorted_vals.size - np.searchsorted(sorted_vals, thr, side="left")
    return out


def renewal_asymptotic_series(sys: BranchSystem, x=(), t_grid=None, v=(), window: float = 0.25,
                              lattice_span: float | None = None,
                              max_nodes: int = DEFAULT_NODE_CAP) -> RenewalSeries:
    """``exp(-t) N_v(t, x)`` over ``t_grid`` with a last-window fit.

    The tree is traversed once at the largest ``t`` and every grid point is
    read off the sorted node values.  The fitted limit is the mean over the
    last ``window`` fraction of the grid and the band is its (min, max).
    With ``lattice_span`` each point is tagged with ``t mod a``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be a nonempty increasing sequence")
    t_max = float(t_grid[-1])
    if t_max < 0:
        counts = np.zeros(t_grid.size, dtype=np.int64)
    else:
        counts = counts_from_values(collect_values(sys, v, x, t_max, max_nodes), t_grid)
    normalized = np.exp(-t_grid) * counts
    k0 = min(int(math.floor((1.0 - window) * t_grid.size)), t_grid.size - 1)
    tail = normalized[k0:]
    residues = None if lattice_span is None else np.mod(t_grid, lattice_span)
    return RenewalSeries(t_grid, counts, normalized, float(tail.mean()),
                         (float(tail.min()), float(tail.max())), "Nv" if v else "N*", x,
                         tuple(v), (float(t_grid[k0]), t_max), residues)


def lattice_residue_sequences(sys: BranchSystem, a: float, thetas, n_values, x=(),
                              max_nodes: int = DEFAULT_NODE_CAP) -> dict:
    """``{theta: exp(-a n) N_*(a n + theta, x) for n in n_values}``."""
    n_values = np.asarray(list(n_values), dtype=float)
    t_max = float(a * n_values.max() + max(thetas))
    vals = collect_values(sys, (), x, t_max, max_nodes)
    out = {}
    for theta in thetas:
        ts = a * n_values + theta
        out[float(theta)] = np.exp(-a * n_values) * counts_from_values(vals, ts)
    return out


# ---------------------------------------------------------------------------
# Cylinder ratio
# ---------------------------------------------------------------------------


@dataclass
class CylinderRatioSeries:
    v: tuple
    t: np.ndarray
    values: np.ndarray
    numerators: np.ndarray
    denominators: np.ndarray
    skipped: list = field(default_factory=list)


def cylinder_ratio(sys: BranchSystem, v, t_grid, max_nodes: int = DEFAULT_NODE_CAP) -> CylinderRatioSeries:
    """Renewal-difference estimate of the share of split points inside ``[v]``::

        (N_v(t + log alpha_v, ()) - N_v(t + log alpha_{v1}, (1,)))
        / (N(t, ()) - N(t + log alpha_1, (1,)))

    For a lattice system pass ``t_grid = a * n``.  Points with a zero
    denominator are skipped and listed (with a ZeroDenominator) in ``skipped``.
    """
    v = sys.check_word(v)
    log_av = float(sys.mp.log(sys.length(v))) if v else 0.0
    log_av1 = float(sys.mp.log(sys.length(v + (1,))))
    log_a1 = float(sys.mp.log(sys.length((1,))))
    ts, vals, nums, dens, skipped = [], [], [], [], []
    for t in np.asarray(t_grid, dtype=float):
        num = count_Nv(sys, v, (), t + log_av, max_nodes) - count_Nv(sys, v, (1,), t + log_av1, max_nodes)
        den = count_Nv(sys, (), (), t, max_nodes) - count_Nv(sys, (), (1,), t + log_a1, max_nodes)
        if den == 0:
            skipped.append((float(t), ZeroDenominator(f"zero denominator at t = {t}")))
            continue
        ts.append(float(t))
        nums.append(num)
        dens.append(den)
        vals.append(num / den)
    return CylinderRatioSeries(v, np.array(ts), np.array(vals), np.array(nums, dtype=np.int64),
                               np.array(dens, dtype=np.int64), skipped)
