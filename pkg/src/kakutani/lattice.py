"""Lattice detection, reduction to an affine model, and lattice profile integrals.

Periodic Birkhoff sums ``S_p gamma(w^inf) = -log T_w'(pi(w^inf))`` are the
evidence for latticeness: a lattice potential has all of them in ``a Z``.
The reduction fits a locally constant ``zeta`` to the periodic data,
collapses it to a function of the first symbol, reads off the affine model
ratios and rebuilds the conjugacy ``g`` from the cohomology along branch 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Callable

import numpy as np
from scipy import integrate

from .branch_systems import BranchSystem, Conjugacy, cumulative_normalized_integral
from .errors import NotLattice, PeriodBudgetExceeded, QuadratureFailure, ReductionUnstable
from .symbolic import ExactLog, format_word

DEFAULT_TOL = 1e-9
DENOMINATOR_CAP = 10**6
PERIOD_CAP = 10**5
MAX_ZETA_DEPTH = 8
BISECT_TOL = 1e-12


def lyndon_words(m: int, n: int):
    """Lyndon words over ``1..m`` of length ``<= n`` (Duval's algorithm)."""
    w = [0]
    while w:
        yield tuple(s + 1 for s in w)
        k = len(w)
        while len(w) < n:
            w.append(w[len(w) - k])
        while w and w[-1] == m - 1:
            w.pop()
        if w:
            w[-1] += 1


def periodic_sum(sys: BranchSystem, w) -> object:
    """``-log T_w'(y)`` at the fixed point ``y`` of ``T_w`` (mpmath float).

    The fixed point is found by Newton's method on ``T_w(y) - y`` using the
    branch evaluators only.
    """
    w = sys.check_word(w)
    ctx = sys.mp

    def comp(y):
        d = ctx.mpf(1)
        for s in reversed(w):
            d *= sys.branch_derivative_mp(s, y)
            y = sys.branch_mp(s, y)
        return y, d

    y = ctx.mpf(0.5)
    eps = ctx.mpf(2) ** (-sys.precision + 8)
    for _ in range(100):
        ty, d = comp(y)
        step = (ty - y) / (d - 1)
        y -= step
        if abs(step) <= eps:
            break
    _, d = comp(y)
    return -ctx.log(d)


# ---------------------------------------------------------------------------
# Detection
# ---------------------------------------------------------------------------


@dataclass
class LatticeVerdict:
    is_lattice: bool
    a: float | None
    tol: float
    evidence: list = field(default_factory=list)  # (word, periodic sum, multiple of a or None)
    relations: list = field(default_factory=list)  # (word, p, q, residual)
    exact_span: ExactLog | None = None
    sums: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {
            "is_lattice": self.is_lattice,
            "a": None if self.a is None else float(self.a),
            "a_exact": None if self.exact_span is None else f"log({self.exact_span.arg})",
            "tol": self.tol,
            "evidence": [{"word": format_word(w), "sum": float(s), "multiple": n}
                         for w, s, n in self.evidence],
            "relations": [{"word": format_word(w), "p": p, "q": q, "residual": r}
                          for w, p, q, r in self.relations],
        }


def _convergent_relation(x, y, tol, cap, ctx):
    """Smallest ``(p, q)`` from the continued fraction of ``y / x`` with ``|q y - p x| <= tol``.

    Returns ``(p, q, residual)`` or ``(None, None, best_residual)``.
    """
    r = y / x
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    best = math.inf
    z = r
    for _ in range(200):
        ai = int(ctx.floor(z))
        h0, h1 = h1, ai * h1 + h0
        k0, k1 = k1, ai * k1 + k0
        if k1 > cap:
            break
        res = float(abs(k1 * y - h1 * x))
        best = min(best, res)
        if res <= tol:
            return h1, k1, res
        frac = z - ai
        if frac == 0:
            break
        z = 1 / frac
    return None, None, best


def _exact_span(a, tol):
    ea = math.exp(float(a))
    q = Fraction(ea).limit_denominator(1000)
    if abs(float(ExactLog(q)) - float(a)) <= tol:
        return ExactLog(q)
    return None


def detect_lattice(sys: BranchSystem, max_period: int = 8, tol: float = DEFAULT_TOL,
                   denominator_cap: int = DENOMINATOR_CAP, period_cap: int = PERIOD_CAP) -> LatticeVerdict:
    """Decide (at tolerance) whether all periodic sums lie in a common ``a Z``.

    Each sum ``s_j`` is related to ``s_0`` (the sum of the fixed point of
    branch 1) through continued-fraction convergents of ``s_j / s_0`` with
    denominators up to ``denominator_cap``; the relation must hold with an
    absolute residual ``|q s_j - p s_0| <= tol``.  The span is then the
    largest ``a`` compatible with all relations.
    """
    if max_period < 2:
        raise ValueError("max_period must be at least 2")
    words = []
    for w in lyndon_words(sys.m, max_period):
        words.append(w)
        if len(words) > period_cap:
            raise PeriodBudgetExceeded(f"more than {period_cap} periodic orbits up to period {max_period}")
    ctx = sys.mp
    sums = {w: periodic_sum(sys, w) for w in words}
    s0 = sums[words[0]]
    relations, qs = [], []
    for w in words[1:]:
        p, q, res = _convergent_relation(s0, sums[w], tol, denominator_cap, ctx)
        if p is None:
            relations.append((w, None, None, res))
            return LatticeVerdict(False, None, tol, [(v, sums[v], None) for v in words], relations, sums=sums)
        relations.append((w, p, q, res))
        qs.append(q)
    big_l = reduce(math.lcm, qs, 1)
    if big_l > denominator_cap:
        return LatticeVerdict(False, None, tol, [(v, sums[v], None) for v in words], relations, sums=sums)
    b = s0 / big_l
    ns = [int(ctx.nint(sums[w] / b)) for w in words]
    a = b * reduce(math.gcd, ns, big_l)
    evidence = []
    for w in words:
        n = int(ctx.nint(sums[w] / a))
        if abs(float(sums[w] - n * a)) > tol:
            return LatticeVerdict(False, None, tol, [(v, sums[v], None) for v in words], relations, sums=sums)
        evidence.append((w, sums[w], n))
    return LatticeVerdict(True, float(a), tol, evidence, relations, _exact_span(a, tol), sums)


# ---------------------------------------------------------------------------
# Reduction
# ---------------------------------------------------------------------------


@dataclass
class ProfileModel:
    """What the profile integrals need: span, model ratios and ``g'``."""

    a: float
    alpha_l: tuple
    dg: Callable
    name: str = ""

    @property
    def offsets_l(self) -> np.ndarray:
        r = np.array([float(x) for x in self.alpha_l])
        return np.concatenate(([0.0], np.cumsum(r)[:-1]))


@dataclass
class CohomologyData:
    a: float
    depth: int
    zeta: dict  # M-word -> value
    phi_tables: list  # one dict per reduction step, keyed by words
    gamma_l: tuple
    alpha_l: tuple
    psi_s: np.ndarray
    psi: np.ndarray
    g_s: np.ndarray
    g: np.ndarray
    conjugacy: Conjugacy
    conjugacy_residual: float
    coboundary_residual: float

    def profile_model(self) -> ProfileModel:
        return ProfileModel(self.a, self.alpha_l, self.conjugacy.dg, "reduced")

    def to_dict(self) -> dict:
        def enc(x):
            return f"{x.numerator}/{x.denominator}" if isinstance(x, Fraction) else float(x)

        return {"a": self.a, "depth": self.depth, "gamma_l": [float(x) for x in self.gamma_l],
                "alpha_l": [enc(x) for x in self.alpha_l],
                "conjugacy_residual": self.conjugacy_residual,
                "coboundary_residual": self.coboundary_residual}


def _all_words(m, n):
    if n == 0:
        return [()]
    return [w + (i,) for w in _all_words(m, n - 1) for i in range(1, m + 1)]


def _block_counts(w, M, index, m):
    """Occurrences of each M-block along the periodic orbit of ``w``."""
    p = len(w)
    ext = w * (M // p + 2)
    row = np.zeros(m**M)
    for j in range(p):
        row[index[ext[j:j + M]]] += 1.0
    return row


def fit_zeta(sys: BranchSystem, sums_of, M: int, max_period: int):
    """Least-squares ``zeta`` on M-cylinders reproducing the periodic sums.

    Returns ``(zeta dict, max residual over the periodic words used)``.
    """
    m = sys.m
    blocks = _all_words(m, M)
    index = {b: k for k, b in enumerate(blocks)}
    words = list(lyndon_words(m, max_period))
    A = np.array([_block_counts(w, M, index, m) for w in words])
    rhs = np.array([float(sums_of(w)) for w in words])
    sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    resid = float(np.max(np.abs(A @ sol - rhs) / np.array([len(w) for w in words])))
    return {b: float(sol[k]) for b, k in index.items()}, resid


def phi_reduction(zeta: dict, m: int, M: int):
    """One reduction step from M- to (M-1)-cylinders.

    ``Phi([u' j]) = zeta([1 u' j]) - zeta([1 u' 1])`` and
    ``zeta_{M-1}([i u']) = zeta([i u' 1]) + Phi([i u'])``.
    Returns ``(zeta_{M-1}, Phi)``.
    """
    if M < 2:
        raise ValueError("nothing to reduce below length 1")
    phi = {}
    for up in _all_words(m, M - 2):
        for j in range(1, m + 1):
            phi[up + (j,)] = zeta[(1,) + up + (j,)] - zeta[(1,) + up + (1,)]
    reduced = {}
    for w in _all_words(m, M - 1):
        reduced[w] = zeta[w + (1,)] + phi[w]
    return reduced, phi


def _model_digits(s, offsets, ratios, depth):
    """Symbol sequences (0-based, shape ``(depth, n)``) of the model points ``s``."""
    s = np.array(s, dtype=float)
    m = len(ratios)
    bounds = np.concatenate((offsets[1:], [np.inf]))
    digits = np.empty((depth, s.size), dtype=np.int64)
    for k in range(depth):
        d = np.searchsorted(bounds, s, side="right")
        d = np.minimum(d, m - 1)
        digits[k] = d
        s = np.clip((s - offsets[d]) / ratios[d], 0.0, 1.0)
    return digits


def _apply_branch_vec(sys: BranchSystem, digit, y):
    out = np.empty_like(y)
    for i in range(sys.m):
        mask = digit == i
        if np.any(mask):
            out[mask] = sys.branch(i + 1, y[mask])
    return out


def reconstruct_psi(sys: BranchSystem, alpha_l, s_grid, tol: float = 1e-15):
    """``psi(s) = sum_{k>=1} [log T_1'(T_1^{k-1}(y)) - log alpha_1^l]``.

    ``y`` is the point of the nonlinear system carrying the model digits of
    ``s`` (obtained by composing the nonlinear branches).
    """
    r = np.array([float(x) for x in alpha_l])
    offs = np.concatenate(([0.0], np.cumsum(r)[:-1]))
    c = min(sys.c_m, 0.999999)
    depth = int(math.ceil(math.log(tol) / math.log(c))) + 2
    digits = _model_digits(s_grid, offs, r, depth)
    y = np.full(np.size(s_grid), 0.5)
    for k in range(depth - 1, -1, -1):
        y = _apply_branch_vec(sys, digits[k], y)
    log_a1 = math.log(r[0])
    psi = np.zeros_like(y)
    for _ in range(10 * depth):
        term = np.log(sys.branch_derivative(1, y)) - log_a1
        psi += term
        if np.max(np.abs(term)) <= tol:
            break
        y = sys.branch(1, y)
    else:
        raise ReductionUnstable("the cohomology series along branch 1 did not converge")
    return psi


def _snap_ratio(gamma, a, tol):
    """``exp(-gamma)`` snapped to ``a Z``; exact when ``exp(a)`` is rational."""
    n = round(gamma / a)
    if abs(gamma - n * a) > 10 * tol:
        raise ReductionUnstable(f"gamma_l = {gamma} is not on the lattice a Z")
    span = _exact_span(a, tol)
    if span is not None:
        return n * a, (1 / span.arg) ** n
    return n * a, math.exp(-n * a)


def reduce_to_affine(sys: BranchSystem, verdict: LatticeVerdict, grid: int = 4096,
                     tol: float = DEFAULT_TOL, max_depth: int = MAX_ZETA_DEPTH,
                     conjugacy_tol: float = 1e-6) -> CohomologyData:
    """Affine model and conjugacy for a lattice system.

    ``zeta`` is fitted on M-cylinders for the smallest ``M <= max_depth`` whose
    fit reproduces every periodic sum up to ``tol`` per symbol; the
    Phi-reduction brings it to 1-cylinders, giving ``gamma_l`` and the model
    ratios ``exp(-gamma_l)``.  ``psi`` is tabulated on ``2 * grid + 1`` points
    and ``g`` is its normalized exponential integral on ``grid + 1`` points.
    """
    if not verdict.is_lattice:
        raise NotLattice("the verdict says the potential is not lattice")
    a = verdict.a
    m = sys.m
    cache = dict(verdict.sums)

    def sums_of(w):
        if w not in cache:
            cache[w] = periodic_sum(sys, w)
        return cache[w]

    zeta = None
    for M in range(1, max_depth + 1):
        period = M + 3
        candidate, resid = fit_zeta(sys, sums_of, M, period)
        if resid <= tol:
            zeta = candidate
            break
    if zeta is None:
        raise ReductionUnstable(f"no locally constant fit up to depth {max_depth}")
    depth = M
    phi_tables = []
    cur = zeta
    for k in range(depth, 1, -1):
        cur, phi = phi_reduction(cur, m, k)
        phi_tables.append(phi)
    gamma_fit = tuple(cur[(i,)] for i in range(1, m + 1))
    # the fixed point of branch i carries gamma_l([i]) as its periodic sum
    gamma_l, alpha_l = [], []
    for i in range(1, m + 1):
        s_i = float(sums_of((i,)))
        if abs(s_i - gamma_fit[i - 1]) > 10 * tol:
            raise ReductionUnstable(f"reduced value {gamma_fit[i - 1]} disagrees with fixed-point sum {s_i}")
        gl, al = _snap_ratio(s_i, a, tol)
        gamma_l.append(gl)
        alpha_l.append(al)
    total = sum(alpha_l)
    if abs(float(total) - 1.0) > 1e-10:
        raise ReductionUnstable(f"model ratios sum to {float(total)}, not 1")
    cob = 0.0
    for w in lyndon_words(m, depth + 3):
        cob = max(cob, abs(float(sums_of(w)) - sum(gamma_l[s - 1] for s in w)) / len(w))

    s_fine = np.linspace(0.0, 1.0, 2 * grid + 1)
    psi = reconstruct_psi(sys, alpha_l, s_fine)
    g_vals = cumulative_normalized_integral(np.exp(-psi))
    conj = Conjugacy.from_psi(psi)
    model = BranchSystem(tuple(alpha_l), arithmetic="exact" if all(isinstance(x, Fraction) for x in alpha_l) else "float",
                         tail_mass=Fraction(0) if all(isinstance(x, Fraction) for x in alpha_l) else 0.0,
                         name="model")
    x = np.linspace(0.0, 1.0, grid + 1)
    gx = conj.g(x)
    res = 0.0
    for i in range(1, m + 1):
        res = max(res, float(np.max(np.abs(sys.branch(i, gx) - conj.g(model.branch(i, x))))))
    if res > conjugacy_tol:
        raise ReductionUnstable(f"conjugacy residual {res:.3e} exceeds {conjugacy_tol:.1e}")
    return CohomologyData(a, depth, zeta, phi_tables, tuple(gamma_l), tuple(alpha_l), s_fine, psi,
                          x, g_vals, conj, res, cob)


# ---------------------------------------------------------------------------
# Profile integrals
# ---------------------------------------------------------------------------


def profile_model_from_system(sys: BranchSystem, a: float) -> ProfileModel:
    """Profile model of a conjugated-affine system with its own ``g'``."""
    if not sys.has_model:
        raise ValueError("needs an affine model")
    return ProfileModel(float(a), tuple(sys.ratios), sys.conjugacy.dg, sys.name)


@dataclass
class ProfileIntegrals:
    a: float
    theta1: float
    I: float
    Iv: dict
    errors: dict
    breakpoints: list
    predicted_ratio: dict

    def to_dict(self) -> dict:
        return {"a": self.a, "theta1": self.theta1, "I": self.I,
                "Iv": {format_word(w): val for w, val in self.Iv.items()},
                "errors": {k if isinstance(k, str) else format_word(k): e for k, e in self.errors.items()},
                "breakpoints": self.breakpoints,
                "predicted_ratio": {format_word(w): val for w, val in self.predicted_ratio.items()}}


def _floor_level(model: ProfileModel, t):
    return np.floor(np.log(model.dg(np.asarray(t, dtype=float))) / model.a)


def profile_breakpoints(model: ProfileModel, samples: int = 8192) -> list:
    """Points where ``floor(log g'(t) / a)`` changes, to ``1e-12`` by bisection."""
    t = (np.arange(samples) + 0.5) / samples
    lev = _floor_level(model, t)
    out = []
    for k in np.nonzero(np.diff(lev) != 0)[0]:
        lo, hi = float(t[k]), float(t[k + 1])
        l_lo = float(_floor_level(model, lo))
        while hi - lo > BISECT_TOL:
            mid = 0.5 * (lo + hi)
            if float(_floor_level(model, mid)) == l_lo:
                lo = mid
            else:
                hi = mid
        out.append(0.5 * (lo + hi))
    return out


def lattice_profile_integrals(model: ProfileModel, v_list=((1,),), samples: int = 8192) -> ProfileIntegrals:
    """``I = int F`` and ``I_v = int F o T_v^l`` with

    ``F(t) = g'(t) exp(-a frac(log g'(t) / a)) (1 - exp(theta_1))`` and
    ``theta_1 = log alpha_1^l``.  Integration is split at the jumps of the
    floor term.
    """
    a = float(model.a)
    if a <= 0:
        raise QuadratureFailure("the span must be positive")
    alpha = [float(x) for x in model.alpha_l]
    theta1 = math.log(alpha[0])
    factor = 1.0 - math.exp(theta1)
    offs = model.offsets_l

    def F(t):
        d = float(model.dg(t))
        z = math.log(d) / a
        return d * math.exp(-a * (z - math.floor(z))) * factor

    bps = profile_breakpoints(model, samples)

    def integrate_on(lo, hi):
        cuts = [lo] + [b for b in bps if lo < b < hi] + [hi]
        total, err = 0.0, 0.0
        for x0, x1 in zip(cuts[:-1], cuts[1:]):
            # shrink pieces slightly so the floor is evaluated strictly inside
            pad = min(1e-13, (x1 - x0) / 4)
            val, e = integrate.quad(F, x0 + pad, x1 - pad, epsabs=1e-13, epsrel=1e-12, limit=200)
            mid = F(0.5 * (x0 + x1))
            val += 2 * pad * mid
            total += val
            err += e
        if not math.isfinite(total) or total <= 0:
            raise QuadratureFailure(f"nonpositive profile integral on [{lo}, {hi}]")
        return total, err

    I, err_I = integrate_on(0.0, 1.0)
    Iv, errors, pred = {}, {"I": err_I}, {}
    for v in v_list:
        v = tuple(v)
        left, length = 0.0, 1.0
        for s in v:
            left, length = left + length * offs[s - 1], length * alpha[s - 1]
        val, e = integrate_on(left, left + length)
        Iv[v] = val / length
        errors[v] = e / length
        pred[v] = length * Iv[v] / I
    return ProfileIntegrals(a, theta1, I, Iv, errors, bps, pred)
