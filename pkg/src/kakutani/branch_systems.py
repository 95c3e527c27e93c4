"""Contraction families {T_i} that generate partitions of [0, 1].

Three flavours are supported:

* affine systems ``T_i(x) = o_i + r_i x`` with exact rational ratios (or
  high-precision floats when a ratio is irrational, e.g. the golden system);
* conjugated-affine systems ``T_i = g o T_i^l o g^{-1}`` where ``T_i^l`` is an
  affine model and ``g`` an increasing diffeomorphism of [0, 1];
* custom oracles, where the caller supplies ``T_i``, ``T_i'`` and a certified
  bound on ``sup T_i'``.

Words are tuples of 1-based symbols and always compose with the leftmost
symbol outermost: ``T_(v1 ... vn) = T_v1 o ... o T_vn``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence

import mpmath
import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    BadSymbol,
    ConfigInvalid,
    ConjugacyInvalid,
    DepthExceeded,
    GapOrOverlap,
    NotContracting,
    NotIncreasing,
    SystemInvalid,
)

EXACT = "exact"
FLOAT = "float"

DEFAULT_PRECISION = 96
MIN_PRECISION = 80
MAX_TAIL_MASS = 1e-9
VALIDATION_GRID = 4096
DEFAULT_MAX_DEPTH = 512


def parse_fraction(text) -> Fraction:
    """Parse ``"2/5"``, ``"3"`` or an int/Fraction exactly; reject anything else."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    if not isinstance(text, str):
        raise ConfigInvalid(f"expected a fraction string, got {text!r}")
    s = text.strip()
    num, sep, den = s.partition("/")
    try:
        if sep:
            value = Fraction(int(num.strip()), int(den.strip()))
        else:
            value = Fraction(int(num))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigInvalid(f"malformed fraction {text!r}") from exc
    return value


# ---------------------------------------------------------------------------
# Conjugacies
# ---------------------------------------------------------------------------


def cumulative_normalized_integral(f_fine: np.ndarray) -> np.ndarray:
    """Normalized running integral of ``f`` sampled on a fine uniform grid.

    ``f_fine`` holds ``2G + 1`` samples on ``[0, 1]``.  The running integral is
    formed by composite trapezoid on the coarse (every other node) and fine
    grids and combined by one Richardson step; the result is returned on the
    ``G + 1`` coarse nodes, scaled so that it ends at exactly 1.
    """
    f_fine = np.asarray(f_fine, dtype=float)
    if f_fine.ndim != 1 or f_fine.size < 3 or f_fine.size % 2 == 0:
        raise ValueError("need an odd number (>= 3) of fine-grid samples")
    n_fine = f_fine.size - 1
    h = 1.0 / n_fine
    fine_cells = 0.5 * h * (f_fine[:-1] + f_fine[1:])
    fine_cum = np.concatenate(([0.0], np.cumsum(fine_cells)))[::2]
    coarse = f_fine[::2]
    coarse_cells = h * (coarse[:-1] + coarse[1:])
    coarse_cum = np.concatenate(([0.0], np.cumsum(coarse_cells)))
    cum = (4.0 * fine_cum - coarse_cum) / 3.0
    return cum / cum[-1]


@dataclass(frozen=True)
class Conjugacy:
    """Increasing diffeomorphism ``g`` of [0, 1] used to bend an affine model.

    ``kind`` is ``"identity"``, ``"g-epsilon"`` (``g(x) = x + eps/(2 pi) (1 -
    cos 2 pi x)``) or ``"from-psi"`` (``g`` is the normalized integral of
    ``exp(-psi)`` for a sampled ``psi``).
    """

    kind: str = "identity"
    epsilon: float = 0.0
    psi_grid: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("identity", "g-epsilon", "from-psi"):
            raise ConjugacyInvalid(f"unknown conjugacy kind {self.kind!r}")
        if self.kind == "g-epsilon" and not (0.0 <= self.epsilon < 1.0):
            raise ConjugacyInvalid("epsilon must lie in [0, 1)")
        if self.kind == "from-psi":
            if self.psi_grid is None or len(self.psi_grid) < 3 or len(self.psi_grid) % 2 == 0:
                raise ConjugacyInvalid("from-psi needs an odd-length psi sample table")

    @classmethod
    def identity(cls) -> "Conjugacy":
        return cls()

    @classmethod
    def g_epsilon(cls, epsilon: float) -> "Conjugacy":
        return cls("g-epsilon", float(epsilon))

    @classmethod
    def from_psi(cls, psi_fine: Sequence[float]) -> "Conjugacy":
        """``psi`` sampled at ``j / (2G)`` for ``j = 0..2G``."""
        return cls("from-psi", 0.0, tuple(float(p) for p in psi_fine))

    @property
    def is_identity(self) -> bool:
        return self.kind == "identity" or (self.kind == "g-epsilon" and self.epsilon == 0.0)

    # -- sampled construction -------------------------------------------------

    @cached_property
    def _splines(self):
        psi = np.asarray(self.psi_grid)
        g_coarse = cumulative_normalized_integral(np.exp(-psi))
        s = np.linspace(0.0, 1.0, g_coarse.size)
        g = CubicSpline(s, g_coarse)
        return g, g.derivative(1), g.derivative(2), CubicSpline(g_coarse, s), s, g_coarse

    @property
    def samples(self):
        """``(s, g(s))`` on the coarse grid for a ``from-psi`` conjugacy."""
        _, _, _, _, s, g = self._splines
        return s, g

    # -- numpy evaluators ----------------------------------------------------

    def g(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_identity:
            return x.copy()
        if self.kind == "g-epsilon":
            return x + self.epsilon / (2 * np.pi) * (1.0 - np.cos(2 * np.pi * x))
        return self._splines[0](x)

    def dg(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_identity:
            return np.ones_like(x)
        if self.kind == "g-epsilon":
            return 1.0 + self.epsilon * np.sin(2 * np.pi * x)
        return self._splines[1](x)

    def ddg(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_identity:
            return np.zeros_like(x)
        if self.kind == "g-epsilon":
            return 2 * np.pi * self.epsilon * np.cos(2 * np.pi * x)
        return self._splines[2](x)

    def ginv(self, y):
        y = np.asarray(y, dtype=float)
        if self.is_identity:
            return y.copy()
        s = y.copy() if self.kind == "g-epsilon" else self._splines[3](y)
        for _ in range(60):
            step = (self.g(s) - y) / self.dg(s)
            s = s - step
            if np.all(np.abs(step) <= 1e-17):
                break
        return s

    def chord(self, a, length):
        """``g(a + length) - g(a)`` without cancellation where possible."""
        a = np.asarray(a, dtype=float)
        length = np.asarray(length, dtype=float)
        if self.is_identity:
            return length.copy()
        if self.kind == "g-epsilon":
            return length + self.epsilon / np.pi * np.sin(np.pi * (2 * a + length)) * np.sin(np.pi * length)
        return self.g(a + length) - self.g(a)

    # -- high-precision evaluators -------------------------------------------

    def g_mp(self, ctx, x):
        if self.is_identity:
            return ctx.mpf(x)
        if self.kind == "g-epsilon":
            x = ctx.mpf(x)
            return x + ctx.mpf(self.epsilon) / (2 * ctx.pi) * (1 - ctx.cos(2 * ctx.pi * x))
        return ctx.mpf(float(self.g(float(x))))

    def dg_mp(self, ctx, x):
        if self.is_identity:
            return ctx.mpf(1)
        if self.kind == "g-epsilon":
            return 1 + ctx.mpf(self.epsilon) * ctx.sin(2 * ctx.pi * ctx.mpf(x))
        return ctx.mpf(float(self.dg(float(x))))

    def ginv_mp(self, ctx, y):
        if self.is_identity:
            return ctx.mpf(y)
        if self.kind != "g-epsilon":
            return ctx.mpf(float(self.ginv(float(y))))
        y = ctx.mpf(y)
        s = y
        eps = ctx.mpf(2) ** (-ctx.prec + 4)
        for _ in range(200):
            step = (self.g_mp(ctx, s) - y) / self.dg_mp(ctx, s)
            s -= step
            if abs(step) <= eps:
                break
        return s

    def chord_mp(self, ctx, a, length):
        if self.is_identity:
            return ctx.mpf(length)
        if self.kind == "g-epsilon":
            a, length = ctx.mpf(a), ctx.mpf(length)
            e = ctx.mpf(self.epsilon)
            return length + e / ctx.pi * ctx.sin(ctx.pi * (2 * a + length)) * ctx.sin(ctx.pi * length)
        a, length = float(a), float(length)
        return ctx.mpf(float(self.g(a + length) - self.g(a)))

    # -- bounds ---------------------------------------------------------------

    @cached_property
    def derivative_range(self) -> tuple[float, float]:
        """Certified (inf g', sup g') for closed forms, sampled for from-psi."""
        if self.is_identity:
            return 1.0, 1.0
        if self.kind == "g-epsilon":
            return 1.0 - self.epsilon, 1.0 + self.epsilon
        d = self.dg(np.linspace(0.0, 1.0, 8 * VALIDATION_GRID + 1))
        return float(d.min()), float(d.max())

    @cached_property
    def log_derivative_lipschitz(self) -> float:
        """Upper bound for ``sup |g''/g'|``."""
        if self.is_identity:
            return 0.0
        if self.kind == "g-epsilon":
            return 2 * math.pi * self.epsilon / (1.0 - self.epsilon)
        x = np.linspace(0.0, 1.0, 8 * VALIDATION_GRID + 1)
        return float(np.max(np.abs(self.ddg(x) / self.dg(x))))

    def check(self, grid: int = VALIDATION_GRID, tol: float = 1e-12) -> float:
        """Validate ``g(0)=0``, ``g(1)=1``, ``g'>0`` and ``g^{-1} o g = id``.

        Returns the round-trip residual; raises ConjugacyInvalid on failure.
        """
        x = np.linspace(0.0, 1.0, grid + 1)
        gx = self.g(x)
        if abs(gx[0]) > tol or abs(gx[-1] - 1.0) > tol:
            raise ConjugacyInvalid("g must fix 0 and 1")
        if np.any(self.dg(x) <= 0):
            raise ConjugacyInvalid("g' must be positive on [0, 1]")
        resid = float(np.max(np.abs(self.ginv(gx) - x)))
        if resid > max(tol, 1e-12):
            raise ConjugacyInvalid(f"g^-1 o g differs from identity by {resid:.3e}")
        return resid

    def to_dict(self) -> dict:
        if self.kind == "from-psi":
            return {"kind": "from-psi", "psi": list(self.psi_grid)}
        if self.kind == "g-epsilon":
            return {"kind": "g-epsilon", "epsilon": self.epsilon}
        return {"kind": "identity"}


IDENTITY = Conjugacy()


# ---------------------------------------------------------------------------
# Branch systems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleBranch:
    """A user-supplied branch: ``T``, its derivative ``dT`` (both numpy-aware)."""

    T: Callable
    dT: Callable


@dataclass(frozen=True)
class SymbolSet:
    count: int
    truncated: bool = False

    @property
    def labels(self) -> range:
        return range(1, self.count + 1)


@dataclass(frozen=True)
class BranchSpec:
    kind: str
    ratio: object = None
    offset: object = None
    oracle: OracleBranch | None = None


@dataclass(frozen=True)
class CylinderRecord:
    word: tuple
    left: object
    right: object
    length: object
    slope: object  # chord slope alpha_v / alpha_v^l of the conjugacy; None without a model


@dataclass(frozen=True)
class BranchSystem:
    """Immutable description of a contraction family.

    ``ratios`` are the affine (model) ratios in left-to-right order.  They are
    :class:`~fractions.Fraction` in exact mode; in float mode they may be
    Fractions (e.g. a dyadic base under a nonlinear conjugacy) or floats.
    """

    ratios: tuple = ()
    conjugacy: Conjugacy = IDENTITY
    arithmetic: str = EXACT
    precision: int = DEFAULT_PRECISION
    tail_mass: object = Fraction(0)
    oracles: tuple = ()
    declared_c_m: float | None = None
    max_depth: int = DEFAULT_MAX_DEPTH
    name: str = ""

    def __post_init__(self):
        if self.arithmetic not in (EXACT, FLOAT):
            raise SystemInvalid(f"unknown arithmetic mode {self.arithmetic!r}")
        if self.precision < MIN_PRECISION:
            raise SystemInvalid(f"float precision must be at least {MIN_PRECISION} bits")
        if not self.ratios and not self.oracles:
            raise SystemInvalid("a branch system needs at least one branch")
        if self.oracles and self.ratios:
            raise SystemInvalid("give either affine ratios or oracles, not both")
        if self.oracles and self.declared_c_m is None:
            raise SystemInvalid("custom oracles must declare a certified derivative bound")
        if self.arithmetic == EXACT:
            if self.oracles or not self.conjugacy.is_identity:
                raise SystemInvalid("exact arithmetic is only available for affine systems")
            if not all(isinstance(r, Fraction) for r in self.ratios):
                raise SystemInvalid("exact mode needs Fraction ratios")
            if not isinstance(self.tail_mass, Fraction):
                raise SystemInvalid("exact mode needs a Fraction tail mass")

    # -- basic structure ------------------------------------------------------

    @property
    def m(self) -> int:
        return len(self.oracles) if self.oracles else len(self.ratios)

    @property
    def symbols(self) -> SymbolSet:
        return SymbolSet(self.m, truncated=bool(self.tail_mass))

    @property
    def kind(self) -> str:
        if self.oracles:
            return "custom-oracle"
        if self.conjugacy.is_identity:
            return "affine"
        return "conjugated-affine"

    @property
    def is_affine(self) -> bool:
        return self.kind == "affine"

    @property
    def has_model(self) -> bool:
        return not self.oracles

    @property
    def is_exact(self) -> bool:
        return self.arithmetic == EXACT

    @cached_property
    def offsets(self) -> tuple:
        out, acc = [], (Fraction(0) if all(isinstance(r, Fraction) for r in self.ratios) else 0.0)
        for r in self.ratios:
            out.append(acc)
            acc = acc + r
        return tuple(out)

    @property
    def branches(self) -> tuple[BranchSpec, ...]:
        if self.oracles:
            return tuple(BranchSpec("custom-oracle", oracle=o) for o in self.oracles)
        kind = "affine" if self.is_affine else "conjugated-affine"
        return tuple(BranchSpec(kind, r, o) for r, o in zip(self.ratios, self.offsets))

    @cached_property
    def ratios_f(self) -> np.ndarray:
        return np.array([float(r) for r in self.ratios], dtype=float)

    @cached_property
    def offsets_f(self) -> np.ndarray:
        return np.array([float(o) for o in self.offsets], dtype=float)

    @cached_property
    def mp(self):
        """Private mpmath context at this system's precision."""
        ctx = mpmath.MPContext()
        ctx.prec = self.precision
        return ctx

    @cached_property
    def c_m(self) -> float:
        """Certified bound for ``sup_i sup_x T_i'(x)``."""
        if self.oracles:
            return float(self.declared_c_m)
        lo, hi = self.conjugacy.derivative_range
        bound = float(max(self.ratios_f)) * hi / lo
        if self.declared_c_m is not None:
            bound = min(bound, float(self.declared_c_m)) if self.conjugacy.is_identity else bound
        return bound

    @cached_property
    def distortion(self) -> float:
        """Bound on ``sup T_v' / inf T_v'`` valid for every word ``v``."""
        if self.oracles:
            return math.inf
        lo, hi = self.conjugacy.derivative_range
        return (hi / lo) ** 2

    def check_word(self, word) -> tuple:
        word = tuple(word)
        if len(word) > self.max_depth:
            raise DepthExceeded(f"word of length {len(word)} exceeds depth limit {self.max_depth}")
        m = self.m
        for s in word:
            if isinstance(s, bool) or not isinstance(s, (int, np.integer)) or not 1 <= s <= m:
                raise BadSymbol(f"symbol {s!r} is not in 1..{m}")
        return tuple(int(s) for s in word)

    # -- model (affine) cylinders --------------------------------------------

    def model_interval(self, word) -> tuple:
        """``(left, length)`` of ``T^l_word([0, 1])`` in the model's arithmetic."""
        left = self.offsets[0] * 0
        scale = left + 1
        for s in word:
            left = left + scale * self.offsets[s - 1]
            scale = scale * self.ratios[s - 1]
        return left, scale

    def _to_mp(self, value):
        ctx = self.mp
        if isinstance(value, Fraction):
            return ctx.mpf(value.numerator) / value.denominator
        return ctx.mpf(value)

    # -- branch evaluation ------------------------------------------------------

    def branch(self, i: int, x):
        """Vectorized float evaluation of ``T_i``."""
        x = np.asarray(x, dtype=float)
        if self.oracles:
            return np.asarray(self.oracles[i - 1].T(x), dtype=float)
        o, r = self.offsets_f[i - 1], self.ratios_f[i - 1]
        if self.conjugacy.is_identity:
            return o + r * x
        c = self.conjugacy
        return c.g(o + r * c.ginv(x))

    def branch_derivative(self, i: int, x):
        x = np.asarray(x, dtype=float)
        if self.oracles:
            return np.broadcast_to(np.asarray(self.oracles[i - 1].dT(x), dtype=float), x.shape).copy()
        o, r = self.offsets_f[i - 1], self.ratios_f[i - 1]
        if self.conjugacy.is_identity:
            return np.full_like(x, r)
        c = self.conjugacy
        s = c.ginv(x)
        return c.dg(o + r * s) * r / c.dg(s)

    def branch_mp(self, i: int, x):
        ctx = self.mp
        if self.oracles:
            return ctx.mpf(float(self.oracles[i - 1].T(float(x))))
        o, r = self._to_mp(self.offsets[i - 1]), self._to_mp(self.ratios[i - 1])
        c = self.conjugacy
        if c.is_identity:
            return o + r * ctx.mpf(x)
        return c.g_mp(ctx, o + r * c.ginv_mp(ctx, x))

    def branch_derivative_mp(self, i: int, x):
        ctx = self.mp
        if self.oracles:
            return ctx.mpf(float(self.oracles[i - 1].dT(float(x))))
        o, r = self._to_mp(self.offsets[i - 1]), self._to_mp(self.ratios[i - 1])
        c = self.conjugacy
        if c.is_identity:
            return r
        s = c.ginv_mp(ctx, x)
        return c.dg_mp(ctx, o + r * s) * r / c.dg_mp(ctx, s)

    # -- cylinders ----------------------------------------------------------------

    def cylinder(self, word) -> tuple:
        """``(left, right, length)`` of ``T_word([0, 1])``.

        Exact rationals in exact mode, mpmath floats otherwise.
        """
        word = self.check_word(word)
        if self.oracles:
            ctx = self.mp
            lo, hi = ctx.mpf(0), ctx.mpf(1)
            for s in reversed(word):
                lo, hi = self.branch_mp(s, lo), self.branch_mp(s, hi)
            return lo, hi, hi - lo
        left, length = self.model_interval(word)
        if self.is_exact:
            return left, left + length, length
        ctx, c = self.mp, self.conjugacy
        a, ln = self._to_mp(left), self._to_mp(length)
        lo = c.g_mp(ctx, a)
        chord = c.chord_mp(ctx, a, ln)
        return lo, lo + chord, chord

    def length(self, word):
        return self.cylinder(word)[2]

    def as_dict(self) -> dict:
        def enc(r):
            return f"{r.numerator}/{r.denominator}" if isinstance(r, Fraction) else repr(float(r))

        if self.oracles:
            return {"kind": "custom-oracle", "branches": self.m, "c_m": self.c_m, "name": self.name}
        return {
            "kind": self.kind,
            "ratios": [enc(r) for r in self.ratios],
            "conjugacy": self.conjugacy.to_dict() if self.kind != "affine" else {"kind": "identity"},
            "arithmetic": self.arithmetic,
            "precision": self.precision,
            "tail_mass": enc(self.tail_mass) if self.tail_mass else "0",
            "name": self.name,
        }


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


def affine(ratios, tail_mass=0, name: str = "") -> BranchSystem:
    """Exact affine system from fraction strings, ints or Fractions."""
    rs = tuple(parse_fraction(r) for r in ratios)
    return BranchSystem(rs, tail_mass=parse_fraction(tail_mass), name=name)


def affine_float(ratios, precision: int = DEFAULT_PRECISION, name: str = "") -> BranchSystem:
    return BranchSystem(tuple(float(r) for r in ratios), arithmetic=FLOAT, precision=precision,
                        tail_mass=0.0, name=name)


def kakutani(alpha) -> BranchSystem:
    a = parse_fraction(alpha)
    return affine((a, 1 - a), name=f"kakutani-{a}")


def dyadic() -> BranchSystem:
    return affine(("1/2", "1/2"), name="dyadic")


def golden(precision: int = DEFAULT_PRECISION) -> BranchSystem:
    """Affine system with ratios ``(phi, phi^2)``, ``phi = (sqrt 5 - 1) / 2``."""
    ctx = mpmath.MPContext()
    ctx.prec = precision
    phi = (ctx.sqrt(5) - 1) / 2
    return BranchSystem((phi, phi * phi), arithmetic=FLOAT, precision=precision, tail_mass=0.0,
                        name="golden")


def truncated_family(ratio_of: Callable[[int], Fraction], tail_tolerance=Fraction(1, 10**9),
                     max_symbols: int = 10_000) -> BranchSystem:
    """Finite truncation of a countable affine family ``i -> alpha_i`` (exact).

    Symbols are retained until the discarded tail mass drops to
    ``tail_tolerance`` or below; the tail is recorded on the system.
    """
    tol = parse_fraction(tail_tolerance) if not isinstance(tail_tolerance, float) else Fraction(tail_tolerance)
    rs, total = [], Fraction(0)
    for i in range(1, max_symbols + 1):
        r = parse_fraction(ratio_of(i))
        rs.append(r)
        total += r
        if 1 - total <= tol:
            break
    else:
        raise SystemInvalid("tail mass did not fall below tolerance")
    return BranchSystem(tuple(rs), tail_mass=1 - total, name="truncated")


def custom(branches: Sequence[tuple[Callable, Callable]], c_m: float,
           precision: int = DEFAULT_PRECISION, name: str = "") -> BranchSystem:
    """System given by ``(T, dT)`` callables with a certified bound ``c_m``."""
    oracles = tuple(OracleBranch(T, dT) for T, dT in branches)
    return BranchSystem(oracles=oracles, arithmetic=FLOAT, precision=precision,
                        tail_mass=0.0, declared_c_m=float(c_m), name=name)


def build_conjugated_system(base: BranchSystem, g: Conjugacy, tol: float = 1e-12,
                            grid: int = VALIDATION_GRID) -> BranchSystem:
    """Return ``T_i = g o T_i^l o g^{-1}`` for an affine ``base``.

    The identity ``T_i o g = g o T_i^l`` is checked on a uniform grid and
    ConjugacyInvalid is raised when the residual exceeds ``tol``.
    """
    if not base.is_affine:
        raise SystemInvalid("the base of a conjugated system must be affine")
    report = validate_system(base)
    if not report.ok:
        report.raise_first()
    if g.is_identity:
        return base
    g.check(grid)
    sys = BranchSystem(base.ratios, conjugacy=g, arithmetic=FLOAT,
                       precision=max(base.precision, DEFAULT_PRECISION), tail_mass=float(base.tail_mass),
                       name=f"{base.name or 'affine'}+{g.kind}")
    resid = conjugacy_residual(sys, base, g, grid)
    if resid > tol:
        raise ConjugacyInvalid(f"conjugacy residual {resid:.3e} exceeds {tol:.1e}")
    return sys


def conjugacy_residual(sys: BranchSystem, base: BranchSystem, g: Conjugacy,
                       grid: int = VALIDATION_GRID) -> float:
    """``max_i max_x |T_i(g(x)) - g(T_i^l(x))|`` on a uniform grid."""
    x = np.linspace(0.0, 1.0, grid + 1)
    gx = g.g(x)
    worst = 0.0
    for i in range(1, base.m + 1):
        lhs = sys.branch(i, gx)
        rhs = g.g(base.branch(i, x))
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass
class ValidationReport:
    ok: bool
    c_m: float
    covering_defect: object
    sampled_max_derivative: float
    failures: list = field(default_factory=list)

    def raise_first(self):
        if self.failures:
            check, exc = self.failures[0]
            raise exc


def validate_system(sys: BranchSystem, grid: int = VALIDATION_GRID) -> ValidationReport:
    """Check ordering, monotonicity, the derivative bound and the covering.

    Every failed check is listed in the report (as ``(name, exception)``);
    nothing is raised here.
    """
    failures = []
    exact = sys.is_exact
    if sys.oracles:
        x = np.linspace(0.0, 1.0, grid + 1)
        lefts, rights, dmax, dmin = [], [], 0.0, math.inf
        for i in range(1, sys.m + 1):
            d = sys.branch_derivative(i, x)
            dmax, dmin = max(dmax, float(d.max())), min(dmin, float(d.min()))
            tx = sys.branch(i, x)
            if np.any(np.diff(tx) <= 0):
                dmin = min(dmin, 0.0)
            lefts.append(float(tx[0]))
            rights.append(float(tx[-1]))
        sampled = dmax
        if dmin <= 0:
            failures.append(("increasing", NotIncreasing("a branch is not strictly increasing")))
    else:
        if any(r <= 0 for r in sys.ratios):
            failures.append(("increasing", NotIncreasing("affine ratios must be positive")))
        lefts = [o for o in sys.offsets]
        rights = [o + r for o, r in zip(sys.offsets, sys.ratios)]
        if sys.conjugacy.is_identity:
            sampled = float(max(sys.ratios_f))
        else:
            x = np.linspace(0.0, 1.0, grid + 1)
            sampled = max(float(np.max(sys.branch_derivative(i, x))) for i in range(1, sys.m + 1))
            if min(float(np.min(sys.branch_derivative(i, x))) for i in range(1, sys.m + 1)) <= 0:
                failures.append(("increasing", NotIncreasing("a conjugated branch is not increasing")))
            lefts = [float(sys.conjugacy.g(float(v))) for v in lefts]
            rights = [float(sys.conjugacy.g(float(v))) for v in rights]

    c_m = sys.c_m
    if not (c_m < 1.0) or sampled > c_m * (1 + 1e-12):
        failures.append(("contracting", NotContracting(
            f"derivative bound c_M = {c_m:.6g} (sampled max {sampled:.6g}) is not below 1")))

    # covering: consecutive images must touch and span [0, 1 - tail]
    zero = Fraction(0) if exact else 0.0
    defect = abs(lefts[0] - zero)
    for k in range(len(lefts) - 1):
        if lefts[k + 1] < rights[k] if exact else lefts[k + 1] < rights[k] - 1e-15:
            failures.append(("ordering", GapOrOverlap(f"images of branches {k + 1} and {k + 2} overlap")))
        defect += abs(lefts[k + 1] - rights[k])
    tail = sys.tail_mass
    defect += abs((1 - tail) - rights[-1])
    if float(tail) > MAX_TAIL_MASS:
        failures.append(("tail", GapOrOverlap(f"tail mass {float(tail):.3g} exceeds {MAX_TAIL_MASS}", tail)))
    covered = defect == 0 if exact else defect <= 1e-12
    if not covered:
        failures.append(("covering", GapOrOverlap(f"images do not tile [0, 1]: defect {defect}", defect)))
    return ValidationReport(not failures, c_m, defect, sampled, failures)


def require_valid(sys: BranchSystem) -> BranchSystem:
    validate_system(sys).raise_first()
    return sys


def map_word(sys: BranchSystem, word) -> CylinderRecord:
    """Cylinder ``T_word([0, 1])`` with its length and conjugacy chord slope."""
    word = sys.check_word(word)
    left, right, length = sys.cylinder(word)
    slope = None
    if sys.has_model:
        _, model_len = sys.model_interval(word)
        if sys.is_exact:
            slope = length / model_len
        else:
            slope = length / sys._to_mp(model_len)
    return CylinderRecord(word, left, right, length, slope)


# ---------------------------------------------------------------------------
# System definition files
# ---------------------------------------------------------------------------


def system_from_dict(doc: dict) -> BranchSystem:
    """Build a system from a parsed definition document.

    Recognised keys: ``kind`` (affine | conjugated-affine), ``ratios`` (exact
    fraction strings), ``conjugacy {kind, epsilon}``, ``arithmetic``,
    ``precision``, ``tail_mass``, ``name``.
    """
    if not isinstance(doc, dict):
        raise ConfigInvalid("system definition must be a mapping")
    kind = doc.get("kind", "affine")
    if kind not in ("affine", "conjugated-affine"):
        raise ConfigInvalid(f"unsupported system kind {kind!r} in a definition file")
    ratios = doc.get("ratios")
    if not isinstance(ratios, list) or not ratios:
        raise ConfigInvalid("'ratios' must be a nonempty list of fraction strings")
    arithmetic = doc.get("arithmetic", EXACT if kind == "affine" else FLOAT)
    precision = int(doc.get("precision", DEFAULT_PRECISION))
    name = str(doc.get("name", ""))
    if arithmetic == EXACT:
        base = BranchSystem(tuple(parse_fraction(r) for r in ratios),
                            tail_mass=parse_fraction(doc.get("tail_mass", "0")), name=name)
    elif arithmetic == FLOAT:
        try:
            rs = tuple(parse_fraction(r) if "/" in str(r) or str(r).strip().isdigit() else float(r)
                       for r in ratios)
        except ValueError as exc:
            raise ConfigInvalid(f"malformed ratio in {ratios!r}") from exc
        tail = doc.get("tail_mass", "0")
        base = BranchSystem(rs, arithmetic=FLOAT, precision=precision,
                            tail_mass=float(parse_fraction(tail) if isinstance(tail, str) else tail),
                            name=name)
    else:
        raise ConfigInvalid(f"unknown arithmetic {arithmetic!r}")
    conj = doc.get("conjugacy") or {"kind": "identity"}
    if kind == "affine" and conj.get("kind", "identity") != "identity":
        raise ConfigInvalid("an affine system cannot carry a conjugacy")
    if kind == "conjugated-affine":
        ckind = conj.get("kind")
        if ckind != "g-epsilon":
            raise ConfigInvalid("conjugated-affine definitions need conjugacy kind 'g-epsilon'")
        try:
            eps = float(conj["epsilon"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigInvalid("conjugacy needs a numeric 'epsilon'") from exc
        exact_base = base if base.is_exact else BranchSystem(
            tuple(r if isinstance(r, Fraction) else Fraction(r) for r in base.ratios), name=name)
        return build_conjugated_system(exact_base, Conjugacy.g_epsilon(eps))
    return base


def load_system(path) -> BranchSystem:
    """Read a JSON system definition file."""
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigInvalid(f"cannot read system file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"system file {path} is not valid JSON: {exc}") from exc
    return system_from_dict(doc)
