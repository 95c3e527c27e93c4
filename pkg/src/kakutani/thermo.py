"""Transfer-operator numerics on depth-k cylinders.

The operator ``(L u)(x) = sum_i exp(-gamma(i x)) u(i x)`` is discretized by
functions constant on cylinders of length ``k``.  The weight of the branch
``i`` at the cylinder ``x`` is the chord ratio ``alpha_{i x} / alpha_x``; the
image cylinder is the length-``k`` prefix of ``i x``.

Words of length ``k`` are indexed in base ``m`` (first symbol most
significant, symbols shifted to 0-based).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .branch_systems import BranchSystem
from .errors import DepthTooShallow, NoConvergence, NonPositiveVector

AFFINE_TOL = 1e-10
NONLINEAR_TOL = 1e-6
MAX_ITERS = 10**5
EXACT_CHECK_MAX_WORDS = 4096


def word_of_index(idx: int, m: int, k: int) -> tuple:
    out = []
    for _ in range(k):
        idx, r = divmod(idx, m)
        out.append(r + 1)
    return tuple(reversed(out))


def index_of_word(word, m: int) -> int:
    idx = 0
    for s in word:
        idx = idx * m + (s - 1)
    return idx


def cylinder_table(sys: BranchSystem, k: int) -> np.ndarray:
    """Lengths ``alpha_w`` of all words of length ``k`` (index order)."""
    left = np.zeros(1)
    length = np.ones(1)
    offs, rats = sys.offsets_f, sys.ratios_f
    for _ in range(k):
        left = (left[:, None] + length[:, None] * offs[None, :]).ravel()
        length = (length[:, None] * rats[None, :]).ravel()
    if sys.is_affine:
        return length
    return sys.conjugacy.chord(left, length)


def operator_tables(sys: BranchSystem, k: int):
    """``(weights, child)`` arrays of shape ``(m^k, m)``.

    ``weights[x, i] = alpha_{(i+1) x} / alpha_x`` and ``child[x, i]`` is the
    index of the length-``k`` prefix of ``(i+1) x``.
    """
    m = sys.m
    n = m**k
    a_k = cylinder_table(sys, k)
    a_k1 = cylinder_table(sys, k + 1)
    x = np.arange(n)
    i = np.arange(m)
    # index of the (k+1)-word (i+1) x is i * m^k + x
    weights = a_k1[i[None, :] * n + x[:, None]] / a_k[:, None]
    child = i[None, :] * (n // m) + (x // m)[:, None]
    return weights, child


def apply_operator(weights, child, u):
    return np.sum(weights * u[child], axis=1)


def apply_dual(weights, child, nu):
    return np.bincount(child.ravel(), weights=(nu[:, None] * weights).ravel(), minlength=nu.size)


@dataclass
class GibbsData:
    depth: int
    m: int
    lam: object
    h: object
    nu: object
    lyapunov: float
    residual: float
    iterations: int
    exact: bool = False
    mu: np.ndarray | None = field(default=None, repr=False)

    def h_at(self, word) -> float:
        return self.h[index_of_word(word[: self.depth], self.m)]

    def to_dict(self) -> dict:
        def enc(v):
            return f"{v.numerator}/{v.denominator}" if isinstance(v, Fraction) else float(v)

        return {"lambda": enc(self.lam), "lyapunov": float(self.lyapunov), "depth": self.depth,
                "h": [enc(v) for v in self.h], "nu": [enc(v) for v in self.nu],
                "residual": float(self.residual), "iterations": self.iterations}


def _power(weights, child, tol, iters, dual=False):
    n = weights.shape[0]
    u = np.ones(n) if not dual else np.full(n, 1.0 / n)
    lam_prev = math.inf
    for it in range(1, iters + 1):
        w = apply_dual(weights, child, u) if dual else apply_operator(weights, child, u)
        if not np.all(w > 0):
            raise NonPositiveVector("the discretized operator produced a nonpositive entry")
        lam = float(w.sum() / u.sum()) if dual else float(w.max() / u.max())
        u = w / (w.sum() if dual else w.max())
        if abs(lam - lam_prev) <= tol and it > 1:
            return lam, u, it
        lam_prev = lam
    raise NoConvergence(f"power iteration did not settle within {iters} iterations")


def gibbs_weights(sys: BranchSystem, h, nu, lam, k: int) -> np.ndarray:
    """Cylinder masses of ``h nu`` on words of length ``k + 1``."""
    m = sys.m
    n = m**k
    a_k1 = cylinder_table(sys, k + 1)
    a_k = cylinder_table(sys, k)
    w = np.arange(m * n)
    tail = w % n  # index of w[1:] among length-k words
    head = w // m  # index of w[:k]
    mu = np.asarray(h, float)[head] * np.asarray(nu, float)[tail] * (a_k1 / a_k[tail]) / float(lam)
    return mu / mu.sum()


def lyapunov_integral(g: GibbsData, sys: BranchSystem) -> float:
    """``sum_{|w|=k+1} mu[w] gamma(w)`` with the chord value ``gamma(w) = -log(alpha_w / alpha_{w[1:]})``."""
    k = g.depth
    n = sys.m**k
    a_k1 = cylinder_table(sys, k + 1)
    a_k = cylinder_table(sys, k)
    gamma = -np.log(a_k1 / a_k[np.arange(sys.m * n) % n])
    mu = g.mu if g.mu is not None else gibbs_weights(sys, g.h, g.nu, g.lam, k)
    return float(np.dot(mu, gamma))


def _exact_affine_check(sys: BranchSystem, k: int):
    """Verify ``L 1 = 1`` and ``nu L = nu`` for ``nu = alpha`` in rationals."""
    m = sys.m
    n = m**k
    if sum(sys.ratios) != 1:
        return None
    alpha = [Fraction(1)]
    for _ in range(k):
        alpha = [a * r for a in alpha for r in sys.ratios]
    if n <= EXACT_CHECK_MAX_WORDS:
        image = [Fraction(0)] * n
        for x in range(n):
            for i in range(m):
                image[i * (n // m) + x // m] += alpha[x] * sys.ratios[i]
        if image != alpha:
            return None
    return [Fraction(1)] * n, alpha


def leading_eigendata(sys: BranchSystem, k: int, iters: int = MAX_ITERS, tol: float | None = None) -> GibbsData:
    """Leading eigenvalue, eigenfunction and eigenmeasure at depth ``k``.

    Power iteration with sup-norm normalization for ``h``, a dual iteration
    for ``nu``; normalized so that ``sum nu = 1`` and ``sum h nu = 1``.
    Affine systems in exact mode are verified algebraically and returned with
    rational ``h`` and ``nu`` and ``lam = 1``.
    """
    if k < 1:
        raise DepthTooShallow("depth must be at least 1")
    if not sys.has_model:
        raise ValueError("the discretized operator needs an affine model")
    if tol is None:
        tol = AFFINE_TOL if sys.is_affine else NONLINEAR_TOL
    weights, child = operator_tables(sys, k)
    lam, h, it_h = _power(weights, child, tol, iters)
    lam_nu, nu, it_nu = _power(weights, child, tol, iters, dual=True)
    nu = nu / nu.sum()
    h = h / float(np.dot(h, nu))
    residual = float(np.max(np.abs(apply_operator(weights, child, h) - lam * h)))
    exact = False
    if sys.is_exact:
        checked = _exact_affine_check(sys, k)
        if checked is not None and abs(lam - 1.0) <= tol:
            h, nu = checked
            lam, residual, exact = Fraction(1), 0.0, True
    mu = gibbs_weights(sys, h, nu, lam, k)
    g = GibbsData(k, sys.m, lam, h, nu, 0.0, residual, max(it_h, it_nu), exact, mu)
    g.lyapunov = lyapunov_integral(g, sys)
    return g


# ---------------------------------------------------------------------------
# h_* on finite words
# ---------------------------------------------------------------------------


@dataclass
class HStarTable:
    depth: int
    m: int
    levels: list  # levels[n] holds the values on words of length n (index order)
    residual: float

    def __getitem__(self, word) -> float:
        word = tuple(word)
        return float(self.levels[len(word)][index_of_word(word, self.m)])

    def items(self):
        for n, vals in enumerate(self.levels):
            for idx, val in enumerate(vals):
                yield word_of_index(idx, self.m, n), float(val)


def hstar_extend(sys: BranchSystem, g: GibbsData, depth: int) -> HStarTable:
    """Extend ``h`` to words of length ``<= depth``.

    Words of length ``depth`` take ``h`` at their length-``k`` prefix and
    shorter words are filled by ``h_*(x) = sum_i (alpha_{i x} / alpha_x) h_*(i x)``.
    The residual is the largest violation of that relation, including the
    deepest level, where ``h_*(i x)`` is read from ``h``.
    """
    if depth < g.depth:
        raise DepthTooShallow(f"seed depth {depth} is below the eigendata depth {g.depth}")
    m, k = sys.m, g.depth
    h = np.asarray(g.h, dtype=float)
    lengths = [cylinder_table(sys, n) for n in range(depth + 2)]
    idx = np.arange(m**depth)
    levels = [None] * (depth + 1)
    levels[depth] = h[idx // m ** (depth - k)]
    for n in range(depth - 1, -1, -1):
        cnt = m**n
        x = np.arange(cnt)
        acc = np.zeros(cnt)
        for i in range(m):
            ix = i * cnt + x
            acc += lengths[n + 1][ix] / lengths[n][x] * levels[n + 1][ix]
        levels[n] = acc
    # deepest level: children of length depth + 1 are read from h at their prefix
    cnt = m**depth
    x = np.arange(cnt)
    pred = np.zeros(cnt)
    for i in range(m):
        ix = i * cnt + x
        pred += lengths[depth + 1][ix] / lengths[depth][x] * h[ix // m ** (depth + 1 - k)]
    residual = float(np.max(np.abs(pred - levels[depth])))
    for n in range(depth):
        cnt = m**n
        x = np.arange(cnt)
        pred = np.zeros(cnt)
        for i in range(m):
            ix = i * cnt + x
            pred += lengths[n + 1][ix] / lengths[n][x] * levels[n + 1][ix]
        residual = max(residual, float(np.max(np.abs(pred - levels[n]))))
    return HStarTable(depth, m, levels, residual)
