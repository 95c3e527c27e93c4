"""Pure-Python word-tree kernels (fallback for the compiled extension).

The arithmetic mirrors ``_kernels.pyx`` operation for operation so both
backends return identical results.

Tree semantics: nodes are words ``u`` grown by prepending symbols.  A node
carries the model data ``(a, L)`` of the cylinder (interval mode) or of the
derivative at a point (point mode) for ``u x``.  Its value is
``F(off + scale * a, scale * L) / denom`` where ``(off, scale)`` is an outer
affine model map and ``F`` is the conjugacy chord (interval mode) or
``g'(p) * l`` (point mode).  A node is counted when its value is at least
``lam * (1 - rtol)``.  Subtrees are cut once ``hi_g * scale * L / denom``
falls below the threshold, ``hi_g`` being an upper bound for ``g'``.
"""
import math

import numpy as np


def _value(p, l, conj, eps, point_mode):
    if conj == 0:
        return l
    if point_mode:
        return (1.0 + eps * math.sin(2.0 * math.pi * p)) * l
    return l + (eps / math.pi) * math.sin(math.pi * (2.0 * p + l)) * math.sin(math.pi * l)


def _walk(offsets, ratios, a0, L0, off, scale, denom, lam, rtol, conj, eps, point_mode,
          hi_g, max_nodes, keep):
    m = len(ratios)
    offs = [float(o) for o in offsets]
    rats = [float(r) for r in ratios]
    thr = lam * (1.0 - rtol)
    count = 0
    visited = 0
    values = []
    stack = [(float(a0), float(L0))]
    while stack:
        a, L = stack.pop()
        visited += 1
        if visited > max_nodes:
            return count, visited, True, values
        val = _value(off + scale * a, scale * L, conj, eps, point_mode) / denom
        if val >= thr:
            count += 1
            if keep:
                values.append(val)
        for i in range(m - 1, -1, -1):
            Lc = rats[i] * L
            if hi_g * scale * Lc / denom >= thr:
                stack.append((offs[i] + rats[i] * a, Lc))
    return count, visited, False, values


def count_tree(offsets, ratios, a0, L0, off, scale, denom, lam, rtol, conj, eps,
               point_mode, hi_g, max_nodes):
    """Return ``(count, visited, overflow)``."""
    c, v, o, _ = _walk(offsets, ratios, a0, L0, off, scale, denom, lam, rtol, conj, eps,
                       point_mode, hi_g, max_nodes, False)
    return c, v, o


def collect_tree(offsets, ratios, a0, L0, off, scale, denom, lam, rtol, conj, eps,
                 point_mode, hi_g, max_nodes):
    """Return ``(values, visited, overflow)`` with the values of counted nodes."""
    _, v, o, vals = _walk(offsets, ratios, a0, L0, off, scale, denom, lam, rtol, conj, eps,
                          point_mode, hi_g, max_nodes, True)
    return np.asarray(vals, dtype=float), v, o
