import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kakutani import branch_systems as bs
from kakutani import kernels
from kakutani import renewal as rn

needs_compiled = pytest.mark.skipif("cython" not in kernels.BACKENDS, reason="compiled kernels not built")


def _params(alpha, eps, v, x):
    base = bs.affine_float([alpha, 1 - alpha])
    sys = base if eps == 0 else bs.build_conjugated_system(base, bs.Conjugacy.g_epsilon(eps))
    return rn.tree_params(sys, v, x)


words = st.lists(st.sampled_from((1, 2)), max_size=3).map(tuple)


@needs_compiled
@settings(max_examples=60, deadline=None)
@given(alpha=st.floats(0.2, 0.8), eps=st.sampled_from((0.0, 0.05, 0.2)), v=words, x=words,
       t=st.floats(0.0, 7.0))
def test_backends_agree(alpha, eps, v, x, t):
    p = _params(alpha, eps, v, x)
    args = p.args(math.exp(-t), 10**6)
    py = kernels.BACKENDS["python"].count_tree(*args)
    cy = kernels.BACKENDS["cython"].count_tree(*args)
    assert py == cy
    vp, _, _ = kernels.BACKENDS["python"].collect_tree(*args)
    vc, _, _ = kernels.BACKENDS["cython"].collect_tree(*args)
    assert np.array_equal(np.sort(vp), np.sort(vc))


@pytest.mark.parametrize("name", sorted(kernels.BACKENDS))
def test_overflow_flag(name):
    p = _params(0.5, 0.0, (), ())
    count, visited, overflow = kernels.BACKENDS[name].count_tree(*p.args(math.exp(-12.0), 100))
    assert overflow


@pytest.mark.parametrize("name", sorted(kernels.BACKENDS))
def test_dyadic_kernel_count(name):
    p = _params(0.5, 0.0, (), ())
    count, _, overflow = kernels.BACKENDS[name].count_tree(*p.args(1 / 8, 10**6))
    assert count == 15 and not overflow
