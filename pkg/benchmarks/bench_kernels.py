"""Compare the compiled and pure-Python word-tree kernels.

Usage: python3 benchmarks/bench_kernels.py [--t 10 12 14] [--repeat 3]
"""
import argparse
import math
import time

from kakutani import branch_systems as bs
from kakutani import kernels
from kakutani import renewal as rn

SYSTEMS = {
    "alpha=2/5": lambda: bs.kakutani("2/5"),
    "dyadic+g_eps(0.1)": lambda: bs.build_conjugated_system(bs.dyadic(), bs.Conjugacy.g_epsilon(0.1)),
}


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t", type=float, nargs="+", default=[8.0, 10.0, 12.0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if "cython" not in kernels.BACKENDS:
        print("compiled kernels are not built; only the pure-Python timings are shown")
    print(f"{'system':<20}{'t':>6}{'count':>12}{'python s':>12}{'cython s':>12}{'speedup':>10}")
    for name, make in SYSTEMS.items():
        params = rn.tree_params(make(), (), ())
        for t in args.t:
            call = params.args(math.exp(-t), 10**9)
            t_py, (count, _, _) = best_of(lambda: kernels.BACKENDS["python"].count_tree(*call), args.repeat)
            if "cython" in kernels.BACKENDS:
                t_cy, (count_cy, _, _) = best_of(lambda: kernels.BACKENDS["cython"].count_tree(*call), args.repeat)
                assert count_cy == count, "backends disagree"
                print(f"{name:<20}{t:>6.1f}{count:>12d}{t_py:>12.4f}{t_cy:>12.4f}{t_py / t_cy:>10.1f}")
            else:
                print(f"{name:<20}{t:>6.1f}{count:>12d}{t_py:>12.4f}{'-':>12}{'-':>10}")


if __name__ == "__main__":
    main()
