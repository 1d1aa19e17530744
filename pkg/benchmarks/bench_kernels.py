"""Compiled vs pure-Python resolution kernels on the desk-scale instance.

Usage: python benchmarks/bench_kernels.py [--horizons 5 20 50] [--repeat 3]

Stacks are built once per instance; only the kernel call is timed.  The
two backends must also agree byte for byte.
"""

import argparse
import time

import numpy as np

from shotnoise_sbd import sheriff, sheriffz
from shotnoise_sbd._backend import compiled_available
from shotnoise_sbd.domain import PairOracle, PointSet, Window, sample_poisson_initial, sample_rain
from shotnoise_sbd.response import ResponseFunction


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--horizons", type=float, nargs="+", default=[5.0, 20.0, 50.0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not compiled_available():
        raise SystemExit("compiled extension not built; run pip install -e . --no-build-isolation")
    w = Window(2, 10.0, "torus")
    rf = ResponseFunction.indicator(1.0, 1.0, 2)
    print(f"{'kernel':<8} {'t1':>6} {'points':>7} {'cards':>9} {'python s':>10} {'compiled s':>11} {'speedup':>8}")
    for h in args.horizons:
        rain = sample_rain(w, 1.0, 0.0, h, 11)
        oracle = PairOracle(12, rf, w)
        for variant in ("single", "double"):
            prep = sheriff.prepare(rain, oracle, h, variant)
            tp, a = best_of(lambda: prep.run(("shuffled", 1), backend="python"), args.repeat)
            tc, b = best_of(lambda: prep.run(("shuffled", 1), backend="compiled"), args.repeat)
            assert a.death.tobytes() == b.death.tobytes() and a.killer.tobytes() == b.killer.tobytes()
            print(f"{variant:<8} {h:>6g} {len(rain):>7} {prep.stacks.n_cards:>9} {tp:>10.4f} {tc:>11.4f} "
                  f"{tp / tc:>7.1f}x")
        z0 = sample_poisson_initial(w, 0.5642, 0.0, 13)
        pts = PointSet.concat(rain, z0).canonical()
        pairs = oracle.pairs(pts, t_max=h)
        tp, a = best_of(lambda: sheriffz.resolve_coupled_pairs(pts, pairs, h, backend="python"), args.repeat)
        tc, b = best_of(lambda: sheriffz.resolve_coupled_pairs(pts, pairs, h, backend="compiled"), args.repeat)
        assert a.e_aug.tobytes() == b.e_aug.tobytes() and a.family.tobytes() == b.family.tobytes()
        print(f"{'coupled':<8} {h:>6g} {len(pts):>7} {2 * len(pairs):>9} {tp:>10.4f} {tc:>11.4f} "
              f"{tp / tc:>7.1f}x  (includes stack build)")


if __name__ == "__main__":
    main()
