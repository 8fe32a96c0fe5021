"""Approximation ratios against brute-force OPT over random small instances.

For each instance the script runs greedy, exact amortized filtering with
v* = OPT, and the full sampled pipeline, then prints the ratio summary.
"""
import argparse
import math

import numpy as np

from submod_filter.algorithms import (SolverConfig, amortized_filtering,
                                      amortized_filtering_full, brute_force_opt, greedy)
from submod_filter.acceptance import opt_fixtures


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=30)
    ap.add_argument("--eps", type=float, default=0.25)
    ap.add_argument("--m", type=int, default=500)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--fixture-seed", type=int, default=0)
    args = ap.parse_args()

    ratios = {"greedy": [], "amortized_exact": [], "amortized_full": []}
    for fid, f, k in opt_fixtures(args.instances, args.fixture_seed):
        opt = brute_force_opt(f, k)[1]
        ratios["greedy"].append(greedy(f, k).value / opt)
        res = amortized_filtering(f, SolverConfig(k=k, eps=args.eps), opt)
        ratios["amortized_exact"].append(res.value / opt)
        for seed in range(args.seeds):
            res = amortized_filtering_full(f, SolverConfig(k=k, eps=args.eps, m=args.m,
                                                           mode="sampled", seed=seed))
            ratios["amortized_full"].append(res.value / opt)

    floor = 1 - 1 / math.e - args.eps
    print(f"target ratio 1 - 1/e - eps = {floor:.4f}")
    print(f"{'solver':<16} {'runs':>5} {'min':>7} {'mean':>7} {'>= target':>10}")
    for name, vals in ratios.items():
        vals = np.array(vals)
        print(f"{name:<16} {vals.size:>5} {vals.min():>7.4f} {vals.mean():>7.4f} "
              f"{np.mean(vals >= floor - 1e-9):>10.1%}")


if __name__ == "__main__":
    main()
