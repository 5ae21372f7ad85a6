"""Additive outliers break the Gaussian test but not the rank tests.

A handful of large additive outliers inflates the empirical autocovariances
that the Gaussian portmanteau statistic is built from, so its size under
the null collapses.  The center-outward ranks only see where each point
sits relative to the others, so a few wild observations move a few ranks
and nothing else.  The script contaminates white noise with 5% outliers of
size (9, 9) and compares null rejection rates.
"""

import numpy as np

import rankvar as rv


def main():
    d, n, reps = 2, 400, 80
    spec = rv.ContaminationSpec(fraction=0.05, size=(9.0, 9.0))
    print(f"white noise, n = {n}, {spec.positions(n).size} outliers of size "
          f"(9, 9), {reps} replications, nominal level 0.05")

    grid = rv.make_grid(rv.factorize(n, d), d, seed=1)
    score = rv.ScoreSpec("vdw")
    rejections = {"gaussian": 0, "vdw (perm)": 0}
    for r in range(reps):
        x = np.random.default_rng(600 + r).standard_normal((n, d))
        x = rv.contaminate(x, spec)
        rejections["gaussian"] += rv.gaussian_test_order(x, 0, 1).reject
        rejections["vdw (perm)"] += rv.test_order(
            x, 0, 1, score, grid, M=199, seed=r
        ).reject

    print("\nnull rejection frequency under contamination:")
    for name, k in rejections.items():
        print(f"  {name:<12} {k / reps:.3f}")
    print("\nThe Gaussian test rejects far above its level; the permutation-"
          "\ncalibrated rank test keeps it.")


if __name__ == "__main__":
    main()
