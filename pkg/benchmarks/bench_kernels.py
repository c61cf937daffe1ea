#!/usr/bin/env python3
"""Time the compiled stepping kernels against the numpy fallback.

Both backends perform the same composed kick-drift-kick updates in the
same order, so they agree to round-off; this script checks that and
reports the per-step cost of each on realistic lattice shapes.

    python benchmarks/bench_kernels.py [--steps N] [--repeats R]
"""

import argparse
import time

import numpy as np

from metastab import kernels
from metastab.lattice import SCHEMES

# (model, lattice shape): the sizes the production scans actually touch
CASES = [
    ("etl", (17, 1229)),
    ("etl", (33, 8985)),
    ("kg", (17, 145)),
    ("kg", (33, 545)),
]


def _fresh(shape, rng):
    Q = 0.05 * rng.standard_normal(shape)
    P = 0.05 * rng.standard_normal(shape)
    return Q, P


def _run(fn, Q, P, dt, steps, w, c1, c2, repeats):
    best = float("inf")
    for _ in range(repeats):
        q, p = Q.copy(), P.copy()
        t0 = time.perf_counter()
        fn(q, p, dt, steps, w, c1, c2)
        best = min(best, time.perf_counter() - t0)
    return best, q, p


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    w = SCHEMES["yoshida4"]
    dt = 0.05

    print(f"selected backend: {kernels.BACKEND}")
    if kernels.BACKEND != "compiled":
        print("compiled extension unavailable; timing the fallback only")
    print(f"{'model':<6} {'shape':<12} {'numpy ms/step':>14} "
          f"{'compiled ms/step':>17} {'speedup':>8}")

    for model, shape in CASES:
        Q, P = _fresh(shape, rng)
        if model == "etl":
            np_fn = kernels._advance_etl_np
            c_fn = getattr(kernels._kernels, "advance_etl", None) \
                if kernels._kernels else None
            coeffs = (1.0, 1.0)  # alpha, beta
        else:
            np_fn = kernels._advance_kg_np
            c_fn = getattr(kernels._kernels, "advance_kg", None) \
                if kernels._kernels else None
            coeffs = (1.0, 1.0)  # m^2, beta

        t_np, q1, p1 = _run(np_fn, Q, P, dt, args.steps, w, *coeffs,
                            repeats=args.repeats)
        row = (f"{model:<6} {str(shape):<12} "
               f"{1e3 * t_np / args.steps:>14.3f}")
        if c_fn is not None:
            t_c, q2, p2 = _run(c_fn, Q, P, dt, args.steps, w, *coeffs,
                               repeats=args.repeats)
            agree = np.max(np.abs(q1 - q2)) + np.max(np.abs(p1 - p2))
            if agree > 1e-12 * max(np.max(np.abs(q1)), 1.0):
                raise SystemExit(f"backend mismatch on {model} {shape}: {agree:g}")
            row += f" {1e3 * t_c / args.steps:>17.3f} {t_np / t_c:>8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
