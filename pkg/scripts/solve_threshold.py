#!/usr/bin/env python3
"""Solve the critical odds-scale threshold and cross-check it by simulation.

Finds the point where the one-term tail overtakes the two-term mean of
exponentiated half-chi-squared variables, then verifies by Monte Carlo that
the one-term tail dominates all k-term means above it.

Usage: python scripts/solve_threshold.py [--draws N] [--kmax K] [--seed S]
"""

import argparse
import math

import numpy as np

from bfma.ctp import xcrit_threshold


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--draws", type=int, default=10_000_000)
    ap.add_argument("--kmax", type=int, default=10)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()

    res = xcrit_threshold()
    print(f"x_crit = {res.x_crit:.7f}")
    print(f"tail probability at x_crit = {res.tail_prob:.7f}")

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(args.seed)))
    se = math.sqrt(res.tail_prob * (1 - res.tail_prob) / args.draws)
    print(f"monte carlo with {args.draws} draws (binomial se ~ {se:.2e}):")
    running = np.zeros(args.draws)
    for k in range(1, args.kmax + 1):
        running += np.exp(rng.gamma(0.5, 1.0, size=args.draws))
        tail_k = float(np.mean(running / k >= res.x_crit))
        flag = "" if tail_k <= res.tail_prob + 3 * se else "  <-- above the one-term tail"
        print(f"  k={k:2d}: Pr(mean >= x_crit) = {tail_k:.7f}{flag}")


if __name__ == "__main__":
    main()
