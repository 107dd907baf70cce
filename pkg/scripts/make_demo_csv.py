#!/usr/bin/env python3
"""Generate a synthetic biomarker-style CSV for trying the CLI and service.

Fifteen standardized candidate columns with three tightly coupled pairs;
the signal lives in the first pair jointly, so single-variable tests are
weak while the pair test is strong.

Usage: python scripts/make_demo_csv.py [--n N] [--seed S] [--out FILE]
"""

import argparse
import math
from pathlib import Path

import numpy as np

NAMES = (
    "xl_hdl_c", "l_hdl_c", "apob", "idl_tg", "s_hdl_tg", "s_vldl_tg",
    "apoa1", "ldl_d", "ace", "xl_hdl_tg", "vldl_d", "m_hdl_c", "his", "ala", "gln",
)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=145)
    ap.add_argument("--seed", type=int, default=4)
    ap.add_argument("--out", type=Path, default=Path("demo.csv"))
    args = ap.parse_args()

    nu = len(NAMES)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(args.seed)))
    corr = np.full((nu, nu), 0.25)
    np.fill_diagonal(corr, 1.0)
    for (j, k), r in {(0, 1): 0.82, (2, 3): 0.91, (4, 5): 0.92}.items():
        corr[j, k] = corr[k, j] = r
    raw = rng.standard_normal((args.n, nu))
    raw -= raw.mean(axis=0)
    q, _ = np.linalg.qr(raw)
    X = math.sqrt(args.n) * q @ np.linalg.cholesky(corr).T
    y = 0.30 * (X[:, 0] + X[:, 1]) / 2.0 + rng.standard_normal(args.n)

    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("outcome," + ",".join(NAMES) + "\n")
        for i in range(args.n):
            fh.write(",".join(f"{v:.10f}" for v in [y[i], *X[i]]) + "\n")
    print(f"wrote {args.out} ({args.n} rows, {nu} candidates)")
    print("try: bfma analyze", args.out, "--variance known:1 --mu 0.1 --tau 9")
    print("or:  bfma test", args.out, "--group xl_hdl_c --group l_hdl_c --variance known:1")


if __name__ == "__main__":
    main()
