"""Calibrate the constant C in the spread => satisfying implication.

For random r-uniform families we record the spreadness kappa and the exact
satisfying probability at block size s. An instance that is NOT
(s/n, eps)-satisfying caps the usable constant: the premise
kappa >= C (n/s) ln(r/eps) must fail there, i.e. C > kappa / ((n/s) ln(r/eps)).
The smallest safe C is the largest such cap.
"""

import argparse
import csv
import sys
from fractions import Fraction
from math import comb, log

import numpy as np

from topdown.family import satisfying_probability_exact, spreadness
from topdown.testbeds import random_uniform_family


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ns", default="8,10,12")
    ap.add_argument("--draws", type=int, default=300)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--C", type=float, default=2.0, help="constant to tabulate")
    ap.add_argument("--csv", default=None)
    args = ap.parse_args(argv)

    rows, cap = [], 0.0
    for n in (int(v) for v in args.ns.split(",")):
        for j in range(args.draws):
            rng = np.random.default_rng([args.seed, n, j])
            w = int(rng.integers(1, 4))
            A = random_uniform_family(n, w, int(rng.integers(1, comb(n, w) + 1)), rng)
            kappa = spreadness(A).kappa
            for s in range(w, n + 1):
                for eps in (0.05, 0.1, 0.25):
                    prob = satisfying_probability_exact(A, s)
                    scale = (n / s) * log(w / eps)
                    holds = prob >= 1 - Fraction(str(eps))
                    if not holds and scale > 0:
                        cap = max(cap, kappa / scale)
                    premise = kappa >= args.C * scale
                    rows.append({"n": n, "w": w, "size": len(A), "s": s, "eps": eps,
                                 "kappa": round(kappa, 9), "premise": premise,
                                 "probability": str(prob), "holds": holds})
    covered = [r for r in rows if r["premise"]]
    bad = [r for r in covered if not r["holds"]]
    print(f"{len(rows)} (family, s, eps) cases; premise holds at C={args.C} for {len(covered)}")
    print(f"violations at C={args.C}: {len(bad)}")
    print(f"smallest safe C on this grid: > {cap:.4f}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
