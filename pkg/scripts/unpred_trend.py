"""Certificate and non-shattering probabilities as n grows at fixed k, q, r."""

import argparse
import sys

from topdown.experiments import trend_summary, unpred_grid


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ns", default="8,12,16")
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--q", type=int, default=1)
    ap.add_argument("--r", type=int, default=1)
    ap.add_argument("--draws", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    ns = [int(v) for v in args.ns.split(",")]

    rows = unpred_grid("random", ns, args.k, args.q, args.r, args.draws, args.seed)
    for n in ns:
        sub = [r for r in rows if r["n"] == n]
        mean_p = sum(r["probability_float"] for r in sub) / len(sub)
        print(f"n={n:3d}  mean certificate prob {mean_p:.4f}  reference (kqr/n)^(1/6) {sub[0]['reference']:.4f}")
    for key in ("probability_float", "non_shatter"):
        t = trend_summary(rows, key=key)
        steps = ", ".join(f"{k}: {v['nonincreasing']}/{v['total']}" for k, v in t["steps"].items())
        print(f"{key}: nonincreasing per step {steps}")

    tight = unpred_grid("block-parity", [6, 12, 18], None, 2, 2, 1, args.seed)
    for r in tight:
        print(f"block-parity n={r['n']:2d} k={r['k']:.0f}: probability {r['probability']} ({r['probability_float']:.3f})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
