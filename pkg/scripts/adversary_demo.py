"""Run the depth-4 walk on correct, constant and fault-injected circuits."""

import argparse
from collections import Counter

from topdown.adversary import WalkParams, depth4_walk
from topdown.circuits import computes_parity, const_shell, inject_fault, parity_circuit


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--faults", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--verbose", action="store_true")
    args = ap.parse_args(argv)
    params = WalkParams.for_n(args.n)
    print(params)

    cases = [("parity", parity_circuit(args.n, depth=4)), ("const1", const_shell(args.n, 4, 1))]
    for s in range(args.faults):
        c, edge = inject_fault(parity_circuit(args.n, depth=4), [args.seed, s])
        cases.append((f"fault{edge}", c))

    tally = Counter()
    for name, c in cases:
        correct, first_bad = computes_parity(c)
        tr = depth4_walk(c, params, args.seed)
        o = tr.outcome
        tally[(correct, o.kind, o.stage)] += 1
        if args.verbose or not name.startswith("fault"):
            print(f"--- {name} (computes parity: {correct})")
            print(tr.summary())
    print("(correct?, outcome, stage) -> count")
    for k, v in sorted(tally.items()):
        print(f"  {k}: {v}")


if __name__ == "__main__":
    main()
