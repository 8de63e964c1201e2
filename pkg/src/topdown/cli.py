"""Command-line front end: verify, unpred, adversary, gen, bench.

Exit codes: 0 success (or counterexample found), 1 a check failed, 2 bad
input or configuration, 3 the adversary got stuck.
"""

import argparse
import csv
import io
import json
import os
import sys

from . import experiments as ex
from .adversary import WalkParams, run_walk
from .circuits import const_shell, dump, inject_fault, load, parity_circuit, random_circuit
from .errors import FormatError, ShapeError, TopdownError
from .formats import dumps_json

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_STUCK = 0, 1, 2, 3

GEN_KINDS = ("parity", "parity3", "parity4", "const1-shell", "const0-shell", "random", "fault")


class ConfigError(Exception):
    pass


def int_list(s):
    return tuple(int(v) for v in str(s).split(",") if v.strip())


def float_list(s):
    return tuple(float(v) for v in str(s).split(",") if v.strip())


def _global(p):
    g = p.add_argument_group("global")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--budget", type=int, default=None)
    g.add_argument("--out", default=".", help="output directory")
    g.add_argument("--mode", choices=("exact", "mc"), default="exact")
    g.add_argument("--config", default=None, help="key=value file; flags win on conflict")


def build_parser():
    p = argparse.ArgumentParser(prog="topdown", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a lemma verification suite")
    v.add_argument("lemma", nargs="?", choices=ex.LEMMAS)
    v.add_argument("--n", type=int)
    v.add_argument("--draws", type=int)
    v.add_argument("--k", type=int_list)
    v.add_argument("--t", type=int_list)
    v.add_argument("--delta", type=float_list)
    v.add_argument("--m", type=int_list)
    v.add_argument("--q", type=int)
    v.add_argument("--r", type=int)
    v.add_argument("--epsilon", type=float)
    v.add_argument("--C", type=float)
    v.add_argument("--replay", default=None, help="re-run a saved failing instance")
    _global(v)

    u = sub.add_parser("unpred", help="certificate probabilities over a grid of n")
    u.add_argument("--testbed", choices=("block-parity", "full", "random"), default="random")
    u.add_argument("--ns", type=int_list, default=(8, 12, 16))
    u.add_argument("--k", type=int, default=2)
    u.add_argument("--q", type=int, default=1)
    u.add_argument("--r", type=int, default=1)
    u.add_argument("--draws", type=int, default=50)
    u.add_argument("--samples", type=int, default=2000)
    _global(u)

    a = sub.add_parser("adversary", help="run the top-down walk on a circuit file")
    a.add_argument("circuit")
    a.add_argument("--m", type=int)
    a.add_argument("--r", type=int)
    a.add_argument("--q", type=int)
    a.add_argument("--epsilon", type=float)
    a.add_argument("--threshold", type=float)
    a.add_argument("--rate-samples", dest="rate_samples", type=int)
    a.add_argument("--trials", dest="process_trials", type=int)
    _global(a)

    g = sub.add_parser("gen", help="write a circuit file")
    g.add_argument("kind", choices=GEN_KINDS)
    g.add_argument("n", type=int)
    g.add_argument("--depth", type=int, default=4)
    g.add_argument("--fanin", type=int, default=3)
    _global(g)

    b = sub.add_parser("bench", help="time the core kernels")
    b.add_argument("--n", type=int, default=12)
    b.add_argument("--repeats", type=int, default=3)
    _global(b)
    return p, sub


def _subparser(sub, name):
    return sub.choices[name]


def _apply_config(parser, path):
    """Load key=value pairs and install them as defaults of ``parser``."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    actions = {a.dest: a for a in parser._actions}
    defaults = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in actions or key in ("config", "help"):
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        act = actions[key]
        try:
            val = act.type(val) if act.type else val
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {e}") from None
        if act.choices is not None and val not in act.choices:
            raise ConfigError(f"{path}:{lineno}: {key} must be one of {list(act.choices)}")
        defaults[key] = val
    parser.set_defaults(**defaults)


def parse_args(argv):
    parser, sub = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        _apply_config(_subparser(sub, args.command), args.config)
        args = parser.parse_args(argv)
    return args


# output helpers ------------------------------------------------------------

def _ensure_dir(path):
    os.makedirs(path, exist_ok=True)


def write_csv(path, rows):
    cols = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n", restval="")
    w.writeheader()
    for r in rows:
        w.writerow({k: _cell(v) for k, v in r.items()})
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return v


def write_json(path, obj):
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps_json(obj))


# commands ------------------------------------------------------------------

def cmd_verify(args):
    _ensure_dir(args.out)
    if args.replay:
        with open(args.replay) as fh:
            record = json.load(fh)
        if record.get("lemma") not in ex.LEMMAS:
            raise ConfigError(f"replay file names unknown lemma {record.get('lemma')!r}")
        ok, rows = ex.replay(record)
        print(f"replay {record['lemma']} draw {record.get('draw')}: {'pass' if ok else 'FAIL'}")
        return EXIT_OK if ok else EXIT_FAIL
    if not args.lemma:
        raise ConfigError("verify needs a lemma (or --replay FILE)")
    overrides = {k: getattr(args, k) for k in
                 ("n", "draws", "k", "t", "delta", "m", "q", "r", "epsilon", "C", "budget")}
    overrides.update(seed=args.seed, mode=args.mode)
    try:
        cfg = ex.config_for(args.lemma, **overrides)
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e)) from None
    res = ex.run_suite(args.lemma, cfg)
    stem = os.path.join(args.out, f"verify_{args.lemma}")
    write_csv(stem + ".csv", res.rows)
    summary = res.summary()
    summary["seed"] = cfg.seed
    replays = []
    for draw, inst in res.failures:
        path = os.path.join(args.out, f"replay_{args.lemma}_{draw}.json")
        write_json(path, ex.replay_record(args.lemma, cfg, draw, inst))
        replays.append(os.path.basename(path))
    summary["replay_files"] = replays
    write_json(stem + ".json", summary)
    print(f"{args.lemma}: {cfg.draws} draws, {len(res.failures)} failures -> {stem}.csv")
    return EXIT_OK if res.passed else EXIT_FAIL


def cmd_unpred(args):
    _ensure_dir(args.out)
    if args.draws < 1 or not args.ns or min(args.ns) < 1:
        raise ConfigError("need draws >= 1 and a nonempty list of positive n")
    rows = ex.unpred_grid(args.testbed, args.ns, args.k, args.q, args.r, args.draws,
                          args.seed, mode=args.mode, samples=args.samples)
    stem = os.path.join(args.out, f"unpred_{args.testbed}")
    write_csv(stem + ".csv", rows)
    trend = ex.trend_summary(rows)
    shatter = ex.trend_summary(rows, key="non_shatter") if args.mode == "exact" else None
    write_json(stem + ".json", {"schema_version": ex.SCHEMA_VERSION, "testbed": args.testbed,
                                "ns": list(args.ns), "k": args.k, "q": args.q, "r": args.r,
                                "seed": args.seed, "mode": args.mode,
                                "certificate_trend": trend, "non_shatter_trend": shatter})
    print(f"{args.testbed}: {len(rows)} rows, nonincreasing in {trend['nonincreasing_draws']}"
          f"/{trend['draws']} draws -> {stem}.csv")
    return EXIT_OK


def cmd_adversary(args):
    try:
        c = load(args.circuit)
    except OSError as e:
        raise ConfigError(f"cannot read {args.circuit}: {e.strerror}") from None
    base = WalkParams.for_n(c.n)
    kw = {k: getattr(args, k) for k in ("m", "r", "q", "epsilon", "threshold", "rate_samples",
                                         "process_trials") if getattr(args, k) is not None}
    if args.budget:
        kw["budget"] = args.budget
    try:
        params = WalkParams(**(base.__dict__ | kw))
    except ValueError as e:
        raise ConfigError(str(e)) from None
    trace = run_walk(c, params=params, q=params.q, seed=args.seed)
    _ensure_dir(args.out)
    stem = os.path.splitext(os.path.basename(args.circuit))[0]
    path = os.path.join(args.out, f"trace_{stem}.json")
    write_json(path, trace.to_json())
    print(trace.summary())
    return EXIT_OK if trace.found else EXIT_STUCK


def cmd_gen(args):
    n, kind = args.n, args.kind
    try:
        if kind == "parity":
            c = parity_circuit(n)
        elif kind == "parity3":
            c = parity_circuit(n, depth=3)
        elif kind == "parity4":
            c = parity_circuit(n, depth=4)
        elif kind in ("const1-shell", "const0-shell"):
            c = const_shell(n, args.depth, 1 if kind.startswith("const1") else 0)
        elif kind == "random":
            c = random_circuit(n, args.depth, args.fanin, args.seed)
        else:
            c, _ = inject_fault(parity_circuit(n, depth=4), args.seed)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    _ensure_dir(args.out)
    suffix = f"_s{args.seed}" if kind in ("random", "fault") else ""
    path = os.path.join(args.out, f"{kind}_n{n}{suffix}.ckt")
    dump(c, path)
    print(path)
    return EXIT_OK


def cmd_bench(args):
    _ensure_dir(args.out)
    rows = ex.bench(args.n, args.seed, args.repeats)
    write_csv(os.path.join(args.out, f"bench_n{args.n}.csv"), rows)
    for r in rows:
        print(f"{r['op']:32s} n={r['n']:2d} {r['best_seconds']:.4f}s")
    return EXIT_OK


COMMANDS = {"verify": cmd_verify, "unpred": cmd_unpred, "adversary": cmd_adversary,
            "gen": cmd_gen, "bench": cmd_bench}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as e:   # argparse usage errors
        return EXIT_CONFIG if e.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormatError, ShapeError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except TopdownError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
