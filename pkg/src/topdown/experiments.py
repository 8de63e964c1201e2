"""Verification suites and experiment grids.

Every suite draws instance ``j`` from ``default_rng([seed, j])``, turns it
into a JSON-able instance dict and hands it to a per-lemma check. The same
check replays a saved instance, so a failure file reproduces the failure.
"""

from dataclasses import dataclass, field, fields
from fractions import Fraction
from math import ceil, comb, log
import time

import numpy as np

from .bits import coords_of, point_to_str, submasks
from .certificates import certificate_probability, has_certificate, is_local_limit
from .adversary import sphere_dense_centers, spreadify
from .entropy import (
    count_shattered, marginal_entropies, shatter_probability, shattered_family,
    verify_conditional_entropy, verify_deficiency_reduction,
)
from .errors import DegenerateB
from .family import SetFamily, is_downward_closed, satisfying_probability_exact, slice_densities, spreadness
from .pointset import PointSet
from . import testbeds

SCHEMA_VERSION = 1

LEMMAS = ("pajor", "slices", "shearer", "cond-entropy", "shatter",
          "spread-satisfying", "sphere", "final-step", "spreadify")


@dataclass
class ExperimentConfig:
    n: int = None
    draws: int = None
    seed: int = 0
    k: tuple = (1, 2, 4)
    t: tuple = (3, 6)
    delta: tuple = (0.25, 0.5)
    m: tuple = (2, 3)
    q: int = 2
    r: int = 2
    epsilon: float = 0.15
    C: float = 2.0
    budget: int = 1 << 26
    mode: str = "exact"
    samples: int = 2000

    @classmethod
    def fields(cls):
        return {f.name: f for f in fields(cls)}


DEFAULTS = {
    "pajor": dict(n=12, draws=500),
    "slices": dict(n=14, draws=200),
    "shearer": dict(n=12, draws=50),
    "cond-entropy": dict(n=12, draws=50),
    "shatter": dict(n=10, draws=50, r=2),
    "spread-satisfying": dict(n=12, draws=60),
    "sphere": dict(n=12, draws=100),
    "final-step": dict(n=10, draws=200, r=2, q=2),
    "spreadify": dict(n=12, draws=100, m=(3,), epsilon=0.15),
}


def config_for(lemma, **overrides):
    base = dict(DEFAULTS[lemma])
    base.update({k: v for k, v in overrides.items() if v is not None})
    cfg = ExperimentConfig(**base)
    validate(cfg)
    return cfg


def validate(cfg):
    if cfg.n is None or not 1 <= cfg.n <= 24:
        raise ValueError(f"n must be in 1..24, got {cfg.n}")
    if cfg.draws is None or cfg.draws < 1:
        raise ValueError("draws must be >= 1")
    if any(not 0 < d < 1 for d in cfg.delta):
        raise ValueError("every delta must lie in (0, 1)")
    if any(not 1 <= t <= cfg.n for t in cfg.t):
        raise ValueError("every t must lie in 1..n")
    if any(not 1 <= m <= cfg.n for m in cfg.m):
        raise ValueError("every m must lie in 1..n")
    if any(not 0 <= k < cfg.n for k in cfg.k):
        raise ValueError("every k must lie in 0..n-1")
    if not 0 <= cfg.r <= cfg.n or cfg.q < 0:
        raise ValueError("need 0 <= r <= n and q >= 0")
    if not 0 < cfg.epsilon < 1 / 2.2:
        raise ValueError("epsilon must lie in (0, 1/2.2)")
    if cfg.mode not in ("exact", "mc"):
        raise ValueError(f"mode must be exact or mc, got {cfg.mode!r}")


# instance encoding ------------------------------------------------------------

def enc_set(X):
    return {"n": X.n, "members": [int(x) for x in X.members()]}


def dec_set(d):
    return PointSet.from_members(d["n"], d["members"])


def enc_family(A):
    return {"n": A.n, "masks": [int(m) for m in A.masks]}


def dec_family(d):
    return SetFamily(d["n"], d["masks"])


# checks: instance dict -> (passed, list of CSV rows) -------------------------------

def check_pajor(inst):
    X = dec_set(inst["X"])
    s = count_shattered(X)
    return s >= len(X), [{"n": X.n, "size": len(X), "shattered": s, "passed": s >= len(X)}]


def check_slices(inst):
    A = dec_family(inst["A"])
    d = slice_densities(A)
    ok = is_downward_closed(A) and all(a >= b for a, b in zip(d, d[1:]))
    return ok, [{"n": A.n, "family_size": len(A), "densities": ";".join(str(v) for v in d), "passed": ok}]


def check_shearer(inst):
    X = dec_set(inst["X"])
    rows, ok = [], True
    for t in inst["t"]:
        H = marginal_entropies(X, t)
        for delta in inst["delta"]:
            rep = verify_deficiency_reduction(X, t, delta, entropies=H)
            ok &= rep.passed
            rows.append({"n": X.n, "k": round(rep.k, 12), "t": t, "delta": delta,
                         "threshold": round(rep.threshold, 12), "fraction": str(rep.success_fraction),
                         "passed": rep.passed})
    return ok, rows


def check_cond_entropy(inst):
    X = dec_set(inst["X"])
    rows, ok = [], True
    for T in inst["T"]:
        for delta in inst["delta"]:
            rep = verify_conditional_entropy(X, T, delta)
            ok &= rep.passed
            rows.append({"n": X.n, "k": round(rep.k, 12), "t": len(T), "delta": delta,
                         "threshold": round(rep.threshold, 12), "fraction": str(rep.success_fraction),
                         "passed": rep.passed, "T": " ".join(map(str, T))})
    return ok, rows


def naive_shattered(X):
    """All shattered sets by checking every B directly against the member list."""
    M = [int(x) for x in X.members()]
    out = []
    for B in range(1 << X.n):
        if len({x & B for x in M}) == 1 << bin(B).count("1"):
            out.append(B)
    return out


def check_shatter(inst):
    X = dec_set(inst["X"])
    fam = shattered_family(X)
    oracle = naive_shattered(X) if X.n <= 14 else None
    agree = oracle is None or list(fam.masks) == oracle
    closed = is_downward_closed(fam)
    ok = agree and closed and len(fam) >= len(X)
    r = inst["r"]
    return ok, [{"n": X.n, "size": len(X), "shattered": len(fam),
                 "oracle": len(oracle) if oracle is not None else "", "downward_closed": closed,
                 "r": r, "non_shatter_prob": str(shatter_probability(X, r)), "passed": ok}]


def check_spread_satisfying(inst):
    A = dec_family(inst["A"])
    n, w, s, eps, C = A.n, inst["w"], inst["s"], inst["eps"], inst["C"]
    kappa = spreadness(A).kappa
    needed = C * (n / s) * log(w / eps)
    premise = kappa >= needed
    prob = satisfying_probability_exact(A, s)
    holds = prob >= 1 - Fraction(str(eps))
    ok = holds or not premise
    return ok, [{"n": n, "w": w, "s": s, "eps": eps, "C": C, "kappa": round(kappa, 12),
                 "kappa_needed": round(needed, 12), "premise": premise, "probability": str(prob),
                 "holds": holds, "passed": ok}]


def check_sphere(inst):
    Y = dec_set(inst["Y"])
    rows, ok = [], True
    for m in inst["m"]:
        Z = sphere_dense_centers(Y, m, check=False).Z
        good = 2 * len(Z) >= len(Y)
        ok &= good
        rows.append({"n": Y.n, "m": m, "Y": len(Y), "Z": len(Z), "passed": good})
    return ok, rows


def check_final_step(inst):
    X = dec_set(inst["X"])
    x, R, q = inst["x"], inst["R"], inst["q"]
    if has_certificate(x, R, q, X):
        return True, [{"n": X.n, "r": popcount_(R), "q": q, "size": len(X), "x": point_to_str(x, X.n),
                       "R": " ".join(map(str, coords_of(R))), "flips": 0, "passed": True}]
    flips = 0
    ok = True
    for s in submasks(R):
        limit, _ = is_local_limit(x ^ s, X, q)
        ok &= limit
        flips += 1
    return ok, [{"n": X.n, "r": popcount_(R), "q": q, "size": len(X), "x": point_to_str(x, X.n),
                 "R": " ".join(map(str, coords_of(R))), "flips": flips, "passed": ok}]


def check_spreadify(inst):
    Y = dec_set(inst["Y"])
    n, x, m, eps = Y.n, inst["x"], inst["m"], inst["eps"]
    row = {"n": n, "m": m, "epsilon": eps, "x": point_to_str(x, n)}
    try:
        res = spreadify(x, Y, m, eps)
    except DegenerateB as e:
        res = e.result
        row.update(x_prime=point_to_str(res.x_prime, n), I=_join(res.I), I_prime=_join(res.I_prime),
                   B_size=0, degenerate=True, spread_ok="", passed=True)
        return True, [row]
    ok = (res.x_prime.bit_count() & 1) == 1 and len(res.I_prime) <= len(res.I) + 1 and res.spread_ok
    row.update(x_prime=point_to_str(res.x_prime, n), I=_join(res.I), I_prime=_join(res.I_prime),
               B_size=len(res.B), degenerate=False, spread_ok=res.spread_ok, passed=ok)
    return ok, [row]


def popcount_(m):
    return int(m).bit_count()


def _join(coords):
    return " ".join(map(str, coords))


CHECKS = {
    "pajor": check_pajor, "slices": check_slices, "shearer": check_shearer,
    "cond-entropy": check_cond_entropy, "shatter": check_shatter,
    "spread-satisfying": check_spread_satisfying, "sphere": check_sphere,
    "final-step": check_final_step, "spreadify": check_spreadify,
}


# instance generators: (cfg, j) -> instance dict ------------------------------------

def _rng(cfg, j):
    return np.random.default_rng([cfg.seed, j])


def gen_pajor(cfg, j):
    return {"X": enc_set(testbeds.random_density_set(cfg.n, _rng(cfg, j)))}


def gen_slices(cfg, j):
    return {"A": enc_family(testbeds.random_downward_closed(cfg.n, _rng(cfg, j)))}


def gen_shearer(cfg, j):
    k = cfg.k[j % len(cfg.k)]
    return {"X": enc_set(testbeds.deficient_set(cfg.n, k, _rng(cfg, j))),
            "t": list(cfg.t), "delta": list(cfg.delta)}


def gen_cond_entropy(cfg, j):
    rng = _rng(cfg, j)
    k = cfg.k[j % len(cfg.k)]
    X = testbeds.deficient_set(cfg.n, k, rng)
    Ts = [sorted(int(c) + 1 for c in rng.choice(cfg.n, size=t, replace=False)) for t in cfg.t]
    return {"X": enc_set(X), "T": Ts, "delta": list(cfg.delta)}


def gen_shatter(cfg, j):
    return {"X": enc_set(testbeds.random_density_set(cfg.n, _rng(cfg, j))), "r": cfg.r}


def gen_spread_satisfying(cfg, j):
    rng = _rng(cfg, j)
    n = cfg.n
    w = int(rng.integers(1, 4))
    size = int(rng.integers(1, comb(n, w) + 1))
    A = testbeds.random_uniform_family(n, w, size, rng)
    s = int(rng.integers(w, n + 1))
    eps = float(rng.choice([0.05, 0.1, 0.25]))
    return {"A": enc_family(A), "w": w, "s": s, "eps": eps, "C": cfg.C}


def gen_sphere(cfg, j):
    rng = _rng(cfg, j)
    return {"Y": enc_set(testbeds.random_density_set(cfg.n, rng, max_log=6)), "m": list(cfg.m)}


def gen_final_step(cfg, j):
    rng = _rng(cfg, j)
    n = cfg.n
    for _ in range(1000):
        X = testbeds.random_density_set(n, rng, max_log=3)
        x = int(X.members()[rng.integers(len(X))])
        R = testbeds.random_block(n, cfg.r, rng)
        if not has_certificate(x, R, cfg.q, X):
            return {"X": enc_set(X), "x": x, "R": R, "q": cfg.q}
    raise RuntimeError("could not draw a certificate-free (x, R)")


def gen_spreadify(cfg, j):
    rng = _rng(cfg, j)
    m = cfg.m[0]
    Y = testbeds.random_density_set(cfg.n, rng, max_log=5)
    # a dense center's sphere meets the nonempty Y, so spreadify has work to do
    Z = sphere_dense_centers(Y, m).Z.members()
    x = int(Z[rng.integers(Z.size)])
    return {"Y": enc_set(Y), "x": x, "m": m, "eps": cfg.epsilon}


GENERATORS = {
    "pajor": gen_pajor, "slices": gen_slices, "shearer": gen_shearer,
    "cond-entropy": gen_cond_entropy, "shatter": gen_shatter,
    "spread-satisfying": gen_spread_satisfying, "sphere": gen_sphere,
    "final-step": gen_final_step, "spreadify": gen_spreadify,
}


@dataclass
class SuiteResult:
    lemma: str
    config: ExperimentConfig
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)   # (draw, instance) pairs

    @property
    def passed(self):
        return not self.failures

    def summary(self):
        return {"schema_version": SCHEMA_VERSION, "lemma": self.lemma, "draws": self.config.draws,
                "rows": len(self.rows), "failures": len(self.failures), "passed": self.passed}


def run_suite(lemma, cfg):
    check, gen = CHECKS[lemma], GENERATORS[lemma]
    res = SuiteResult(lemma, cfg)
    for j in range(cfg.draws):
        inst = gen(cfg, j)
        ok, rows = check(inst)
        res.rows.extend({"draw": j} | r for r in rows)
        if not ok:
            res.failures.append((j, inst))
    return res


def replay_record(lemma, cfg, draw, inst):
    return {"schema_version": SCHEMA_VERSION, "lemma": lemma, "seed": cfg.seed, "draw": draw,
            "instance": inst}


def replay(record):
    """Re-run the check stored in a replay record; returns (passed, rows)."""
    return CHECKS[record["lemma"]](record["instance"])


# unpredictability grids ---------------------------------------------------------

def tight_block_count(n, q, r):
    """Number of width-q blocks for the tight family: enough that k*q*r >= n when they fit."""
    return max(1, min(n // q, ceil(n / (q * r))))


def unpred_grid(testbed, ns, k, q, r, draws, seed, mode="exact", samples=2000, support=None):
    """Rows of certificate probabilities on a testbed over a list of n."""
    rows = []
    support = support or min(ns)
    for j in range(draws if testbed == "random" else 1):
        for n in ns:
            if testbed == "block-parity":
                kk = tight_block_count(n, q, r)
                X = testbeds.block_parity_set(n, kk, q)
            elif testbed == "full":
                X = testbeds.full_cube(n)
            elif testbed == "random":
                X = testbeds.planted_parity_set(n, k, [seed, j], support=support)
            else:
                raise ValueError(f"unknown testbed {testbed!r}")
            rep = certificate_probability(X, r, q, mode=mode, samples=samples, seed=seed)
            nonshat = shatter_probability(X, r) if mode == "exact" else None
            rows.append({"testbed": testbed, "draw": j, "n": n, "k": round(rep.k, 12), "q": q, "r": r,
                         "probability": str(rep.probability) if mode == "exact" else rep.probability,
                         "probability_float": float(rep.probability),
                         "reference": rep.bound_value,
                         "ratio": rep.ratio if rep.ratio is not None else "",
                         "half_width": rep.half_width if rep.half_width is not None else "",
                         "non_shatter": str(nonshat) if nonshat is not None else ""})
    return rows


def trend_summary(rows, key="probability_float"):
    """Per draw: is the quantity nonincreasing in n? Returns counts per consecutive step."""
    by_draw = {}
    for row in rows:
        by_draw.setdefault(row["draw"], []).append(row)
    steps = {}
    whole = 0
    for draw, rs in by_draw.items():
        rs = sorted(rs, key=lambda r: r["n"])
        vals = [_value(r[key]) for r in rs]
        ok_all = True
        for a, b, ra, rb in zip(vals, vals[1:], rs, rs[1:]):
            good = b <= a
            steps.setdefault(f"{ra['n']}->{rb['n']}", [0, 0])
            steps[f"{ra['n']}->{rb['n']}"][0] += good
            steps[f"{ra['n']}->{rb['n']}"][1] += 1
            ok_all &= good
        whole += ok_all
    draws = len(by_draw)
    return {"draws": draws, "nonincreasing_draws": whole,
            "steps": {k: {"nonincreasing": v[0], "total": v[1]} for k, v in steps.items()},
            "majority_nonincreasing": draws > 0 and 2 * whole > draws}


def _value(v):
    if isinstance(v, str):
        return Fraction(v)
    return v


# benchmarks --------------------------------------------------------------------

def bench(n, seed, repeats=3):
    """Wall-clock timings of the core kernels (not deterministic by nature)."""
    from .circuits import parity_circuit, integer_root
    rng = np.random.default_rng(seed)
    X = testbeds.random_density_set(n, rng, max_log=3)
    jobs = {
        "count_shattered": lambda: count_shattered(X),
        "certificate_probability_r1_q1": lambda: certificate_probability(X, 1, 1),
        "sphere_dense_centers_m2": lambda: sphere_dense_centers(X, min(2, n)),
    }
    if integer_root(n, 3) or integer_root(n, 2):
        c = parity_circuit(n)
        jobs["parity_sweep"] = lambda: c.sweep()
    rows = []
    for name, job in jobs.items():
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            job()
            times.append(time.perf_counter() - t0)
        rows.append({"op": name, "n": n, "size": len(X), "best_seconds": min(times)})
    return rows
