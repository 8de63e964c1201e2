"""Top-down adversaries for depth-3 and depth-4 circuits that claim to compute parity.

The walks descend greedily through the gate layers keeping dense sets of
inputs the current subcircuit must accept or reject. Wherever the argument
relies on the circuit being correct, the walk checks it instead; a failed
check is a concrete input the circuit gets wrong. Every returned
counterexample is re-verified by direct evaluation.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, log, log2
from typing import Optional

import numpy as np

from .bits import (
    as_mask, coords_of, lex_first_array, lex_key, parity, point_to_str, popcount,
    random_subset_masks,
)
from .certificates import certified_members, flip_block_reach, has_certificate, is_local_limit
from .circuits import parity_words
from .errors import BudgetExceeded, DegenerateB, EmptySphere, ShapeError
from .family import LOG_TOL, SetFamily, _superset_counts, is_kappa_spread
from .pointset import PointSet, _valid_tail

SCHEMA_VERSION = 1
SPHERE_BUDGET = 1 << 30


# parameters ---------------------------------------------------------------

@dataclass(frozen=True)
class WalkParams:
    n: int
    m: int
    r: int
    q: int
    epsilon: float
    threshold: float = 0.5       # X' keeps points whose certificate rate is at most this
    rate_samples: int = 64       # R draws per point when estimating that rate
    process_trials: int = 16     # runs of the flip process per point of X'
    density_floor: float = 0.0   # stop when a tracked set gets sparser than this
    budget: int = SPHERE_BUDGET

    def __post_init__(self):
        if not 1 <= self.m <= self.n:
            raise ValueError(f"m={self.m} must be in 1..n")
        if not 0 <= self.r <= self.n:
            raise ValueError(f"r={self.r} must be in 0..n")
        if self.q < 0:
            raise ValueError("q must be >= 0")
        if not 0 < self.epsilon < 1 / 2.2:
            raise ValueError(f"epsilon={self.epsilon} must lie in (0, 1/2.2)")

    @property
    def p(self):
        return Fraction(self.m, self.n)

    @property
    def kappa(self):
        """Spreadness demanded of B: (1/p)^(1 - 2.1 eps)."""
        return float(1 / self.p) ** (1 - 2.1 * self.epsilon)

    @classmethod
    def for_n(cls, n, **kw):
        m = max(1, round(n ** (1 / 3)))
        eps = min(max(1 / log2(n), 0.15), 1 / 2.2 - 1e-6) if n > 1 else 0.15
        r = max(1, round(m ** (1 + eps / 4)))
        q = max(1, round(m ** (1 + eps / 2)))
        return cls(n=n, m=m, r=min(r, n), q=q, epsilon=eps, **kw)

    def to_json(self):
        return {"n": self.n, "m": self.m, "r": self.r, "q": self.q, "epsilon": self.epsilon,
                "p": str(self.p), "threshold": self.threshold, "rate_samples": self.rate_samples,
                "process_trials": self.process_trials, "density_floor": self.density_floor}


# traces -------------------------------------------------------------------

@dataclass(frozen=True)
class Counterexample:
    y: int
    stage: str
    reason: str
    circuit_value: int
    xor_value: int

    kind = "counterexample"

    def to_json(self, n):
        return {"kind": self.kind, "y": point_to_str(self.y, n), "stage": self.stage,
                "reason": self.reason, "circuit_value": self.circuit_value,
                "xor_value": self.xor_value}


@dataclass(frozen=True)
class Stuck:
    stage: str
    reason: str

    kind = "stuck"

    def to_json(self, n):
        return {"kind": self.kind, "stage": self.stage, "reason": self.reason}


@dataclass
class Step:
    stage: str
    choice: Optional[int]
    sizes: dict
    info: dict = field(default_factory=dict)

    def to_json(self, n):
        return {"stage": self.stage, "choice": self.choice,
                "sizes": dict(self.sizes),
                "densities": {k: str(Fraction(v, 1 << n)) for k, v in self.sizes.items()},
                "info": self.info}


@dataclass
class AdversaryTrace:
    walk: str
    n: int
    params: dict
    steps: list = field(default_factory=list)
    outcome: object = None
    sets: dict = field(default_factory=dict, repr=False)  # named PointSets, not serialised

    def log(self, stage, choice=None, info=None, **named_sets):
        for name, s in named_sets.items():
            self.sets[name] = s
        step = Step(stage, choice, {k: len(v) for k, v in named_sets.items()}, info or {})
        self.steps.append(step)
        return step

    @property
    def found(self):
        return isinstance(self.outcome, Counterexample)

    def to_json(self):
        return {"schema_version": SCHEMA_VERSION, "walk": self.walk, "n": self.n,
                "params": self.params, "steps": [s.to_json(self.n) for s in self.steps],
                "outcome": self.outcome.to_json(self.n) if self.outcome else None}

    def summary(self):
        lines = [f"{self.walk} walk, n={self.n}"]
        for s in self.steps:
            sizes = ", ".join(f"|{k}|={v}" for k, v in s.sizes.items())
            pick = f" pick={s.choice}" if s.choice is not None else ""
            lines.append(f"  [{s.stage}]{pick} {sizes}")
        o = self.outcome
        if isinstance(o, Counterexample):
            lines.append(f"  counterexample y={point_to_str(o.y, self.n)} "
                         f"(circuit {o.circuit_value}, xor {o.xor_value}) at {o.stage}: {o.reason}")
        elif o is not None:
            lines.append(f"  stuck at {o.stage}: {o.reason}")
        return "\n".join(lines)


def _counterexample(c, y, stage, reason):
    v, x = c.evaluate(y), parity(y)
    if v == x:
        raise RuntimeError(f"internal error: {point_to_str(y, c.n)} is not a counterexample")
    return Counterexample(int(y), stage, reason, v, x)


def _check_pigeonhole(what, small, fanin, big):
    if small * fanin < big:
        raise RuntimeError(f"pigeonhole violated at {what}: {small}*{fanin} < {big}")


# helpers over packed truth tables ------------------------------------------

def _count(words):
    return int(np.bitwise_count(words).sum())


def _argmax_gate(candidates, score):
    """Smallest gate index among those with the largest score."""
    best, best_score = None, -1
    for g in sorted(set(candidates)):
        s = score(g)
        if s > best_score:
            best, best_score = g, s
    return best, best_score


def _parity_sets(n):
    odd = parity_words(n)
    even = ~odd
    even[-1] &= _valid_tail(n)
    return PointSet(n, even), PointSet(n, odd)


# depth 3 --------------------------------------------------------------------

def depth3_walk(sigma, q):
    """Adversary for an OR-AND-OR circuit claimed to compute parity.

    Picks the CNF that accepts the most odd inputs, takes X as its odd
    accepted inputs, and looks for an uncertified pair (x, i); the flip
    y = x + e_i is even, so if the CNF still accepts y the circuit errs at y.
    """
    if sigma.depth != 3 or sigma.top != "OR":
        raise ShapeError(f"depth-3 walk needs an OR-top depth-3 circuit, got {sigma.depth}/{sigma.top}")
    n = sigma.n
    trace = AdversaryTrace("depth3", n, {"q": q})
    top_children = sigma.gate(3, 0)
    if not top_children:
        trace.outcome = Stuck("first", "no subcircuit")
        return trace
    tables = sigma.sweep()
    even, odd = _parity_sets(n)
    cnf = tables[1]
    covered = np.zeros_like(odd.words)
    for j in set(top_children):
        covered |= cnf[j]
    missed = PointSet(n, odd.words & ~covered)
    if missed:
        y = lex_first_array(missed.members(), n)
        trace.log("first", info={"uncovered_odd": len(missed)}, odd=odd)
        trace.outcome = _counterexample(sigma, y, "first", "odd input rejected by every CNF")
        return trace
    j, _ = _argmax_gate(top_children, lambda g: _count(cnf[g] & odd.words))
    pi = PointSet(n, cnf[j])
    X = pi & odd
    trace.log("first", choice=j, info={"fanin": len(set(top_children))}, X=X)
    _check_pigeonhole("first step", len(X), len(set(top_children)), len(odd))

    M = X.members()
    order = np.argsort([lex_key(int(x), n) for x in M], kind="stable")
    unc = np.stack([~certified_members(X, 1 << i, q) for i in range(n)], axis=1)
    pairs = int(unc.sum())
    tried = 0
    for idx in order:
        x = int(M[idx])
        for i in range(n):
            if not unc[idx, i]:
                continue
            tried += 1
            y = x ^ (1 << i)
            if y in pi:
                limit, _ = is_local_limit(y, X, q)
                trace.log("final", choice=i,
                          info={"x": point_to_str(x, n), "i": i + 1, "local_limit": limit,
                                "uncertified_pairs": pairs, "tried": tried})
                trace.outcome = _counterexample(sigma, y, "final", "flip of an uncertified bit stays accepted")
                return trace
    width = max((len(g) for g in sigma.layers[0]), default=0)
    trace.log("final", info={"uncertified_pairs": pairs, "widest_clause": width})
    reason = "no uncertified pair" if pairs == 0 else f"every flip is rejected (widest clause {width} > q={q})"
    trace.outcome = Stuck("final", reason)
    return trace


# sphere densities -------------------------------------------------------------

@dataclass
class SphereCenters:
    Z: PointSet
    counts: np.ndarray   # |S_m(x) ∩ Y| for every x
    sphere_size: int
    Y_size: int

    def density(self, x):
        return Fraction(int(self.counts[x]), self.sphere_size)


def sphere_counts(Y, m, budget=SPHERE_BUDGET):
    """|S_m(x) ∩ Y| for all x, by a distance-layered sweep over the coordinates."""
    n = Y.n
    if not 0 <= m <= n:
        raise ValueError(f"radius {m} out of range")
    needed = n * (m + 1) * (1 << n)
    if needed > budget:
        raise BudgetExceeded("sphere_counts", needed, budget)
    f = np.zeros((m + 1, 1 << n), dtype=np.int64)
    f[0] = Y.bools()
    # after coordinate c, f[d][x] counts y in Y that agree with x off the first c+1
    # coordinates and differ from x in exactly d of them
    for c in range(n):
        g = f.reshape(m + 1, -1, 2, 1 << c)
        swapped = g[:, :, ::-1, :].copy()
        g[1:] += swapped[:-1]
    return f[m]


def sphere_dense_centers(Y, m, budget=SPHERE_BUDGET, check=True):
    """Centers whose radius-m sphere meets Y in at least half of Y's overall density.

    With ``check`` the guarantee |Z| >= |Y|/2 is asserted.
    """
    n = Y.n
    counts = sphere_counts(Y, m, budget)
    size = comb(n, m)
    dense = 2 * counts * (1 << n) >= len(Y) * size
    Z = PointSet.from_bools(n, dense)
    if check and 2 * len(Z) < len(Y):
        raise RuntimeError(f"sphere claim violated: |Z|={len(Z)} < |Y|/2={len(Y) / 2}")
    return SphereCenters(Z, counts, size, len(Y))


# spreadify --------------------------------------------------------------------

@dataclass
class SpreadifyResult:
    x: int
    x_prime: int
    I: tuple
    I_prime: tuple
    i0: Optional[int]
    B: Optional[SetFamily]
    A_size: int
    kappa: float
    spread_ok: Optional[bool] = None
    violating: Optional[tuple] = None

    def to_json(self, n):
        return {"x": point_to_str(self.x, n), "x_prime": point_to_str(self.x_prime, n),
                "I": list(self.I), "I_prime": list(self.I_prime), "i0": self.i0,
                "A_size": self.A_size, "B_size": len(self.B) if self.B is not None else 0,
                "kappa": self.kappa, "spread_ok": self.spread_ok,
                "violating": list(self.violating) if self.violating else None}


def sphere_family(x, Y, m):
    """S_m(x) ∩ Y translated by x, as masks."""
    M = Y.members() ^ np.int64(x)
    return np.sort(M[np.bitwise_count(M.view(np.uint64)) == m])


def largest_violating(A, p, epsilon):
    """Largest I (ties: lexicographic) with Pr_A[I ⊆ a] > p^((1-eps)|I|); 0 if none."""
    cand, cnt = _superset_counts(A)
    sizes = np.bitwise_count(cand.view(np.uint64)).astype(np.int64)
    lhs = np.log(cnt) - log(len(A))
    bad = (lhs > (1 - epsilon) * sizes * log(p) + LOG_TOL) & (cand != 0)
    if not bad.any():
        return 0
    return min((int(c) for c in cand[bad]), key=lambda c: (-popcount(c), coords_of(c)))


def spreadify(x, Y, m, epsilon):
    """Move a locally dense center x to an odd center x' with a spread fiber B around it.

    Raises EmptySphere when S_m(x) misses Y, DegenerateB when the fiber over
    I' is empty. The spread check on B is recorded in ``spread_ok``.
    """
    n = Y.n
    x = int(x)
    A_masks = sphere_family(x, Y, m)
    if A_masks.size == 0:
        raise EmptySphere(f"S_{m}({point_to_str(x, n)}) does not meet Y")
    A = SetFamily(n, A_masks, uniform=m)
    p = m / n
    kappa = (1 / p) ** (1 - 2.1 * epsilon)
    I = largest_violating(A, p, epsilon)
    x2 = x ^ I
    i0 = None
    if parity(x2) == 1:
        Ip = I
    else:
        fiber = A_masks[(A_masks & I) == I] ^ np.int64(I)
        freq = np.array([int(np.count_nonzero((fiber >> c) & 1)) for c in range(n)])
        outside = [c for c in range(n) if not (I >> c) & 1]
        if not outside:
            res = SpreadifyResult(x, x2, coords_of(I), coords_of(I), None, None, len(A), kappa)
            raise DegenerateB(res)
        c0 = max(outside, key=lambda c: (freq[c], -c))
        i0 = c0 + 1
        Ip = I | (1 << c0)
    xp = x ^ Ip
    B_masks = A_masks[(A_masks & Ip) == Ip] ^ np.int64(Ip)
    res = SpreadifyResult(x, xp, coords_of(I), coords_of(Ip), i0, None, len(A), kappa)
    if parity(xp) != 1:
        raise RuntimeError("spreadify produced an even center")
    if B_masks.size == 0:
        raise DegenerateB(res)
    res.B = SetFamily(n, B_masks)
    res.spread_ok, res.violating = is_kappa_spread(res.B, kappa)
    return res


@dataclass
class MirrorSet:
    M: PointSet
    centers: SphereCenters
    provenance: dict        # center x -> x'
    results: list
    degenerate: int
    spread_failures: int

    def accounting(self):
        n = self.M.n
        return {"Z": len(self.centers.Z), "M": len(self.M), "degenerate": self.degenerate,
                "spread_failures": self.spread_failures,
                "max_shift": max((len(r.I_prime) for r in self.results), default=0),
                "density_M": str(Fraction(len(self.M), 1 << n))}


def mirror_set(Y, m, epsilon, budget=SPHERE_BUDGET):
    """M = {x' : x in Z}: spreadify applied to every sphere-dense center of Y."""
    n = Y.n
    if len(Y) == 0:
        empty = SphereCenters(PointSet.empty(n), np.zeros(1 << n, dtype=np.int64), comb(n, m), 0)
        return MirrorSet(PointSet.empty(n), empty, {}, [], 0, 0)
    centers = sphere_dense_centers(Y, m, budget)
    prov, results = {}, []
    degenerate = failures = 0
    for x in centers.Z:
        try:
            res = spreadify(x, Y, m, epsilon)
        except DegenerateB:
            degenerate += 1
            continue
        results.append(res)
        prov[x] = res.x_prime
        failures += not res.spread_ok
    M = PointSet.from_members(n, sorted(set(prov.values())))
    return MirrorSet(M, centers, prov, results, degenerate, failures)


# flip process -------------------------------------------------------------------

@dataclass(frozen=True)
class FlipOutcome:
    y: Optional[int]
    R: int
    failed_at: Optional[str]   # None, "certificate" or "flip"


def flip_process(x, X, Y, r, q, seed):
    """One run of: sample R; fail on a certificate for R; else flip inside R into Y."""
    rng = np.random.default_rng(seed)
    R = int(random_subset_masks(rng, X.n, r, 1)[0])
    if has_certificate(x, R, q, X):
        return FlipOutcome(None, R, "certificate")
    y = flip_block_reach(x, R, Y)
    return FlipOutcome(y, R, None if y is not None else "flip")


def certificate_rate(x, X, r, q, samples, seed):
    rng = np.random.default_rng(seed)
    Rs = random_subset_masks(rng, X.n, r, samples)
    return sum(has_certificate(x, int(R), q, X) for R in Rs) / samples


# depth 4 ------------------------------------------------------------------------

def _below_floor(trace, params, name, s):
    if len(s) == 0:
        trace.outcome = Stuck(name, "empty set")
        return True
    if len(s) / (1 << s.n) < params.density_floor:
        trace.outcome = Stuck(name, f"density {len(s) / (1 << s.n):.3g} below floor")
        return True
    return False


def depth4_walk(pi, params, seed=0):
    """Adversary for an AND-OR-AND-OR circuit claimed to compute parity."""
    if pi.depth != 4 or pi.top != "AND":
        raise ShapeError(f"depth-4 walk needs an AND-top depth-4 circuit, got {pi.depth}/{pi.top}")
    n = pi.n
    if params.n != n:
        raise ValueError(f"params are for n={params.n}, circuit has n={n}")
    trace = AdversaryTrace("depth4", n, params.to_json() | {"seed": seed})
    tables = pi.sweep()
    even, odd = _parity_sets(n)

    # first step: the depth-3 subcircuit rejecting the most even inputs
    sigmas = sorted(set(pi.gate(4, 0)))
    rejected = np.zeros_like(even.words)
    for i in sigmas:
        rejected |= ~tables[2][i]
    missed = PointSet(n, even.words & ~rejected)
    if missed:
        y = lex_first_array(missed.members(), n)
        trace.log("first", info={"fanin": len(sigmas), "accepted_even": len(missed)}, even=even)
        trace.outcome = _counterexample(pi, y, "first", "even input accepted by every subcircuit")
        return trace
    s_idx, _ = _argmax_gate(sigmas, lambda g: _count(~tables[2][g] & even.words))
    sigma_acc = PointSet(n, tables[2][s_idx])
    Y = even - sigma_acc
    _check_pigeonhole("first step", len(Y), len(sigmas), len(even))
    trace.log("first", choice=s_idx, info={"fanin": len(sigmas)}, Y=Y)
    if _below_floor(trace, params, "first", Y):
        return trace

    # second step: mirror set, then the CNF accepting most of it
    mirror = mirror_set(Y, params.m, params.epsilon, params.budget)
    M = mirror.M
    trace.log("mirror", info=mirror.accounting(), Z=mirror.centers.Z, M=M)
    if _below_floor(trace, params, "mirror", M):
        return trace
    rejected_M = M - sigma_acc
    if rejected_M:
        y = lex_first_array(rejected_M.members(), n)
        trace.outcome = _counterexample(pi, y, "mirror", "odd mirror point rejected by the chosen subcircuit")
        return trace
    gammas = sorted(set(pi.gate(3, s_idx)))
    g_idx, _ = _argmax_gate(gammas, lambda g: _count(tables[1][g] & M.words))
    gamma_acc = PointSet(n, tables[1][g_idx])
    X = M & gamma_acc
    _check_pigeonhole("second step", len(X), len(gammas), len(M))
    trace.log("second", choice=g_idx, info={"fanin": len(gammas)}, X=X)
    if _below_floor(trace, params, "second", X):
        return trace

    # third step: points of X with a low certificate rate, then the flip process
    rates = {}
    for x in X:
        rates[x] = certificate_rate(x, X, params.r, params.q, params.rate_samples, [seed, 3, x])
    Xp = PointSet.from_members(n, [x for x, v in rates.items() if v <= params.threshold])
    realized = []
    fails = {"certificate": 0, "flip": 0}
    for x in Xp:
        for t in range(params.process_trials):
            out = flip_process(x, X, Y, params.r, params.q, [seed, 4, x, t])
            if out.y is None:
                fails[out.failed_at] += 1
            else:
                realized.append((out.y, x, out.R))
    Yp = PointSet.from_members(n, sorted({y for y, _, _ in realized}))
    trace.log("third", info={"mean_certificate_rate": float(np.mean(list(rates.values()))),
                             "runs": len(Xp) * params.process_trials, "successes": len(realized),
                             "failed_certificate": fails["certificate"], "failed_flip": fails["flip"]},
              X_prime=Xp, Y_prime=Yp)
    if _below_floor(trace, params, "third", Xp) or _below_floor(trace, params, "third", Yp):
        return trace

    # final step: the clause of the CNF rejecting most of Y'
    clauses = sorted(set(pi.gate(2, g_idx)))
    l_idx, _ = _argmax_gate(clauses, lambda g: _count(~tables[0][g] & Yp.words))
    Ypp = Yp - PointSet(n, tables[0][l_idx])
    _check_pigeonhole("third step", len(Ypp), len(clauses), len(Yp))
    Q = as_mask(sorted({abs(l) for l in pi.gate(1, l_idx)}))
    y, x, R = next(t for t in realized if t[0] in Ypp)
    witness = X.members()[(X.members() & Q) == (y & Q)]
    info = {"clause_width": popcount(Q), "q": params.q, "y": point_to_str(y, n),
            "x": point_to_str(x, n), "R": list(coords_of(R)), "witnesses": int(witness.size)}
    trace.log("final", choice=l_idx, info=info, Y_second=Ypp)
    if witness.size:
        # a witness x' in X would satisfy the clause exactly where y does
        raise RuntimeError("internal error: clause accepts X yet matches a rejected point on its variables")
    if popcount(Q) <= params.q:
        raise RuntimeError("internal error: uncertified flip is not a local limit")
    trace.outcome = Stuck("final", f"clause has {popcount(Q)} literals > q={params.q}")
    return trace


def run_walk(c, params=None, q=None, seed=0):
    """Dispatch on shape: OR-top depth 3 or AND-top depth 4."""
    if c.depth == 3 and c.top == "OR":
        return depth3_walk(c, q if q is not None else (params.q if params else WalkParams.for_n(c.n).q))
    if c.depth == 4 and c.top == "AND":
        return depth4_walk(c, params or WalkParams.for_n(c.n), seed)
    raise ShapeError(f"no walk for a depth-{c.depth} {c.top}-top circuit")
