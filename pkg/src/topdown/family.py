"""Families of subsets of [n]: spreadness, satisfying probability, slices."""

from dataclasses import dataclass
from fractions import Fraction
from math import comb, inf, log, sqrt

import numpy as np

from .bits import coords_of, popcount, popcount_array, random_subset_masks, submasks, subset_key
from .errors import BudgetExceeded, EmptyFamily

DEFAULT_BUDGET = 1 << 26
LOG_TOL = 1e-12


class SetFamily:
    """A family of subsets of [n], each stored as an n-bit mask.

    Members are deduplicated and sorted unless ``multiset=True``. If
    ``uniform`` is given every member must have exactly that many elements.
    """

    __slots__ = ("n", "masks", "multiset", "uniform")

    def __init__(self, n, masks=(), multiset=False, uniform=None):
        arr = np.asarray(list(masks) if not isinstance(masks, np.ndarray) else masks, dtype=np.int64)
        arr = arr.reshape(-1)
        if arr.size and (arr.min() < 0 or arr.max() >= (1 << n)):
            raise ValueError(f"mask uses bits beyond n={n}")
        arr = np.sort(arr) if multiset else np.unique(arr)
        if uniform is not None and arr.size and not (popcount_array(arr) == uniform).all():
            raise ValueError(f"family is not {uniform}-uniform")
        arr.flags.writeable = False
        self.n = n
        self.masks = arr
        self.multiset = multiset
        self.uniform = uniform

    @classmethod
    def from_sets(cls, n, sets, **kw):
        from .bits import mask_of
        return cls(n, [mask_of(s) for s in sets], **kw)

    @classmethod
    def power_set(cls, n):
        return cls(n, np.arange(1 << n, dtype=np.int64))

    def __len__(self):
        return int(self.masks.size)

    def __iter__(self):
        return (int(m) for m in self.masks)

    def __contains__(self, mask):
        i = np.searchsorted(self.masks, mask)
        return bool(i < self.masks.size and self.masks[i] == mask)

    def __eq__(self, other):
        if not isinstance(other, SetFamily):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.masks, other.masks)

    def __hash__(self):
        return hash((self.n, self.masks.tobytes()))

    def __repr__(self):
        return f"SetFamily(n={self.n}, size={len(self)})"

    def sets(self):
        return [coords_of(int(m)) for m in self.masks]

    def indicator(self):
        out = np.zeros(1 << self.n, dtype=bool)
        out[self.masks] = True
        return out


def _superset_counts(A):
    """(candidates, counts): for every I contained in some member, how many members contain I."""
    n = A.n
    enum_cost = int(np.sum(np.left_shift(np.int64(1), popcount_array(A.masks)))) if len(A) else 0
    if enum_cost <= n * (1 << n):
        counts = {}
        for a in A.masks:
            for s in submasks(int(a)):
                counts[s] = counts.get(s, 0) + 1
        cand = np.fromiter(counts.keys(), dtype=np.int64, count=len(counts))
        cnt = np.fromiter(counts.values(), dtype=np.int64, count=len(counts))
        order = np.argsort(cand)
        return cand[order], cnt[order]
    f = np.bincount(A.masks, minlength=1 << n).astype(np.int64)
    for c in range(n):
        g = f.reshape(-1, 2, 1 << c)
        g[:, 0, :] += g[:, 1, :]
    cand = np.flatnonzero(f)
    return cand.astype(np.int64), f[cand]


@dataclass(frozen=True)
class SpreadReport:
    kappa: float
    worst_set: tuple
    worst_ratio: Fraction

    def to_json(self):
        return {
            "kappa": self.kappa if self.kappa != inf else "inf",
            "worst_set": list(self.worst_set),
            "worst_ratio": str(self.worst_ratio),
        }


def spreadness(A):
    """Best spreadness constant of A and the coordinate set attaining it.

    Minimises Pr[I ⊆ A]^(-1/|I|) over nonempty I; ties go to smaller |I|,
    then to the lexicographically first I.
    """
    if len(A) == 0:
        raise EmptyFamily("spreadness of an empty family")
    total = len(A)
    cand, cnt = _superset_counts(A)
    keep = cand != 0
    cand, cnt = cand[keep], cnt[keep]
    if cand.size == 0:
        return SpreadReport(inf, (), Fraction(0))
    sizes = popcount_array(cand)
    logk = -(np.log(cnt) - log(total)) / sizes
    best = logk.min()
    near = np.flatnonzero(logk <= best + 1e-9 * max(1.0, abs(best)))
    # exact comparison among near-ties: kappa_1 < kappa_2 iff ratio_1^|I_2| > ratio_2^|I_1|
    winner = None
    for i in near:
        ratio = Fraction(int(cnt[i]), total)
        s = int(sizes[i])
        if winner is None:
            winner = (ratio, s, int(cand[i]))
            continue
        wr, ws, wm = winner
        lhs, rhs = ratio ** ws, wr ** s
        if lhs > rhs or (lhs == rhs and subset_key(int(cand[i])) < subset_key(wm)):
            winner = (ratio, s, int(cand[i]))
    ratio, s, m = winner
    return SpreadReport(float(ratio) ** (-1.0 / s), coords_of(m), ratio)


def spread_violations(A, kappa):
    """All nonempty I with Pr[I ⊆ A] > kappa^-|I|, as (mask, count) arrays."""
    if len(A) == 0:
        raise EmptyFamily("spreadness of an empty family")
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    cand, cnt = _superset_counts(A)
    keep = cand != 0
    cand, cnt = cand[keep], cnt[keep]
    if kappa == inf:
        return cand, cnt
    sizes = popcount_array(cand)
    bad = np.log(cnt) - log(len(A)) > -sizes * log(kappa) + LOG_TOL
    return cand[bad], cnt[bad]


def largest_first(masks):
    """The largest mask by cardinality, ties to the lexicographically first."""
    if len(masks) == 0:
        return None
    return min((int(m) for m in masks), key=lambda m: (-popcount(m), coords_of(m)))


def is_kappa_spread(A, kappa):
    """(True, None) if A is kappa-spread, else (False, largest violating I)."""
    bad, _ = spread_violations(A, kappa)
    if bad.size == 0:
        return True, None
    return False, coords_of(largest_first(bad))


def _check_budget(what, needed, budget, hint=None):
    if needed > budget:
        raise BudgetExceeded(what, needed, budget, hint)


def contains_member_table(A):
    """Bool table over all 2^n masks: does the mask contain a member of A."""
    n = A.n
    up = A.indicator()
    for c in range(n):
        g = up.reshape(-1, 2, 1 << c)
        g[:, 1, :] |= g[:, 0, :]
    return up


def satisfying_probability_exact(A, r, budget=DEFAULT_BUDGET):
    """Exact Pr over uniform r-subsets R of [n] that some member of A lies inside R."""
    n = A.n
    if not 0 <= r <= n:
        raise ValueError(f"block size {r} out of range for n={n}")
    total = comb(n, r)
    _check_budget("satisfying_probability_exact", total, budget, "use satisfying_probability_mc")
    if len(A) == 0:
        return Fraction(0)
    if (1 << n) <= budget:
        up = contains_member_table(A)
        sizes = popcount_array(np.arange(1 << n, dtype=np.int64))
        hits = int(np.count_nonzero(up & (sizes == r)))
        return Fraction(hits, total)
    from .bits import masks_of_size, full_mask
    hits = 0
    members = A.masks
    chunk = []
    for R in masks_of_size(r, full_mask(n)):
        chunk.append(R)
        if len(chunk) == 4096:
            hits += _count_hits(np.array(chunk, dtype=np.int64), members)
            chunk = []
    if chunk:
        hits += _count_hits(np.array(chunk, dtype=np.int64), members)
    return Fraction(hits, total)


def _count_hits(Rs, members):
    return int(((members[None, :] & ~Rs[:, None]) == 0).any(axis=1).sum())


@dataclass(frozen=True)
class MCEstimate:
    estimate: float
    half_width: float
    samples: int
    hits: int

    def to_json(self):
        return {"estimate": self.estimate, "half_width": self.half_width,
                "samples": self.samples, "hits": self.hits}


def wald_half_width(p_hat, samples, z=1.96):
    return z * sqrt(max(p_hat * (1.0 - p_hat), 0.0) / samples)


def satisfying_probability_mc(A, r, samples, seed, chunk=4096):
    """Monte Carlo estimate of the satisfying probability with a 95% Wald half-width.

    Chunk i draws from the stream seeded by (seed, i), so the result does not
    depend on how chunks are distributed over workers.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    n = A.n
    if len(A) == 0:
        return MCEstimate(0.0, 0.0, samples, 0)
    table = contains_member_table(A) if n <= 22 else None
    hits = 0
    done = 0
    i = 0
    while done < samples:
        size = min(chunk, samples - done)
        rng = np.random.default_rng([seed, i])
        Rs = random_subset_masks(rng, n, r, size)
        if table is not None:
            hits += int(table[Rs].sum())
        else:
            hits += _count_hits(Rs, A.masks)
        done += size
        i += 1
    p_hat = hits / samples
    return MCEstimate(p_hat, wald_half_width(p_hat, samples), samples, hits)


def slice_densities(A):
    """|A_k| / C(n,k) for k = 1..n, exact."""
    n = A.n
    sizes = np.bincount(popcount_array(A.masks), minlength=n + 1) if len(A) else np.zeros(n + 1, int)
    return [Fraction(int(sizes[k]), comb(n, k)) for k in range(1, n + 1)]


def downward_closure(A):
    n = A.n
    if len(A) == 0:
        return SetFamily(n)
    enum_cost = int(np.sum(np.left_shift(np.int64(1), popcount_array(A.masks))))
    if enum_cost <= n * (1 << n):
        out = set()
        for a in A.masks:
            out.update(submasks(int(a)))
        return SetFamily(n, np.fromiter(out, dtype=np.int64, count=len(out)))
    down = A.indicator()
    for c in range(n):
        g = down.reshape(-1, 2, 1 << c)
        g[:, 0, :] |= g[:, 1, :]
    return SetFamily(n, np.flatnonzero(down))


def is_downward_closed(A):
    members = A.masks
    for c in range(A.n):
        bit = np.int64(1 << c)
        has = members[(members & bit) != 0]
        if has.size and not np.isin(has ^ bit, members).all():
            return False
    return True
