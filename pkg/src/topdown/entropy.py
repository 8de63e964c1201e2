"""Entropy of marginals of uniform point sets, and shattering."""

from dataclasses import dataclass
from fractions import Fraction
from math import comb, fsum, log2
from typing import Optional

import numpy as np

from .bits import as_mask, coords_of, full_mask, masks_of_size, point_to_str, popcount
from .errors import BudgetExceeded, EmptyPointSet, NotAMember
from .family import DEFAULT_BUDGET, SetFamily

# theorem checks tolerate this much floating-point error below the threshold
ENTROPY_SLACK = 1e-9


def binary_entropy(p):
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * log2(p) - (1 - p) * log2(1 - p)


def _entropy_of_counts(counts, total):
    counts = counts[counts > 0]
    return log2(total) - fsum(float(c) * log2(float(c)) for c in counts) / total


def entropy_of_marginal(X, T):
    """Shannon entropy (bits) of X_T for X uniform over the point set."""
    M = X.members()
    if M.size == 0:
        raise EmptyPointSet("entropy of an empty set")
    _, counts = np.unique(M & as_mask(T), return_counts=True)
    return _entropy_of_counts(counts, M.size)


def conditional_entropy_given(X, T, x):
    """H(X_T | X_{[n]-T} = x_{[n]-T}) = log2 of the fiber size."""
    x = int(x)
    if x not in X:
        raise NotAMember(f"{point_to_str(x, X.n)} is not in X")
    comp = full_mask(X.n) & ~as_mask(T)
    M = X.members()
    return log2(int(np.count_nonzero((M & comp) == (x & comp))))


def fiber_entropies(X, T):
    """Conditional entropy for every member, aligned with X.members()."""
    M = X.members()
    comp = full_mask(X.n) & ~as_mask(T)
    _, inverse, counts = np.unique(M & comp, return_inverse=True, return_counts=True)
    return np.log2(counts[inverse].astype(float))


@dataclass
class MarginalEntropyReport:
    lemma: str
    n: int
    k: float
    t: int
    delta: float
    threshold: float
    success_fraction: Fraction
    passed: bool
    T: Optional[tuple] = None

    def to_json(self):
        return {
            "lemma": self.lemma, "n": self.n, "k": self.k, "t": self.t,
            "delta": self.delta, "threshold": self.threshold,
            "success_fraction": str(self.success_fraction),
            "success_float": float(self.success_fraction),
            "passed": self.passed, "T": list(self.T) if self.T is not None else None,
        }


def _frac(v):
    return v if isinstance(v, Fraction) else Fraction(str(v))


def marginal_entropies(X, t, budget=DEFAULT_BUDGET):
    """H(X_T) for every t-subset T in lexicographic order."""
    n = X.n
    needed = comb(n, t) * max(len(X), 1)
    if needed > budget:
        raise BudgetExceeded("marginal_entropies", needed, budget)
    M = X.members()
    if M.size == 0:
        raise EmptyPointSet("entropy of an empty set")
    out = []
    for Tm in masks_of_size(t, full_mask(n)):
        _, counts = np.unique(M & Tm, return_counts=True)
        out.append(_entropy_of_counts(counts, M.size))
    return np.array(out)


def verify_deficiency_reduction(X, t, delta, budget=DEFAULT_BUDGET, entropies=None):
    """Exact Pr over t-subsets T that H(X_T) >= t - k t/(delta n), compared with 1 - delta.

    k is the exact deficiency n - log2|X|. Pass precomputed ``entropies``
    (from :func:`marginal_entropies`) to reuse them across several deltas.
    """
    n = X.n
    k = X.deficiency()
    if entropies is None:
        entropies = marginal_entropies(X, t, budget)
    threshold = t - k * t / (delta * n)
    ok = int(np.count_nonzero(entropies >= threshold - ENTROPY_SLACK))
    frac = Fraction(ok, len(entropies))
    return MarginalEntropyReport("deficiency-reduction", n, k, t, delta, threshold, frac,
                                 frac >= 1 - _frac(delta))


def verify_conditional_entropy(X, T, delta):
    """Exact Pr over x in X that the fiber entropy on T is >= |T| - k/delta."""
    n = X.n
    if len(X) == 0:
        raise EmptyPointSet("conditional entropy of an empty set")
    Tm = as_mask(T)
    t = popcount(Tm)
    k = X.deficiency()
    threshold = t - k / delta
    h = fiber_entropies(X, Tm)
    ok = int(np.count_nonzero(h >= threshold - ENTROPY_SLACK))
    frac = Fraction(ok, h.size)
    return MarginalEntropyReport("conditional", n, k, t, delta, threshold, frac,
                                 frac >= 1 - _frac(delta), T=coords_of(Tm))


# shattering ---------------------------------------------------------------

class _Folder:
    """Projects a bitmap (as a Python int) by OR-folding coordinates away."""

    def __init__(self, X):
        self.n = X.n
        self.bitmap = X.as_int()
        size = 1 << self.n
        # keep0[c]: ones exactly at positions whose bit c is 0
        self.keep0 = []
        for c in range(self.n):
            step = 1 << (c + 1)
            self.keep0.append(_repeat((1 << (1 << c)) - 1, step, size // step))

    def fold(self, v, c):
        return (v | (v >> (1 << c))) & self.keep0[c]

    def project(self, Bm, start=None):
        v = self.bitmap if start is None else start
        for c in range(self.n):
            if not (Bm >> c) & 1:
                v = self.fold(v, c)
        return v

    def shatters(self, Bm):
        return self.project(Bm).bit_count() == 1 << popcount(Bm)


def _repeat(block, step, reps):
    """``block`` repeated ``reps`` times at stride ``step`` bits, by doubling."""
    out, width, count = block, step, 1
    while count * 2 <= reps:
        out |= out << width
        width *= 2
        count *= 2
    while count < reps:
        out |= block << (count * step)
        count += 1
    return out


def shatters(X, B):
    """True iff the projection of X onto B realises all 2^|B| patterns."""
    if len(X) == 0:
        return False
    return _Folder(X).shatters(as_mask(B))


def shattered_masks(X, budget=DEFAULT_BUDGET):
    """All shattered coordinate sets, level by level.

    The shattered family is downward-closed, so a set is only tested once
    all of its one-smaller subsets are known to be shattered.
    """
    if len(X) == 0:
        return []
    folder = _Folder(X)
    n = X.n
    found = [0]
    level = [0]
    checks = 0
    for size in range(1, n + 1):
        prev = set(level)
        nxt = []
        for B in level:
            top = B.bit_length()
            for c in range(top, n):
                cand = B | (1 << c)
                if any((cand & ~(1 << d)) not in prev for d in range(c) if (cand >> d) & 1):
                    continue
                checks += 1
                if checks > budget:
                    raise BudgetExceeded("count_shattered", checks, budget)
                if folder.shatters(cand):
                    nxt.append(cand)
        if not nxt:
            break
        found.extend(nxt)
        level = nxt
    return found


def count_shattered(X, budget=DEFAULT_BUDGET):
    """Number of coordinate sets (including the empty set) shattered by X."""
    return len(shattered_masks(X, budget))


def shattered_family(X, budget=DEFAULT_BUDGET):
    return SetFamily(X.n, shattered_masks(X, budget))


def shatter_probability(X, r, budget=DEFAULT_BUDGET):
    """Exact fraction of r-subsets of [n] that X does NOT shatter."""
    n = X.n
    total = comb(n, r)
    if total > budget:
        raise BudgetExceeded("shatter_probability", total, budget)
    if len(X) == 0:
        return Fraction(1)
    folder = _Folder(X)
    bad = sum(not folder.shatters(Rm) for Rm in masks_of_size(r, full_mask(n)))
    return Fraction(bad, total)
