"""Certificates for blocks of coordinates and the unpredictability probabilities."""

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Optional

import numpy as np

from .bits import (
    as_mask, comb_upto, coords_of, extract, full_mask, lex_key, masks_of_size,
    masks_upto, point_to_str, popcount, random_subset_masks, str_to_point, submasks,
)
from .errors import BudgetExceeded, NotAMember
from .family import wald_half_width

CERT_BUDGET = 1 << 30
DENSE_LIMIT = 22


@dataclass(frozen=True)
class Certificate:
    """(Q, a) rules out every pattern in ``missing`` over block R.

    Patterns are written with the smallest coordinate leftmost.
    """

    block: tuple
    query: tuple
    answer: str
    missing: tuple

    def to_json(self):
        return {"R": list(self.block), "Q": list(self.query),
                "a": self.answer, "missing": list(self.missing)}

    @classmethod
    def from_json(cls, d):
        return cls(tuple(d["R"]), tuple(d["Q"]), d["a"], tuple(d["missing"]))

    def verify(self, X):
        """Rescan X: every listed pattern is absent from the fiber x_Q = a."""
        if set(self.block) & set(self.query) or not self.missing:
            return False
        Qm, Rm = as_mask(self.query), as_mask(self.block)
        M = X.members()
        a = _pattern_to_int(self.answer)
        fiber = M[extract(M, Qm) == a]
        seen = set(int(v) for v in np.unique(extract(fiber, Rm)))
        return all(_pattern_to_int(b) not in seen for b in self.missing)


def _pattern_to_int(s):
    return str_to_point(s) if s else 0


def _pattern_str(v, k):
    return point_to_str(int(v), k)


def _require_member(x, X):
    if x not in X:
        raise NotAMember(f"{point_to_str(x, X.n)} is not in X")


def _find_certificate(x, Rm, q, M, n):
    """First (Qm, missing patterns) for block Rm at point x, or None."""
    k = popcount(Rm)
    full = 1 << k
    for Qm in masks_upto(q, full_mask(n) & ~Rm):
        fiber = M[(M & Qm) == (x & Qm)]
        present = np.zeros(full, dtype=bool)
        present[extract(fiber, Rm)] = True
        if not present.all():
            return Qm, np.flatnonzero(~present)
    return None


def contains_certificate(x, R, q, X):
    """The first size-<=q certificate (Q, x_Q) for block R at x, or None.

    Q ranges over subsets of [n] minus R, smaller first, then lexicographic.
    """
    x = int(x)
    _require_member(x, X)
    Rm = as_mask(R)
    found = _find_certificate(x, Rm, q, X.members(), X.n)
    if found is None:
        return None
    Qm, missing = found
    k = popcount(Rm)
    return Certificate(
        block=coords_of(Rm),
        query=coords_of(Qm),
        answer=_pattern_str(extract(np.array([x]), Qm)[0], popcount(Qm)),
        missing=tuple(_pattern_str(b, k) for b in missing),
    )


def has_certificate(x, R, q, X):
    return _find_certificate(int(x), as_mask(R), q, X.members(), X.n) is not None


def _distinct_counts(keys, n):
    """For each key value, how many times it occurs, as a lookup function."""
    if n <= DENSE_LIMIT:
        table = np.bincount(keys, minlength=1 << n)
        return lambda v: table[v]
    uniq, cnt = np.unique(keys, return_counts=True)
    return lambda v: cnt[np.searchsorted(uniq, v)]


def certified_members(X, R, q):
    """Bool array aligned with X.members(): does member x hold a size-<=q certificate for R."""
    M = X.members()
    n = X.n
    Rm = as_mask(R)
    full = 1 << popcount(Rm)
    out = np.zeros(M.size, dtype=bool)
    if M.size == 0:
        return out
    for Qm in masks_upto(q, full_mask(n) & ~Rm):
        combos = np.unique(M & (Qm | Rm))
        distinct = _distinct_counts(combos & Qm, n)
        out |= distinct(M & Qm) < full
        if out.all():
            break
    return out


@dataclass
class UnpredictabilityReport:
    n: int
    k: float
    q: int
    r: int
    probability: object
    bound_value: float
    mode: str
    half_width: Optional[float] = None
    samples: Optional[int] = None
    certified: Optional[int] = None
    total: Optional[int] = None

    @property
    def ratio(self):
        return float(self.probability) / self.bound_value if self.bound_value else None

    def to_json(self):
        return {
            "n": self.n, "k": self.k, "q": self.q, "r": self.r,
            "probability": str(self.probability) if isinstance(self.probability, Fraction) else self.probability,
            "probability_float": float(self.probability),
            "bound_value": self.bound_value, "mode": self.mode,
            "half_width": self.half_width, "samples": self.samples,
            "certified": self.certified, "total": self.total,
        }


def _bound(k, q, r, n):
    k = max(k, 0.0)
    return (k * q * r / n) ** (1 / 6)


def certificate_probability(X, r, q, mode="exact", samples=2000, seed=0, budget=CERT_BUDGET):
    """Pr over (x, R) in X x C([n], r) that x contains a size-q certificate for R.

    ``mode="exact"`` enumerates every pair; ``mode="mc"`` samples pairs
    uniformly with the given seed.
    """
    n = X.n
    if not 0 <= r <= n:
        raise ValueError(f"r={r} out of range")
    size = len(X)
    if size == 0:
        raise ValueError("X is empty")
    k = X.deficiency()
    if mode == "exact":
        needed = size * comb(n, r) * comb_upto(n, q)
        if needed > budget:
            raise BudgetExceeded("certificate_probability", needed, budget, "use mode='mc'")
        certified = 0
        for Rm in masks_of_size(r, full_mask(n)):
            certified += int(certified_members(X, Rm, q).sum())
        total = size * comb(n, r)
        return UnpredictabilityReport(n, k, q, r, Fraction(certified, total), _bound(k, q, r, n),
                                      "exact", certified=certified, total=total)
    if mode != "mc":
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    M = X.members()
    xs = M[rng.integers(0, size, samples)]
    Rs = random_subset_masks(rng, n, r, samples)
    hits = sum(_find_certificate(int(x), int(Rm), q, M, n) is not None for x, Rm in zip(xs, Rs))
    p_hat = hits / samples
    return UnpredictabilityReport(n, k, q, r, p_hat, _bound(k, q, r, n), "mc",
                                  half_width=wald_half_width(p_hat, samples), samples=samples,
                                  certified=hits, total=samples)


def bit_certificate_probability(X, q, mode="exact", samples=2000, seed=0, budget=CERT_BUDGET):
    """Single-coordinate case (r = 1)."""
    return certificate_probability(X, 1, q, mode=mode, samples=samples, seed=seed, budget=budget)


def is_local_limit(y, X, q, budget=CERT_BUDGET):
    """(True, None) if every Q with |Q| <= q sees y_Q on some member of X.

    Otherwise (False, first failing Q) in the same search order as
    :func:`contains_certificate`.
    """
    n = X.n
    y = int(y)
    M = X.members()
    needed = comb_upto(n, q) * max(M.size, 1)
    if needed > budget:
        raise BudgetExceeded("is_local_limit", needed, budget)
    for Qm in masks_upto(q, full_mask(n)):
        if not ((M & Qm) == (y & Qm)).any():
            return False, coords_of(Qm)
    return True, None


def flip_block_reach(x, R, Y):
    """Lexicographically smallest y in Y that differs from x only inside R, or None."""
    x = int(x)
    Rm = as_mask(R)
    hits = [x ^ s for s in submasks(Rm) if (x ^ s) in Y]
    if not hits:
        return None
    return min(hits, key=lambda y: lex_key(y, Y.n))
