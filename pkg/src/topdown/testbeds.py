"""Structured and random point sets and families used by tests and experiments."""

import numpy as np

from .bits import as_mask, popcount
from .family import SetFamily, downward_closure
from .pointset import PointSet, parity_set


def full_cube(n):
    return PointSet.full(n)


def even_parity(n):
    return parity_set(n, 0)


def odd_parity(n):
    return parity_set(n, 1)


def blocks(k, width):
    """Disjoint consecutive blocks {(i-1)w+1, ..., iw} as masks, i = 1..k."""
    return [((1 << width) - 1) << (i * width) for i in range(k)]


def block_parity_set(n, k, width):
    """Points with even parity on each of k disjoint consecutive blocks of the given width.

    Density is exactly 2^-k. Every coordinate of a block is predicted by the
    rest of its block.
    """
    if k * width > n:
        raise ValueError(f"{k} blocks of width {width} do not fit in n={n}")
    return affine_set(n, blocks(k, width), [0] * k)


def affine_set(n, constraints, values):
    """{x : parity(x & c) = v for every (c, v)}."""
    def pred(idx):
        ok = np.ones(idx.shape, dtype=bool)
        for c, v in zip(constraints, values):
            ok &= (np.bitwise_count((idx & c).view(np.uint64)) & 1) == v
        return ok
    return PointSet.where(n, pred)


def gf2_rank(masks):
    rows = [int(m) for m in masks]
    rank = 0
    for bit in range(max((m.bit_length() for m in rows), default=0)):
        pivot = next((i for i in range(rank, len(rows)) if (rows[i] >> bit) & 1), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for i in range(len(rows)):
            if i != rank and (rows[i] >> bit) & 1:
                rows[i] ^= rows[rank]
        rank += 1
    return rank


def planted_constraints(rng, k, support, widths=(1, 2, 3)):
    """k linearly independent parity constraints on coordinates 1..support, with right-hand sides.

    Widths are drawn first, then the coordinates, so a draw only depends on
    the generator state and ``support``.
    """
    ws = rng.choice(widths, size=k)
    while True:
        cons = []
        for w in ws:
            coords = rng.choice(support, size=min(int(w), support), replace=False)
            cons.append(int(np.bitwise_or.reduce(np.left_shift(1, coords))))
        if gf2_rank(cons) == k:
            break
    vals = [int(v) for v in rng.integers(0, 2, size=k)]
    return cons, vals


def planted_parity_set(n, k, seed, widths=(1, 2, 3), support=None):
    """Solutions of k random independent low-width parity constraints (density 2^-k).

    With a fixed ``support`` the same constraints are reused for every
    n >= support, so a sequence over growing n keeps the planted structure
    and only adds free coordinates.
    """
    rng = np.random.default_rng(seed)
    cons, vals = planted_constraints(rng, k, support or n, widths)
    return affine_set(n, cons, vals)


def bernoulli_set(n, density, rng):
    return PointSet.from_bools(n, rng.random(1 << n) < density)


def exact_size_set(n, size, rng):
    return PointSet.from_members(n, np.sort(rng.choice(1 << n, size=size, replace=False)))


def random_density_set(n, rng, max_log=8, nonempty=True):
    """Bernoulli set with density 2^-u, u uniform in [0, max_log]."""
    while True:
        X = bernoulli_set(n, 2.0 ** -rng.uniform(0, max_log), rng)
        if X or not nonempty:
            return X


def deficient_set(n, k, rng):
    """Uniformly random subset of exact size 2^(n-k), so the deficiency is exactly k."""
    return exact_size_set(n, 1 << (n - k), rng)


def random_family(n, rng, size, min_set=0, max_set=None):
    max_set = n if max_set is None else max_set
    sizes = rng.integers(min_set, max_set + 1, size=size)
    masks = []
    for s in sizes:
        coords = rng.choice(n, size=int(s), replace=False)
        masks.append(int(np.bitwise_or.reduce(np.left_shift(1, coords))) if s else 0)
    return SetFamily(n, masks)


def antichain(masks):
    """Maximal members only (no member strictly contained in another)."""
    ms = sorted(set(int(m) for m in masks), key=popcount, reverse=True)
    kept = []
    for m in ms:
        if not any((m & k) == m for k in kept):
            kept.append(m)
    return kept


def random_downward_closed(n, rng, generators=None, max_set=None):
    """Downward closure of a random antichain."""
    generators = generators or int(rng.integers(1, 2 * n + 1))
    max_set = max_set or max(1, n // 2)
    A = random_family(n, rng, generators, 1, max_set)
    return downward_closure(SetFamily(n, antichain(A.masks)))


def random_uniform_family(n, k, size, rng):
    """``size`` distinct random k-subsets (fewer if there are not that many)."""
    fam = random_family(n, rng, size, k, k)
    return SetFamily(n, fam.masks, uniform=k)


def random_point(n, rng):
    return int(rng.integers(0, 1 << n))


def random_block(n, r, rng):
    return as_mask([int(c) + 1 for c in rng.choice(n, size=r, replace=False)])

