"""Bit-level helpers shared by every module.

Conventions used throughout the package:

* a point of {0,1}^n is an int whose bit ``c`` holds coordinate ``c + 1``
  (coordinate 1 is the least significant bit);
* a coordinate subset is an int mask with the same bit layout;
* user-facing coordinates are 1-based;
* written strings put coordinate 1 leftmost, and "lexicographic" order on
  points means the order of those strings;
* "lexicographic" order on coordinate subsets of equal size means the order
  of their sorted 1-based coordinate tuples (``itertools.combinations``).
"""

from itertools import combinations
from math import comb

import numpy as np


def mask_of(coords):
    """1-based coordinates -> mask."""
    m = 0
    for c in coords:
        if c < 1:
            raise ValueError(f"coordinates are 1-based, got {c}")
        m |= 1 << (c - 1)
    return m


def coords_of(mask):
    out = []
    c = 1
    while mask:
        if mask & 1:
            out.append(c)
        mask >>= 1
        c += 1
    return tuple(out)


def bit_positions(mask):
    """0-based bit positions of a mask, ascending."""
    return [c - 1 for c in coords_of(mask)]


def as_mask(coords_or_mask):
    if isinstance(coords_or_mask, (int, np.integer)):
        return int(coords_or_mask)
    return mask_of(coords_or_mask)


def popcount(x):
    return int(x).bit_count()


def parity(x):
    return int(x).bit_count() & 1


def point_to_str(x, n):
    return "".join("1" if (x >> c) & 1 else "0" for c in range(n))


def str_to_point(s):
    x = 0
    for c, ch in enumerate(s.strip()):
        if ch == "1":
            x |= 1 << c
        elif ch != "0":
            raise ValueError(f"bad bit {ch!r} in {s!r}")
    return x


def lex_key(x, n):
    """Sort key realising string order (coordinate 1 most significant)."""
    return int(point_to_str(x, n), 2) if n else 0


def lex_min(points, n):
    points = list(points)
    if not points:
        return None
    return min(points, key=lambda x: lex_key(x, n))


def lex_first_array(values, n):
    """Lexicographically first point of a nonempty int array, vectorised."""
    v = np.asarray(values, dtype=np.int64)
    for c in range(n):
        zero = v[((v >> c) & 1) == 0]
        if zero.size:
            v = zero
    return int(v[0])


def subset_key(mask):
    return (popcount(mask), coords_of(mask))


def masks_of_size(k, within):
    """All k-subsets of ``within`` (a mask), lexicographic order."""
    pos = bit_positions(within)
    for combo in combinations(pos, k):
        m = 0
        for c in combo:
            m |= 1 << c
        yield m


def masks_upto(q, within):
    """Subsets of ``within`` with at most q elements: size first, then lexicographic."""
    for k in range(0, min(q, popcount(within)) + 1):
        yield from masks_of_size(k, within)


def submasks(mask):
    """All submasks of ``mask`` (including 0 and mask), no particular order."""
    s = mask
    while True:
        yield s
        if s == 0:
            return
        s = (s - 1) & mask


def full_mask(n):
    return (1 << n) - 1


def comb_upto(n, q):
    return sum(comb(n, i) for i in range(0, min(q, n) + 1))


def popcount_array(a):
    return np.bitwise_count(np.asarray(a, dtype=np.int64).view(np.uint64)).astype(np.int64)


def extract(values, mask):
    """Gather the bits of ``values`` at ``mask`` into the low bits.

    Pattern bit j holds the j-th smallest coordinate of the mask.
    """
    values = np.asarray(values, dtype=np.int64)
    out = np.zeros(values.shape, dtype=np.int64)
    for j, c in enumerate(bit_positions(mask)):
        out |= ((values >> c) & 1) << j
    return out


def deposit(pattern, mask):
    """Inverse of :func:`extract` for a single int pattern."""
    x = 0
    for j, c in enumerate(bit_positions(mask)):
        if (pattern >> j) & 1:
            x |= 1 << c
    return x


def random_subset_masks(rng, n, r, size):
    """``size`` uniform r-subsets of [n] as a mask array."""
    if r == 0:
        return np.zeros(size, dtype=np.int64)
    keys = rng.random((size, n))
    idx = np.argpartition(keys, r - 1, axis=1)[:, :r] if r < n else np.tile(np.arange(n), (size, 1))
    return np.bitwise_or.reduce(np.left_shift(np.int64(1), idx.astype(np.int64)), axis=1)
