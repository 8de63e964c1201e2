"""Subsets of the hypercube {0,1}^n stored as packed bitmaps."""

from fractions import Fraction
import math

import numpy as np

from .bits import as_mask, bit_positions, extract, point_to_str, str_to_point

MAX_N = 30


def _n_words(n):
    return max(1, (1 << n) >> 6)


def _valid_tail(n):
    """Mask of meaningful bits in the last word (only differs from all-ones for n < 6)."""
    if n >= 6:
        return np.uint64(0xFFFFFFFFFFFFFFFF)
    return np.uint64((1 << (1 << n)) - 1)


class PointSet:
    """An immutable subset of {0,1}^n.

    Bit ``x`` of the packed bitmap is set iff the point with integer
    encoding ``x`` is a member. Padding bits (only present for n < 6) stay
    zero.
    """

    __slots__ = ("n", "_words", "_members", "_int")

    def __init__(self, n, words):
        if not 0 <= n <= MAX_N:
            raise ValueError(f"n must be in [0, {MAX_N}], got {n}")
        words = np.ascontiguousarray(words, dtype=np.uint64)
        if words.shape != (_n_words(n),):
            raise ValueError(f"bitmap for n={n} needs {_n_words(n)} words, got {words.shape}")
        words = words.copy()
        words[-1] &= _valid_tail(n)
        words.flags.writeable = False
        self.n = n
        self._words = words
        self._members = None
        self._int = None

    # construction

    @classmethod
    def from_bools(cls, n, bools):
        bools = np.asarray(bools, dtype=bool)
        if bools.shape != (1 << n,):
            raise ValueError(f"expected {1 << n} entries, got {bools.shape}")
        packed = np.packbits(bools, bitorder="little")
        pad = (-packed.size) % 8
        if pad:
            packed = np.concatenate([packed, np.zeros(pad, dtype=np.uint8)])
        return cls(n, packed.view("<u8").astype(np.uint64))

    @classmethod
    def from_members(cls, n, members):
        bools = np.zeros(1 << n, dtype=bool)
        members = np.asarray(list(members) if not isinstance(members, np.ndarray) else members,
                             dtype=np.int64)
        if members.size:
            if members.min() < 0 or members.max() >= (1 << n):
                raise ValueError("member out of range for n")
            bools[members] = True
        return cls.from_bools(n, bools)

    @classmethod
    def from_strings(cls, strings, n=None):
        strings = [s.strip() for s in strings]
        if n is None:
            if not strings:
                raise ValueError("cannot infer n from an empty list")
            n = len(strings[0])
        for s in strings:
            if len(s) != n:
                raise ValueError(f"string {s!r} does not have length {n}")
        return cls.from_members(n, [str_to_point(s) for s in strings])

    @classmethod
    def from_words(cls, n, words):
        return cls(n, words)

    @classmethod
    def full(cls, n):
        return cls(n, np.full(_n_words(n), 0xFFFFFFFFFFFFFFFF, dtype=np.uint64))

    @classmethod
    def empty(cls, n):
        return cls(n, np.zeros(_n_words(n), dtype=np.uint64))

    @classmethod
    def where(cls, n, predicate):
        """Points x (as ints) with predicate(x) true; predicate gets the whole index array."""
        idx = np.arange(1 << n, dtype=np.int64)
        return cls.from_bools(n, np.asarray(predicate(idx), dtype=bool))

    # views

    @property
    def words(self):
        return self._words

    def bools(self):
        bits = np.unpackbits(self._words.astype("<u8").view(np.uint8), bitorder="little")
        return bits[: 1 << self.n].astype(bool)

    def members(self):
        """Sorted int64 array of members (read-only, cached)."""
        if self._members is None:
            m = np.flatnonzero(self.bools()).astype(np.int64)
            m.flags.writeable = False
            self._members = m
        return self._members

    def as_int(self):
        """The bitmap as one Python int (bit x set iff x is a member)."""
        if self._int is None:
            self._int = int.from_bytes(self._words.astype("<u8").tobytes(), "little")
        return self._int

    def strings(self):
        return [point_to_str(int(x), self.n) for x in self.members()]

    # size

    def __len__(self):
        return int(np.bitwise_count(self._words).sum())

    cardinality = __len__

    def __bool__(self):
        return bool(self._words.any())

    def __contains__(self, x):
        x = int(x)
        if not 0 <= x < (1 << self.n):
            return False
        return bool((int(self._words[x >> 6]) >> (x & 63)) & 1)

    def __iter__(self):
        return (int(x) for x in self.members())

    def density(self):
        return Fraction(len(self), 1 << self.n)

    def deficiency(self):
        """-log2 of the density; inf for the empty set."""
        size = len(self)
        if size == 0:
            return math.inf
        return self.n - math.log2(size)

    # set algebra

    def _check(self, other):
        if self.n != other.n:
            raise ValueError(f"dimension mismatch: {self.n} vs {other.n}")

    def __and__(self, other):
        self._check(other)
        return PointSet(self.n, self._words & other._words)

    def __or__(self, other):
        self._check(other)
        return PointSet(self.n, self._words | other._words)

    def __sub__(self, other):
        self._check(other)
        return PointSet(self.n, self._words & ~other._words)

    def complement(self):
        return PointSet(self.n, ~self._words)

    def issubset(self, other):
        self._check(other)
        return not (self._words & ~other._words).any()

    def translate(self, x):
        """{y XOR x : y in self}."""
        if not self:
            return self
        return PointSet.from_members(self.n, np.sort(self.members() ^ np.int64(x)))

    def __eq__(self, other):
        if not isinstance(other, PointSet):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self._words, other._words))

    def __hash__(self):
        return hash((self.n, self._words.tobytes()))

    def __repr__(self):
        return f"PointSet(n={self.n}, size={len(self)})"


def density(X):
    """Exact density |X|/2^n together with the deficiency -log2(density)."""
    return X.density(), X.deficiency()


def project(X, T):
    """Counts of each |T|-bit pattern among members of X.

    Returns an int64 array of length 2^|T|; entry ``a`` counts members whose
    restriction to T equals pattern ``a`` (pattern bit j = j-th smallest
    coordinate of T).
    """
    Tm = as_mask(T)
    k = len(bit_positions(Tm))
    keys = extract(X.members(), Tm)
    return np.bincount(keys, minlength=1 << k).astype(np.int64)


def parity_set(n, value=0):
    """Points whose coordinate sum is ``value`` mod 2."""
    return PointSet.where(n, lambda idx: (np.bitwise_count(idx.view(np.uint64)) & 1) == value)
