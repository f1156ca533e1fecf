"""Permutations, cycle types and vectorized cycle statistics.

Permutations of ``{0, ..., q-1}`` are stored as tuples of images; composition
is ``(sigma * tau)(i) = sigma(tau(i))``.  Cycle types are partitions written as
non-increasing tuples.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "Permutation",
    "cycle_type",
    "normalize_cycle_type",
    "partitions",
    "class_representative",
    "all_permutations",
    "cycle_counts",
    "cycle_type_rows",
]


def normalize_cycle_type(parts) -> tuple:
    """Sorted (non-increasing) tuple of positive parts."""
    parts = tuple(sorted((int(p) for p in parts), reverse=True))
    if any(p <= 0 for p in parts):
        raise ValueError("cycle type parts must be positive")
    return parts


def cycle_type(images) -> tuple:
    """Cycle type of a permutation given by its image tuple."""
    q = len(images)
    seen = [False] * q
    parts = []
    for start in range(q):
        if seen[start]:
            continue
        length = 0
        i = start
        while not seen[i]:
            seen[i] = True
            i = images[i]
            length += 1
        parts.append(length)
    return tuple(sorted(parts, reverse=True))


@dataclass(frozen=True)
class Permutation:
    """Bijection of ``{0, ..., q-1}``."""

    images: tuple

    def __post_init__(self):
        images = tuple(int(i) for i in self.images)
        if sorted(images) != list(range(len(images))):
            raise ValueError("images must be a permutation of 0..q-1")
        object.__setattr__(self, "images", images)

    @classmethod
    def identity(cls, q: int) -> "Permutation":
        return cls(tuple(range(q)))

    @classmethod
    def from_cycles(cls, q: int, cycles) -> "Permutation":
        images = list(range(q))
        for cyc in cycles:
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                images[a] = b
        return cls(tuple(images))

    @property
    def size(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i]

    def __mul__(self, other: "Permutation") -> "Permutation":
        if other.size != self.size:
            raise ValueError("size mismatch")
        return Permutation(tuple(self.images[j] for j in other.images))

    def inverse(self) -> "Permutation":
        inv = [0] * self.size
        for i, j in enumerate(self.images):
            inv[j] = i
        return Permutation(tuple(inv))

    def cycle_type(self) -> tuple:
        return cycle_type(self.images)

    def num_cycles(self) -> int:
        return len(self.cycle_type())


@lru_cache(maxsize=None)
def partitions(q: int) -> tuple:
    """All partitions of ``q`` as non-increasing tuples, in reverse lexicographic order."""
    if q == 0:
        return ((),)

    def gen(n, largest):
        if n == 0:
            yield ()
            return
        for first in range(min(n, largest), 0, -1):
            for rest in gen(n - first, first):
                yield (first,) + rest

    return tuple(gen(q, q))


def class_representative(parts) -> tuple:
    """Image tuple of a permutation with the given cycle type (consecutive cycles)."""
    images = []
    start = 0
    for p in parts:
        images.extend(range(start + 1, start + p))
        images.append(start)
        start += p
    return tuple(images)


@lru_cache(maxsize=None)
def all_permutations(q: int) -> np.ndarray:
    """All ``q!`` permutations as rows of an integer array (read-only)."""
    arr = np.array(list(itertools.permutations(range(q))), dtype=np.int16).reshape(-1, q)
    arr.setflags(write=False)
    return arr


def _orbit_data(perms: np.ndarray):
    # orbit length and orbit minimum for every point of every row
    n, q = perms.shape
    rows = np.arange(n)[:, None]
    start = np.broadcast_to(np.arange(q, dtype=perms.dtype), (n, q))
    cur = perms.copy()
    mins = np.minimum(start, cur)
    length = np.ones((n, q), dtype=np.int16)
    done = cur == start
    for step in range(2, q + 1):
        cur = perms[rows, cur]
        mins = np.minimum(mins, cur)
        newly = (~done) & (cur == start)
        length[newly] = step
        done |= newly
    return length, mins


def cycle_counts(perms: np.ndarray) -> np.ndarray:
    """Number of cycles of each row of a permutation array."""
    perms = np.asarray(perms)
    if perms.shape[1] == 0:
        return np.zeros(perms.shape[0], dtype=int)
    _, mins = _orbit_data(perms)
    return np.sum(mins == np.arange(perms.shape[1]), axis=1)


def cycle_type_rows(perms: np.ndarray) -> np.ndarray:
    """Row ``i`` holds the multiplicities ``m_1..m_q`` of cycle lengths of ``perms[i]``."""
    perms = np.asarray(perms)
    n, q = perms.shape
    if q == 0:
        return np.zeros((n, 0), dtype=int)
    length, _ = _orbit_data(perms)
    counts = np.zeros((n, q), dtype=np.int32)
    for ell in range(1, q + 1):
        counts[:, ell - 1] = np.sum(length == ell, axis=1) // ell
    return counts


def multiplicities_to_parts(mult) -> tuple:
    parts = []
    for ell in range(len(mult), 0, -1):
        parts.extend([ell] * int(mult[ell - 1]))
    return tuple(parts)
