"""Dense indexing of unordered vertex pairs, plus bitset-row helpers.

Vertices are 0-based ints in [0, n). An unordered pair (u, v) with u < v is
addressed by the triangular index

    pid(u, v) = u*(2n - u - 1)/2 + (v - u - 1)

so all n(n-1)/2 pairs map onto [0, P). Adjacency rows are arrays of 64-bit
words (little-endian bit order within each word), which makes neighborhood
intersections and popcounts single vectorized operations.
"""

from __future__ import annotations

import numpy as np

BITS64 = np.left_shift(np.uint64(1), np.arange(64, dtype=np.uint64))


def pair_count(n: int) -> int:
    return n * (n - 1) // 2


def row_bases(n: int) -> np.ndarray:
    """base[u] = pid of pair (u, u+1); rows are contiguous pid blocks."""
    u = np.arange(n, dtype=np.int64)
    return u * (2 * n - u - 1) // 2


def pair_index(n, u, v):
    """pid for (u, v); accepts scalars or arrays, any endpoint order."""
    lo = np.minimum(u, v)
    hi = np.maximum(u, v)
    return lo * (2 * n - lo - 1) // 2 + (hi - lo - 1)


def pair_decode(bases: np.ndarray, pid):
    """Inverse of pair_index given the precomputed row bases."""
    u = np.searchsorted(bases, pid, side="right") - 1
    v = pid - bases[u] + u + 1
    return u, v


def word_count(n: int) -> int:
    return (n + 63) // 64


def set_bit(row: np.ndarray, v: int) -> None:
    row[v >> 6] |= BITS64[v & 63]


def clear_bit(row: np.ndarray, v: int) -> None:
    row[v >> 6] &= ~BITS64[v & 63]


def test_bit(row: np.ndarray, v: int) -> bool:
    return bool(row[v >> 6] & BITS64[v & 63])


def test_bits(row: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Boolean mask: which of the vertex ids in idx have their bit set."""
    i = idx.astype(np.int64)
    words = row[i >> 6]
    return (words >> (i & 63).astype(np.uint64)) & np.uint64(1) != 0


def bits_to_indices(row: np.ndarray) -> np.ndarray:
    """Vertex ids of the set bits of a word row (relies on little-endian layout)."""
    return np.flatnonzero(np.unpackbits(row.view(np.uint8), bitorder="little"))


def mask_from_indices(n: int, idx) -> np.ndarray:
    """Word row with exactly the bits of idx set."""
    row = np.zeros(word_count(n), dtype=np.uint64)
    a = np.asarray(list(idx) if not isinstance(idx, np.ndarray) else idx, dtype=np.int64)
    if a.size:
        np.bitwise_or.at(row, a >> 6, BITS64[a & 63])
    return row


def popcount(words: np.ndarray) -> int:
    return int(np.bitwise_count(words).sum())
