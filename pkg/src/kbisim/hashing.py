"""128-bit identifiers, order-independent set hashing and the combine operator.

Identifiers are kept as two parallel ``uint64`` lanes ``(hi, lo)`` so that
whole-graph updates stay vectorized. The scalar helpers (:func:`merge_and_hash`,
:func:`combine`) run through exactly the same lane code on length-1 arrays, so
a value computed per vertex by an engine equals the value the scalar helper
returns for that vertex's message set.

Every message field is serialized as two 64-bit words (high, low), which makes
128-bit identifiers and small integer codes interchangeable as fields.
"""
from __future__ import annotations

import hashlib
from typing import Iterable, Sequence

import numpy as np

MASK64 = (1 << 64) - 1
DEFAULT_KEY = 0x6B62_6973_696D_2D6B_6579_2D76_3120_2020

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = 0x9E3779B97F4A7C15

# domains keep set-hash, combine and element absorption from colliding
_ELEMENT, _FINAL, _COMBINE = 1, 2, 3


class HashCollisionError(RuntimeError):
    """Two vertices share an identifier although their exact inputs differ."""


def _mix(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; uint64 arithmetic wraps
    x = x ^ (x >> np.uint64(30))
    x *= _M1
    x ^= x >> np.uint64(27)
    x *= _M2
    x ^= x >> np.uint64(31)
    return x


def _mix_int(x: int) -> int:
    x &= MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def lane_seeds(key: int, domain: int) -> tuple[int, int]:
    lo, hi = key & MASK64, (key >> 64) & MASK64
    s0 = _mix_int(lo ^ _mix_int(domain * _GOLDEN + 1))
    s1 = _mix_int(hi ^ _mix_int(domain * _GOLDEN + 2) ^ s0)
    return s0, s1


def _absorb(h: np.ndarray, word: np.ndarray) -> np.ndarray:
    return _mix(h ^ word)


def absorb_words(seed: int | np.ndarray, words: Sequence[np.ndarray | int], size: int) -> np.ndarray:
    """Fold ``words`` (arrays or scalars broadcast to ``size``) into one lane."""
    if isinstance(seed, np.ndarray):
        h = seed.astype(np.uint64, copy=True)
    else:
        h = np.full(size, seed, dtype=np.uint64)
    for w in words:
        if isinstance(w, np.ndarray):
            h = _absorb(h, w.astype(np.uint64, copy=False))
        else:
            h = _absorb(h, np.uint64(w & MASK64))
    return h


def split_words(values: Iterable[int]) -> list[int]:
    out = []
    for v in values:
        if v < 0 or v >> 128:
            raise ValueError(f"message field out of range: {v}")
        out.append(v >> 64)
        out.append(v & MASK64)
    return out


def element_lanes(
    fields: Sequence[np.ndarray | int], size: int, key: int = DEFAULT_KEY,
    prefix: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-element hash lanes of messages given as 64-bit words.

    ``prefix`` optionally holds lane states that already absorbed the leading
    words (used to precompute label fields once per distinct label).
    """
    s0, s1 = lane_seeds(key, _ELEMENT)
    h0 = absorb_words(prefix[0] if prefix is not None else s0, fields, size)
    h1 = absorb_words(prefix[1] if prefix is not None else s1, fields, size)
    return h0, h1


def finalize_set(sum0: np.ndarray, sum1: np.ndarray, key: int = DEFAULT_KEY) -> tuple[np.ndarray, np.ndarray]:
    f0, f1 = lane_seeds(key, _FINAL)
    return _mix(sum0 ^ np.uint64(f0)), _mix(sum1 ^ np.uint64(f1) ^ _mix(sum0 ^ np.uint64(f1)))


def empty_set_hash(key: int = DEFAULT_KEY) -> int:
    z = np.zeros(1, dtype=np.uint64)
    hi, lo = finalize_set(z, z.copy(), key)
    return to_int(hi[0], lo[0])


def to_int(hi, lo) -> int:
    return (int(hi) << 64) | int(lo)


def from_int(value: int) -> tuple[int, int]:
    return (value >> 64) & MASK64, value & MASK64


def merge_and_hash(messages: Iterable[Sequence[int]], key: int = DEFAULT_KEY) -> int:
    """Order-independent 128-bit hash of a set of integer tuples.

    Duplicates collapse. Each element is absorbed into two independent lanes,
    the lanes are summed modulo 2**64 and then finalized.
    """
    by_width: dict[int, list[list[int]]] = {}
    for m in {tuple(int(f) for f in m) for m in messages}:
        w = split_words(m)
        by_width.setdefault(len(w), []).append(w)
    sum0 = np.zeros(1, dtype=np.uint64)
    sum1 = np.zeros(1, dtype=np.uint64)
    for width, rows in by_width.items():
        cols = np.array(rows, dtype=np.uint64).reshape(len(rows), width)
        h0, h1 = element_lanes(list(cols.T), len(rows), key)
        sum0 += h0.sum(dtype=np.uint64)
        sum1 += h1.sum(dtype=np.uint64)
    hi, lo = finalize_set(sum0, sum1, key)
    return to_int(hi[0], lo[0])


def combine_lanes(
    old: tuple[np.ndarray, np.ndarray], new: tuple[np.ndarray, np.ndarray], key: int = DEFAULT_KEY,
) -> tuple[np.ndarray, np.ndarray]:
    """Non-commutative combination of two identifier arrays, order (old, new)."""
    size = old[0].shape[0]
    s0, s1 = lane_seeds(key, _COMBINE)
    words = [old[0], old[1], new[0], new[1]]
    h0 = absorb_words(s0, words, size)
    h1 = absorb_words(s1, words, size)
    # second lane also depends on the first to spread differences
    return h0, _mix(h1 ^ h0)


def combine(old: int, new: int, key: int = DEFAULT_KEY) -> int:
    oh, ol = from_int(old)
    nh, nl = from_int(new)
    a = lambda x: np.array([x], dtype=np.uint64)  # noqa: E731
    hi, lo = combine_lanes((a(oh), a(ol)), (a(nh), a(nl)), key)
    return to_int(hi[0], lo[0])


def digest128(data: bytes, key: int = DEFAULT_KEY) -> int:
    """Keyed 128-bit digest of a byte string (blake2b)."""
    h = hashlib.blake2b(data, digest_size=16, key=key.to_bytes(16, "little"))
    return int.from_bytes(h.digest(), "big")


def dense_ids(hi: np.ndarray, lo: np.ndarray) -> tuple[np.ndarray, int]:
    """Rank 128-bit identifiers densely (by value). Returns ``(ranks, distinct)``."""
    n = hi.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64), 0
    order = np.argsort(hi)
    shi, slo = hi[order], lo[order]
    same_hi = shi[1:] == shi[:-1]
    if np.any(same_hi & (slo[1:] != slo[:-1])):
        # equal high lanes with different low lanes: order by both
        order = np.lexsort((lo, hi))
        shi, slo = hi[order], lo[order]
        same_hi = shi[1:] == shi[:-1]
    change = np.empty(n, dtype=bool)
    change[0] = True
    np.logical_not(same_hi, out=change[1:])
    change[1:] |= slo[1:] != slo[:-1]
    ranks_sorted = np.cumsum(change, dtype=np.int64) - 1
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = ranks_sorted
    return ranks, int(ranks_sorted[-1]) + 1


def check_exact(dense: np.ndarray, exact_keys: Sequence, what: str = "identifier") -> None:
    """Raise :class:`HashCollisionError` unless hash groups equal exact-key groups."""
    table: dict = {}
    exact = np.fromiter((table.setdefault(k, len(table)) for k in exact_keys), dtype=np.int64, count=len(exact_keys))
    if exact.shape[0] == 0:
        return
    n_hash = int(dense.max()) + 1
    pairs = np.unique(dense * len(table) + exact)
    if not (pairs.shape[0] == n_hash == len(table)):
        raise HashCollisionError(
            f"{what}: {n_hash} hash groups vs {len(table)} exact groups ({pairs.shape[0]} joint)"
        )
