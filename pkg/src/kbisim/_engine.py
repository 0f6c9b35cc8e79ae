"""Vectorized per-vertex set hashing over out-neighbors, chunked across threads.

For every vertex ``v`` this computes ``merge_and_hash({(label(v, w), id(w))})``
over its out-edges, with the exact same lane arithmetic as
:func:`kbisim.hashing.merge_and_hash`. Work is split into contiguous vertex
ranges of similar edge volume; each range writes a disjoint slice of the
output, and returning from :func:`collect` is the barrier between rounds.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import hashing
from .graph import LabeledGraph

_INT64_LIMIT = 1 << 62


def resolve_jobs(n_jobs: int | None) -> int:
    if n_jobs is None or n_jobs == 0:
        return 1
    if n_jobs < 0:
        return max(1, (os.cpu_count() or 1) + 1 + n_jobs)
    return int(n_jobs)


def chunk_bounds(ptr: np.ndarray, n_chunks: int) -> list[tuple[int, int]]:
    n = ptr.shape[0] - 1
    if n_chunks <= 1 or n <= 1:
        return [(0, n)]
    targets = np.linspace(0, ptr[-1], n_chunks + 1)
    cuts = np.unique(np.clip(np.searchsorted(ptr, targets[1:-1]), 0, n))
    edges = [0, *cuts.tolist(), n]
    return [(a, b) for a, b in zip(edges, edges[1:]) if b > a]


def run_chunks(fn, bounds: list[tuple[int, int]], n_jobs: int) -> None:
    if n_jobs <= 1 or len(bounds) == 1:
        for a, b in bounds:
            fn(a, b)
        return
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        for fut in [pool.submit(fn, a, b) for a, b in bounds]:
            fut.result()


def label_prefix(words: list[tuple[int, int]], key: int) -> tuple[np.ndarray, np.ndarray]:
    """Lane states after absorbing one 128-bit label field, per label code."""
    hi = np.array([w[0] for w in words], dtype=np.uint64)
    lo = np.array([w[1] for w in words], dtype=np.uint64)
    s0, s1 = hashing.lane_seeds(key, hashing._ELEMENT)
    size = hi.shape[0]
    return (hashing.absorb_words(s0, [hi, lo], size), hashing.absorb_words(s1, [hi, lo], size))


def _unique_triples(sl: np.ndarray, lc: np.ndarray | None, n_codes: int, dw: np.ndarray, n_dense: int,
                    width: int) -> tuple[np.ndarray, np.ndarray | None, np.ndarray]:
    """Distinct (vertex, label code, neighbor class) triples, sorted by vertex."""
    n_codes = max(n_codes, 1)
    nd = max(n_dense, 1)
    if width * n_codes * nd < _INT64_LIMIT:
        key = sl * n_codes
        if lc is not None:
            key += lc
        key *= nd
        key += dw
        key.sort()
        keep = np.empty(key.shape[0], dtype=bool)
        if key.shape[0]:
            keep[0] = True
            np.not_equal(key[1:], key[:-1], out=keep[1:])
        key = key[keep]
        rest, dense = np.divmod(key, nd)
        if lc is None:
            return rest, None, dense
        vert, codes = np.divmod(rest, n_codes)
        return vert, codes, dense
    cols = (dw, lc, sl) if lc is not None else (dw, sl)
    order = np.lexsort(cols)
    diff = np.zeros(order.shape[0], dtype=bool)
    if order.shape[0]:
        diff[0] = True
        for c in cols:
            sc = c[order]
            diff[1:] |= sc[1:] != sc[:-1]
    sel = order[diff]
    return sl[sel], (lc[sel] if lc is not None else None), dw[sel]


def collect(
    g: LabeledGraph,
    nb_hi: np.ndarray,
    nb_lo: np.ndarray,
    nb_dense: np.ndarray,
    n_dense: int,
    label_codes: np.ndarray | None,
    prefix: tuple[np.ndarray, np.ndarray] | None,
    key: int = hashing.DEFAULT_KEY,
    n_jobs: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Set hash per vertex of ``{(label field, neighbor id)}`` over out-edges.

    ``label_codes`` gives a small per-edge code for the label field and
    ``prefix`` the lane states for each code (see :func:`label_prefix`);
    pass ``None`` for both to hash neighbor ids alone.
    """
    n = g.vertex_count
    out0 = np.zeros(n, dtype=np.uint64)
    out1 = np.zeros(n, dtype=np.uint64)
    n_codes = prefix[0].shape[0] if prefix is not None else 1
    s0, s1 = hashing.lane_seeds(key, hashing._ELEMENT)

    # neighbor lanes looked up by class, so deduplicated triples need no edge index
    rep_hi = np.zeros(max(n_dense, 1), dtype=np.uint64)
    rep_lo = np.zeros(max(n_dense, 1), dtype=np.uint64)
    rep_hi[nb_dense] = nb_hi
    rep_lo[nb_dense] = nb_lo

    def work(a: int, b: int) -> None:
        ea, eb = int(g.out_ptr[a]), int(g.out_ptr[b])
        if eb == ea:
            return
        sl = g.src[ea:eb] - a
        lc = label_codes[ea:eb] if label_codes is not None else None
        vs, codes, dense = _unique_triples(sl, lc, n_codes, nb_dense[g.dst[ea:eb]], n_dense, b - a)
        m = vs.shape[0]
        if codes is not None:
            pre = (prefix[0][codes], prefix[1][codes])
        else:
            pre = (np.full(m, s0, dtype=np.uint64), np.full(m, s1, dtype=np.uint64))
        h0, h1 = hashing.element_lanes([rep_hi[dense], rep_lo[dense]], m, key, prefix=pre)
        starts = np.flatnonzero(np.concatenate(([True], vs[1:] != vs[:-1])))
        owners = vs[starts] + a
        out0[owners] = np.add.reduceat(h0, starts)
        out1[owners] = np.add.reduceat(h1, starts)

    n_jobs = resolve_jobs(n_jobs)
    run_chunks(work, chunk_bounds(g.out_ptr, n_jobs), n_jobs)
    return hashing.finalize_set(out0, out1, key)


def exact_keys(g: LabeledGraph, nb_dense: np.ndarray, label_codes: np.ndarray | None, own: np.ndarray | None):
    """Exact per-vertex inputs mirroring :func:`collect`, for collision checks."""
    ptr = g.out_ptr.tolist()
    dw = nb_dense[g.dst].tolist()
    lc = label_codes.tolist() if label_codes is not None else [0] * len(dw)
    pairs = list(zip(lc, dw))
    own_list = own.tolist() if own is not None else None
    keys = []
    for v in range(g.vertex_count):
        s = frozenset(pairs[ptr[v]:ptr[v + 1]])
        keys.append((own_list[v], s) if own_list is not None else s)
    return keys
