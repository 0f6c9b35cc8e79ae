"""Signature-hashing computation of the edge-labeled forward k-bisimulation.

Every vertex starts with the same identifier. In each iteration the new
identifier of ``v`` is the set hash of ``{(label set of (v, w), ID(w))}`` over
its out-edges, read from the previous iteration's identifiers. The run stops
early once an iteration leaves the number of distinct identifiers unchanged.
"""
from __future__ import annotations

import time

import numpy as np

from . import _engine, hashing
from .graph import LabeledGraph
from .partition import Partition, PartitionTrace


def signature_of(v: int, g: LabeledGraph, ids) -> frozenset[tuple[int, int]]:
    """``{(edge-label-set id, ids[w])}`` over the out-edges of ``v``."""
    return frozenset((lab, int(ids[w])) for w, lab in g.out_neighbors(v))


def signature_hash(v: int, g: LabeledGraph, ids, key: int = hashing.DEFAULT_KEY) -> int:
    """Scalar reference for one vertex; ``ids`` holds 128-bit integers."""
    return hashing.merge_and_hash(signature_of(v, g, ids), key)


def _label_prefix(g: LabeledGraph, key: int):
    n_sets = len(g.label_dict.edge_label_sets)
    return _engine.label_prefix([(0, i) for i in range(max(n_sets, 1))], key)


def bisim_schaetzle(
    g: LabeledGraph,
    k: int,
    exact: bool = False,
    n_jobs: int = 1,
    early_stop: bool = True,
    record_partitions: bool = False,
    key: int = hashing.DEFAULT_KEY,
) -> PartitionTrace:
    """Run up to ``k`` signature iterations.

    ``exact`` re-checks every iteration against exact signatures and raises
    :class:`~kbisim.hashing.HashCollisionError` on disagreement. ``k = 0``
    returns the initial one-block partition.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    t0 = time.perf_counter()
    n = g.vertex_count
    hi = np.zeros(n, dtype=np.uint64)
    lo = np.zeros(n, dtype=np.uint64)
    dense = np.zeros(n, dtype=np.int64)
    distinct = 1 if n else 0
    prefix = _label_prefix(g, key)
    codes = g.edge_labels
    trace = PartitionTrace(partition=None, k=k, block_counts=[distinct])  # type: ignore[arg-type]
    partitions = [Partition(dense)] if record_partitions else None
    trace.init_seconds = time.perf_counter() - t0

    for _ in range(k):
        t = time.perf_counter()
        new_hi, new_lo = _engine.collect(g, hi, lo, dense, distinct, codes, prefix, key, n_jobs)
        new_dense, new_distinct = hashing.dense_ids(new_hi, new_lo)
        if exact:
            hashing.check_exact(new_dense, _engine.exact_keys(g, dense, codes, None), "signature")
        hi, lo, dense = new_hi, new_lo, new_dense
        stable = new_distinct == distinct
        distinct = new_distinct
        trace.block_counts.append(distinct)
        trace.iterations_executed += 1
        if partitions is not None:
            partitions.append(Partition(dense))
        trace.iteration_seconds.append(time.perf_counter() - t)
        if early_stop and stable:
            trace.terminated_early = trace.iterations_executed < k
            break

    t = time.perf_counter()
    trace.partition = Partition(dense)
    trace.partitions = partitions
    if trace.iteration_seconds:
        trace.iteration_seconds[-1] += time.perf_counter() - t
    trace.ids = (hi, lo)
    return trace
