"""Estimator wrappers with the familiar ``fit`` / ``fit_predict`` / ``get_params`` API.

A graph plays the role of ``X``: each vertex is a sample and the computed
partition is its clustering. ``labels_`` holds the block id of every vertex.
"""
from __future__ import annotations

import numbers
import os
from pathlib import Path

from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from . import oracle
from .brs import GSMSpec, brs_summarize, find_and_merge
from .graph import LabeledGraph, build_graph
from .ingestion import IngestionConfig, read_ntriples
from .kaushik import bisim_kaushik, naive_coarsest_partition
from .partition import PartitionTrace, label_partition
from .schaetzle import bisim_schaetzle


def check_graph(X, config: IngestionConfig | None = None) -> LabeledGraph:
    """Accept a graph, an N-Triples path, or an iterable of triples."""
    if isinstance(X, LabeledGraph):
        return X
    if isinstance(X, (str, os.PathLike)):
        if not Path(X).exists():
            raise FileNotFoundError(f"no such graph file: {X}")
        return read_ntriples(X, config)
    if hasattr(X, "__iter__") and not isinstance(X, (bytes, dict)):
        return build_graph(X, config)
    raise TypeError(f"expected a LabeledGraph, a path or triples, got {type(X).__name__}")


def check_depth(k, minimum: int = 0) -> int:
    if isinstance(k, bool) or not isinstance(k, numbers.Integral):
        raise TypeError(f"k must be an integer, got {k!r}")
    if k < minimum:
        raise ValueError(f"k must be >= {minimum}, got {k}")
    return int(k)


class _BisimulationBase(ClusterMixin, BaseEstimator):
    def _store(self, g: LabeledGraph, trace: PartitionTrace):
        self.graph_ = g
        self.trace_ = trace
        self.partition_ = trace.partition
        self.labels_ = trace.partition.block_of
        self.n_blocks_ = trace.partition.n_blocks
        self.n_features_in_ = 1
        return self

    def fit(self, X, y=None):
        raise NotImplementedError

    @property
    def block_counts_(self) -> list[int]:
        check_is_fitted(self, "trace_")
        return self.trace_.block_counts


class SchaetzleBisimulation(_BisimulationBase):
    """Edge-labeled forward k-bisimulation by iterative signature hashing."""

    def __init__(self, k: int = 10, exact: bool = False, n_jobs: int | None = None, early_stop: bool = True):
        self.k = k
        self.exact = exact
        self.n_jobs = n_jobs
        self.early_stop = early_stop

    def fit(self, X, y=None):
        g = check_graph(X)
        trace = bisim_schaetzle(g, check_depth(self.k), exact=self.exact, n_jobs=self.n_jobs or 1,
                                early_stop=self.early_stop)
        return self._store(g, trace)


class KaushikBisimulation(_BisimulationBase):
    """Vertex-labeled backward k-bisimulation by sequential block splitting."""

    def __init__(self, k: int = 10, use_ledger: bool = True, early_stop: bool = True):
        self.k = k
        self.use_ledger = use_ledger
        self.early_stop = early_stop

    def fit(self, X, y=None):
        g = check_graph(X)
        trace = bisim_kaushik(g, check_depth(self.k), use_ledger=self.use_ledger, early_stop=self.early_stop)
        return self._store(g, trace)


class BRSSummarizer(_BisimulationBase):
    """Generic summarizer; ``gsm`` is a :class:`GSMSpec` or its text form.

    When ``k`` is given it overrides the depth written in ``gsm``.
    """

    def __init__(self, gsm="cp((T,id,T),k=10)", k: int | None = None, exact: bool = False,
                 n_jobs: int | None = None, drop_object_labels: bool = False, early_stop: bool = True):
        self.gsm = gsm
        self.k = k
        self.exact = exact
        self.n_jobs = n_jobs
        self.drop_object_labels = drop_object_labels
        self.early_stop = early_stop

    def _spec(self) -> GSMSpec:
        spec = self.gsm if isinstance(self.gsm, GSMSpec) else GSMSpec.parse(str(self.gsm), default_k=self.k)
        return spec.with_k(check_depth(self.k)) if self.k is not None else spec

    def fit(self, X, y=None):
        g = check_graph(X)
        self.spec_ = self._spec()
        trace = brs_summarize(g, self.spec_, exact=self.exact, n_jobs=self.n_jobs or 1,
                              drop_object_labels=self.drop_object_labels, early_stop=self.early_stop)
        self._store(g, trace)
        self.summary_graph_ = find_and_merge(g, trace.partition)
        return self


class NaiveCoarsestPartition(_BisimulationBase):
    """Coarsest stable refinement of the label partition (unbounded depth)."""

    def fit(self, X, y=None):
        g = check_graph(X)
        p = naive_coarsest_partition(label_partition(g), g)
        return self._store(g, PartitionTrace(partition=p, k=-1, block_counts=[p.n_blocks]))


class OracleBisimulation(_BisimulationBase):
    """Reference partition from the inductive definition of ``variant``."""

    def __init__(self, variant: str = "edge-labeled-forward", k: int = 2):
        self.variant = variant
        self.k = k

    def fit(self, X, y=None):
        if self.variant not in oracle.VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {sorted(oracle.VARIANTS)}")
        g = check_graph(X)
        levels = oracle.VARIANTS[self.variant](g, check_depth(self.k))
        trace = PartitionTrace(partition=levels[-1], k=self.k, block_counts=[p.n_blocks for p in levels],
                               iterations_executed=self.k, partitions=levels)
        return self._store(g, trace)
