"""Reference k-bisimulations computed straight from the inductive definitions.

Each level keeps the previous class of a vertex and adds the set of
``(edge label, previous class of neighbor)`` pairs (label omitted for the
unlabeled variants). Pure Python; meant for small graphs only.
"""
from __future__ import annotations

import time

from .graph import LabeledGraph
from .partition import Partition


def _levels(g: LabeledGraph, k: int, direction: str, labeled: bool, initial: list[int],
            seconds: list[float] | None = None) -> list[Partition]:
    if k < 0:
        raise ValueError("k must be non-negative")
    adj = g.adjacency_lists(direction)
    cls = list(initial)
    levels = [Partition(cls)]
    for _ in range(k):
        t = time.perf_counter()
        table: dict = {}
        nxt = []
        for v, nbrs in enumerate(adj):
            if labeled:
                sig = frozenset((lab, cls[w]) for w, lab in nbrs)
            else:
                sig = frozenset(cls[w] for w, _ in nbrs)
            nxt.append(table.setdefault((cls[v], sig), len(table)))
        cls = nxt
        levels.append(Partition(cls))
        if seconds is not None:
            seconds.append(time.perf_counter() - t)
    return levels


def forward_levels(g: LabeledGraph, k: int, seconds: list[float] | None = None) -> list[Partition]:
    return _levels(g, k, "out", False, [0] * g.vertex_count, seconds)


def backward_levels(g: LabeledGraph, k: int, seconds: list[float] | None = None) -> list[Partition]:
    return _levels(g, k, "in", False, [0] * g.vertex_count, seconds)


def edge_labeled_forward_levels(g: LabeledGraph, k: int, seconds: list[float] | None = None) -> list[Partition]:
    return _levels(g, k, "out", True, [0] * g.vertex_count, seconds)


def vertex_labeled_backward_levels(g: LabeledGraph, k: int, seconds: list[float] | None = None) -> list[Partition]:
    return _levels(g, k, "in", False, g.vertex_labels.tolist(), seconds)


def oracle_forward(g: LabeledGraph, k: int) -> Partition:
    return forward_levels(g, k)[-1]


def oracle_backward(g: LabeledGraph, k: int) -> Partition:
    return backward_levels(g, k)[-1]


def oracle_edge_labeled_forward(g: LabeledGraph, k: int) -> Partition:
    """Label sets are compared as whole sets."""
    return edge_labeled_forward_levels(g, k)[-1]


def oracle_vertex_labeled_backward(g: LabeledGraph, k: int) -> Partition:
    return vertex_labeled_backward_levels(g, k)[-1]


VARIANTS = {
    "forward": forward_levels,
    "backward": backward_levels,
    "edge-labeled-forward": edge_labeled_forward_levels,
    "vertex-labeled-backward": vertex_labeled_backward_levels,
}
