"""Vertex partitions and the refinement, stability and split primitives."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .graph import LabeledGraph


class Partition:
    """Assignment of every vertex to exactly one block.

    Block ids are dense and canonical: blocks are numbered in order of their
    smallest member, so two partitions with the same blocks compare equal
    element-wise. Instances are immutable snapshots.
    """

    __slots__ = ("_block_of", "_n_blocks", "_blocks")

    def __init__(self, block_of: Iterable[int] | np.ndarray):
        labels = np.asarray(block_of, dtype=np.int64).reshape(-1)
        if labels.size:
            _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
            rank = np.empty(first.shape[0], dtype=np.int64)
            rank[np.argsort(first, kind="stable")] = np.arange(first.shape[0])
            labels = rank[inverse.reshape(-1)]
        labels.setflags(write=False)
        self._block_of = labels
        self._n_blocks = int(labels.max()) + 1 if labels.size else 0
        self._blocks: list[np.ndarray] | None = None

    @classmethod
    def from_blocks(cls, blocks: Iterable[Iterable[int]], n: int) -> "Partition":
        labels = np.full(n, -1, dtype=np.int64)
        for b, members in enumerate(blocks):
            members = np.asarray(list(members) if not isinstance(members, np.ndarray) else members, dtype=np.int64)
            if members.size == 0:
                raise ValueError("blocks must be non-empty")
            if np.any(labels[members] >= 0):
                raise ValueError("blocks must be pairwise disjoint")
            labels[members] = b
        if np.any(labels < 0):
            raise ValueError("blocks must cover every vertex")
        return cls(labels)

    @classmethod
    def single_block(cls, n: int) -> "Partition":
        return cls(np.zeros(n, dtype=np.int64))

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(np.arange(n, dtype=np.int64))

    @property
    def block_of(self) -> np.ndarray:
        return self._block_of

    @property
    def n_vertices(self) -> int:
        return int(self._block_of.shape[0])

    @property
    def n_blocks(self) -> int:
        return self._n_blocks

    def __len__(self) -> int:
        return self._n_blocks

    @property
    def blocks(self) -> list[np.ndarray]:
        if self._blocks is None:
            order = np.argsort(self._block_of, kind="stable")
            cuts = np.cumsum(np.bincount(self._block_of, minlength=self._n_blocks))[:-1]
            self._blocks = np.split(order, cuts) if self._n_blocks else []
        return self._blocks

    def sizes(self) -> np.ndarray:
        return np.bincount(self._block_of, minlength=self._n_blocks)

    def as_sets(self) -> set[frozenset[int]]:
        return {frozenset(b.tolist()) for b in self.blocks}

    def __eq__(self, other) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return np.array_equal(self._block_of, other._block_of)

    def __hash__(self):
        return hash(self._block_of.tobytes())

    def __repr__(self) -> str:
        return f"Partition(vertices={self.n_vertices}, blocks={self.n_blocks})"


def _same_size(a: Partition, b: Partition) -> None:
    if a.n_vertices != b.n_vertices:
        raise ValueError(f"partitions cover {a.n_vertices} and {b.n_vertices} vertices")


def is_refinement(fine: Partition, coarse: Partition) -> bool:
    """True iff every block of ``fine`` lies inside a block of ``coarse``."""
    _same_size(fine, coarse)
    if fine.n_vertices == 0:
        return True
    pairs = np.unique(fine.block_of * max(coarse.n_blocks, 1) + coarse.block_of)
    return int(pairs.shape[0]) == fine.n_blocks


def partitions_equal(a: Partition, b: Partition) -> bool:
    """Equality up to block renaming."""
    return is_refinement(a, b) and is_refinement(b, a)


def successor_mask(g: LabeledGraph, splitter) -> np.ndarray:
    """Boolean mask of ``N+(S)``, the vertices receiving an edge from ``S``."""
    if isinstance(splitter, np.ndarray) and splitter.dtype == bool:
        s = splitter
    else:
        s = np.zeros(g.vertex_count, dtype=bool)
        s[np.fromiter(splitter, dtype=np.int64)] = True
    mask = np.zeros(g.vertex_count, dtype=bool)
    mask[g.dst[s[g.src]]] = True
    return mask


def _hits(p: Partition, mask: np.ndarray) -> np.ndarray:
    return np.bincount(p.block_of[mask], minlength=p.n_blocks)


def is_stable(p: Partition, splitter, g: LabeledGraph) -> bool:
    """Every block lies inside ``N+(S)`` or is disjoint from it."""
    hits = _hits(p, successor_mask(g, splitter))
    return bool(np.all((hits == 0) | (hits == p.sizes())))


def is_stable_partition(p: Partition, g: LabeledGraph) -> bool:
    """Stable with respect to each of its own blocks."""
    return all(is_stable(p, b, g) for b in p.blocks)


def split(splitter, p: Partition, g: LabeledGraph) -> Partition:
    """Replace each block unstable w.r.t. ``splitter`` by ``B & N+(S)`` and ``B - N+(S)``."""
    mask = successor_mask(g, splitter)
    return Partition(p.block_of * 2 + mask)


def label_partition(g: LabeledGraph) -> Partition:
    """Vertices grouped by vertex-label set."""
    return Partition(g.vertex_labels)


def export_partition(p: Partition, g: LabeledGraph) -> str:
    """Canonical text form: one line per block, tab-separated member terms.

    Members are sorted, and blocks are sorted by their smallest member.
    """
    if p.n_vertices != g.vertex_count:
        raise ValueError("partition and graph sizes differ")
    rows = sorted(sorted(g.terms[v] for v in b.tolist()) for b in p.blocks)
    return "".join("\t".join(r) + "\n" for r in rows)


def parse_partition_export(text: str) -> list[list[str]]:
    return [line.split("\t") for line in text.splitlines() if line]


@dataclass
class PartitionTrace:
    """Result of one algorithm run, level by level.

    ``block_counts[0]`` is the initial partition; entry ``i`` is the count
    after iteration ``i``. ``partitions`` is filled only when requested;
    ``ids`` holds the final 128-bit identifiers (hi, lo) of hashing engines.
    """

    partition: Partition
    k: int
    block_counts: list[int] = field(default_factory=list)
    iteration_seconds: list[float] = field(default_factory=list)
    init_seconds: float = 0.0
    terminated_early: bool = False
    iterations_executed: int = 0
    partitions: list[Partition] | None = None
    ids: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def n_blocks(self) -> int:
        return self.partition.n_blocks


def check_monotone(partitions: Sequence[Partition]) -> bool:
    """Each level refines the previous one."""
    return all(is_refinement(b, a) for a, b in zip(partitions, partitions[1:]))
