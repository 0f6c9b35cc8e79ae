"""Multi-relational labeled graph with interned labels and CSR adjacency."""
from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Iterable, Sequence

import numpy as np

IRI, BNODE, LITERAL = 0, 1, 2
_KIND_CODES = {"iri": IRI, "bnode": BNODE, "literal": LITERAL}
KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}


class IngestionError(ValueError):
    pass


class Interner:
    """Bijective mapping between hashable items and dense ids (first-seen order)."""

    def __init__(self, items: Iterable = ()):
        self._ids: dict = {}
        self._items: list = []
        for item in items:
            self.intern(item)

    def intern(self, item) -> int:
        i = self._ids.get(item)
        if i is None:
            i = len(self._items)
            self._ids[item] = i
            self._items.append(item)
        return i

    def get(self, item, default=None):
        return self._ids.get(item, default)

    def __getitem__(self, i: int):
        return self._items[i]

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self._items)


class LabelDictionary:
    """Interning tables for vertex/edge labels and their label sets.

    A label set is stored as the sorted tuple of its label ids, so the same
    set of labels always receives the same set id.
    """

    def __init__(self):
        self.vertex_labels = Interner()
        self.edge_labels = Interner()
        self.vertex_label_sets = Interner()
        self.edge_label_sets = Interner()

    def intern_vertex_label_set(self, labels: Iterable[str]) -> int:
        ids = tuple(sorted({self.vertex_labels.intern(lab) for lab in labels}))
        return self.vertex_label_sets.intern(ids)

    def intern_edge_label_set(self, labels: Iterable[str]) -> int:
        ids = tuple(sorted({self.edge_labels.intern(lab) for lab in labels}))
        if not ids:
            raise ValueError("edge label sets must be non-empty")
        return self.edge_label_sets.intern(ids)

    def vertex_label_set(self, set_id: int) -> frozenset[str]:
        return frozenset(self.vertex_labels[i] for i in self.vertex_label_sets[set_id])

    def edge_label_set(self, set_id: int) -> frozenset[str]:
        return frozenset(self.edge_labels[i] for i in self.edge_label_sets[set_id])


def _csr(keys: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(keys, kind="stable")
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(keys, minlength=n), out=ptr[1:])
    return order, ptr


class LabeledGraph:
    """Directed graph ``G = (V, E, l_V, l_E)`` over dense vertex ids ``0..n-1``.

    Edge records are stored sorted by (source, target); ``out_*`` arrays are the
    forward CSR view and ``in_*`` arrays the reverse one. Instances are treated
    as immutable once built.
    """

    def __init__(
        self,
        terms: Sequence[str],
        vertex_labels: np.ndarray,
        src: np.ndarray,
        dst: np.ndarray,
        edge_labels: np.ndarray,
        label_dict: LabelDictionary,
        kinds: np.ndarray | None = None,
    ):
        n = len(terms)
        self.terms = list(terms)
        self.label_dict = label_dict
        self.vertex_labels = np.asarray(vertex_labels, dtype=np.int64)
        self.kinds = np.zeros(n, dtype=np.int8) if kinds is None else np.asarray(kinds, dtype=np.int8)
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        lab = np.asarray(edge_labels, dtype=np.int64)
        if self.vertex_labels.shape != (n,) or self.kinds.shape != (n,):
            raise ValueError("per-vertex arrays must have one entry per term")
        if not (src.shape == dst.shape == lab.shape):
            raise ValueError("edge arrays must have equal length")
        if src.size and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n):
            raise ValueError("edge endpoint out of range")
        order = np.lexsort((lab, dst, src))
        self.src, self.dst, self.edge_labels = src[order], dst[order], lab[order]
        self.out_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.src, minlength=n), out=self.out_ptr[1:])
        in_order, self.in_ptr = _csr(self.dst, n)
        self.in_src = self.src[in_order]
        self.in_labels = self.edge_labels[in_order]
        self._term_index: dict[str, int] | None = None

    # -- sizes ---------------------------------------------------------------
    @property
    def vertex_count(self) -> int:
        return len(self.terms)

    @property
    def edge_count(self) -> int:
        return int(self.src.shape[0])

    @property
    def out_dst(self) -> np.ndarray:
        return self.dst

    @property
    def out_labels(self) -> np.ndarray:
        return self.edge_labels

    def __repr__(self) -> str:
        return f"LabeledGraph(vertices={self.vertex_count}, edges={self.edge_count})"

    # -- lookup --------------------------------------------------------------
    def vertex_id(self, term: str) -> int:
        if self._term_index is None:
            self._term_index = {t: i for i, t in enumerate(self.terms)}
        return self._term_index[term]

    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_ptr)

    def in_degree(self) -> np.ndarray:
        return np.diff(self.in_ptr)

    def out_neighbors(self, v: int) -> list[tuple[int, int]]:
        a, b = self.out_ptr[v], self.out_ptr[v + 1]
        return list(zip(self.dst[a:b].tolist(), self.edge_labels[a:b].tolist()))

    def in_neighbors(self, v: int) -> list[tuple[int, int]]:
        a, b = self.in_ptr[v], self.in_ptr[v + 1]
        return list(zip(self.in_src[a:b].tolist(), self.in_labels[a:b].tolist()))

    def edge_label_set(self, set_id: int) -> frozenset[str]:
        return self.label_dict.edge_label_set(set_id)

    def labels_of(self, v: int) -> frozenset[str]:
        return self.label_dict.vertex_label_set(int(self.vertex_labels[v]))

    def adjacency_lists(self, direction: str = "out") -> list[list[tuple[int, int]]]:
        """Python adjacency lists ``v -> [(neighbor, label-set id), ...]``."""
        if direction == "out":
            ptr, nb, lab = self.out_ptr, self.dst, self.edge_labels
        elif direction == "in":
            ptr, nb, lab = self.in_ptr, self.in_src, self.in_labels
        else:
            raise ValueError(f"unknown direction {direction!r}")
        pairs = list(zip(nb.tolist(), lab.tolist()))
        bounds = ptr.tolist()
        return [pairs[bounds[v]:bounds[v + 1]] for v in range(self.vertex_count)]

    def canonical_form(self) -> tuple:
        """Term-level description independent of vertex numbering."""
        ld = self.label_dict
        vertices = sorted(
            (t, int(k), tuple(sorted(ld.vertex_label_set(int(s)))))
            for t, k, s in zip(self.terms, self.kinds.tolist(), self.vertex_labels.tolist())
        )
        edges = sorted(
            (self.terms[s], self.terms[d], tuple(sorted(ld.edge_label_set(lab))))
            for s, d, lab in zip(self.src.tolist(), self.dst.tolist(), self.edge_labels.tolist())
        )
        return tuple(vertices), tuple(edges)


def graphs_equal(a: LabeledGraph, b: LabeledGraph) -> bool:
    """Structural equality up to vertex numbering and interning order."""
    return a.canonical_form() == b.canonical_form()


def invert(g: LabeledGraph) -> LabeledGraph:
    """Reverse every edge; vertex labels and terms are shared."""
    return LabeledGraph(g.terms, g.vertex_labels, g.dst, g.src, g.edge_labels, g.label_dict, g.kinds)


def out_neighbors(g: LabeledGraph, v: int) -> list[tuple[int, int]]:
    return g.out_neighbors(v)


def in_neighbors(g: LabeledGraph, v: int) -> list[tuple[int, int]]:
    return g.in_neighbors(v)


def build_graph(triples: Iterable[Sequence[str]], config=None) -> LabeledGraph:
    """Build a graph from ``(s, p, o)`` or ``(s, p, o, object_kind)`` tuples.

    ``object_kind`` is one of ``"iri"``, ``"bnode"``, ``"literal"`` (default
    ``"iri"``). Subjects starting with ``_:`` are blank nodes. Triples whose
    predicate is ``config.type_predicate`` label their subject instead of
    creating an edge; literal vertices carry ``config.literal_label``.
    """
    from .ingestion import IngestionConfig

    config = config or IngestionConfig()
    ld = LabelDictionary()
    index: dict[str, int] = {}
    terms: list[str] = []
    kinds: list[int] = []
    labels: dict[int, set[str]] = {}
    edges: dict[tuple, set[str]] = {}
    type_pred = config.type_predicate

    def vertex(term: str, kind: int) -> int:
        v = index.get(term)
        if v is None:
            v = index[term] = len(terms)
            terms.append(term)
            kinds.append(kind)
        elif (kinds[v] == LITERAL) != (kind == LITERAL):
            raise IngestionError(f"term {term!r} used both as a literal and as a resource")
        return v

    for t in triples:
        if len(t) == 4:
            s, p, o, okind = t
            okind = _KIND_CODES[okind] if isinstance(okind, str) else int(okind)
        else:
            s, p, o = t
            okind = BNODE if o.startswith("_:") else IRI
        sv = vertex(s, BNODE if s.startswith("_:") else IRI)
        if p == type_pred:
            labels.setdefault(sv, set()).add(o)
            continue
        ov = vertex(o, okind)
        key = (sv, ov, p) if config.explode_label_sets else (sv, ov)
        edges.setdefault(key, set()).add(p)

    if config.literal_label:
        for v, k in enumerate(kinds):
            if k == LITERAL:
                labels.setdefault(v, set()).add(config.literal_label)
    vlab = np.array([ld.intern_vertex_label_set(labels.get(v, ())) for v in range(len(terms))], dtype=np.int64)
    m = len(edges)
    src = np.empty(m, dtype=np.int64)
    dst = np.empty(m, dtype=np.int64)
    lab = np.empty(m, dtype=np.int64)
    for i, (key, preds) in enumerate(edges.items()):
        src[i], dst[i] = key[0], key[1]
        lab[i] = ld.intern_edge_label_set(sorted(preds))
    return LabeledGraph(terms, vlab, src, dst, lab, ld, np.array(kinds, dtype=np.int8))


@dataclass
class GraphStats:
    vertices: int
    edges: int
    vertex_labels: int
    label_sets: int
    labels_per_vertex_mean: float
    labels_per_vertex_std: float
    edge_labels: int
    degree_mean: float
    degree_std: float
    degree_max: int
    in_degree_mean: float
    in_degree_std: float
    in_degree_max: int
    out_degree_mean: float
    out_degree_std: float
    out_degree_max: int

    def to_dict(self) -> dict:
        return asdict(self)


def _moments(x: np.ndarray) -> tuple[float, float, int]:
    if x.size == 0:
        return 0.0, 0.0, 0
    return float(x.mean()), float(x.std()), int(x.max())


def compute_statistics(g: LabeledGraph) -> GraphStats:
    """Dataset statistics; edges and degrees are counted in triples.

    A self-loop adds one to the total degree of its vertex but one each to
    its in- and out-degree.
    """
    n = g.vertex_count
    ld = g.label_dict
    set_sizes = np.array([len(s) for s in ld.edge_label_sets], dtype=np.int64)
    weight = set_sizes[g.edge_labels] if g.edge_count else np.zeros(0, dtype=np.int64)
    outd = np.bincount(g.src, weights=weight, minlength=n).astype(np.int64)
    ind = np.bincount(g.dst, weights=weight, minlength=n).astype(np.int64)
    loops = g.src == g.dst
    total = outd + ind - np.bincount(g.src[loops], weights=weight[loops], minlength=n).astype(np.int64)
    used_vsets = np.unique(g.vertex_labels)
    vset_sizes = np.array([len(s) for s in ld.vertex_label_sets], dtype=np.int64)
    per_vertex = vset_sizes[g.vertex_labels] if n else np.zeros(0, dtype=np.int64)
    used_vlabels = {lab for s in used_vsets.tolist() for lab in ld.vertex_label_sets[s]}
    used_elabels = {lab for s in np.unique(g.edge_labels).tolist() for lab in ld.edge_label_sets[s]}
    lm, ls, _ = _moments(per_vertex)
    dm, ds, dx = _moments(total)
    im, is_, ix = _moments(ind)
    om, os_, ox = _moments(outd)
    return GraphStats(
        vertices=n,
        edges=int(weight.sum()),
        vertex_labels=len(used_vlabels),
        label_sets=int(used_vsets.shape[0]),
        labels_per_vertex_mean=lm,
        labels_per_vertex_std=ls,
        edge_labels=len(used_elabels),
        degree_mean=dm, degree_std=ds, degree_max=dx,
        in_degree_mean=im, in_degree_std=is_, in_degree_max=ix,
        out_degree_mean=om, out_degree_std=os_, out_degree_max=ox,
    )
