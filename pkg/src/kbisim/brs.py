"""Generic vertex-centric summarizer driven by a graph summary model spec.

A spec ``cp((s, p, o), k)`` names three relation atoms: ``s`` seeds the
subject identifier, ``o`` seeds the object identifier and ``p`` decides
whether edge label sets take part in messages. ``inv(...)`` evaluates the
same element over reversed edges.

Every vertex reads its out-neighbors' identifiers from the previous round
(pull form of signal/collect) and folds the set hash of what it read into its
own identifiers with the non-commutative :func:`~kbisim.hashing.combine`.

Text grammar (whitespace ignored)::

    spec    := "cp" "(" element [ "," "k" "=" INT ] ")" | element
    element := "(" atom "," atom "," atom ")" [ "^-1" ] | "inv" "(" atom "," atom "," atom ")"
    atom    := "T" | "id" | "OC" | "OC_type"
"""
from __future__ import annotations

import enum
import re
import time
from dataclasses import dataclass

import numpy as np

from . import _engine, hashing
from .graph import LabeledGraph, invert
from .partition import Partition, PartitionTrace


class RelationAtom(enum.Enum):
    TAUTOLOGY = "T"
    IDENTITY = "id"
    LABEL_EQUALITY = "OC_type"

    def __str__(self) -> str:
        return self.value


_ATOMS = {"T": RelationAtom.TAUTOLOGY, "id": RelationAtom.IDENTITY,
          "OC": RelationAtom.LABEL_EQUALITY, "OC_type": RelationAtom.LABEL_EQUALITY}


class GSMParseError(ValueError):
    def __init__(self, text: str, pos: int, message: str):
        token = _token_at(text, pos)
        super().__init__(f"{message} at position {pos}: {token!r} in {text!r}")
        self.token = token
        self.pos = pos


@dataclass(frozen=True)
class GSMSpec:
    subject_atom: RelationAtom
    predicate_atom: RelationAtom
    object_atom: RelationAtom
    k: int
    inverted: bool = False

    def __post_init__(self):
        if self.predicate_atom not in (RelationAtom.TAUTOLOGY, RelationAtom.IDENTITY):
            raise ValueError("predicate atom must be T or id")
        if self.k < 0:
            raise ValueError("k must be non-negative")

    @classmethod
    def schaetzle(cls, k: int) -> "GSMSpec":
        """``cp((T, id, T), k)``: edge-labeled forward k-bisimulation."""
        return cls(RelationAtom.TAUTOLOGY, RelationAtom.IDENTITY, RelationAtom.TAUTOLOGY, k)

    @classmethod
    def kaushik(cls, k: int) -> "GSMSpec":
        """``cp(inv(OC_type, T, OC_type), k)``: vertex-labeled backward k-bisimulation."""
        return cls(RelationAtom.LABEL_EQUALITY, RelationAtom.TAUTOLOGY, RelationAtom.LABEL_EQUALITY, k, True)

    def with_k(self, k: int) -> "GSMSpec":
        return GSMSpec(self.subject_atom, self.predicate_atom, self.object_atom, k, self.inverted)

    def __str__(self) -> str:
        atoms = f"{self.subject_atom},{self.predicate_atom},{self.object_atom}"
        element = f"inv({atoms})" if self.inverted else f"({atoms})"
        return f"cp({element},k={self.k})"

    @classmethod
    def parse(cls, text: str, default_k: int | None = None) -> "GSMSpec":
        return _Parser(text).parse(default_k)


def _token_at(text: str, pos: int) -> str:
    if pos >= len(text):
        return "<end>"
    m = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|\d+|\^-1|\S").match(text, pos)
    return m.group(0) if m else text[pos]


class _Parser:
    _TOKEN = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*|\d+|\^-1|[(),=])")

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _peek(self) -> tuple[str | None, int]:
        m = self._TOKEN.match(self.text, self.pos)
        if m is None:
            rest = self.text[self.pos:]
            if rest.strip():
                return "?", self.pos + len(rest) - len(rest.lstrip())
            return None, len(self.text)
        return m.group(1), m.start(1)

    def _next(self) -> tuple[str | None, int]:
        tok, start = self._peek()
        if tok == "?":
            raise GSMParseError(self.text, start, "unexpected character")
        if tok is not None:
            self.pos = start + len(tok)
        return tok, start

    def _expect(self, want: str) -> None:
        tok, start = self._next()
        if tok != want:
            raise GSMParseError(self.text, start, f"expected {want!r}")

    def _atom(self) -> RelationAtom:
        tok, start = self._next()
        if tok not in _ATOMS:
            raise GSMParseError(self.text, start, "unknown relation atom")
        return _ATOMS[tok]

    def _element(self) -> tuple[tuple[RelationAtom, RelationAtom, RelationAtom], bool]:
        tok, start = self._peek()
        inverted = False
        if tok == "inv":
            self._next()
            inverted = True
        elif tok != "(":
            raise GSMParseError(self.text, start, "expected schema element")
        self._expect("(")
        s = self._atom()
        self._expect(",")
        p = self._atom()
        self._expect(",")
        o = self._atom()
        self._expect(")")
        if self._peek()[0] == "^-1":
            self._next()
            inverted = not inverted
        return (s, p, o), inverted

    def parse(self, default_k: int | None) -> GSMSpec:
        tok, start = self._peek()
        k = default_k
        if tok == "cp":
            self._next()
            self._expect("(")
            atoms, inverted = self._element()
            if self._peek()[0] == ",":
                self._next()
                self._expect("k")
                self._expect("=")
                tok, start = self._next()
                if tok is None or not tok.isdigit():
                    raise GSMParseError(self.text, start, "expected integer depth")
                k = int(tok)
            self._expect(")")
        else:
            atoms, inverted = self._element()
        tok, start = self._peek()
        if tok is not None:
            raise GSMParseError(self.text, start, "trailing input")
        if k is None:
            raise GSMParseError(self.text, len(self.text), "missing chaining depth k")
        s, p, o = atoms
        try:
            return GSMSpec(s, p, o, k, inverted)
        except ValueError as exc:
            raise GSMParseError(self.text, 0, str(exc)) from None


# -- initialization -----------------------------------------------------------

_TAUTOLOGY_ID = 0


def _label_set_digest(labels, key: int) -> int:
    return hashing.digest128("\x1f".join(sorted(labels)).encode("utf-8"), key)


def vertex_schema(v: int, g: LabeledGraph, atom: RelationAtom, key: int = hashing.DEFAULT_KEY) -> int:
    """Initial 128-bit identifier of ``v`` under ``atom``."""
    if atom is RelationAtom.TAUTOLOGY:
        return _TAUTOLOGY_ID
    if atom is RelationAtom.IDENTITY:
        return hashing.digest128(b"v\x00" + g.terms[v].encode("utf-8"), key)
    return _label_set_digest(g.labels_of(v), key)


def _schema_lanes(g: LabeledGraph, atom: RelationAtom, key: int) -> tuple[np.ndarray, np.ndarray]:
    n = g.vertex_count
    if atom is RelationAtom.TAUTOLOGY:
        return np.zeros(n, dtype=np.uint64), np.zeros(n, dtype=np.uint64)
    if atom is RelationAtom.IDENTITY:
        values = [vertex_schema(v, g, atom, key) for v in range(n)]
    else:
        ld = g.label_dict
        per_set = [_label_set_digest(ld.vertex_label_set(s), key) for s in range(len(ld.vertex_label_sets))]
        values = [per_set[s] for s in g.vertex_labels.tolist()]
    hi = np.fromiter((x >> 64 for x in values), dtype=np.uint64, count=n)
    lo = np.fromiter((x & hashing.MASK64 for x in values), dtype=np.uint64, count=n)
    return hi, lo


def edge_schema(label_set_id: int, g: LabeledGraph, atom: RelationAtom, key: int = hashing.DEFAULT_KEY) -> int:
    """Value of the label field in messages; constant under the tautology."""
    if atom is RelationAtom.TAUTOLOGY:
        return _TAUTOLOGY_ID
    return _label_set_digest(g.edge_label_set(label_set_id), key)


# -- the summarizer -----------------------------------------------------------

@dataclass
class SummaryGraph:
    """Quotient graph: one vertex per block, one edge per distinct (block, labels, block)."""

    partition: Partition
    edges: list[tuple[int, int, int]]

    @property
    def vertex_count(self) -> int:
        return self.partition.n_blocks


def find_and_merge(g: LabeledGraph, partition: Partition) -> SummaryGraph:
    b = partition.block_of
    if g.edge_count == 0:
        return SummaryGraph(partition, [])
    triples = np.unique(np.stack([b[g.src], g.edge_labels, b[g.dst]], axis=1), axis=0)
    return SummaryGraph(partition, [tuple(int(x) for x in row) for row in triples])


class _State:
    """Identifiers of one kind (hi/lo lanes plus their dense ranks)."""

    __slots__ = ("hi", "lo", "dense", "distinct")

    def __init__(self, hi, lo):
        self.hi, self.lo = hi, lo
        self.dense, self.distinct = hashing.dense_ids(hi, lo)

    def same_as(self, other: "_State") -> bool:
        return np.array_equal(self.hi, other.hi) and np.array_equal(self.lo, other.lo)


def brs_summarize(
    g: LabeledGraph,
    spec: GSMSpec,
    exact: bool = False,
    n_jobs: int = 1,
    drop_object_labels: bool = False,
    early_stop: bool = True,
    record_partitions: bool = False,
    key: int = hashing.DEFAULT_KEY,
) -> PartitionTrace:
    """Summarize ``g`` under ``spec``; the partition groups equal subject ids.

    Rounds for depth ``k``:

    * ``k = 1``: ``id_s <- id_s (+) H{(L, w.id_o)}``.
    * ``k > 1``, first round: ``id_s <- id_s (+) H{(L, w.id_s)}`` and
      ``id_o <- id_o (+) H{(L, w.id_o)}``.
    * middle rounds: the same two updates.
    * final round: ``id_s <- id_s (+) H{(L, w.id_o)}``.

    ``L`` is the edge schema of ``(v, w)``, present only when the predicate
    atom is the identity. With ``drop_object_labels`` the object messages of
    the middle and final rounds omit ``L`` altogether; that variant can merge
    vertices the chained definition separates. If a first or middle round
    leaves both identifier partitions unchanged, later middle rounds cannot
    change them either and the run jumps to the final round. ``k = 0``
    returns the initialization.
    """
    t0 = time.perf_counter()
    if spec.inverted:
        g = invert(g)
    k = spec.k
    labeled = spec.predicate_atom is RelationAtom.IDENTITY
    if labeled:
        n_sets = len(g.label_dict.edge_label_sets)
        words = [hashing.from_int(edge_schema(i, g, spec.predicate_atom, key)) for i in range(n_sets)] or [(0, 0)]
        prefix = _engine.label_prefix(words, key)
        codes = g.edge_labels
    else:
        prefix = codes = None

    s = _State(*_schema_lanes(g, spec.subject_atom, key))
    o = s if spec.object_atom is spec.subject_atom else _State(*_schema_lanes(g, spec.object_atom, key))
    trace = PartitionTrace(partition=None, k=k, block_counts=[s.distinct])  # type: ignore[arg-type]
    partitions = [Partition(s.dense)] if record_partitions else None
    trace.init_seconds = time.perf_counter() - t0

    def hash_set(src: _State, with_labels: bool):
        return _engine.collect(g, src.hi, src.lo, src.dense, src.distinct,
                               codes if with_labels else None, prefix if with_labels else None, key, n_jobs)

    def fold(old: _State, new_set, src: _State, with_labels: bool) -> _State:
        hi, lo = hashing.combine_lanes((old.hi, old.lo), new_set, key)
        out = _State(hi, lo)
        if exact:
            lc = codes if with_labels else None
            hashing.check_exact(out.dense, _engine.exact_keys(g, src.dense, lc, old.dense), "identifier")
        return out

    def record(state: _State, t: float) -> None:
        trace.block_counts.append(state.distinct)
        trace.iterations_executed += 1
        if partitions is not None:
            partitions.append(Partition(state.dense))
        trace.iteration_seconds.append(time.perf_counter() - t)

    object_labels = labeled and not drop_object_labels
    if k == 1:
        t = time.perf_counter()
        s = fold(s, hash_set(o, labeled), o, labeled)
        record(s, t)
    elif k > 1:
        done = 1
        while done < k:
            t = time.perf_counter()
            first = done == 1
            with_o_labels = labeled if first else object_labels
            shared = s.same_as(o) and with_o_labels == labeled
            ms = hash_set(s, labeled)
            new_s = fold(s, ms, s, labeled)
            if shared:
                new_o = new_s
            else:
                new_o = fold(o, hash_set(o, with_o_labels), o, with_o_labels)
            unchanged = new_s.distinct == s.distinct and new_o.distinct == o.distinct
            s, o = new_s, new_o
            record(s, t)
            done += 1
            if early_stop and unchanged and done < k:
                trace.terminated_early = True
                break
        t = time.perf_counter()
        s = fold(s, hash_set(o, object_labels), o, object_labels)
        record(s, t)

    t = time.perf_counter()
    trace.partition = Partition(s.dense)
    trace.partitions = partitions
    trace.ids = (s.hi, s.lo)
    if trace.iteration_seconds:
        trace.iteration_seconds[-1] += time.perf_counter() - t
    return trace
