"""N-Triples ingestion/serialization and a seeded synthetic graph generator."""
from __future__ import annotations

import gzip
import io
import re
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import IO, Iterable, Iterator

import numpy as np

from .graph import BNODE, IRI, LITERAL, IngestionError, LabelDictionary, LabeledGraph, build_graph

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"

_IRI_FORBIDDEN = re.compile(r'[\s<>"{}|^`\\]')


class NTriplesParseError(IngestionError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class IngestionConfig:
    type_predicate: str = RDF_TYPE
    literal_label: str = "Literal"
    explode_label_sets: bool = False

    def __post_init__(self):
        if not self.type_predicate or _IRI_FORBIDDEN.search(self.type_predicate):
            raise ConfigurationError(f"type_predicate is not a valid IRI: {self.type_predicate!r}")


_WS = r"[ \t]*"
_IRI = r"<([^<>\"{}|^`\\\s]*)>"
_BNODE = r"(_:[A-Za-z0-9_][A-Za-z0-9_.\-]*)"
_LITERAL = r'("(?:[^"\\\n\r]|\\.)*"(?:@[A-Za-z]+(?:-[A-Za-z0-9]+)*|\^\^<[^<>"{}|^`\\\s]*>)?)'
_LINE = re.compile(
    rf"^{_WS}(?:{_IRI}|{_BNODE}){_WS}{_IRI}{_WS}(?:{_IRI}|{_BNODE}|{_LITERAL}){_WS}\.{_WS}(?:#.*)?$"
)


def _lines(source) -> Iterator[str]:
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    elif isinstance(source, str):
        source = io.StringIO(source)
    for raw in source:
        yield raw.decode("utf-8") if isinstance(raw, (bytes, bytearray)) else raw


def iter_ntriples(source) -> Iterator[tuple[str, str, str, str]]:
    """Yield ``(s, p, o, object_kind)`` from N-Triples text.

    IRIs are returned without angle brackets, blank nodes as ``_:label`` and
    literals in their quoted surface form (language tag or datatype kept).
    """
    for lineno, line in enumerate(_lines(source), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        m = _LINE.match(line.rstrip("\r\n"))
        if m is None:
            if stripped.count('"') % 2 == 1 or re.search(r'"(?:[^"\\]|\\.)*$', stripped):
                raise NTriplesParseError(lineno, "unterminated literal")
            raise NTriplesParseError(lineno, f"malformed statement: {stripped[:80]!r}")
        s_iri, s_bn, pred, o_iri, o_bn, o_lit = m.groups()
        s = s_iri if s_iri is not None else s_bn
        if o_iri is not None:
            yield s, pred, o_iri, "iri"
        elif o_bn is not None:
            yield s, pred, o_bn, "bnode"
        else:
            yield s, pred, o_lit, "literal"


def parse_ntriples(source, config: IngestionConfig | None = None) -> LabeledGraph:
    return build_graph(iter_ntriples(source), config or IngestionConfig())


def _open(path: str | Path, mode: str) -> IO:
    path = str(path)
    if path.endswith(".gz"):
        return gzip.open(path, mode)
    return open(path, mode)


def read_ntriples(path: str | Path, config: IngestionConfig | None = None) -> LabeledGraph:
    with _open(path, "rb") as f:
        return parse_ntriples(f, config)


def _render(term: str, kind: int) -> str:
    if kind == LITERAL:
        return term
    if kind == BNODE:
        return term
    return f"<{term}>"


def _render_label(label: str) -> str:
    if label.startswith('"') or label.startswith("_:"):
        return label
    return f"<{label}>"


def iter_serialized(g: LabeledGraph, config: IngestionConfig | None = None) -> Iterator[str]:
    config = config or IngestionConfig()
    ld = g.label_dict
    terms, kinds = g.terms, g.kinds.tolist()
    tp = f"<{config.type_predicate}>"
    for v, sid in enumerate(g.vertex_labels.tolist()):
        if kinds[v] == LITERAL:
            continue
        for label in sorted(ld.vertex_label_set(sid)):
            yield f"{_render(terms[v], kinds[v])} {tp} {_render_label(label)} .\n"
    set_cache: dict[int, list[str]] = {}
    for s, d, lab in zip(g.src.tolist(), g.dst.tolist(), g.edge_labels.tolist()):
        preds = set_cache.get(lab)
        if preds is None:
            preds = set_cache[lab] = sorted(ld.edge_label_set(lab))
        head = _render(terms[s], kinds[s])
        tail = _render(terms[d], kinds[d])
        for p in preds:
            yield f"{head} <{p}> {tail} .\n"


def serialize_ntriples(g: LabeledGraph, config: IngestionConfig | None = None) -> bytes:
    """N-Triples bytes for ``g``.

    Unlabeled isolated vertices have no statement to carry them and are lost;
    the literal label on literal vertices is implied and not written.
    """
    return "".join(iter_serialized(g, config)).encode("utf-8")


def write_ntriples(g: LabeledGraph, path: str | Path, config: IngestionConfig | None = None) -> None:
    with _open(path, "wb") as f:
        for line in iter_serialized(g, config):
            f.write(line.encode("utf-8"))


# -- synthetic generator ------------------------------------------------------

@dataclass(frozen=True)
class GeneratorParams:
    vertex_count: int
    edge_count: int
    edge_labels: int = 8
    vertex_labels: int = 16
    max_labels_per_vertex: int = 1
    skew: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        if self.vertex_count < 0 or self.edge_count < 0:
            raise ConfigurationError("vertex and edge counts must be non-negative")
        if self.edge_count > self.vertex_count ** 2:
            raise ConfigurationError(
                f"edge_count {self.edge_count} exceeds vertex_count**2 = {self.vertex_count ** 2}"
            )
        if self.edge_labels < 1 or self.vertex_labels < 1:
            raise ConfigurationError("label alphabets need at least one label")
        if self.max_labels_per_vertex < 0:
            raise ConfigurationError("max_labels_per_vertex must be non-negative")
        if not self.skew >= 0:
            raise ConfigurationError("skew must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def parse(cls, text: str) -> "GeneratorParams":
        """Parse ``n=..,m=..,seed=..`` style strings (long field names also accepted)."""
        aliases = {"n": "vertex_count", "m": "edge_count", "el": "edge_labels", "vl": "vertex_labels",
                   "maxl": "max_labels_per_vertex"}
        kwargs: dict = {}
        for part in filter(None, (p.strip() for p in text.split(","))):
            if "=" not in part:
                raise ConfigurationError(f"expected key=value, got {part!r}")
            key, value = (x.strip() for x in part.split("=", 1))
            key = aliases.get(key, key)
            if key not in cls.__dataclass_fields__:
                raise ConfigurationError(f"unknown generator parameter {key!r}")
            try:
                kwargs[key] = float(value) if key == "skew" else int(float(value))
            except ValueError:
                raise ConfigurationError(f"bad value for {key}: {value!r}") from None
        if "vertex_count" not in kwargs or "edge_count" not in kwargs:
            raise ConfigurationError("generator needs n and m")
        return cls(**kwargs)


def _skewed_sampler(rng: np.random.Generator, n: int, skew: float):
    weights = (np.arange(1, n + 1, dtype=np.float64)) ** (-skew)
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    perm = rng.permutation(n)

    def draw(size: int) -> np.ndarray:
        ranks = np.searchsorted(cdf, rng.random(size), side="right")
        return perm[np.minimum(ranks, n - 1)]

    return draw


def generate_synthetic(params: GeneratorParams) -> LabeledGraph:
    """Random labeled graph with power-law-like degree skew.

    Both endpoints are drawn from Zipf-like distributions (exponent ``skew``)
    over independently permuted vertex ranks, so hubs on the in- and out-side
    differ. Duplicate (source, target) pairs are redrawn until exactly
    ``edge_count`` distinct pairs exist.
    """
    params.validate()
    n, m = params.vertex_count, params.edge_count
    rng = np.random.default_rng(params.seed)
    ld = LabelDictionary()
    for i in range(params.edge_labels):
        ld.intern_edge_label_set([f"p{i}"])

    if m:
        draw_src = _skewed_sampler(rng, n, params.skew)
        draw_dst = _skewed_sampler(rng, n, params.skew)
        codes = np.zeros(0, dtype=np.int64)
        for _ in range(64):
            need = m - codes.shape[0]
            if need <= 0:
                break
            batch = int(need * 1.1) + 16
            new = draw_src(batch).astype(np.int64) * n + draw_dst(batch)
            allc = np.concatenate([codes, new])
            _, first = np.unique(allc, return_index=True)
            codes = allc[np.sort(first)]
        if codes.shape[0] < m and codes.shape[0] < 0.99 * m:
            raise ConfigurationError("degree skew too strong to reach the requested edge count")
        codes = codes[:m]
        src, dst = codes // n, codes % n
        lab = rng.integers(0, params.edge_labels, size=codes.shape[0])
    else:
        src = dst = lab = np.zeros(0, dtype=np.int64)

    vlab = _vertex_label_sets(rng, params, ld)
    terms = [f"v{i}" for i in range(n)]
    return LabeledGraph(terms, vlab, src, dst, lab, ld, np.full(n, IRI, dtype=np.int8))


def _vertex_label_sets(rng: np.random.Generator, params: GeneratorParams, ld: LabelDictionary) -> np.ndarray:
    n, width = params.vertex_count, params.max_labels_per_vertex
    for i in range(params.vertex_labels):
        ld.vertex_labels.intern(f"c{i}")
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    if width == 0:
        empty = ld.intern_vertex_label_set(())
        return np.full(n, empty, dtype=np.int64)
    draw = _skewed_sampler(rng, params.vertex_labels, params.skew)
    counts = rng.integers(0, width + 1, size=n)
    mat = draw(n * width).reshape(n, width).astype(np.int64)
    mat[np.arange(width)[None, :] >= counts[:, None]] = -1
    mat.sort(axis=1)
    dup = np.zeros_like(mat, dtype=bool)
    dup[:, 1:] = (mat[:, 1:] == mat[:, :-1]) & (mat[:, 1:] >= 0)
    mat[dup] = -1
    mat.sort(axis=1)
    rows, inverse = np.unique(mat, axis=0, return_inverse=True)
    set_ids = np.array(
        [ld.vertex_label_sets.intern(tuple(int(x) for x in row if x >= 0)) for row in rows], dtype=np.int64
    )
    return set_ids[inverse.reshape(-1)]


def iter_triples(g: LabeledGraph, config: IngestionConfig | None = None) -> Iterable[tuple[str, str, str, str]]:
    """Inverse of :func:`build_graph` at the triple level."""
    from .graph import KIND_NAMES

    config = config or IngestionConfig()
    ld = g.label_dict
    for v, sid in enumerate(g.vertex_labels.tolist()):
        if g.kinds[v] == LITERAL:
            continue
        for label in sorted(ld.vertex_label_set(sid)):
            yield g.terms[v], config.type_predicate, label, "iri"
    for s, d, lab in zip(g.src.tolist(), g.dst.tolist(), g.edge_labels.tolist()):
        for p in sorted(ld.edge_label_set(lab)):
            yield g.terms[s], p, g.terms[d], KIND_NAMES[int(g.kinds[d])]
