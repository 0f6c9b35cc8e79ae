"""Stratified k-bisimulation partitions of labeled graphs.

Four ways to compute them share one graph model and one partition type:
signature hashing (edge-labeled forward), block splitting (vertex-labeled
backward), a generic summarizer driven by a summary-model spec, and plain
reference implementations of the inductive definitions.
"""
from .brs import GSMParseError, GSMSpec, RelationAtom, SummaryGraph, brs_summarize, find_and_merge, vertex_schema
from .estimators import (
    BRSSummarizer,
    KaushikBisimulation,
    NaiveCoarsestPartition,
    OracleBisimulation,
    SchaetzleBisimulation,
    check_graph,
)
from .graph import GraphStats, IngestionError, LabelDictionary, LabeledGraph, build_graph, compute_statistics, invert
from .hashing import HashCollisionError, combine, merge_and_hash
from .ingestion import (
    ConfigurationError,
    GeneratorParams,
    IngestionConfig,
    NTriplesParseError,
    generate_synthetic,
    parse_ntriples,
    read_ntriples,
    serialize_ntriples,
    write_ntriples,
)
from .kaushik import SplitterLedger, bisim_kaushik, naive_coarsest_partition
from .oracle import (
    oracle_backward,
    oracle_edge_labeled_forward,
    oracle_forward,
    oracle_vertex_labeled_backward,
)
from .partition import (
    Partition,
    PartitionTrace,
    export_partition,
    is_refinement,
    is_stable,
    partitions_equal,
    split,
)
from .schaetzle import bisim_schaetzle, signature_of

__version__ = "0.1.0"

__all__ = [
    "BRSSummarizer", "ConfigurationError", "GSMParseError", "GSMSpec", "GeneratorParams", "GraphStats",
    "HashCollisionError", "IngestionConfig", "IngestionError", "KaushikBisimulation", "LabelDictionary",
    "LabeledGraph", "NTriplesParseError", "NaiveCoarsestPartition", "OracleBisimulation", "Partition",
    "PartitionTrace", "RelationAtom", "SchaetzleBisimulation", "SplitterLedger", "SummaryGraph",
    "bisim_kaushik", "bisim_schaetzle", "brs_summarize", "build_graph", "check_graph", "combine",
    "compute_statistics", "export_partition", "find_and_merge", "generate_synthetic", "invert",
    "is_refinement", "is_stable", "merge_and_hash", "naive_coarsest_partition", "oracle_backward",
    "oracle_edge_labeled_forward", "oracle_forward", "oracle_vertex_labeled_backward", "parse_ntriples",
    "partitions_equal", "read_ntriples", "serialize_ntriples", "signature_of", "split", "vertex_schema",
    "write_ntriples",
]
