"""Experiment runner: warm-up plus measured runs, timings, peak memory, reports.

A run times the algorithm call with a monotonic clock and takes the
per-iteration and initialization times from the returned trace. Peak memory
is the largest resident set size seen by a background sampler (50 ms period)
plus one final sample, so it is an approximation from above of live bytes.
"""
from __future__ import annotations

import csv
import io
import json
import threading
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import psutil

from . import oracle
from .brs import GSMSpec, brs_summarize
from .graph import LabeledGraph
from .ingestion import ConfigurationError, GeneratorParams, generate_synthetic, read_ntriples
from .kaushik import bisim_kaushik, naive_coarsest_partition
from .partition import Partition, PartitionTrace, label_partition, partitions_equal
from .schaetzle import bisim_schaetzle

ALGORITHMS = ("native-schaetzle", "native-kaushik", "naive-pt", "brs", "oracle")


class DeterminismError(RuntimeError):
    """Measured runs of one experiment disagreed on the final partition."""


@dataclass
class ExperimentConfig:
    algorithm: str
    k: int | None = None
    gsm: str | None = None
    oracle_variant: str = "edge-labeled-forward"
    input: str | None = None
    generate: str | None = None
    warmup_runs: int = 1
    measured_runs: int = 5
    threads: int = 1
    output_format: str = "json"
    exact: bool = False

    def validate(self, require_source: bool = True) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {self.algorithm!r}; choose from {', '.join(ALGORITHMS)}")
        if self.measured_runs < 1:
            raise ConfigurationError("measured_runs must be at least 1")
        if self.warmup_runs < 0:
            raise ConfigurationError("warmup_runs must be non-negative")
        if self.threads < 1:
            raise ConfigurationError("threads must be at least 1")
        if self.output_format not in ("csv", "json"):
            raise ConfigurationError(f"unknown output format {self.output_format!r}")
        if self.input is not None and self.generate is not None:
            raise ConfigurationError("input and generate are mutually exclusive")
        if require_source and self.input is None and self.generate is None:
            raise ConfigurationError("one of input and generate is required")
        if self.algorithm == "oracle" and self.oracle_variant not in oracle.VARIANTS:
            raise ConfigurationError(f"unknown oracle variant {self.oracle_variant!r}")
        k = self.effective_k()
        if self.algorithm == "oracle":
            if k is None or k < 0:
                raise ConfigurationError("oracle runs need k >= 0")
        elif self.algorithm != "naive-pt" and (k is None or k < 1):
            raise ConfigurationError("k must be at least 1")

    def spec(self) -> GSMSpec:
        return GSMSpec.parse(self.gsm or "cp((T,id,T))", default_k=self.k)

    def effective_k(self) -> int | None:
        if self.algorithm == "brs":
            spec = self.spec()
            if self.k is not None and spec.k != self.k:
                raise ConfigurationError(f"k={self.k} disagrees with the depth in {self.gsm!r}")
            return spec.k
        return self.k

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunRecord:
    run: int
    warmup: bool
    total_seconds: float
    init_seconds: float
    iteration_seconds: list[float]
    block_counts: list[int]
    peak_memory_bytes: int
    iterations_executed: int
    terminated_early: bool

    @property
    def block_count(self) -> int:
        return self.block_counts[-1] if self.block_counts else 0


@dataclass
class Failure:
    kind: str
    run: int
    message: str


@dataclass
class ExperimentReport:
    config: dict
    graph: dict
    runs: list[RunRecord] = field(default_factory=list)
    failure: Failure | None = None
    # final partition of the last completed run; not serialized
    partition: Partition | None = field(default=None, compare=False, repr=False)

    @property
    def status(self) -> str:
        return "ok" if self.failure is None else self.failure.kind

    @property
    def measured(self) -> list[RunRecord]:
        return [r for r in self.runs if not r.warmup]

    def aggregate(self) -> dict:
        """Means over measured runs only."""
        runs = self.measured
        if not runs:
            return {}
        mean = lambda xs: sum(xs) / len(xs)  # noqa: E731
        depth = max(len(r.iteration_seconds) for r in runs)
        per_iter = []
        for i in range(depth):
            xs = [r.iteration_seconds[i] for r in runs if i < len(r.iteration_seconds)]
            per_iter.append(mean(xs))
        return {
            "runs": len(runs),
            "total_seconds": mean([r.total_seconds for r in runs]),
            "init_seconds": mean([r.init_seconds for r in runs]),
            "peak_memory_bytes": mean([r.peak_memory_bytes for r in runs]),
            "iterations_executed": mean([r.iterations_executed for r in runs]),
            "block_count": runs[-1].block_count,
            "iteration_seconds": per_iter,
        }

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "graph": self.graph,
            "status": self.status,
            "runs": [asdict(r) for r in self.runs],
            "failure": asdict(self.failure) if self.failure else None,
            "aggregate": self.aggregate(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        failure = Failure(**d["failure"]) if d.get("failure") else None
        return cls(d["config"], d["graph"], [RunRecord(**r) for r in d["runs"]], failure)


# -- memory sampling ------------------------------------------------------------

class PeakMemorySampler:
    """Background thread sampling this process's resident set size."""

    def __init__(self, interval: float = 0.05):
        self.interval = interval
        self._proc = psutil.Process()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self.peak = 0
        self.samples = 0

    def sample(self) -> int:
        rss = self._proc.memory_info().rss
        self.peak = max(self.peak, rss)
        self.samples += 1
        return rss

    def _loop(self) -> None:
        while not self._stop.wait(self.interval):
            self.sample()

    def __enter__(self) -> "PeakMemorySampler":
        self.sample()
        self._thread = threading.Thread(target=self._loop, name="peak-memory", daemon=True)
        self._thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join()
        self.sample()


# -- running --------------------------------------------------------------------

def load_graph(cfg: ExperimentConfig) -> LabeledGraph:
    if cfg.input is not None:
        return read_ntriples(cfg.input)
    return generate_synthetic(GeneratorParams.parse(cfg.generate))


def run_algorithm(cfg: ExperimentConfig, g: LabeledGraph) -> PartitionTrace:
    k = cfg.effective_k()
    if cfg.algorithm == "native-schaetzle":
        return bisim_schaetzle(g, k, exact=cfg.exact, n_jobs=cfg.threads)
    if cfg.algorithm == "native-kaushik":
        return bisim_kaushik(g, k)
    if cfg.algorithm == "brs":
        return brs_summarize(g, cfg.spec(), exact=cfg.exact, n_jobs=cfg.threads)
    if cfg.algorithm == "naive-pt":
        t = time.perf_counter()
        p0 = label_partition(g)
        init = time.perf_counter() - t
        t = time.perf_counter()
        p = naive_coarsest_partition(p0, g)
        return PartitionTrace(partition=p, k=0, block_counts=[p0.n_blocks, p.n_blocks],
                              iteration_seconds=[time.perf_counter() - t], init_seconds=init,
                              iterations_executed=1)
    seconds: list[float] = []
    levels = oracle.VARIANTS[cfg.oracle_variant](g, k, seconds)
    return PartitionTrace(partition=levels[-1], k=k, block_counts=[p.n_blocks for p in levels],
                          iteration_seconds=seconds, iterations_executed=k)


def run_experiment(cfg: ExperimentConfig, graph: LabeledGraph | None = None) -> ExperimentReport:
    """Warm-up runs, then measured runs, in this process.

    A :class:`MemoryError` ends the experiment with an ``oom`` failure that
    names the run index; the runs completed before it are kept.
    """
    cfg.validate(require_source=graph is None)
    info: dict = {}
    if graph is None:
        t = time.perf_counter()
        graph = load_graph(cfg)
        info["load_seconds"] = time.perf_counter() - t
    g = graph
    info.update(vertices=g.vertex_count, edges=g.edge_count)
    report = ExperimentReport(cfg.to_dict(), info)
    reference = None
    for i in range(cfg.warmup_runs + cfg.measured_runs):
        try:
            with PeakMemorySampler() as mem:
                t0 = time.perf_counter()
                trace = run_algorithm(cfg, g)
                total = time.perf_counter() - t0
        except MemoryError as exc:
            report.failure = Failure("oom", i, str(exc) or "out of memory")
            break
        report.runs.append(RunRecord(
            run=i, warmup=i < cfg.warmup_runs, total_seconds=total, init_seconds=trace.init_seconds,
            iteration_seconds=list(trace.iteration_seconds), block_counts=list(trace.block_counts),
            peak_memory_bytes=int(mem.peak), iterations_executed=trace.iterations_executed,
            terminated_early=trace.terminated_early,
        ))
        report.partition = trace.partition
        if reference is None:
            reference = trace.partition
        elif not partitions_equal(reference, trace.partition):
            raise DeterminismError(f"run {i} produced a different partition than run 0")
    return report


# -- serialization --------------------------------------------------------------

def to_json(report: ExperimentReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def from_json(text: str) -> ExperimentReport:
    return ExperimentReport.from_dict(json.loads(text))


CSV_COLUMNS = ("kind", "run", "warmup", "iteration", "seconds", "block_count", "init_seconds",
               "total_seconds", "peak_memory_bytes", "iterations_executed", "terminated_early", "status",
               "key", "value")


def _num(x) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


def to_csv(report: ExperimentReport) -> str:
    """Long-format CSV.

    ``iteration`` rows belong to measured runs and ``warmup_iteration`` rows
    to warm-up runs; iteration ``0`` of each run carries the initial block
    count and no time. ``config`` and ``graph`` rows hold JSON values.
    """
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for key in sorted(report.config):
        w.writerow({"kind": "config", "key": key, "value": json.dumps(report.config[key])})
    for key in sorted(report.graph):
        w.writerow({"kind": "graph", "key": key, "value": json.dumps(report.graph[key])})
    for r in report.runs:
        w.writerow({"kind": "run", "run": r.run, "warmup": int(r.warmup), "block_count": r.block_count,
                    "init_seconds": _num(r.init_seconds), "total_seconds": _num(r.total_seconds),
                    "peak_memory_bytes": r.peak_memory_bytes, "iterations_executed": r.iterations_executed,
                    "terminated_early": int(r.terminated_early), "status": "ok"})
        kind = "warmup_iteration" if r.warmup else "iteration"
        w.writerow({"kind": "initial", "run": r.run, "iteration": 0,
                    "block_count": r.block_counts[0] if r.block_counts else 0})
        for i, sec in enumerate(r.iteration_seconds, 1):
            count = r.block_counts[i] if i < len(r.block_counts) else ""
            w.writerow({"kind": kind, "run": r.run, "iteration": i, "seconds": _num(sec), "block_count": count})
    if report.failure is not None:
        f = report.failure
        w.writerow({"kind": "failure", "run": f.run, "status": f.kind, "value": f.message})
    agg = report.aggregate()
    for key in sorted(agg):
        if key == "iteration_seconds":
            continue
        w.writerow({"kind": "aggregate", "key": key, "value": _num(agg[key])})
    for i, sec in enumerate(agg.get("iteration_seconds", []), 1):
        w.writerow({"kind": "aggregate_iteration", "iteration": i, "seconds": _num(sec)})
    return buf.getvalue()


def from_csv(text: str) -> ExperimentReport:
    config, graph, runs, failure = {}, {}, {}, None
    for row in csv.DictReader(io.StringIO(text)):
        kind = row["kind"]
        if kind == "config":
            config[row["key"]] = json.loads(row["value"])
        elif kind == "graph":
            graph[row["key"]] = json.loads(row["value"])
        elif kind == "run":
            runs[int(row["run"])] = RunRecord(
                run=int(row["run"]), warmup=bool(int(row["warmup"])), total_seconds=float(row["total_seconds"]),
                init_seconds=float(row["init_seconds"]), iteration_seconds=[], block_counts=[],
                peak_memory_bytes=int(row["peak_memory_bytes"]), iterations_executed=int(row["iterations_executed"]),
                terminated_early=bool(int(row["terminated_early"])),
            )
        elif kind == "initial":
            runs[int(row["run"])].block_counts.append(int(row["block_count"]))
        elif kind in ("iteration", "warmup_iteration"):
            r = runs[int(row["run"])]
            r.iteration_seconds.append(float(row["seconds"]))
            if row["block_count"] != "":
                r.block_counts.append(int(row["block_count"]))
        elif kind == "failure":
            failure = Failure(row["status"], int(row["run"]), row["value"])
    return ExperimentReport(config, graph, [runs[i] for i in sorted(runs)], failure)


def emit_report(report: ExperimentReport, fmt: str = "json") -> bytes:
    if fmt == "json":
        return to_json(report).encode("utf-8")
    if fmt == "csv":
        return to_csv(report).encode("utf-8")
    raise ConfigurationError(f"unknown output format {fmt!r}")


def load_report(data: bytes | str, fmt: str = "json") -> ExperimentReport:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    return from_json(text) if fmt == "json" else from_csv(text)


def write_report(report: ExperimentReport, path: str | Path, fmt: str = "json") -> None:
    Path(path).write_bytes(emit_report(report, fmt))

