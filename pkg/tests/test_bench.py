import csv
import io
import json

import psutil
import pytest

from kbisim import bench
from kbisim.bench import (
    DeterminismError,
    ExperimentConfig,
    ExperimentReport,
    Failure,
    PeakMemorySampler,
    RunRecord,
    emit_report,
    load_report,
    run_experiment,
)
from kbisim.graph import IngestionError, build_graph
from kbisim.ingestion import ConfigurationError, GeneratorParams, generate_synthetic
from kbisim.partition import Partition, PartitionTrace

from _graphs import DATA, EXAMPLE

GOLDEN = DATA / "golden_report.csv"


def fixed_report(n_runs=3, n_iters=4, warmup=1):
    runs = []
    for r in range(n_runs):
        runs.append(RunRecord(
            run=r, warmup=r < warmup, total_seconds=1.5 + r / 8, init_seconds=0.25,
            iteration_seconds=[0.1 * (i + 1) + r / 64 for i in range(n_iters)],
            block_counts=[1] + [2 ** min(i + 1, 3) for i in range(n_iters)],
            peak_memory_bytes=1 << 20 | r, iterations_executed=n_iters, terminated_early=False,
        ))
    cfg = ExperimentConfig("brs", gsm="cp((T,id,T),k=4)", generate="n=10,m=20,seed=1").to_dict()
    return ExperimentReport(cfg, {"vertices": 10, "edges": 20}, runs)


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig("native-schaetzle", k=3, input="x.nt")
        assert cfg.warmup_runs == 1 and cfg.measured_runs == 5
        cfg.validate()

    @pytest.mark.parametrize("kw", [
        dict(algorithm="nope", k=2),
        dict(algorithm="native-schaetzle", k=0),
        dict(algorithm="native-kaushik"),
        dict(algorithm="native-schaetzle", k=2, measured_runs=0),
        dict(algorithm="native-schaetzle", k=2, warmup_runs=-1),
        dict(algorithm="native-schaetzle", k=2, threads=0),
        dict(algorithm="native-schaetzle", k=2, output_format="xml"),
        dict(algorithm="oracle", k=-1),
        dict(algorithm="oracle", k=1, oracle_variant="sideways"),
        dict(algorithm="brs", gsm="cp((T,id,T),k=3)", k=4),
        dict(algorithm="brs", gsm="cp((T,id,T),k=0)"),
    ])
    def test_invalid(self, kw):
        with pytest.raises(ConfigurationError):
            ExperimentConfig(input="x.nt", **kw).validate()

    def test_sources(self):
        with pytest.raises(ConfigurationError):
            ExperimentConfig("oracle", k=1).validate()
        with pytest.raises(ConfigurationError):
            ExperimentConfig("oracle", k=1, input="a", generate="n=1,m=1").validate()
        ExperimentConfig("oracle", k=0).validate(require_source=False)
        ExperimentConfig("naive-pt", input="a").validate()

    def test_brs_depth(self):
        assert ExperimentConfig("brs", gsm="cp((T,id,T),k=3)").effective_k() == 3
        assert ExperimentConfig("brs", k=6).effective_k() == 6
        assert ExperimentConfig("brs", k=3, gsm="cp((T,id,T),k=3)").spec().k == 3


class TestRunExperiment:
    def test_example_brs_early_stop(self):
        cfg = ExperimentConfig("brs", gsm="cp((T,id,T),k=10)", input=str(EXAMPLE), measured_runs=2)
        report = run_experiment(cfg)
        assert report.status == "ok" and len(report.runs) == 3
        for r in report.runs:
            assert r.terminated_early and r.block_count == 3
        assert "load_seconds" in report.graph and report.graph["vertices"] == 10

    def test_oracle_on_empty_graph(self):
        cfg = ExperimentConfig("oracle", k=2, warmup_runs=0, measured_runs=1)
        report = run_experiment(cfg, build_graph([]))
        assert len(report.runs) == 1 and report.runs[0].block_count == 0
        assert report.aggregate()["block_count"] == 0

    def test_generated_cross_algorithm_agreement(self):
        g = generate_synthetic(GeneratorParams(100_000, 500_000, seed=7))
        a = run_experiment(ExperimentConfig("native-schaetzle", k=10, warmup_runs=0, measured_runs=1), g)
        b = run_experiment(ExperimentConfig("brs", gsm="cp((T,id,T),k=10)", warmup_runs=0, measured_runs=1), g)
        assert a.runs[0].block_count == b.runs[0].block_count

    @pytest.mark.parametrize("algorithm,extra", [
        ("native-schaetzle", dict(k=3)),
        ("native-kaushik", dict(k=3)),
        ("naive-pt", {}),
        ("brs", dict(gsm="cp(inv(OC,T,OC),k=3)")),
        ("oracle", dict(k=2, oracle_variant="backward")),
    ])
    def test_every_algorithm_runs(self, algorithm, extra):
        cfg = ExperimentConfig(algorithm, generate="n=300,m=1200,seed=3", warmup_runs=1, measured_runs=2, **extra)
        report = run_experiment(cfg)
        assert report.status == "ok" and len(report.measured) == 2
        for r in report.runs:
            assert len(r.block_counts) == len(r.iteration_seconds) + 1
            assert r.block_counts == sorted(r.block_counts)
        assert isinstance(report.partition, Partition)

    def test_warmup_excluded_from_aggregate(self):
        report = fixed_report(n_runs=3, warmup=1)
        agg = report.aggregate()
        assert agg["runs"] == 2
        assert agg["total_seconds"] == pytest.approx((report.runs[1].total_seconds + report.runs[2].total_seconds) / 2)
        assert agg["iteration_seconds"][0] == pytest.approx(0.1 + 1.5 / 64)

    def test_oom_is_structured(self, monkeypatch):
        calls = []

        def boom(cfg, g):
            calls.append(1)
            if len(calls) == 2:
                raise MemoryError("simulated")
            return PartitionTrace(partition=Partition([0]), k=1, block_counts=[1, 1], iteration_seconds=[0.0],
                                  iterations_executed=1)

        monkeypatch.setattr(bench, "run_algorithm", boom)
        report = run_experiment(ExperimentConfig("native-schaetzle", k=1, measured_runs=3), build_graph([]))
        assert report.status == "oom"
        assert report.failure == Failure("oom", 1, "simulated")
        assert len(report.runs) == 1
        assert load_report(emit_report(report)).failure == report.failure
        assert load_report(emit_report(report, "csv"), "csv").failure == report.failure

    def test_nondeterminism_is_detected(self, monkeypatch):
        parts = iter([Partition([0, 0]), Partition([0, 1])])

        def flaky(cfg, g):
            return PartitionTrace(partition=next(parts), k=1, block_counts=[1])

        monkeypatch.setattr(bench, "run_algorithm", flaky)
        with pytest.raises(DeterminismError):
            run_experiment(ExperimentConfig("native-schaetzle", k=1, warmup_runs=0, measured_runs=2), build_graph([]))

    def test_ingestion_errors_propagate(self, tmp_path):
        bad = tmp_path / "bad.nt"
        bad.write_text("<a> <b> .\n")
        with pytest.raises(IngestionError):
            run_experiment(ExperimentConfig("native-schaetzle", k=1, input=str(bad)))

    def test_iteration_times_sum_to_total(self):
        g = generate_synthetic(GeneratorParams(50_000, 250_000, seed=11))
        for cfg in (ExperimentConfig("native-schaetzle", k=5, warmup_runs=1, measured_runs=2),
                    ExperimentConfig("brs", gsm="cp((T,id,T),k=5)", warmup_runs=1, measured_runs=2)):
            for r in run_experiment(cfg, g).measured:
                rest = r.total_seconds - r.init_seconds
                assert abs(sum(r.iteration_seconds) - rest) <= 0.05 * rest


def test_peak_memory_sampler_is_an_upper_bound():
    with PeakMemorySampler(interval=0.01) as mem:
        block = bytearray(50 << 20)
        during = mem.sample()
        del block
    assert mem.peak >= during
    assert mem.samples >= 3


def test_reported_peak_covers_run():
    report = run_experiment(ExperimentConfig("native-schaetzle", k=2, generate="n=2000,m=8000,seed=1",
                                             warmup_runs=0, measured_runs=1))
    assert report.runs[0].peak_memory_bytes > 0
    assert report.runs[0].peak_memory_bytes <= psutil.Process().memory_info().rss * 4


class TestSerialization:
    def test_json_fixpoint(self):
        report = run_experiment(ExperimentConfig("brs", gsm="cp((T,id,T),k=10)", input=str(EXAMPLE)))
        text = emit_report(report, "json")
        assert emit_report(load_report(text), "json") == text
        doc = json.loads(text)
        assert doc["status"] == "ok" and doc["aggregate"]["runs"] == 5

    def test_csv_round_trip(self):
        report = run_experiment(ExperimentConfig("native-kaushik", k=4, generate="n=200,m=600,seed=2"))
        back = load_report(emit_report(report, "csv"), "csv")
        assert back == report
        assert emit_report(back, "csv") == emit_report(report, "csv")
        assert emit_report(back, "json") == emit_report(report, "json")

    def test_fifty_iteration_rows(self):
        report = fixed_report(n_runs=5, n_iters=10, warmup=0)
        rows = list(csv.DictReader(io.StringIO(emit_report(report, "csv").decode())))
        assert sum(r["kind"] == "iteration" for r in rows) == 50
        assert sum(r["kind"] == "aggregate_iteration" for r in rows) == 10
        assert sum(r["kind"] == "aggregate" for r in rows) > 0

    def test_warmup_iteration_rows_are_separate(self):
        rows = list(csv.DictReader(io.StringIO(emit_report(fixed_report(3, 4, 1), "csv").decode())))
        assert sum(r["kind"] == "iteration" for r in rows) == 8
        assert sum(r["kind"] == "warmup_iteration" for r in rows) == 4

    def test_golden_csv(self):
        data = emit_report(fixed_report(), "csv")
        if not GOLDEN.exists():
            GOLDEN.write_bytes(data)
        assert data == GOLDEN.read_bytes()
        assert b"\r" not in data

    def test_unknown_format(self):
        with pytest.raises(ConfigurationError):
            emit_report(fixed_report(), "xml")

    def test_write_report(self, tmp_path):
        path = tmp_path / "r.json"
        bench.write_report(fixed_report(), path)
        assert load_report(path.read_bytes()) == fixed_report()
