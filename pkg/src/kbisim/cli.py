"""``kbisim`` command line: run, generate, stats, verify.

Exit codes: 0 success, 1 bad input or configuration, 2 verification
mismatch, 3 out of memory during a run.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench, oracle
from .brs import GSMParseError
from .graph import IngestionError, compute_statistics
from .ingestion import ConfigurationError, GeneratorParams, generate_synthetic, write_ntriples
from .partition import export_partition, partitions_equal

EXIT_OK, EXIT_ERROR, EXIT_MISMATCH, EXIT_OOM = 0, 1, 2, 3


def _add_source(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="N-Triples file (.nt or .nt.gz)")
    src.add_argument("--generate", metavar="PARAMS", help="synthetic graph, e.g. n=1000,m=5000,seed=7")


def _add_algorithm(p: argparse.ArgumentParser, flag: str = "--algorithm", required: bool = True) -> None:
    p.add_argument(flag, choices=bench.ALGORITHMS, required=required)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gsm", help="summary model for brs, e.g. 'cp((T,id,T),k=5)' or 'cp(inv(OC,T,OC),k=5)'")
    p.add_argument("--k", type=int, help="bisimulation depth")
    p.add_argument("--oracle-variant", default="edge-labeled-forward", choices=sorted(oracle.VARIANTS))
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--exact", action="store_true", help="verify every hash grouping against exact keys")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kbisim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and emit a report")
    _add_algorithm(run)
    _add_source(run)
    _add_common(run)
    run.add_argument("--runs", type=int, default=5, help="measured runs")
    run.add_argument("--warmup", type=int, default=1, help="unmeasured warm-up runs")
    run.add_argument("--format", choices=("json", "csv"), default="json")
    run.add_argument("--out", help="report path (default: stdout)")
    run.add_argument("--export-partition", metavar="PATH", help="write the final partition in canonical form")

    gen = sub.add_parser("generate", help="write a synthetic graph as N-Triples")
    gen.add_argument("params", help="e.g. n=1000,m=5000,seed=7")
    gen.add_argument("--out", required=True, help="output path; .gz compresses")

    stats = sub.add_parser("stats", help="print dataset statistics as JSON")
    _add_source(stats)

    verify = sub.add_parser("verify", help="check that two algorithms produce equal partitions")
    _add_algorithm(verify)
    _add_algorithm(verify, "--against")
    _add_source(verify)
    _add_common(verify)
    verify.add_argument("--against-gsm", help="summary model for the second algorithm when it is brs")
    verify.add_argument("--against-oracle-variant", choices=sorted(oracle.VARIANTS))
    return parser


def _config(args, algorithm: str, gsm: str | None, variant: str, runs: int = 1, warmup: int = 0,
            fmt: str = "json") -> bench.ExperimentConfig:
    return bench.ExperimentConfig(
        algorithm=algorithm, k=args.k, gsm=gsm, oracle_variant=variant, input=args.input,
        generate=args.generate, warmup_runs=warmup, measured_runs=runs, threads=args.threads,
        output_format=fmt, exact=args.exact,
    )


def _write(data: bytes, out: str | None) -> None:
    if out:
        Path(out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def cmd_run(args) -> int:
    cfg = _config(args, args.algorithm, args.gsm, args.oracle_variant, args.runs, args.warmup, args.format)
    cfg.validate()
    g = bench.load_graph(cfg)
    report = bench.run_experiment(cfg, g)
    _write(bench.emit_report(report, args.format), args.out)
    if args.export_partition and report.partition is not None:
        Path(args.export_partition).write_text(export_partition(report.partition, g), encoding="utf-8")
    if report.failure is not None:
        print(f"kbisim: {report.failure.kind} in run {report.failure.run}: {report.failure.message}",
              file=sys.stderr)
        return EXIT_OOM
    return EXIT_OK


def cmd_generate(args) -> int:
    g = generate_synthetic(GeneratorParams.parse(args.params))
    write_ntriples(g, args.out)
    print(json.dumps({"vertices": g.vertex_count, "edges": g.edge_count, "out": args.out}))
    return EXIT_OK


def cmd_stats(args) -> int:
    cfg = bench.ExperimentConfig(algorithm="oracle", k=0, input=args.input, generate=args.generate)
    stats = compute_statistics(bench.load_graph(cfg))
    print(json.dumps(stats.to_dict(), indent=2))
    return EXIT_OK


def cmd_verify(args) -> int:
    left = _config(args, args.algorithm, args.gsm, args.oracle_variant)
    right = _config(args, args.against, args.against_gsm or args.gsm,
                    args.against_oracle_variant or args.oracle_variant)
    left.validate()
    right.validate()
    g = bench.load_graph(left)
    a = bench.run_algorithm(left, g).partition
    b = bench.run_algorithm(right, g).partition
    same = partitions_equal(a, b)
    print(json.dumps({"equal": same, "blocks": [a.n_blocks, b.n_blocks],
                      "algorithms": [args.algorithm, args.against]}))
    return EXIT_OK if same else EXIT_MISMATCH


_COMMANDS = {"run": cmd_run, "generate": cmd_generate, "stats": cmd_stats, "verify": cmd_verify}


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; 2 is reserved for verify mismatches
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except (ConfigurationError, GSMParseError, IngestionError, FileNotFoundError) as exc:
        print(f"kbisim: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except MemoryError:
        print("kbisim: out of memory", file=sys.stderr)
        return EXIT_OOM


if __name__ == "__main__":
    sys.exit(main())
