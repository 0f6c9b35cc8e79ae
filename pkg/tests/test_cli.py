import json
import subprocess
import sys

import numpy as np
import pytest

from kbisim import bench
from kbisim.cli import EXIT_ERROR, EXIT_MISMATCH, EXIT_OK, EXIT_OOM, main
from kbisim.ingestion import GeneratorParams, generate_synthetic
from kbisim.partition import parse_partition_export

from _graphs import EXAMPLE

EX = str(EXAMPLE)


def test_run_json_to_stdout(capsys):
    code = main(["run", "--algorithm", "brs", "--gsm", "cp((T,id,T),k=10)", "--input", EX, "--runs", "2"])
    assert code == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["status"] == "ok" and len(doc["runs"]) == 3
    assert doc["aggregate"]["block_count"] == 3


def test_run_csv_and_export(tmp_path):
    out, part = tmp_path / "r.csv", tmp_path / "p.tsv"
    code = main(["run", "--algorithm", "native-kaushik", "--k", "2", "--input", EX, "--runs", "1", "--warmup", "0",
                 "--format", "csv", "--out", str(out), "--export-partition", str(part)])
    assert code == EXIT_OK
    report = bench.load_report(out.read_bytes(), "csv")
    assert report.runs[0].block_count == 10
    assert len(parse_partition_export(part.read_text())) == 10


def test_run_generated(capsys):
    code = main(["run", "--algorithm", "native-schaetzle", "--k", "3", "--generate", "n=500,m=2000,seed=4",
                 "--threads", "2", "--exact", "--runs", "1"])
    assert code == EXIT_OK
    assert json.loads(capsys.readouterr().out)["graph"]["vertices"] > 0


@pytest.mark.parametrize("argv", [
    ["run", "--algorithm", "native-schaetzle", "--input", EX],
    ["run", "--algorithm", "brs", "--gsm", "cp((T,id,Q),k=2)", "--input", EX],
    ["run", "--algorithm", "brs", "--gsm", "cp((T,id,T),k=2)", "--k", "3", "--input", EX],
    ["run", "--algorithm", "native-schaetzle", "--k", "2", "--input", "/no/such/file.nt"],
    ["run", "--algorithm", "native-schaetzle", "--k", "2", "--generate", "n=abc"],
    ["run", "--algorithm", "native-schaetzle", "--k", "2", "--input", EX, "--runs", "0"],
])
def test_configuration_errors_exit_1(argv, capsys):
    assert main(argv) == EXIT_ERROR
    assert capsys.readouterr().err.startswith("kbisim: ")


def test_malformed_input_exits_1(tmp_path, capsys):
    bad = tmp_path / "bad.nt"
    bad.write_text("<a> <b> <c> .\n<a> <b>\n")
    assert main(["stats", "--input", str(bad)]) == EXIT_ERROR
    assert "kbisim:" in capsys.readouterr().err


def test_oom_exits_3(monkeypatch, capsys):
    def boom(cfg, g):
        raise MemoryError("simulated")

    monkeypatch.setattr(bench, "run_algorithm", boom)
    code = main(["run", "--algorithm", "native-schaetzle", "--k", "2", "--input", EX])
    assert code == EXIT_OOM
    captured = capsys.readouterr()
    assert json.loads(captured.out)["status"] == "oom"
    assert "run 0" in captured.err


def test_verify_match_and_mismatch(capsys):
    assert main(["verify", "--algorithm", "native-schaetzle", "--against", "brs", "--k", "5",
                 "--input", EX]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["equal"] is True
    assert main(["verify", "--algorithm", "native-kaushik", "--against", "brs", "--k", "2",
                 "--against-gsm", "cp(inv(OC_type,T,OC_type),k=2)", "--input", EX]) == EXIT_OK
    capsys.readouterr()
    assert main(["verify", "--algorithm", "native-schaetzle", "--against", "native-kaushik", "--k", "2",
                 "--input", EX]) == EXIT_MISMATCH
    assert json.loads(capsys.readouterr().out)["blocks"] == [3, 10]
    assert main(["verify", "--algorithm", "oracle", "--oracle-variant", "forward", "--against", "oracle",
                 "--against-oracle-variant", "edge-labeled-forward", "--k", "2", "--input", EX]) == EXIT_OK


def test_generate_then_stats(tmp_path, capsys):
    out = tmp_path / "g.nt.gz"
    assert main(["generate", "n=200,m=800,seed=1", "--out", str(out)]) == EXIT_OK
    info = json.loads(capsys.readouterr().out)
    assert main(["stats", "--input", str(out)]) == EXIT_OK
    stats = json.loads(capsys.readouterr().out)
    # vertices with neither edges nor labels have no triple to carry them
    g = generate_synthetic(GeneratorParams.parse("n=200,m=800,seed=1"))
    deg = np.bincount(np.concatenate([g.src, g.dst]), minlength=g.vertex_count)
    unlabeled = np.array([not g.labels_of(v) for v in range(g.vertex_count)])
    assert stats["vertices"] == info["vertices"] - int(((deg == 0) & unlabeled).sum())
    assert stats["edges"] == info["edges"]


def test_stats_on_example(capsys):
    assert main(["stats", "--input", EX]) == EXIT_OK
    stats = json.loads(capsys.readouterr().out)
    assert stats["vertices"] == 10


def test_usage_errors_exit_1(capsys):
    assert main(["run", "--algorithm", "magic", "--k", "1", "--input", EX]) == EXIT_ERROR
    assert main(["run", "--algorithm", "brs", "--input", EX, "--generate", "n=1,m=1"]) == EXIT_ERROR
    assert main(["--help"]) == EXIT_OK
    capsys.readouterr()


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "kbisim.cli", "stats", "--input", EX],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout)["vertices"] == 10
