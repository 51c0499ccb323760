import json

import pytest

from hypervlasov import io
from hypervlasov.cli import main

SMALL = ["--set", "markers_x=16"]


def test_vacuum_with_no_data_writes_zero_outputs(tmp_path, capsys):
    out = tmp_path / "vac"
    status = main(["run", "--set", "scenario=vacuum_radiation", "--set", "wave_amplitude=0",
                   "--set", "tau_end=1", "--out", str(out)])
    assert status == 0
    rows = io.read_jsonl(out / "diagnostics.jsonl")
    assert rows and all(r["M0"] == 0.0 and r["N0"] == 0.0 for r in rows)
    _, fields = io.read_csv(out / "fields" / "0000.csv")
    assert (fields[:, 1:] == 0).all()
    assert "PASS" in capsys.readouterr().out


def test_thread_count_gives_identical_output(tmp_path):
    outs = []
    for threads in (1, 3):
        out = tmp_path / f"t{threads}"
        assert main(["run", *SMALL, "--threads", str(threads), "--out", str(out)]) == 0
        outs.append((out / "diagnostics.jsonl").read_bytes())
    assert outs[0] == outs[1]


def test_diagnose_recomputes_run(tmp_path, capsys):
    out = tmp_path / "iso"
    assert main(["run", *SMALL, "--out", str(out)]) == 0
    capsys.readouterr()
    assert main(["diagnose", str(out)]) == 0
    rows = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert rows and all(r["dominance_violations"] == 0 for r in rows)
    assert (out / "diagnose.jsonl").exists()


def test_run_from_config_file(tmp_path):
    cfg = tmp_path / "fs.cfg"
    cfg.write_text("scenario = free_stream\ntau_end = 8\nmarkers_x = 16\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "fs")]) == 0
    summary = io.read_json(tmp_path / "fs" / "summary.json")
    assert summary["all_pass"]


def test_refine_writes_table(tmp_path, capsys):
    out = tmp_path / "ref"
    status = main(["refine", "--set", "scenario=vacuum_radiation", "--set", "tau_end=1",
                   "--levels", "2", "--out", str(out)])
    assert status == 0
    table = io.read_json(out / "refine.json")
    assert len(table["levels"]) == 2


@pytest.mark.parametrize(
    "argv",
    [["refine", "--levels", "1"], ["run", "--set", "h=-1"], ["run", "--config", "/nonexistent.cfg"],
     ["diagnose", "/nonexistent_run"]],
)
def test_user_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "error:" in capsys.readouterr().err
