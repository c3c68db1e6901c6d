import json
from datetime import date, timedelta

import pytest

from bubblescan.cli import main
from bubblescan.commitment import PUBLISHED_SHA256
from bubblescan.forecast import parse_document

COARSE = ["--grid.dt1", "60", "--grid.dt2", "5000", "--grid.min-len", "150", "--grid.max-len", "400",
          "--n-starts", "6"]
ASSET = ["--name", "Synthetic bubble", "--ticker", "SYN", "--source", "Y", "--category", "Index"]


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--output-dir", str(out), "--days", "400", "--tc-offset", "40"]) == 0
    return out


@pytest.fixture(scope="module")
def forecast_dir(synth_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("forecast")
    argv = ["forecast", "--input", str(synth_dir / "synthetic.csv"), "--output-dir", str(out),
            "--n-boot", "3", *COARSE, *ASSET]
    assert main(argv) == 0
    return out


def test_synth_outputs(synth_dir):
    info = json.loads((synth_dir / "synthetic.json").read_text())
    assert info["n_obs"] == 401
    assert (synth_dir / "synthetic.csv").read_text().startswith("date,close\n")


def test_forecast_brackets_true_tc(synth_dir, forecast_dir):
    tc_date = date.fromisoformat(json.loads((synth_dir / "synthetic.json").read_text())["tc_date"])
    doc = parse_document((forecast_dir / "forecast.txt").read_bytes())
    (record,) = doc.records
    lo, hi = record.window_5_95
    assert lo <= tc_date <= hi + timedelta(days=1)
    assert record.ticker_label == "SYN (Y)"
    assert record.n_fits >= 1
    for name in ("scan_report.json", "forecast.json", "ensemble.json"):
        assert (forecast_dir / name).exists()


def test_forecast_rerun_is_byte_identical(synth_dir, forecast_dir, tmp_path):
    argv = ["forecast", "--input", str(synth_dir / "synthetic.csv"), "--output-dir", str(tmp_path),
            "--n-boot", "3", "--workers", "2", *COARSE, *ASSET]
    assert main(argv) == 0
    assert (tmp_path / "forecast.txt").read_bytes() == (forecast_dir / "forecast.txt").read_bytes()


def test_scan_then_post(synth_dir, tmp_path):
    csv = str(synth_dir / "synthetic.csv")
    assert main(["scan", "--input", csv, "--output-dir", str(tmp_path), *COARSE]) == 0
    report = json.loads((tmp_path / "scan_report.json").read_text())
    assert report["counts"]["windows_enumerated"] == 5
    argv = ["post", "--input", csv, "--t2", "2010-06-01", "--window-days", "30", "120",
            "--scan-report", str(tmp_path / "scan_report.json"), "--output-dir", str(tmp_path)]
    assert main(argv) == 0
    summary = json.loads((tmp_path / "post_analysis.json").read_text())
    assert 0 <= summary["drawdown"]["depth_fraction"] < 1
    assert 0 <= summary["bubble_index"]["value"] <= 1
    assert (tmp_path / "up_fraction_30.csv").exists()
    assert (tmp_path / "sg_derivative_120.csv").exists()


def test_commit_verify_and_ledger(forecast_dir, tmp_path, capsys):
    doc = str(forecast_dir / "forecast.txt")
    ledger = str(tmp_path / "ledger.txt")
    argv = ["commit", "--input", doc, "--name", "v1", "--committed-on", "2011-02-14",
            "--reveal-on", "2011-08-01", "--ledger", ledger, "--output-dir", str(tmp_path)]
    assert main(argv) == 0
    line = capsys.readouterr().out.strip()
    assert line.split("\t")[0] == "v1"
    assert main(["verify", "--input", doc, "--record", str(tmp_path / "commitment.json")]) == 0
    assert main(["verify", "--input", doc, "--ledger", ledger, "--name", "v1"]) == 0
    assert capsys.readouterr().out.splitlines() == ["match", "match"]

    tampered = tmp_path / "tampered.txt"
    tampered.write_bytes((forecast_dir / "forecast.txt").read_bytes() + b" ")
    assert main(["verify", "--input", str(tampered), "--record", str(tmp_path / "commitment.json")]) == 3
    assert capsys.readouterr().out.strip() == "mismatch:both"

    assert main(["ledger", "--ledger", ledger]) == 0
    assert capsys.readouterr().out.startswith("version 1 2011-02-14 records=1")


def test_verify_against_published_digest(forecast_dir, capsys):
    assert main(["verify", "--input", str(forecast_dir / "forecast.txt"), "--sha256", PUBLISHED_SHA256]) == 3
    assert capsys.readouterr().out.strip() == "mismatch:sha256"


def test_short_series_exit_code(tmp_path, capsys):
    csv = tmp_path / "short.csv"
    start = date(2010, 1, 1)
    rows = [f"{(start + timedelta(days=i)).isoformat()},{100 + i}" for i in range(60)]
    csv.write_text("date,close\n" + "\n".join(rows) + "\n")
    assert main(["scan", "--input", str(csv), "--output-dir", str(tmp_path)]) == 14
    assert "SeriesTooShort" in capsys.readouterr().err


def test_bad_csv_exit_code(tmp_path, capsys):
    csv = tmp_path / "bad.csv"
    csv.write_text("date,close\n2010-01-01,1\n2010-01-02,-1\n")
    assert main(["ingest", "--input", str(csv)]) == 12
    assert "line 3" in capsys.readouterr().err


def test_missing_file_exit_code(tmp_path):
    assert main(["ingest", "--input", str(tmp_path / "nope.csv")]) == 4


def test_invalid_config_exit_code(synth_dir, tmp_path):
    argv = ["scan", "--input", str(synth_dir / "synthetic.csv"), "--output-dir", str(tmp_path),
            "--filter.alpha", "0.9", "0.1"]
    assert main(argv) == 2


def test_unknown_flag():
    with pytest.raises(SystemExit) as info:
        main(["scan", "--no-such-flag"])
    assert info.value.code == 2
