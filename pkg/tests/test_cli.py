import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from sitabench.cli import main


@pytest.fixture
def cli():
    return CliRunner()


def synth_table(cli, path, rooms=2, days=2, seed=3):
    result = cli.invoke(
        main,
        ["synth", "--rooms", str(rooms), "--days", str(days), "--seed", str(seed), "--out", str(path)],
    )
    assert result.exit_code == 0, result.output
    return path


def sweep_config(tmp_path, **overrides):
    doc = {
        "schema_version": 1,
        "source": {"kind": "synth", "synth": {"n_rooms": 2, "days": 2, "interval_s": 3600, "seed": 3}},
        "sweep": ["444X"],
        "models": ["lr"],
        "kfold_k": 5,
        "seed": 3,
        "out_dir": str(tmp_path / "out"),
    }
    doc.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return path


class TestSynthAndTransform:
    def test_synth_writes_table(self, cli, tmp_path):
        path = synth_table(cli, tmp_path / "table.csv")
        header = path.read_text().splitlines()[0]
        assert header.startswith("room,zone,timestamp,co2")

    def test_transform_deleted_tokens(self, cli, tmp_path):
        table = synth_table(cli, tmp_path / "table.csv")
        out = tmp_path / "private.csv"
        result = cli.invoke(
            main, ["transform", "--in", str(table), "--sita", "1414", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        lines = out.read_text().splitlines()
        assert lines[0] == "room,zone,date,time,co2,temperature,humidity,brightness"
        assert lines[1].startswith("building,deleted,")

    def test_transform_rejects_bad_config(self, cli, tmp_path):
        table = synth_table(cli, tmp_path / "table.csv")
        result = cli.invoke(
            main, ["transform", "--in", str(table), "--sita", "9999", "--out", str(tmp_path / "x.csv")]
        )
        assert result.exit_code != 0


class TestIngest:
    def test_ingest_directory(self, cli, tmp_path):
        raw = tmp_path / "raw"
        raw.mkdir()
        entry = {"room": "G.001", "zone": "1", "timestamp": "20181011141735"}
        for kind, value in (
            ("co2", 287.0),
            ("temperature", 27.6),
            ("humidity", 63.8),
            ("brightness", 25.0),
        ):
            (raw / f"{kind}.json").write_text(json.dumps([{**entry, "value": value}]))
        out = tmp_path / "table.csv"
        result = cli.invoke(main, ["ingest", "--raw-dir", str(raw), "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert "1 records" in result.output
        assert len(out.read_text().splitlines()) == 2


class TestTrain:
    def test_train_saves_model_and_scores(self, cli, tmp_path):
        table = synth_table(cli, tmp_path / "table.csv")
        model_path = tmp_path / "model.json"
        scores_path = tmp_path / "scores.csv"
        result = cli.invoke(
            main,
            [
                "train",
                "--in", str(table),
                "--model", "lr",
                "--out", str(model_path),
                "--scores", str(scores_path),
            ],
        )
        assert result.exit_code == 0, result.output
        doc = json.loads(model_path.read_text())
        assert doc["algorithm"] == "lr" and doc["format_version"] == 1
        assert scores_path.read_text().startswith("model,config,r2,mae,rmse\n")


class TestSweep:
    def test_sweep_outputs(self, cli, tmp_path):
        config = sweep_config(tmp_path)
        result = cli.invoke(main, ["sweep", "--config", str(config)])
        assert result.exit_code == 0, result.output
        out = tmp_path / "out"
        for name in ("sweep.csv", "cells.csv", "degradation.csv", "provenance.json", "sweep.partial.csv"):
            assert (out / name).exists(), name
        cells = (out / "cells.csv").read_text()
        assert "4440,lr,skipped" in cells

    def test_sweep_deterministic(self, cli, tmp_path):
        config = sweep_config(tmp_path)
        bodies = []
        for run_dir in ("a", "b"):
            result = cli.invoke(
                main, ["sweep", "--config", str(config), "--out", str(tmp_path / run_dir)]
            )
            assert result.exit_code == 0, result.output
            bodies.append((tmp_path / run_dir / "sweep.csv").read_bytes())
        assert bodies[0] == bodies[1]

    def test_overrides(self, cli, tmp_path):
        config = sweep_config(tmp_path)
        out = tmp_path / "ov"
        result = cli.invoke(
            main,
            ["sweep", "--config", str(config), "--out", str(out), "--sweep", "4444", "--models", "lr,dtr"],
        )
        assert result.exit_code == 0, result.output
        cells = (out / "cells.csv").read_text().strip().splitlines()
        assert cells[1:] == ["4444,lr,ok,", "4444,dtr,ok,"]


class TestAttack:
    def test_attack_csv(self, cli, tmp_path):
        config = tmp_path / "attack.json"
        config.write_text(json.dumps({"seeds": [0, 1], "activity_levels": [4, 1], "n": 50}))
        out = tmp_path / "attack.csv"
        result = cli.invoke(main, ["attack", "--config", str(config), "--out", str(out)])
        assert result.exit_code == 0, result.output
        lines = out.read_text().splitlines()
        assert lines[0] == "activity_level,strategy,seed,accuracy"
        assert len(lines) == 1 + 2 * 2 * 2  # levels x strategies x seeds

    def test_attack_defaults(self, cli, tmp_path):
        out = tmp_path / "attack.csv"
        result = cli.invoke(main, ["attack", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert out.exists()


class TestReport:
    def test_report_rebuilds_pivots(self, cli, tmp_path):
        config = sweep_config(tmp_path)
        result = cli.invoke(main, ["sweep", "--config", str(config)])
        assert result.exit_code == 0, result.output
        out = tmp_path / "out"
        sweep_before = (out / "sweep.csv").read_bytes()
        pivot = out / "pivot_r2_activity.csv"
        pivot_before = pivot.read_bytes()
        pivot.unlink()
        result = cli.invoke(main, ["report", "--in", str(out)])
        assert result.exit_code == 0, result.output
        # fold values round-trip through 10 significant digits, so compare
        # the rebuilt numbers within that precision rather than byte-for-byte
        rebuilt = pivot.read_text().splitlines()
        original = pivot_before.decode().splitlines()
        assert rebuilt[0] == original[0]
        for got, want in zip(rebuilt[1:], original[1:]):
            for a, b in zip(got.split(","), want.split(",")):
                if a != b:
                    assert abs(float(a) - float(b)) < 1e-8
        assert (out / "sweep.csv").read_bytes() == sweep_before  # never rewritten

    def test_version_flag(self, cli):
        result = cli.invoke(main, ["--version"])
        assert result.exit_code == 0
