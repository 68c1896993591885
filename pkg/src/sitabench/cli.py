"""Command line interface.

Verbs: ingest, synth, transform, train, sweep, attack, report.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__, attack as attack_mod, data as data_mod
from . import evaluation as eval_mod
from . import models as models_mod
from . import runner as runner_mod
from . import sita as sita_mod


@click.group()
@click.version_option(__version__)
def main():
    """SITA privacy-utility benchmark for smart-building CO2 prediction."""


@main.command()
@click.option("--raw-dir", type=click.Path(exists=True, file_okay=False), required=True,
              help="Directory of per-sensor <kind>*.json files.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--no-clean", is_flag=True, help="Skip the outlier range filter.")
def ingest(raw_dir, out, no_clean):
    """Consolidate raw sensor JSON files into one CSV table."""
    result = runner_mod.ingest_directory(raw_dir)
    records = result.records if no_clean else data_mod.clean(result.records)
    data_mod.write_table(records, out)
    click.echo(
        f"{len(records)} records written to {out} "
        f"(dropped {result.dropped} incomplete groups, {result.duplicates} duplicate readings)"
    )


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="JSON file of synthesizer parameters.")
@click.option("--seed", type=int, default=None, help="Override the synthesizer seed.")
@click.option("--rooms", type=int, default=None, help="Override the room count.")
@click.option("--days", type=int, default=None, help="Override the span in days.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def synth(config_path, seed, rooms, days, out):
    """Generate a synthetic consolidated table."""
    params = json.loads(Path(config_path).read_text()) if config_path else {}
    if seed is not None:
        params["seed"] = seed
    if rooms is not None:
        params["n_rooms"] = rooms
    if days is not None:
        params["days"] = days
    records = data_mod.synthesize(runner_mod._synth_config(params))
    data_mod.write_table(records, out)
    click.echo(f"{len(records)} synthetic records written to {out}")


@main.command()
@click.option("--in", "in_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--sita", "sita_config", required=True, help='SITA configuration, e.g. "4434".')
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--progress", is_flag=True)
def transform(in_path, sita_config, out, progress):
    """Apply one SITA configuration to a consolidated table."""
    cfg = sita_mod.parse_config(sita_config)
    records = data_mod.read_table(in_path)
    stats = sita_mod.TransformStats()
    private = sita_mod.apply_dataset(records, cfg, with_progress=progress, stats=stats)
    sita_mod.write_private_table(private, out)
    note = f" ({stats.unknown_floor} unknown floor prefixes)" if stats.unknown_floor else ""
    click.echo(f"{len(private)} private records written to {out}{note}")


@main.command()
@click.option("--in", "in_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--sita", "sita_config", default="4444", show_default=True)
@click.option("--model", "model_name", type=click.Choice(runner_mod.DEFAULT_MODELS), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Model JSON output.")
@click.option("--scores", type=click.Path(dir_okay=False), help="Optional holdout score CSV.")
def train(in_path, sita_config, model_name, seed, out, scores):
    """Train one model on a SITA-transformed table and save it."""
    records = data_mod.read_table(in_path)
    private = sita_mod.apply_dataset(records, sita_mod.parse_config(sita_config))
    X, y, _ = models_mod.encode(private)
    spec = models_mod.ModelSpec(model_name, seed=seed)
    train_idx, test_idx = eval_mod.split(X.n_rows, eval_mod.SplitSpec())
    model = models_mod.fit(spec, eval_mod._subset(X, train_idx), y[train_idx])
    models_mod.save_model(model, out)
    holdout = eval_mod.holdout_scores(spec, X, y, train_idx, test_idx)
    click.echo(
        f"{model_name} trained on {len(train_idx)} rows; holdout "
        f"r2={holdout['r2']:.4f} mae={holdout['mae']:.4f} rmse={holdout['rmse']:.4f}"
    )
    if scores:
        Path(scores).write_text(
            "model,config,r2,mae,rmse\n"
            f"{model_name},{sita_config},{holdout['r2']:.10g},{holdout['mae']:.10g},{holdout['rmse']:.10g}\n",
            encoding="utf-8",
        )


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Experiment config JSON (schema documented in the README).")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Override output directory.")
@click.option("--seed", type=int, default=None, help="Override the global seed.")
@click.option("--jobs", type=int, default=None, help="Override the worker count.")
@click.option("--sweep", "sweep_arg", default=None, help='Override sweep list, e.g. "X444,44X4,444X".')
@click.option("--models", "models_arg", default=None, help='Override model list, e.g. "lr,rf".')
def sweep(config_path, out, seed, jobs, sweep_arg, models_arg):
    """Run a full SITA sweep and write plot-ready CSV reports."""
    config = runner_mod.ExperimentConfig.from_json(config_path)
    if out is not None:
        config.out_dir = out
    if seed is not None:
        config.seed = seed
    if jobs is not None:
        config.jobs = jobs
    if sweep_arg is not None:
        config.sweep = [s.strip() for s in sweep_arg.split(",") if s.strip()]
    if models_arg is not None:
        config.models = [m.strip() for m in models_arg.split(",") if m.strip()]

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    partial = out_dir / "sweep.partial.csv"
    with partial.open("w", encoding="utf-8") as stream:
        stream.write("config,model,status,mean_r2,mean_mae,mean_rmse\n")

        def progress(cell):
            if cell.status == "ok":
                r = cell.report
                stream.write(
                    f"{cell.config},{cell.model},ok,"
                    f"{r.mean_r2:.10g},{r.mean_mae:.10g},{r.mean_rmse:.10g}\n"
                )
            else:
                stream.write(f"{cell.config},{cell.model},{cell.status},,,\n")
            stream.flush()
            click.echo(f"[{cell.status}] {cell.config} {cell.model}", err=True)

        result = runner_mod.run(config, progress=progress)

    written = runner_mod.report(result, out_dir, models=config.models)
    for path in written:
        click.echo(str(path))
    errored = [c for c in result.cells if c.status == "error"]
    if errored:
        for cell in errored:
            click.echo(f"ERROR {cell.config}/{cell.model}: {cell.message}", err=True)
        sys.exit(1)


@main.command("attack")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="Attack experiment JSON (room, profiles, levels, strategies, seeds).")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def attack_cmd(config_path, out):
    """Run the occupancy-inference attack grid and write attack.csv."""
    doc = json.loads(Path(config_path).read_text()) if config_path else {}
    room = attack_mod.RoomModel(**doc.get("room", {}))
    profile_docs = doc.get("profiles")
    if profile_docs:
        profiles = tuple(attack_mod.OccupantProfile(**p) for p in profile_docs)
    else:
        profiles = (attack_mod.DEFAULT_ALICE, attack_mod.DEFAULT_BOB)
    rows = attack_mod.run_attack_experiment(
        room,
        profiles,
        activity_levels=doc.get("activity_levels", [4, 3, 2, 1]),
        strategies=doc.get("strategies", ["physics", "cluster"]),
        seeds=doc.get("seeds", list(range(10))),
        n=doc.get("n", 200),
        noise_sd=doc.get("noise_sd", 4.0),
    )
    lines = ["activity_level,strategy,seed,accuracy"]
    for row in rows:
        lines.append(f"{row['activity_level']},{row['strategy']},{row['seed']},{row['accuracy']:.10g}")
    Path(out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    click.echo(f"{len(rows)} attack results written to {out}")


@main.command("report")
@click.option("--in", "in_dir", type=click.Path(exists=True, file_okay=False), required=True,
              help="Directory holding sweep.csv and cells.csv from a previous run.")
def report_cmd(in_dir):
    """Rebuild pivot and degradation tables from an existing sweep.csv."""
    in_dir = Path(in_dir)
    result = _result_from_csv(in_dir / "sweep.csv", in_dir / "cells.csv")
    written = runner_mod.report(result, in_dir, include_sweep=False)
    for path in written:
        click.echo(str(path))


def _result_from_csv(sweep_path: Path, cells_path: Path) -> runner_mod.SweepResult:
    sweep_lines = sweep_path.read_text(encoding="utf-8").strip().split("\n")
    header = sweep_lines[0].split(",")
    n_folds = sum(1 for h in header if h.startswith("fold_"))
    scores: dict[tuple[str, str], dict] = {}
    for line in sweep_lines[1:]:
        parts = line.split(",")
        config, model, metric = parts[0], parts[1], parts[2]
        folds = [float(v) if v else float("nan") for v in parts[3 : 3 + n_folds]]
        excluded = int(parts[-1])
        scores.setdefault((config, model), {})[metric] = (folds, excluded)
    cells = []
    for line in cells_path.read_text(encoding="utf-8").strip().split("\n")[1:]:
        config, model, status, message = line.split(",", 3)
        if status == "ok" and (config, model) in scores:
            metrics = scores[(config, model)]
            report = eval_mod.ScoreReport(
                model=model,
                config=config,
                r2_folds=metrics["r2"][0],
                mae_folds=metrics["mae"][0],
                rmse_folds=metrics["rmse"][0],
                r2_excluded=metrics["r2"][1],
            )
            cells.append(runner_mod.SweepCell(config, model, "ok", report=report))
        else:
            cells.append(runner_mod.SweepCell(config, model, status, message=message))
    provenance = {"schema_version": runner_mod.SCHEMA_VERSION, "rebuilt_from": str(sweep_path)}
    return runner_mod.SweepResult(cells, provenance)


if __name__ == "__main__":
    main()
