"""Experiment runner: dataset preparation, SITA sweeps across models, and
plot-ready CSV reports.

A sweep evaluates every (SITA configuration, model) cell on the same
private dataset per configuration. Cells are independent jobs; with
``jobs > 1`` they run in a process pool. Each cell ends as a score report,
an explicit skip marker (activity level 0 deletes the prediction target),
or an error record. Output CSV bodies are deterministic; wall-clock data
is quarantined to provenance.json.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__ as _version
from . import data as data_mod
from . import evaluation as eval_mod
from . import sita as sita_mod
from .models import ModelSpec, TargetMissingError, backend, encode
from .sita import SitaConfigError

SCHEMA_VERSION = 1

DEFAULT_SWEEP = ["X444", "44X4", "444X"]
DEFAULT_MODELS = ["lr", "rr", "dtr", "rf", "gbr"]
EVAL_MODES = ("cv_train", "cv_full", "holdout")


class ExperimentConfigError(ValueError):
    pass


def expand_sweep(pattern: str) -> list[str]:
    """Expand a sweep pattern like ``"X444"`` into configuration strings,
    substituting X by 4, 3, 2, 1, 0 in that order. A plain configuration
    expands to itself."""
    if "X" not in pattern and "x" not in pattern:
        sita_mod.parse_config(pattern)  # validation only
        return [pattern]
    norm = pattern.upper()
    if len(norm) != 4 or norm.count("X") != 1:
        raise SitaConfigError(f"sweep pattern {norm!r} must be 4 chars with exactly one X")
    for pos, ch in enumerate(norm, start=1):
        if ch != "X" and (not ch.isdigit() or int(ch) > 4):
            raise SitaConfigError(f"bad character {ch!r} at position {pos} in pattern {norm!r}")
    return [norm.replace("X", str(level)) for level in (4, 3, 2, 1, 0)]


@dataclass
class ExperimentConfig:
    source: dict
    sweep: list[str] = field(default_factory=lambda: list(DEFAULT_SWEEP))
    models: list[str] = field(default_factory=lambda: list(DEFAULT_MODELS))
    train_fraction: float = 0.8
    split_seed: int = 10
    kfold_k: int = 10
    kfold_shuffle: bool = True
    eval_mode: str = "cv_train"
    cleaning: dict | None = None
    seed: int = 0
    jobs: int = 1
    out_dir: str = "out"

    def __post_init__(self):
        if not self.sweep:
            raise ExperimentConfigError("sweep must list at least one configuration")
        if not self.models:
            raise ExperimentConfigError("models must list at least one algorithm")
        if self.eval_mode not in EVAL_MODES:
            raise ExperimentConfigError(f"eval_mode must be one of {EVAL_MODES}")
        for name in self.models:
            if name not in DEFAULT_MODELS:
                raise ExperimentConfigError(f"unknown model {name!r}")
        for entry in self.sweep:
            expand_sweep(entry)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        version = doc.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ExperimentConfigError(f"unsupported schema_version {version!r}")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ExperimentConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def configurations(self) -> list[str]:
        seen: list[str] = []
        for entry in self.sweep:
            for cfg in expand_sweep(entry):
                if cfg not in seen:
                    seen.append(cfg)
        return seen


def _synth_config(params: dict) -> data_mod.SynthConfig:
    params = dict(params)
    if "start" in params and isinstance(params["start"], str):
        params["start"] = data_mod.parse_timestamp(params["start"])
    if "weekday_profile" in params:
        params["weekday_profile"] = tuple(params["weekday_profile"])
    return data_mod.SynthConfig(**params)


def _cleaning_ranges(doc: dict | None) -> data_mod.CleaningRanges:
    if not doc:
        return data_mod.DEFAULT_RANGES
    kwargs = {k: tuple(v) for k, v in doc.items()}
    return data_mod.CleaningRanges(**kwargs)


def load_records(config: ExperimentConfig) -> list[data_mod.SensorRecord]:
    """Materialize the experiment's record table from its source block."""
    source = config.source
    kind = source.get("kind")
    ranges = _cleaning_ranges(config.cleaning)
    if kind == "synth":
        records = data_mod.synthesize(_synth_config(source.get("synth", {})))
    elif kind == "table":
        records = data_mod.read_table(source["path"])
    elif kind == "raw_dir":
        records = ingest_directory(source["path"]).records
    else:
        raise ExperimentConfigError(f"unknown source kind {kind!r}")
    return data_mod.clean(records, ranges)


def ingest_directory(path: str | Path) -> data_mod.ConsolidateResult:
    """Parse every ``<kind>*.json`` file in a directory and consolidate.

    The sensor kind is taken from the file name prefix (co2, temperature,
    humidity, brightness, occupancy).
    """
    path = Path(path)
    streams = []
    for file in sorted(path.glob("*.json")):
        kind = None
        for candidate in data_mod.SensorKind:
            if file.name.startswith(candidate.value):
                kind = candidate
                break
        if kind is None:
            continue
        result = data_mod.parse_sensor_file(file.read_bytes(), kind)
        streams.append(result.readings)
    return data_mod.consolidate(streams)


@dataclass
class SweepCell:
    config: str
    model: str
    status: str  # "ok" | "skipped" | "error"
    report: eval_mod.ScoreReport | None = None
    message: str = ""


@dataclass
class SweepResult:
    cells: list[SweepCell]
    provenance: dict

    def cell(self, config: str, model: str) -> SweepCell:
        for cell in self.cells:
            if cell.config == config and cell.model == model:
                return cell
        raise KeyError(f"no cell for ({config}, {model})")


# Worker-side state for process pools: the record table is shipped once via
# the pool initializer, per-configuration encodings are cached per worker.
_WORKER: dict = {}


def _init_worker(records, config_dict):
    _WORKER["records"] = records
    _WORKER["config"] = ExperimentConfig.from_dict(config_dict)
    _WORKER["cache"] = {}


def _encoded_dataset(records, sita_config: str):
    private = sita_mod.apply_dataset(records, sita_config)
    X, y, _ = encode(private)
    return X, y


def _evaluate_cell(records, config: ExperimentConfig, sita_config: str, model_name: str, cache=None):
    spec = ModelSpec(model_name, seed=config.seed)
    try:
        if cache is not None and sita_config in cache:
            X, y = cache[sita_config]
        else:
            X, y = _encoded_dataset(records, sita_config)
            if cache is not None:
                cache[sita_config] = (X, y)
    except TargetMissingError as exc:
        return SweepCell(sita_config, model_name, "skipped", message=str(exc))
    except Exception as exc:  # noqa: BLE001 - sweep keeps going per cell
        return SweepCell(sita_config, model_name, "error", message=f"{type(exc).__name__}: {exc}")
    try:
        n = X.n_rows
        if config.eval_mode == "cv_full":
            plan = eval_mod.kfold(n, config.kfold_k, config.kfold_shuffle, config.seed)
            report = eval_mod.cross_validate(spec, X, y, plan, config=sita_config)
        else:
            split_spec = eval_mod.SplitSpec(config.train_fraction, config.split_seed)
            train, test = eval_mod.split(n, split_spec)
            holdout = eval_mod.holdout_scores(spec, X, y, train, test)
            if config.eval_mode == "holdout":
                report = eval_mod.ScoreReport(
                    model=model_name,
                    config=sita_config,
                    r2_folds=[holdout["r2"]],
                    mae_folds=[holdout["mae"]],
                    rmse_folds=[holdout["rmse"]],
                    r2_excluded=1 if math.isnan(holdout["r2"]) else 0,
                )
            else:
                Xtr = eval_mod._subset(X, train)
                plan = eval_mod.kfold(len(train), config.kfold_k, config.kfold_shuffle, config.seed)
                report = eval_mod.cross_validate(spec, Xtr, y[train], plan, config=sita_config)
                report.holdout = holdout
        report.target_mean = float(np.mean(y))
        return SweepCell(sita_config, model_name, "ok", report=report)
    except Exception as exc:  # noqa: BLE001
        return SweepCell(sita_config, model_name, "error", message=f"{type(exc).__name__}: {exc}")


def _worker_task(sita_config: str, model_name: str) -> SweepCell:
    return _evaluate_cell(
        _WORKER["records"], _WORKER["config"], sita_config, model_name, _WORKER["cache"]
    )


def run(config: ExperimentConfig, records=None, progress=None) -> SweepResult:
    """Execute the sweep; deterministic result cells for fixed seeds."""
    started = datetime.now(timezone.utc)
    if records is None:
        records = load_records(config)
    if not records:
        raise ExperimentConfigError("no records to evaluate after cleaning")
    configurations = config.configurations()
    pairs = [(c, m) for c in configurations for m in config.models]

    cells: dict[tuple[str, str], SweepCell] = {}
    if config.jobs > 1:
        config_doc = config_to_dict(config)
        with ProcessPoolExecutor(
            max_workers=config.jobs, initializer=_init_worker, initargs=(records, config_doc)
        ) as pool:
            futures = {pair: pool.submit(_worker_task, *pair) for pair in pairs}
            for pair, future in futures.items():
                cells[pair] = future.result()
                if progress:
                    progress(cells[pair])
    else:
        cache: dict = {}
        for pair in pairs:
            cells[pair] = _evaluate_cell(records, config, *pair, cache)
            if progress:
                progress(cells[pair])

    ordered = [cells[pair] for pair in pairs]
    finished = datetime.now(timezone.utc)
    provenance = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": _version,
        "tree_backend": backend.BACKEND_NAME,
        "input_sha256": hashlib.sha256(
            data_mod.table_text(records).encode("utf-8")
        ).hexdigest(),
        "n_records": len(records),
        "seed": config.seed,
        "split_seed": config.split_seed,
        "eval_mode": config.eval_mode,
        "configurations": configurations,
        "models": config.models,
        "started": started.isoformat(),
        "finished": finished.isoformat(),
        "cell_status": {f"{c.config}/{c.model}": c.status for c in ordered},
    }
    return SweepResult(ordered, provenance)


def config_to_dict(config: ExperimentConfig) -> dict:
    doc = asdict(config)
    doc["schema_version"] = SCHEMA_VERSION
    return doc


def _fmt(v: float) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return f"{v:.10g}"


_METRICS = ("r2", "mae", "rmse", "mae_norm", "rmse_norm")


def _metric_folds(report: eval_mod.ScoreReport, metric: str) -> tuple[list[float], float, float, int]:
    """(fold values, mean, sd, n_excluded) for one metric row."""
    norm = getattr(report, "target_mean", None)
    if metric == "r2":
        return report.r2_folds, report.mean_r2, report.sd_r2, report.r2_excluded
    if metric == "mae":
        return report.mae_folds, report.mean_mae, report.sd_mae, 0
    if metric == "rmse":
        return report.rmse_folds, report.mean_rmse, report.sd_rmse, 0
    base = report.mae_folds if metric == "mae_norm" else report.rmse_folds
    if not norm:
        nan = float("nan")
        return [nan] * len(base), nan, nan, len(base)
    folds = [v / norm for v in base]
    arr = np.asarray(folds)
    return folds, float(np.mean(arr)), float(np.std(arr)), 0


def sweep_csv_text(result: SweepResult) -> str:
    """Long-form CSV: one row per (config, model, metric)."""
    k = 0
    for cell in result.cells:
        if cell.report is not None:
            k = max(k, len(cell.report.mae_folds))
    fold_headers = [f"fold_{i}" for i in range(k)]
    lines = [",".join(["config", "model", "metric"] + fold_headers + ["mean", "sd", "n_excluded_folds"])]
    for cell in result.cells:
        if cell.status != "ok":
            continue
        report = cell.report
        for metric in _METRICS:
            folds, mean, sd, excluded = _metric_folds(report, metric)
            padded = [_fmt(v) for v in folds] + [""] * (k - len(folds))
            lines.append(
                ",".join([cell.config, cell.model, metric] + padded + [_fmt(mean), _fmt(sd), str(excluded)])
            )
    return "\n".join(lines) + "\n"


def cells_csv_text(result: SweepResult) -> str:
    lines = ["config,model,status,message"]
    for cell in result.cells:
        message = cell.message.replace("\n", " ").replace(",", ";")
        lines.append(f"{cell.config},{cell.model},{cell.status},{message}")
    return "\n".join(lines) + "\n"


def holdout_csv_text(result: SweepResult) -> str | None:
    rows = []
    for cell in result.cells:
        if cell.status == "ok" and cell.report.holdout is not None:
            h = cell.report.holdout
            rows.append(
                f"{cell.config},{cell.model},{_fmt(h['r2'])},{_fmt(h['mae'])},{_fmt(h['rmse'])}"
            )
    if not rows:
        return None
    return "\n".join(["config,model,r2,mae,rmse"] + rows) + "\n"


_DIMENSION_PATTERNS = {"spatial": "X444", "temporal": "44X4", "activity": "444X"}


def _mean_metric(report: eval_mod.ScoreReport, metric: str) -> float:
    return {"r2": report.mean_r2, "mae": report.mean_mae, "rmse": report.mean_rmse}[metric]


def pivot_csv_text(result: SweepResult, metric: str, dimension: str, models: list[str]) -> str | None:
    """Per-dimension pivot: rows = levels 4..0, columns = models."""
    pattern = _DIMENSION_PATTERNS[dimension]
    configs = [pattern.replace("X", str(level)) for level in (4, 3, 2, 1, 0)]
    present = {(c.config, c.model) for c in result.cells}
    # the 4444 baseline belongs to every dimension; only emit a pivot when a
    # dimension-specific (non-baseline) configuration was actually swept
    if not any((cfg, m) in present for cfg in configs[1:] for m in models):
        return None
    lines = [",".join(["level"] + models)]
    for level, cfg in zip((4, 3, 2, 1, 0), configs):
        row = [str(level)]
        for model in models:
            try:
                cell = result.cell(cfg, model)
            except KeyError:
                row.append("")
                continue
            row.append(_fmt(_mean_metric(cell.report, metric)) if cell.status == "ok" else "")
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def degradation_csv_text(result: SweepResult) -> str:
    """Change of each metric mean versus the 4444 baseline, absolute and
    relative (percent of the baseline)."""
    lines = ["config,model,metric,baseline_mean,mean,abs_change,rel_change_pct"]
    baselines = {
        cell.model: cell.report
        for cell in result.cells
        if cell.config == "4444" and cell.status == "ok"
    }
    for cell in result.cells:
        if cell.status != "ok" or cell.model not in baselines:
            continue
        base_report = baselines[cell.model]
        for metric in ("r2", "mae", "rmse"):
            base = _mean_metric(base_report, metric)
            value = _mean_metric(cell.report, metric)
            abs_change = value - base
            rel = (abs_change / base * 100.0) if base not in (0.0,) and not math.isnan(base) else float("nan")
            lines.append(
                ",".join(
                    [cell.config, cell.model, metric, _fmt(base), _fmt(value), _fmt(abs_change), _fmt(rel)]
                )
            )
    return "\n".join(lines) + "\n"


def report(
    result: SweepResult,
    out_dir: str | Path,
    models: list[str] | None = None,
    include_sweep: bool = True,
) -> list[Path]:
    """Write sweep.csv, cells.csv, per-dimension pivots, degradation.csv,
    holdout.csv (when present) and provenance.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if models is None:
        seen = []
        for cell in result.cells:
            if cell.model not in seen:
                seen.append(cell.model)
        models = seen
    written = []

    def emit(name: str, text: str | None):
        if text is None:
            return
        path = out / name
        path.write_text(text, encoding="utf-8", newline="\n")
        written.append(path)

    if include_sweep:
        emit("sweep.csv", sweep_csv_text(result))
        emit("cells.csv", cells_csv_text(result))
        emit("holdout.csv", holdout_csv_text(result))
    for dimension in _DIMENSION_PATTERNS:
        for metric in ("r2", "mae", "rmse"):
            emit(f"pivot_{metric}_{dimension}.csv", pivot_csv_text(result, metric, dimension, models))
    emit("degradation.csv", degradation_csv_text(result))
    if include_sweep:
        emit("provenance.json", json.dumps(result.provenance, indent=2) + "\n")
    return written
