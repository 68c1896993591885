"""Evaluation protocol: seeded 80/20 split, shuffled k-fold cross-validation,
and the R2 / MAE / RMSE metrics.

All shuffling is an explicit Fisher-Yates walk driven by numpy's Philox
counter-based 64-bit generator, so index plans are reproducible and do not
depend on library shuffle internals. "random state 10" from the reference
protocol maps to the Philox key.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import models as models_mod
from .models import FeatureMatrix, ModelSpec


class SplitError(ValueError):
    pass


class FoldError(ValueError):
    pass


class ZeroVarianceError(ValueError):
    """R2 is undefined when the true values have zero variance."""


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed & (2**64 - 1)))


def _fisher_yates(n: int, rng: np.random.Generator) -> np.ndarray:
    idx = np.arange(n)
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        idx[i], idx[j] = idx[j], idx[i]
    return idx


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 10

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise SplitError(f"train_fraction must be in (0, 1), got {self.train_fraction}")


def split(n: int, spec: SplitSpec = SplitSpec()) -> tuple[np.ndarray, np.ndarray]:
    """Random 80/20 (by default) index split, deterministic in the seed.

    Train size is round(train_fraction * n), clamped so both sides are
    non-empty. Returned index arrays are sorted.
    """
    if n < 2:
        raise SplitError(f"need at least 2 rows to split, got {n}")
    train_size = int(round(spec.train_fraction * n))
    train_size = min(max(train_size, 1), n - 1)
    perm = _fisher_yates(n, _rng(spec.seed))
    train = np.sort(perm[:train_size])
    test = np.sort(perm[train_size:])
    return train, test


@dataclass
class FoldPlan:
    k: int
    shuffle: bool
    seed: int
    folds: list[tuple[np.ndarray, np.ndarray]]  # (train_indices, validation_indices)


def kfold(n: int, k: int = 10, shuffle: bool = True, seed: int = 10) -> FoldPlan:
    """K disjoint validation folds covering all indices, sizes differing by
    at most one (the first n % k folds are one larger)."""
    if k < 2:
        raise FoldError(f"k must be >= 2, got {k}")
    if k > n:
        raise FoldError(f"k={k} exceeds the number of rows n={n}")
    order = _fisher_yates(n, _rng(seed)) if shuffle else np.arange(n)
    base, extra = divmod(n, k)
    folds = []
    start = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        val = np.sort(order[start : start + size])
        train = np.sort(np.concatenate([order[:start], order[start + size :]]))
        folds.append((train, val))
        start += size
    return FoldPlan(k=k, shuffle=shuffle, seed=seed, folds=folds)


def _check_pair(y_true, y_pred, min_len):
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ValueError("y_true and y_pred must be 1-D and the same length")
    if len(y_true) < min_len:
        raise ValueError(f"need at least {min_len} values")
    return y_true, y_pred


def r2(y_true, y_pred) -> float:
    """Coefficient of determination: 1 - SS_res / SS_tot."""
    y_true, y_pred = _check_pair(y_true, y_pred, 2)
    mean = float(np.mean(y_true))
    ss_tot = float(np.sum((y_true - mean) ** 2))
    if ss_tot == 0.0:
        raise ZeroVarianceError("R2 undefined: y_true has zero variance")
    ss_res = float(np.sum((y_true - y_pred) ** 2))
    return 1.0 - ss_res / ss_tot


def mae(y_true, y_pred) -> float:
    y_true, y_pred = _check_pair(y_true, y_pred, 1)
    return float(np.mean(np.abs(y_true - y_pred)))


def rmse(y_true, y_pred) -> float:
    y_true, y_pred = _check_pair(y_true, y_pred, 1)
    return float(np.sqrt(np.mean((y_true - y_pred) ** 2)))


@dataclass
class ScoreReport:
    """Per-fold and aggregate scores for one (model, configuration) pair.

    ``r2_folds`` entries are NaN for folds whose validation target had zero
    variance; those folds are excluded from the R2 mean/sd and counted in
    ``r2_excluded``. Standard deviations are population (ddof=0).
    """

    model: str
    config: str
    r2_folds: list[float]
    mae_folds: list[float]
    rmse_folds: list[float]
    r2_excluded: int = 0
    fit_time_s: float = 0.0
    holdout: dict | None = None
    target_mean: float | None = None  # mean CO2 of the scored dataset, for normalized errors

    def _agg(self, values: list[float]) -> tuple[float, float]:
        arr = np.asarray(values, dtype=np.float64)
        arr = arr[~np.isnan(arr)]
        if len(arr) == 0:
            return float("nan"), float("nan")
        return float(np.mean(arr)), float(np.std(arr))

    @property
    def mean_r2(self) -> float:
        return self._agg(self.r2_folds)[0]

    @property
    def sd_r2(self) -> float:
        return self._agg(self.r2_folds)[1]

    @property
    def mean_mae(self) -> float:
        return self._agg(self.mae_folds)[0]

    @property
    def sd_mae(self) -> float:
        return self._agg(self.mae_folds)[1]

    @property
    def mean_rmse(self) -> float:
        return self._agg(self.rmse_folds)[0]

    @property
    def sd_rmse(self) -> float:
        return self._agg(self.rmse_folds)[1]


def _subset(X: FeatureMatrix, idx: np.ndarray) -> FeatureMatrix:
    return FeatureMatrix(X.values[idx], X.names, X.kinds)


def cross_validate(
    spec: ModelSpec, X: FeatureMatrix, y: np.ndarray, plan: FoldPlan, config: str = ""
) -> ScoreReport:
    """Fit on each fold's train indices and score its validation indices."""
    y = np.asarray(y, dtype=np.float64)
    n = X.n_rows
    for train, val in plan.folds:
        if len(train) and (train.min() < 0 or train.max() >= n):
            raise FoldError("train indices out of bounds")
        if len(val) and (val.min() < 0 or val.max() >= n):
            raise FoldError("validation indices out of bounds")
    r2_folds: list[float] = []
    mae_folds: list[float] = []
    rmse_folds: list[float] = []
    excluded = 0
    fit_time = 0.0
    for train, val in plan.folds:
        t0 = time.perf_counter()
        model = models_mod.fit(spec, _subset(X, train), y[train])
        fit_time += time.perf_counter() - t0
        pred = models_mod.predict(model, _subset(X, val))
        truth = y[val]
        try:
            r2_folds.append(r2(truth, pred))
        except (ZeroVarianceError, ValueError):
            r2_folds.append(float("nan"))
            excluded += 1
        mae_folds.append(mae(truth, pred))
        rmse_folds.append(rmse(truth, pred))
    return ScoreReport(
        model=spec.algorithm,
        config=config,
        r2_folds=r2_folds,
        mae_folds=mae_folds,
        rmse_folds=rmse_folds,
        r2_excluded=excluded,
        fit_time_s=fit_time,
    )


def holdout_scores(
    spec: ModelSpec,
    X: FeatureMatrix,
    y: np.ndarray,
    train: np.ndarray,
    test: np.ndarray,
) -> dict:
    """Fit once on the train indices and score the held-out test indices."""
    y = np.asarray(y, dtype=np.float64)
    model = models_mod.fit(spec, _subset(X, train), y[train])
    pred = models_mod.predict(model, _subset(X, test))
    truth = y[test]
    try:
        r2_value = r2(truth, pred)
    except (ZeroVarianceError, ValueError):
        r2_value = float("nan")
    return {"r2": r2_value, "mae": mae(truth, pred), "rmse": rmse(truth, pred)}
