"""Five from-scratch regressors behind one fit/predict contract.

Algorithms and their defaults:

* ``lr``  — ordinary least squares, intercept fitted, no regularization
* ``rr``  — ridge, ``alpha=1.0``, intercept unpenalized
* ``dtr`` — CART, unlimited depth, ``min_samples_split=2``
* ``rf``  — 100 bootstrap trees, all features considered per split
* ``gbr`` — 100 stages, learning rate 0.1, depth-3 trees, full sample
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import backend
from .encoding import EncodePolicy, EncodingMap, FeatureMatrix, TargetMissingError, encode
from .linear import fit_linear, fit_ridge, predict_linear
from .trees import Boosted, Forest, TreeNodes, fit_boosted, fit_decision_tree, fit_forest

MODEL_FORMAT_VERSION = 1

DEFAULT_PARAMS = {
    "lr": {},
    "rr": {"alpha": 1.0},
    "dtr": {"max_depth": None, "min_samples_split": 2, "max_features": None},
    "rf": {
        "n_trees": 100,
        "bootstrap": True,
        "max_depth": None,
        "min_samples_split": 2,
        "max_features": None,
    },
    "gbr": {"n_stages": 100, "learning_rate": 0.1, "max_depth": 3, "min_samples_split": 2},
}

ALGORITHMS = tuple(DEFAULT_PARAMS)


class FitError(ValueError):
    """Raised for degenerate training inputs."""


class PredictError(ValueError):
    """Raised when the prediction matrix does not match the training schema."""


@dataclass(frozen=True)
class ModelSpec:
    algorithm: str
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.algorithm not in DEFAULT_PARAMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        unknown = set(self.params) - set(DEFAULT_PARAMS[self.algorithm])
        if unknown:
            raise ValueError(f"unknown {self.algorithm} hyperparameters: {sorted(unknown)}")

    def resolved_params(self) -> dict:
        merged = dict(DEFAULT_PARAMS[self.algorithm])
        merged.update(self.params)
        return merged


@dataclass
class TrainedModel:
    algorithm: str
    params: dict
    seed: int
    feature_names: list[str] | None
    state: object  # (coef, intercept) | TreeNodes | Forest | Boosted


def _matrix(X) -> tuple[np.ndarray, list[str] | None]:
    if isinstance(X, FeatureMatrix):
        return X.values, list(X.names)
    return np.asarray(X, dtype=np.float64), None


def fit(spec: ModelSpec, X, y) -> TrainedModel:
    """Fit one model. Deterministic in (spec, X, y) including spec.seed."""
    values, names = _matrix(X)
    y = np.asarray(y, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] == 0 or values.shape[1] == 0:
        raise FitError(f"degenerate feature matrix with shape {values.shape}")
    if values.shape[0] < 2:
        raise FitError("need at least 2 training rows")
    if values.shape[0] != len(y):
        raise FitError("feature matrix and target length differ")
    if not np.all(np.isfinite(values)) or not np.all(np.isfinite(y)):
        raise FitError("training data must be finite")

    p = spec.resolved_params()
    if spec.algorithm == "lr":
        state = fit_linear(values, y)
    elif spec.algorithm == "rr":
        state = fit_ridge(values, y, alpha=p["alpha"])
    elif spec.algorithm == "dtr":
        state = fit_decision_tree(
            values,
            y,
            max_depth=p["max_depth"],
            min_samples_split=p["min_samples_split"],
            max_features=p["max_features"],
            seed=spec.seed,
        )
    elif spec.algorithm == "rf":
        state = fit_forest(
            values,
            y,
            n_trees=p["n_trees"],
            bootstrap=p["bootstrap"],
            max_depth=p["max_depth"],
            min_samples_split=p["min_samples_split"],
            max_features=p["max_features"],
            seed=spec.seed,
        )
    else:
        state = fit_boosted(
            values,
            y,
            n_stages=p["n_stages"],
            learning_rate=p["learning_rate"],
            max_depth=p["max_depth"],
            min_samples_split=p["min_samples_split"],
            seed=spec.seed,
        )
    return TrainedModel(spec.algorithm, p, spec.seed, names, state)


def predict(model: TrainedModel, X) -> np.ndarray:
    values, names = _matrix(X)
    if model.feature_names is not None and names is not None and names != model.feature_names:
        raise PredictError(
            f"feature schema mismatch: trained on {model.feature_names}, got {names}"
        )
    if values.ndim != 2:
        raise PredictError("feature matrix must be 2-D")
    if model.feature_names is not None and values.shape[1] != len(model.feature_names):
        raise PredictError(
            f"expected {len(model.feature_names)} columns, got {values.shape[1]}"
        )
    if model.algorithm in ("lr", "rr"):
        coef, intercept = model.state
        return predict_linear(coef, intercept, values)
    return model.state.predict(values)


def _tree_to_dict(tree: TreeNodes) -> dict:
    return {
        "feature": tree.feature.tolist(),
        "threshold": tree.threshold.tolist(),
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "value": tree.value.tolist(),
    }


def _tree_from_dict(d: dict) -> TreeNodes:
    return TreeNodes(
        np.asarray(d["feature"], dtype=np.int32),
        np.asarray(d["threshold"], dtype=np.float64),
        np.asarray(d["left"], dtype=np.int32),
        np.asarray(d["right"], dtype=np.int32),
        np.asarray(d["value"], dtype=np.float64),
    )


def model_to_dict(model: TrainedModel) -> dict:
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "algorithm": model.algorithm,
        "hyperparameters": model.params,
        "seed": model.seed,
        "feature_names": model.feature_names,
    }
    if model.algorithm in ("lr", "rr"):
        coef, intercept = model.state
        doc["state"] = {"coef": np.asarray(coef).tolist(), "intercept": intercept}
    elif model.algorithm == "dtr":
        doc["state"] = {"tree": _tree_to_dict(model.state)}
    elif model.algorithm == "rf":
        doc["state"] = {"trees": [_tree_to_dict(t) for t in model.state.trees]}
    else:
        doc["state"] = {
            "init": model.state.init,
            "learning_rate": model.state.learning_rate,
            "trees": [_tree_to_dict(t) for t in model.state.trees],
        }
    return doc


def model_from_dict(doc: dict) -> TrainedModel:
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {doc.get('format_version')!r}")
    algorithm = doc["algorithm"]
    state_doc = doc["state"]
    if algorithm in ("lr", "rr"):
        state = (np.asarray(state_doc["coef"], dtype=np.float64), float(state_doc["intercept"]))
    elif algorithm == "dtr":
        state = _tree_from_dict(state_doc["tree"])
    elif algorithm == "rf":
        state = Forest([_tree_from_dict(t) for t in state_doc["trees"]])
    elif algorithm == "gbr":
        state = Boosted(
            float(state_doc["init"]),
            float(state_doc["learning_rate"]),
            [_tree_from_dict(t) for t in state_doc["trees"]],
        )
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return TrainedModel(algorithm, doc["hyperparameters"], doc["seed"], doc["feature_names"], state)


def save_model(model: TrainedModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model)), encoding="utf-8")


def load_model(path: str | Path) -> TrainedModel:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


__all__ = [
    "ALGORITHMS",
    "DEFAULT_PARAMS",
    "EncodePolicy",
    "EncodingMap",
    "FeatureMatrix",
    "FitError",
    "ModelSpec",
    "PredictError",
    "TargetMissingError",
    "TrainedModel",
    "backend",
    "encode",
    "fit",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "predict",
    "save_model",
]
