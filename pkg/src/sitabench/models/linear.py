"""Closed-form linear and ridge regression.

Both fit an intercept. The ridge penalty excludes the intercept. Rank
deficient systems fall back to the minimum-norm least squares solution.
"""
from __future__ import annotations

import numpy as np


def fit_linear(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Ordinary least squares; returns (coefficients, intercept)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    A = np.column_stack([X, np.ones(X.shape[0])])
    w, *_ = np.linalg.lstsq(A, y, rcond=None)
    return w[:-1], float(w[-1])


def fit_ridge(X: np.ndarray, y: np.ndarray, alpha: float = 1.0) -> tuple[np.ndarray, float]:
    """Ridge regression minimizing ||y - Xw - b||^2 + alpha * ||w||^2."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    A = np.column_stack([X, np.ones(n)])
    gram = A.T @ A
    penalty = np.eye(d + 1) * alpha
    penalty[d, d] = 0.0  # intercept unpenalized
    rhs = A.T @ y
    try:
        w = np.linalg.solve(gram + penalty, rhs)
    except np.linalg.LinAlgError:
        w, *_ = np.linalg.lstsq(gram + penalty, rhs, rcond=None)
    return w[:-1], float(w[-1])


def predict_linear(coef: np.ndarray, intercept: float, X: np.ndarray) -> np.ndarray:
    return np.asarray(X, dtype=np.float64) @ np.asarray(coef, dtype=np.float64) + intercept
