"""Linear readout training: regularized least squares on readout features."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np


@dataclass(frozen=True)
class ReadoutWeights:
    """One trained weight per observable."""

    eta: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.eta)):
            raise ValueError("readout weights must be finite")


@dataclass(frozen=True)
class TrainConfig:
    washout: int = 0
    ridge: float = 0.0

    def __post_init__(self):
        if self.washout < 0:
            raise ValueError("washout must be non-negative")
        if self.ridge < 0:
            raise ValueError("ridge strength must be non-negative")


def build_feature_matrix(
    runs: Sequence[Sequence[np.ndarray]],
    targets: Sequence[Sequence[float]],
    cfg: TrainConfig,
) -> Tuple[np.ndarray, np.ndarray]:
    """Stack post-washout readout vectors into rows, with aligned targets."""
    if len(runs) != len(targets):
        raise ValueError("need one target sequence per readout sequence")
    rows: List[np.ndarray] = []
    ys: List[float] = []
    width = None
    for readouts, labels in zip(runs, targets):
        if len(readouts) != len(labels):
            raise ValueError("target length does not match readout length")
        if cfg.washout >= len(readouts):
            raise ValueError("washout leaves no training rows for a series")
        for vec, y in zip(readouts[cfg.washout :], labels[cfg.washout :]):
            vec = np.asarray(vec, dtype=float)
            if width is None:
                width = vec.size
            elif vec.size != width:
                raise ValueError("readout vectors disagree on observable count")
            rows.append(vec)
            ys.append(float(y))
    if not rows:
        raise ValueError("empty training window")
    return np.vstack(rows), np.array(ys)


def default_ridge(features: np.ndarray) -> float:
    """1e-8 * trace(R^T R) / M: stabilizes near-collinear shot-noise columns."""
    m = features.shape[1]
    return 1e-8 * float(np.einsum("ij,ij->", features, features)) / m


def fit_readout(features: np.ndarray, targets: np.ndarray, ridge: float = 0.0) -> ReadoutWeights:
    """Solve min ||R eta - y||^2 + ridge * ||eta||^2.

    ridge 0 falls back to a rank-revealing least-squares solve, which returns
    the minimum-norm solution on rank deficiency.
    """
    features = np.asarray(features, dtype=float)
    targets = np.asarray(targets, dtype=float).reshape(-1)
    if features.shape[0] != targets.size:
        raise ValueError("row count of features must match target count")
    if features.shape[0] < 1:
        raise ValueError("need at least one training row")
    if ridge == 0.0:
        eta, *_ = np.linalg.lstsq(features, targets, rcond=None)
    else:
        m = features.shape[1]
        gram = features.T @ features + ridge * np.eye(m)
        eta = np.linalg.solve(gram, features.T @ targets)
    return ReadoutWeights(eta=eta)


def predict(weights: ReadoutWeights, readout: np.ndarray) -> float:
    readout = np.asarray(readout, dtype=float)
    if readout.shape != weights.eta.shape:
        raise ValueError("readout length does not match weight count")
    return float(weights.eta @ readout)


def predict_series(weights: ReadoutWeights, readouts: Sequence[np.ndarray]) -> np.ndarray:
    return np.array([predict(weights, r) for r in readouts])


def mse_loss(predictions: Sequence[float], targets: Sequence[float]) -> float:
    predictions = np.asarray(predictions, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if predictions.size == 0:
        raise ValueError("empty loss input")
    if predictions.shape != targets.shape:
        raise ValueError("prediction/target length mismatch")
    return float(np.mean((predictions - targets) ** 2))
