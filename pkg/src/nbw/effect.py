"""Downstream weighted learners and causal-effect evaluation.

Balancing weights enter a supervised learner as per-sample weights: the
weighted fit estimates the regression function under the balanced law
rather than the observational one.  Two learners are provided, a weighted
least-squares line and a small weighted-MSE network sharing the package's
gradient machinery, plus RMSE evaluation against a noiseless truth column.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .balancing import BalancingWeights
from .errors import ConfigError, NumericError
from .net import RatioNet, adam_step, forward, init_adam, init_net, output_gradient_backward
from .rng import derive_seed
from .sampler import Dataset, minibatch_indices


@dataclass(frozen=True)
class LinearModel:
    """Least-squares coefficients, intercept first."""

    coefficients: np.ndarray

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.coefficients.size - 1:
            raise ConfigError(
                f"{x.shape[1]} features for {self.coefficients.size - 1} coefficients"
            )
        return self.coefficients[0] + x @ self.coefficients[1:]


def weighted_linear_regression(
    x: np.ndarray, y: np.ndarray, weights: BalancingWeights | np.ndarray | None = None
) -> LinearModel:
    """Minimize sum(w_i * (y_i - b.x_i)^2) by ridge-stabilized normal equations.

    An intercept column is prepended; the 1e-10 ridge only rescues
    rank-deficiency at the round-off level.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if x.shape[0] != y.size:
        raise ConfigError(f"{x.shape[0]} rows but {y.size} targets")
    w = _weight_vector(weights, y.size)
    design = np.column_stack([np.ones(y.size), x])
    wd = design * w[:, None]
    gram = design.T @ wd + 1e-10 * np.eye(design.shape[1])
    rhs = wd.T @ y
    try:
        beta = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"normal equations unsolvable: {exc}") from exc
    if not np.isfinite(beta).all():
        raise NumericError("normal equations produced non-finite coefficients")
    return LinearModel(coefficients=beta)


@dataclass(frozen=True)
class RegressionProfile:
    """Hyperparameters for the weighted network learner."""

    hidden: tuple[int, ...] = (100,) * 10
    lr: float = 1e-4
    batch_size: int = 1000
    epochs: int = 70
    seed: int = 0
    activation: str = "relu"


@dataclass
class MlpRegressor:
    net: RatioNet

    def predict(self, x: np.ndarray) -> np.ndarray:
        return forward(self.net, x)


def weighted_mse_gradient(
    net: RatioNet, x: np.ndarray, y: np.ndarray, w: np.ndarray
) -> tuple[np.ndarray, float]:
    """Gradient and value of mean(w * (y - f(x))^2) over the batch."""
    pred = forward(net, x)
    err = y - pred
    loss = float(np.mean(w * err * err))
    cot = -2.0 * w * err / y.size
    return output_gradient_backward(net, x, cot), loss


def weighted_mlp_train(
    x: np.ndarray,
    y: np.ndarray,
    weights: BalancingWeights | np.ndarray | None = None,
    profile: RegressionProfile | None = None,
) -> MlpRegressor:
    """Fit a regressor on the weighted squared error.

    Per-sample weights multiply the squared errors inside the batch mean,
    and are normalized to mean one so the loss scale is comparable across
    weight sets.  Shares the Adam and backprop machinery of the critic.
    """
    profile = profile or RegressionProfile()
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if x.shape[0] != y.size:
        raise ConfigError(f"{x.shape[0]} rows but {y.size} targets")
    w = _weight_vector(weights, y.size)

    net = init_net((x.shape[1], *profile.hidden, 1), profile.activation, profile.seed)
    adam = init_adam(net, profile.lr)
    n = y.size
    batch = min(profile.batch_size, n)
    for epoch in range(profile.epochs):
        for idx in minibatch_indices(n, batch, derive_seed(profile.seed, 1), epoch):
            grad, _ = weighted_mse_gradient(net, x[idx], y[idx], w[idx])
            adam_step(adam, net, grad)
    return MlpRegressor(net=net)


@dataclass
class EffectEstimate:
    """Predictions on a test set scored against the noiseless truth."""

    predictions: np.ndarray
    rmse_vs_truth: float
    learner: str

    def to_json(self) -> str:
        return json.dumps(
            {"learner": self.learner, "rmse": self.rmse_vs_truth, "n": int(self.predictions.size)}
        )

    def save_predictions(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["prediction"])
            for v in self.predictions:
                writer.writerow([repr(float(v))])


def evaluate_cace(
    model,
    test: Dataset,
    truth_column: str = "y_true",
    feature_columns: list[str] | None = None,
) -> EffectEstimate:
    """RMSE of the model's predictions against the test set's truth column."""
    if truth_column not in test.columns:
        raise ConfigError(f"test set has no truth column '{truth_column}'")
    if feature_columns is None:
        feature_columns = [c for c in test.columns if c != truth_column]
    x = test.values[:, [test.column_index(c) for c in feature_columns]]
    truth = test.values[:, test.column_index(truth_column)]
    predictions = np.asarray(model.predict(x), dtype=float).ravel()
    rmse = float(math.sqrt(np.mean((predictions - truth) ** 2)))
    learner = "weighted-linear" if isinstance(model, LinearModel) else "weighted-mlp"
    return EffectEstimate(predictions=predictions, rmse_vs_truth=rmse, learner=learner)


def _weight_vector(weights, n: int) -> np.ndarray:
    if weights is None:
        return np.ones(n)
    w = weights.values if isinstance(weights, BalancingWeights) else np.asarray(weights, dtype=float).ravel()
    if w.size != n:
        raise ConfigError(f"{w.size} weights for {n} rows")
    if not np.isfinite(w).all() or (w < 0).any():
        raise ConfigError("weights must be finite and nonnegative")
    mean = w.mean()
    if mean <= 0:
        raise ConfigError("weights must have positive mean")
    return w / mean
