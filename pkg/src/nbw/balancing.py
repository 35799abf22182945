"""Balancing weights from a trained critic, plus the balance check.

The weight of sample i is exp(-T(x_i)) / Z with Z the empirical mean of
exp(-T), so weights are nonnegative with mean exactly one and adding any
constant to the critic cancels.  The balance check trains a fresh critic
against the reweighted source: if the weights balanced the data, no critic
can tell the reweighted source from the product target and the estimated
divergence information stays near zero.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .divergence import guarded_exp
from .errors import ConfigError, ParseError
from .net import RatioNet, forward
from .rng import derive_seed
from .sampler import Dataset, VariableLayout, features
from .trainer import TrainConfig, TrainTrace, config_with_test_data, train

_TAG_CHECKER = 97


@dataclass(frozen=True)
class BalancingWeights:
    """Mean-one nonnegative per-sample weights with provenance."""

    values: np.ndarray
    source_model: str = ""
    normalizer: float = 1.0

    def __post_init__(self):
        w = np.asarray(self.values, dtype=float).ravel()
        object.__setattr__(self, "values", w)
        if w.size == 0:
            raise ConfigError("weights are empty")
        if not np.isfinite(w).all() or (w < 0).any():
            raise ConfigError("weights must be finite and nonnegative")
        if abs(w.mean() - 1.0) > 1e-9:
            raise ConfigError(f"weights must have mean 1, got {w.mean()!r}")

    def __len__(self) -> int:
        return self.values.size


def compute_weights(net: RatioNet, data: Dataset, layout: VariableLayout | None = None) -> BalancingWeights:
    """exp(-T) normalized by its empirical mean over the given rows."""
    if layout is not None:
        x = features(data, layout)
    else:
        x = data.values
    if x.shape[1] != net.input_dim:
        raise ConfigError(f"data has {x.shape[1]} feature columns, model expects {net.input_dim}")
    t = forward(net, x)
    raw = guarded_exp(-t, "weight exp(-T)")
    z = float(raw.mean())
    return BalancingWeights(values=raw / z, source_model=net.param_hash(), normalizer=z)


def effective_sample_size(weights: BalancingWeights | np.ndarray) -> float:
    """N^2 / sum(w^2) for mean-one weights; equals N when uniform."""
    w = weights.values if isinstance(weights, BalancingWeights) else np.asarray(weights, dtype=float)
    denom = float(np.sum(w**2))
    if denom == 0:
        raise ConfigError("weights are all zero")
    return w.size**2 / denom


@dataclass
class BalanceReport:
    """Outcome of the balance check.

    ``i_alpha_weighted`` is the divergence information estimated for the
    reweighted source (max over checker evaluation steps of the test-side
    estimate); ``i_alpha_uniform`` is the same procedure with unit weights,
    i.e. the plain information estimate for the raw source.
    """

    i_alpha_weighted: float
    i_alpha_uniform: float
    ess: float
    max_weight: float
    trace: TrainTrace = field(repr=False)

    def to_json(self) -> str:
        return json.dumps(
            {
                "i_alpha_weighted": self.i_alpha_weighted,
                "i_alpha_uniform": self.i_alpha_uniform,
                "ess": self.ess,
                "max_weight": self.max_weight,
                "trace": {
                    "stop_reason": self.trace.stop_reason,
                    "selected_step": self.trace.selected_step,
                    "records": [
                        [r.step, r.train_loss, r.test_loss, r.test_estimate]
                        for r in self.trace.records
                    ],
                },
            }
        )


def check_balance(
    train_data: Dataset,
    test_data: Dataset,
    layout: VariableLayout,
    weights: BalancingWeights | np.ndarray,
    cfg: TrainConfig,
    test_weights: BalancingWeights | np.ndarray | None = None,
) -> BalanceReport:
    """Score how well the weights balance the source against the target.

    Trains a fresh checker critic whose source-side empirical means are
    weighted, on both the training rows (driving the updates) and the test
    rows (scored each step); the reported value is the maximum test-side
    estimate.  An identical unit-weight run gives the uniform reference.

    Test rows need their own weights: pass ``test_weights`` (computed by
    applying the weight model to the test rows, the intended pipeline);
    when omitted and both sets have equal size, train weights are paired to
    test rows by index, which matches the check's published pseudocode.
    Both checker runs share one derived seed so the comparison is paired.
    """
    w = _as_weight_array(weights)
    if w.size != train_data.n_rows:
        raise ConfigError(f"{w.size} weights for {train_data.n_rows} training rows")
    if test_data.n_rows < 1:
        raise ConfigError("test set is empty")
    w = w / w.mean()

    if test_weights is not None:
        wt = _as_weight_array(test_weights)
        if wt.size != test_data.n_rows:
            raise ConfigError(f"{wt.size} test weights for {test_data.n_rows} test rows")
        wt = wt / wt.mean()
    elif np.allclose(w, 1.0, atol=1e-9):
        wt = np.ones(test_data.n_rows)
    elif test_data.n_rows == train_data.n_rows:
        wt = w
    else:
        raise ConfigError(
            "non-uniform weights with differing train/test sizes need explicit test_weights"
        )

    checker_cfg = config_with_test_data(cfg, test_data)
    checker_cfg = _with_seed(checker_cfg, derive_seed(cfg.seed, _TAG_CHECKER))

    _, trace_weighted = train(
        train_data, layout, checker_cfg, sample_weights=w, test_sample_weights=wt
    )
    _, trace_uniform = train(train_data, layout, checker_cfg)

    return BalanceReport(
        i_alpha_weighted=trace_weighted.best_estimate,
        i_alpha_uniform=trace_uniform.best_estimate,
        ess=effective_sample_size(w),
        max_weight=float(w.max()),
        trace=trace_weighted,
    )


def save_weights(weights: BalancingWeights | np.ndarray, path: str) -> None:
    w = _as_weight_array(weights)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["weight"])
        for v in w:
            writer.writerow([repr(float(v))])


def load_weights(path: str) -> BalancingWeights:
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["weight"]:
            raise ParseError(f"{path}: expected single-column CSV with header 'weight'")
        try:
            values = [float(row[0]) for row in reader if row]
        except (ValueError, IndexError):
            raise ParseError(f"{path}: non-numeric weight entry") from None
    if not values:
        raise ParseError(f"{path}: no weights")
    arr = np.array(values)
    return BalancingWeights(values=arr / arr.mean())


def _as_weight_array(weights) -> np.ndarray:
    if isinstance(weights, BalancingWeights):
        return weights.values.copy()
    w = np.asarray(weights, dtype=float).ravel()
    if not np.isfinite(w).all() or (w < 0).any():
        raise ConfigError("weights must be finite and nonnegative")
    if w.size and w.mean() <= 0:
        raise ConfigError("weights must have positive mean")
    return w


def _with_seed(cfg: TrainConfig, seed: int) -> TrainConfig:
    from dataclasses import replace

    return replace(cfg, seed=seed)
