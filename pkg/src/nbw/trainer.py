"""Training loop with test-set validation, early stopping, and selection.

One fresh product shuffle realizes the target side before the loop; each
step draws a mini-batch, back-propagates the variational loss, and applies
Adam.  At evaluation points the full train and test sets are scored, and
the model snapshot with the highest test-set divergence estimate is the
one returned: past that peak the critic is memorizing the empirical target
and its generalization only degrades.

The hard step cap C * N^(2 / (d + delta)) bounds training by the same
memorization argument and can be active together with test selection.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .divergence import AlphaParam
from .errors import ConfigError, DivergenceSignal
from .net import RatioNet, adam_step, backward_alpha, flatten_params, init_adam, init_net, loss_terms, set_params
from .rng import derive_seed, stream
from .sampler import Dataset, VariableLayout, features, minibatch_indices, product_shuffle

# tags for deriving independent streams from one run seed
_TAG_SPLIT, _TAG_INIT, _TAG_SHUFFLE_TRAIN, _TAG_SHUFFLE_TEST, _TAG_BATCH = range(5)


@dataclass(frozen=True)
class EarlyStop:
    """Step-cap parameters; the cap is C * N^(2 / (d + delta))."""

    C: float = 1.0
    delta: float = 0.5

    def __post_init__(self):
        if not (self.C > 0 and self.delta > 0):
            raise ConfigError("early stop requires C > 0 and delta > 0")


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one training run.

    Defaults mirror the divergence-estimation profile (3 hidden layers of
    100 units, Adam at 1e-3, batches of 2500, 500 epochs);
    :meth:`causal_profile` switches to the deeper regression-benchmark
    profile.  ``batch_size`` larger than the training set is clamped to a
    single full batch.  ``test_data`` holds an explicit held-out set;
    otherwise ``test_fraction`` of the input is split off by a seeded
    permutation.
    """

    alpha: float = 0.5
    lr: float = 1e-3
    batch_size: int = 2500
    epochs: int = 500
    seed: int = 0
    eval_every: int = 1
    early_stop: EarlyStop | None = None
    test_fraction: float = 0.5
    test_data: Dataset | None = field(default=None, compare=False)
    hidden: tuple[int, ...] = (100, 100, 100)
    activation: str = "relu"
    reshuffle_per_epoch: bool = False

    def __post_init__(self):
        AlphaParam(self.alpha)
        if self.epochs < 1:
            raise ConfigError("epochs must be at least 1")
        if self.lr <= 0:
            raise ConfigError("learning rate must be positive")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        if self.eval_every < 1:
            raise ConfigError("eval_every must be at least 1")
        if self.test_data is None and not (0.0 < self.test_fraction < 1.0):
            raise ConfigError("test_fraction must be in (0, 1)")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    @classmethod
    def causal_profile(cls, **overrides) -> "TrainConfig":
        base = dict(alpha=0.5, lr=1e-4, batch_size=1000, epochs=70, hidden=(100,) * 10)
        base.update(overrides)
        return cls(**base)

    def to_json(self) -> str:
        payload = {
            "alpha": self.alpha,
            "lr": self.lr,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "seed": self.seed,
            "eval_every": self.eval_every,
            "early_stop": None
            if self.early_stop is None
            else {"C": self.early_stop.C, "delta": self.early_stop.delta},
            "test_fraction": self.test_fraction,
            "hidden": list(self.hidden),
            "activation": self.activation,
            "reshuffle_per_epoch": self.reshuffle_per_epoch,
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "TrainConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad config JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config JSON must be an object")
        kwargs = dict(raw)
        early = kwargs.pop("early_stop", None)
        if early is not None:
            early = EarlyStop(C=early["C"], delta=early["delta"])
        known = {f for f in cls.__dataclass_fields__ if f != "test_data"}
        unknown = set(kwargs) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "hidden" in kwargs:
            kwargs["hidden"] = tuple(kwargs["hidden"])
        return cls(early_stop=early, **kwargs)


@dataclass(frozen=True)
class TraceRecord:
    step: int
    train_loss: float
    test_loss: float
    test_estimate: float


@dataclass
class TrainTrace:
    """Per-evaluation loss trajectory plus the selection outcome.

    ``selected_step`` is the argmax of the recorded test estimates (ties
    resolved to the earliest step); ``stop_reason`` is one of
    ``epochs_exhausted``, ``early_stop_K0``, or ``divergence``.
    """

    records: list[TraceRecord] = field(default_factory=list)
    selected_step: int | None = None
    stop_reason: str = "epochs_exhausted"

    @property
    def steps(self) -> np.ndarray:
        return np.array([r.step for r in self.records], dtype=int)

    @property
    def test_estimates(self) -> np.ndarray:
        return np.array([r.test_estimate for r in self.records])

    @property
    def best_estimate(self) -> float:
        if self.selected_step is None:
            raise ConfigError("trace has no recorded evaluations")
        return next(r.test_estimate for r in self.records if r.step == self.selected_step)

    def to_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "train_loss", "test_loss", "test_estimate"])
            for r in self.records:
                writer.writerow([r.step, repr(r.train_loss), repr(r.test_loss), repr(r.test_estimate)])


def early_stop_step(n: int, d: int, C: float = 1.0, delta: float = 0.0) -> int:
    """Step cap C * n^(2 / (d + delta)), rounded half away from zero, >= 1.

    ``delta`` may be zero here (the limiting table value); configured runs
    use a strictly positive delta.
    """
    if n < 2 or d < 1:
        raise ConfigError("need n >= 2 and d >= 1")
    if C <= 0 or delta < 0:
        raise ConfigError("need C > 0 and delta >= 0")
    value = C * float(n) ** (2.0 / (d + delta))
    return max(1, int(math.floor(value + 0.5)))


def split(data: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded disjoint exhaustive split; ``fraction`` goes to the test set."""
    if not (0.0 < fraction < 1.0):
        raise ConfigError("split fraction must be in (0, 1)")
    n = data.n_rows
    if n < 2:
        raise ConfigError("cannot split fewer than 2 rows")
    n_test = min(max(int(round(fraction * n)), 1), n - 1)
    perm = stream(seed).permutation(n)
    return data.select_rows(perm[n_test:]), data.select_rows(perm[:n_test])


def train(
    data: Dataset,
    layout: VariableLayout,
    cfg: TrainConfig,
    sample_weights: np.ndarray | None = None,
    test_sample_weights: np.ndarray | None = None,
) -> tuple[RatioNet, TrainTrace]:
    """Fit a critic so exp(-T) estimates the target-to-source density ratio.

    Parameters
    ----------
    data : training rows; split internally unless ``cfg.test_data`` is set.
    layout : intervention groups and covariates defining the product target.
    cfg : hyperparameters; see :class:`TrainConfig`.
    sample_weights, test_sample_weights : optional mean-one weights applied
        to the source-side empirical means (train and test respectively),
        used by the balance checker to score an already-reweighted source.

    Returns the critic restored to the snapshot with the highest test-set
    divergence estimate and the full evaluation trace.  A numeric blow-up
    is recorded as ``stop_reason='divergence'`` with the partial trace, not
    raised.
    """
    alpha = AlphaParam(cfg.alpha)
    layout.validate_for(data)

    if cfg.test_data is not None:
        layout.validate_for(cfg.test_data)
        train_set, test_set = data, cfg.test_data
    else:
        if sample_weights is not None:
            raise ConfigError("sample_weights require an explicit test_data set")
        train_set, test_set = split(data, cfg.test_fraction, derive_seed(cfg.seed, _TAG_SPLIT))

    w_train = _checked_weights(sample_weights, train_set.n_rows, "sample_weights")
    w_test = _checked_weights(test_sample_weights, test_set.n_rows, "test_sample_weights")

    x_train = features(train_set, layout)
    x_test = features(test_set, layout)
    shuffle_seed = derive_seed(cfg.seed, _TAG_SHUFFLE_TRAIN)
    xq_train = product_shuffle(train_set, layout, shuffle_seed).features()
    xq_test = product_shuffle(test_set, layout, derive_seed(cfg.seed, _TAG_SHUFFLE_TEST)).features()

    net = init_net((layout.n_features, *cfg.hidden, 1), cfg.activation, derive_seed(cfg.seed, _TAG_INIT))
    adam = init_adam(net, cfg.lr)

    n = train_set.n_rows
    batch = min(cfg.batch_size, n)
    steps_per_epoch = math.ceil(n / batch)
    total_steps = cfg.epochs * steps_per_epoch
    cap = total_steps
    capped_by_k0 = False
    if cfg.early_stop is not None:
        k0 = early_stop_step(n, layout.n_features, cfg.early_stop.C, cfg.early_stop.delta)
        if k0 <= total_steps:
            cap, capped_by_k0 = k0, True

    trace = TrainTrace(stop_reason="early_stop_K0" if capped_by_k0 else "epochs_exhausted")
    best_estimate = -np.inf
    best_params = flatten_params(net)

    step = 0
    diverged = False
    for epoch in range(cfg.epochs):
        if cfg.reshuffle_per_epoch and epoch > 0:
            xq_train = product_shuffle(
                train_set, layout, derive_seed(shuffle_seed, epoch)
            ).features()
        for idx in minibatch_indices(n, batch, derive_seed(cfg.seed, _TAG_BATCH), epoch):
            step += 1
            try:
                grad, _ = backward_alpha(
                    net,
                    x_train[idx],
                    xq_train[idx],
                    alpha,
                    p_weights=None if w_train is None else w_train[idx],
                )
                adam_step(adam, net, grad)
                if step % cfg.eval_every == 0 or step == cap:
                    tr = loss_terms(net, x_train, xq_train, alpha, p_weights=w_train)
                    te = loss_terms(net, x_test, xq_test, alpha, p_weights=w_test)
                    trace.records.append(
                        TraceRecord(step, tr.loss, te.loss, te.estimate)
                    )
                    if te.estimate > best_estimate:
                        best_estimate = te.estimate
                        best_params = flatten_params(net)
                        trace.selected_step = step
            except DivergenceSignal:
                trace.stop_reason = "divergence"
                diverged = True
                break
            if step == cap:
                break
        if diverged or step == cap:
            break

    set_params(net, best_params)
    return net, trace


def _checked_weights(weights, n_rows: int, what: str) -> np.ndarray | None:
    if weights is None:
        return None
    w = np.asarray(weights, dtype=float).ravel()
    if w.size != n_rows:
        raise ConfigError(f"{what}: {w.size} weights for {n_rows} rows")
    if not np.isfinite(w).all() or (w < 0).any():
        raise ConfigError(f"{what} must be finite and nonnegative")
    mean = w.mean()
    if mean <= 0:
        raise ConfigError(f"{what} must have positive mean")
    return w / mean


def config_with_test_data(cfg: TrainConfig, test_data: Dataset) -> TrainConfig:
    """Copy of a config pinned to an explicit held-out set."""
    return replace(cfg, test_data=test_data)
