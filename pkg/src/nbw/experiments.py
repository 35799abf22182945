"""Batch experiment driver: grids of seeded runs plus aggregation.

Three experiment kinds: a sweep over divergence orders on correlated
Gaussian data, a sweep over data dimension tracking where the test-set
estimate peaks, and the causal regression benchmark comparing weighted to
unweighted learners.  Every cell is an isolated deterministic run keyed by
(grid point, replicate); cells may fan out across worker threads, capped
by the NBW_THREADS environment variable, and aggregation is
order-independent.  Percentile bands use the nearest-rank rule.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .balancing import compute_weights
from .effect import evaluate_cace, weighted_linear_regression
from .errors import ConfigError
from .oracle import alpha_information
from .rng import derive_seed
from .trainer import TrainConfig, config_with_test_data, early_stop_step, train
from .synthdata import (
    GaussianSpec,
    causal_feature_columns,
    causal_shuffle_layout,
    gaussian_layout,
    gen_causal_test,
    gen_causal_train,
    gen_gaussian,
)

_KINDS = ("alpha-sweep", "dim-sweep", "causal")


@dataclass(frozen=True)
class ExperimentConfig:
    """Grid definition for one batch experiment."""

    experiment: str
    out_dir: str = "results"
    replicates: int = 20
    seed_base: int = 0
    alphas: tuple[float, ...] = (0.2, 0.5, 0.8)
    dims: tuple[int, ...] = (2, 3, 4, 5, 6, 7)
    sizes: tuple[int, ...] = (1000,)
    n: int = 5000
    d: int = 5
    rho: float = 0.8
    mode: str = "exp1"
    train: TrainConfig = TrainConfig()

    def __post_init__(self):
        if self.experiment not in _KINDS:
            raise ConfigError(f"experiment must be one of {_KINDS}")
        if self.replicates < 1:
            raise ConfigError("replicates must be at least 1")
        grid = {"alpha-sweep": self.alphas, "dim-sweep": self.dims, "causal": self.sizes}[
            self.experiment
        ]
        if not grid:
            raise ConfigError("grid is empty")

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad experiment JSON: {exc}") from exc
        train_cfg = TrainConfig.from_json(json.dumps(raw.pop("train", {})))
        for key in ("alphas", "dims", "sizes"):
            if key in raw:
                raw[key] = tuple(raw[key])
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown experiment fields: {sorted(unknown)}")
        return cls(train=train_cfg, **raw)


def divergence_sweep_cell(
    d: int, rho: float, n: int, alpha: float, seed: int, base: TrainConfig
) -> dict:
    """One seeded run on fresh correlated-Gaussian train and test sets."""
    spec = GaussianSpec(d=d, rho=rho)
    train_data = gen_gaussian(spec, n, derive_seed(seed, 11))
    test_data = gen_gaussian(spec, n, derive_seed(seed, 12))
    cfg = replace(config_with_test_data(base, test_data), alpha=alpha, seed=seed)
    _, trace = train(train_data, gaussian_layout(d), cfg)
    oracle = alpha_information(d, rho, alpha)
    return {
        "d": d,
        "rho": rho,
        "n": n,
        "alpha": alpha,
        "seed": seed,
        "stop_reason": trace.stop_reason,
        "selected_step": trace.selected_step,
        "k_max": trace.selected_step,
        "peak_estimate": None if trace.selected_step is None else trace.best_estimate,
        "oracle": oracle if math.isfinite(oracle) else None,
        "records": [
            [r.step, r.train_loss, r.test_loss, r.test_estimate] for r in trace.records
        ],
    }


def causal_cell(n: int, seed: int, base: TrainConfig, mode: str = "exp1") -> dict:
    """One causal-benchmark replicate: unweighted versus weighted learner.

    The critic validates against a fresh observational draw; the learners
    are scored on the counterfactual test set against the noiseless truth.
    """
    train_main, _ = gen_causal_train(n, derive_seed(seed, 21))
    critic_test, _ = gen_causal_train(n, derive_seed(seed, 22))
    cf_test, _ = gen_causal_test(1000, derive_seed(seed, 23), mode)

    layout = causal_shuffle_layout(mode)
    cfg = replace(config_with_test_data(base, critic_test), seed=seed)
    net, trace = train(train_main, layout, cfg)
    weights = compute_weights(net, train_main, layout)

    cols = causal_feature_columns()
    xi = [train_main.column_index(c) for c in cols]
    x = train_main.values[:, xi]
    y = train_main.values[:, train_main.column_index("y")]

    plain = weighted_linear_regression(x, y)
    weighted = weighted_linear_regression(x, y, weights)
    rmse_plain = evaluate_cace(plain, cf_test, feature_columns=cols).rmse_vs_truth
    rmse_nbw = evaluate_cace(weighted, cf_test, feature_columns=cols).rmse_vs_truth

    ess = float(weights.values.size**2 / np.sum(weights.values**2))
    return {
        "n": n,
        "mode": mode,
        "seed": seed,
        "stop_reason": trace.stop_reason,
        "selected_step": trace.selected_step,
        "rmse_unweighted": rmse_plain,
        "rmse_nbw": rmse_nbw,
        "ess": ess,
        "max_weight": float(weights.values.max()),
    }


def nearest_rank(values, q: float) -> float:
    """Percentile by the nearest-rank rule: value at rank ceil(q/100 * n)."""
    ordered = sorted(values)
    if not ordered:
        raise ConfigError("no values to rank")
    rank = max(1, math.ceil(q / 100.0 * len(ordered)))
    return float(ordered[rank - 1])


def _band_rows(kind: str, label: str, cells: list[dict]) -> list[list]:
    by_step: dict[int, list[float]] = {}
    for cell in cells:
        for step, _, _, estimate in cell["records"]:
            by_step.setdefault(int(step), []).append(float(estimate))
    rows = []
    for step in sorted(by_step):
        vals = by_step[step]
        rows.append(
            [
                kind,
                label,
                step,
                len(vals),
                nearest_rank(vals, 50),
                nearest_rank(vals, 45),
                nearest_rank(vals, 55),
                nearest_rank(vals, 5),
                nearest_rank(vals, 95),
            ]
        )
    return rows


def _worker_count() -> int:
    env = os.environ.get("NBW_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"NBW_THREADS must be an integer, got '{env}'") from None
    return max(1, min(4, os.cpu_count() or 1))


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run every (grid point, replicate) cell and write results to disk.

    Produces ``cells/<key>.json`` per cell and ``aggregate.csv`` with
    median / 45-55 / 5-95 nearest-rank bands per evaluation step (or, for
    the causal benchmark, mean and standard error per method).  A failing
    cell records its error and is skipped by the aggregate.
    """
    os.makedirs(os.path.join(cfg.out_dir, "cells"), exist_ok=True)
    jobs: list[tuple[str, str]] = []  # (cell key, grid label)
    if cfg.experiment == "alpha-sweep":
        points = [(f"alpha{a:g}", a) for a in cfg.alphas]
    elif cfg.experiment == "dim-sweep":
        points = [(f"d{d}", d) for d in cfg.dims]
    else:
        points = [(f"n{n}", n) for n in cfg.sizes]

    def run_cell(point_index: int, label: str, value, rep: int) -> tuple[str, dict]:
        key = f"{label}_rep{rep}"
        # stable cell seed: never Python's randomized hash()
        seed = derive_seed(cfg.seed_base, point_index * 100003 + rep)
        try:
            if cfg.experiment == "alpha-sweep":
                record = divergence_sweep_cell(cfg.d, cfg.rho, cfg.n, value, seed, cfg.train)
            elif cfg.experiment == "dim-sweep":
                record = divergence_sweep_cell(value, cfg.rho, cfg.n, cfg.train.alpha, seed, cfg.train)
                record["k0"] = early_stop_step(cfg.n, value, 1.0, 0.0)
            else:
                record = causal_cell(value, seed, cfg.train, cfg.mode)
        except Exception as exc:  # partial failures are data, not crashes
            record = {"error": f"{type(exc).__name__}: {exc}"}
        record["cell"] = key
        record["replicate"] = rep
        return key, record

    tasks = [
        (i, label, value, rep)
        for i, (label, value) in enumerate(points)
        for rep in range(cfg.replicates)
    ]
    with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
        results = list(pool.map(lambda t: run_cell(*t), tasks))

    results.sort(key=lambda kv: kv[0])
    cells_by_label: dict[str, list[dict]] = {}
    for key, record in results:
        with open(os.path.join(cfg.out_dir, "cells", f"{key}.json"), "w", encoding="utf-8") as fh:
            json.dump(record, fh, indent=1)
        if "error" not in record:
            cells_by_label.setdefault(key.rsplit("_rep", 1)[0], []).append(record)

    agg_path = os.path.join(cfg.out_dir, "aggregate.csv")
    with open(agg_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if cfg.experiment == "causal":
            writer.writerow(["experiment", "cell", "method", "mean_rmse", "stderr", "runs"])
            for label in sorted(cells_by_label):
                cells = cells_by_label[label]
                for method, field_name in (("unweighted-lr", "rmse_unweighted"), ("nbw-lr", "rmse_nbw")):
                    vals = np.array([c[field_name] for c in cells])
                    writer.writerow(
                        [cfg.experiment, label, method, float(vals.mean()),
                         float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0,
                         vals.size]
                    )
        else:
            writer.writerow(
                ["experiment", "cell", "step", "runs", "median", "p45", "p55", "p05", "p95"]
            )
            for label in sorted(cells_by_label):
                for row in _band_rows(cfg.experiment, label, cells_by_label[label]):
                    writer.writerow(row)

    summary = {
        "experiment": cfg.experiment,
        "cells": len(results),
        "failed": sum(1 for _, r in results if "error" in r),
        "aggregate": agg_path,
    }
    if cfg.experiment == "dim-sweep":
        summary["median_k_max"] = {}
        for label, cells in sorted(cells_by_label.items()):
            observed = [c["k_max"] for c in cells if c["k_max"] is not None]
            summary["median_k_max"][label] = nearest_rank(observed, 50) if observed else None
    with open(os.path.join(cfg.out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=1)
    return summary
