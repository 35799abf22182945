"""Command-line surface.

Subcommands wrap the library one-to-one: ``train`` fits a critic and writes
the model plus its trace, ``weights`` extracts balancing weights,
``check-balance`` scores them, ``effect`` fits a weighted learner and
evaluates it, ``synth`` writes the benchmark datasets, ``experiment`` runs
a batch grid, and ``oracle`` prints closed-form reference values.

Exit codes: 0 on success, 2 for configuration or parse problems, 3 when a
computation hit the numeric divergence guard.  ``--errors-json`` switches
stderr to one machine-readable JSON object per failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import balancing, effect, experiments, oracle, synthdata, trainer
from .errors import ConfigError, DivergenceSignal, NbwError
from .net import RatioNet
from .sampler import VariableLayout, load_csv, save_csv


def _read(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def cmd_train(args) -> int:
    data = load_csv(args.data)
    layout = VariableLayout.from_json(_read(args.layout))
    cfg = trainer.TrainConfig.from_json(_read(args.config))
    net, trace = trainer.train(data, layout, cfg)
    _write(args.out_model, net.to_json())
    trace.to_csv(args.out_trace)
    print(
        f"trained: stop_reason={trace.stop_reason} selected_step={trace.selected_step} "
        f"best_estimate={'n/a' if trace.selected_step is None else repr(trace.best_estimate)}"
    )
    return 0


def cmd_weights(args) -> int:
    net = RatioNet.from_json(_read(args.model))
    data = load_csv(args.data)
    layout = VariableLayout.from_json(_read(args.layout)) if args.layout else None
    w = balancing.compute_weights(net, data, layout)
    balancing.save_weights(w, args.out)
    print(f"wrote {len(w)} weights, ess={balancing.effective_sample_size(w):.1f}")
    return 0


def cmd_check_balance(args) -> int:
    train_data = load_csv(args.train)
    test_data = load_csv(args.test)
    layout = VariableLayout.from_json(_read(args.layout))
    weights = balancing.load_weights(args.weights)
    test_weights = balancing.load_weights(args.test_weights) if args.test_weights else None
    cfg = trainer.TrainConfig.from_json(_read(args.config))
    report = balancing.check_balance(
        train_data, test_data, layout, weights, cfg, test_weights=test_weights
    )
    _write(args.out, report.to_json())
    print(
        f"i_alpha(weighted)={report.i_alpha_weighted:.6g} "
        f"i_alpha(uniform)={report.i_alpha_uniform:.6g} ess={report.ess:.1f}"
    )
    return 0


def cmd_effect(args) -> int:
    train_data = load_csv(args.train)
    test_data = load_csv(args.test)
    weights = balancing.load_weights(args.weights) if args.weights else None
    if weights is not None and len(weights) != train_data.n_rows:
        raise ConfigError(
            f"{len(weights)} weights for {train_data.n_rows} training rows"
        )
    feature_cols = (
        args.features.split(",")
        if args.features
        else [c for c in train_data.columns if c not in (args.target, args.truth)]
    )
    xi = [train_data.column_index(c) for c in feature_cols]
    x = train_data.values[:, xi]
    y = train_data.values[:, train_data.column_index(args.target)]
    if args.learner == "linear":
        model = effect.weighted_linear_regression(x, y, weights)
    else:
        model = effect.weighted_mlp_train(x, y, weights, effect.RegressionProfile(seed=args.seed))
    estimate = effect.evaluate_cace(model, test_data, args.truth, feature_cols)
    _write(args.out, estimate.to_json())
    if args.predictions:
        estimate.save_predictions(args.predictions)
    print(f"{estimate.learner}: rmse={estimate.rmse_vs_truth:.6g}")
    return 0


def cmd_synth(args) -> int:
    if args.generator == "gaussian":
        data = synthdata.gen_gaussian(synthdata.GaussianSpec(args.d, args.rho), args.n, args.seed)
        save_csv(data, args.out)
        print(f"wrote {data.n_rows}x{data.n_cols} -> {args.out}")
    elif args.generator == "causal":
        train_main, train_latent = synthdata.gen_causal_train(args.n, args.seed)
        test_main, test_latent = synthdata.gen_causal_test(args.n, args.seed + 1, args.mode)
        save_csv(train_main, args.out_train)
        save_csv(train_latent, _latent_path(args.out_train))
        save_csv(test_main, args.out_test)
        save_csv(test_latent, _latent_path(args.out_test))
        print(f"wrote {args.out_train} and {args.out_test} (+ latent companions)")
    else:
        main_data, side = synthdata.gen_logistic_binary(args.n, args.seed)
        save_csv(main_data, args.out)
        save_csv(side, _latent_path(args.out))
        print(f"wrote {args.out} (+ latent companion)")
    return 0


def cmd_experiment(args) -> int:
    cfg = experiments.ExperimentConfig.from_json(_read(args.config))
    summary = experiments.run_experiment(cfg)
    print(json.dumps(summary))
    return 0


def cmd_oracle(args) -> int:
    if args.quantity == "alpha-div":
        value = oracle.alpha_information(args.d, args.rho, args.alpha)
        print(repr(value))
    else:
        if not args.x:
            raise ConfigError("log-ratio needs --x with a comma-separated point")
        try:
            point = np.array([float(v) for v in args.x.split(",")])
        except ValueError:
            raise ConfigError(f"cannot parse point '{args.x}'") from None
        q = oracle.ZeroMeanGaussian(np.eye(args.d))
        p = oracle.ZeroMeanGaussian(oracle.equicorrelation(args.d, args.rho))
        print(repr(oracle.log_density_ratio(q, p, point)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nbw", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a balancing-weight critic")
    p.add_argument("--data", required=True)
    p.add_argument("--layout", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out-model", required=True)
    p.add_argument("--out-trace", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("weights", help="extract balancing weights from a model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--layout")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("check-balance", help="score weights with a fresh checker critic")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--layout", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--test-weights")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_check_balance)

    p = sub.add_parser("effect", help="fit a weighted learner and evaluate it")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--weights")
    p.add_argument("--target", default="y")
    p.add_argument("--truth", default="y_true")
    p.add_argument("--features", help="comma-separated feature columns")
    p.add_argument("--learner", choices=("linear", "mlp"), default="linear")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--predictions")
    p.set_defaults(func=cmd_effect)

    p = sub.add_parser("synth", help="generate benchmark datasets")
    gen = p.add_subparsers(dest="generator", required=True)
    g = gen.add_parser("gaussian")
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--rho", type=float, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g = gen.add_parser("causal")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--mode", choices=("exp1", "exp2"), default="exp1")
    g.add_argument("--out-train", required=True)
    g.add_argument("--out-test", required=True)
    g = gen.add_parser("logistic")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("experiment", help="run a batch experiment grid")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("oracle", help="print closed-form reference values")
    p.add_argument("quantity", choices=("alpha-div", "log-ratio"))
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--x", help="comma-separated point for log-ratio")
    p.set_defaults(func=cmd_oracle)

    parser.add_argument("--errors-json", action="store_true", help="emit errors as JSON on stderr")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DivergenceSignal as exc:
        _report_error(args, exc, kind="divergence")
        return 3
    except NbwError as exc:
        _report_error(args, exc, kind="config")
        return 2


def _report_error(args, exc: Exception, kind: str) -> None:
    if getattr(args, "errors_json", False):
        payload = {"error": type(exc).__name__, "kind": kind, "message": str(exc)}
        if isinstance(exc, DivergenceSignal):
            payload["magnitude"] = exc.magnitude
        print(json.dumps(payload), file=sys.stderr)
    else:
        print(f"nbw: error: {exc}", file=sys.stderr)


def _latent_path(path: str) -> str:
    return (path[:-4] if path.endswith(".csv") else path) + ".latent.csv"


if __name__ == "__main__":
    sys.exit(main())
