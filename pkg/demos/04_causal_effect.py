#!/usr/bin/env python3
"""End-to-end causal benchmark replicate.

Generates the observational training set and the counterfactual test set
(exposure decoupled from covariates by block shuffling, truth computed
noiselessly from the recovered latents), fits balancing weights, and
compares weighted against unweighted linear learners on out-of-sample RMSE.
"""

from nbw.balancing import compute_weights, effective_sample_size
from nbw.effect import evaluate_cace, weighted_linear_regression
from nbw.synthdata import (
    causal_feature_columns,
    causal_shuffle_layout,
    gen_causal_test,
    gen_causal_train,
)
from nbw.trainer import TrainConfig, config_with_test_data, train

N = 1000
train_main, _ = gen_causal_train(N, seed=100)
critic_holdout, _ = gen_causal_train(N, seed=101)
test_main, _ = gen_causal_test(1000, seed=102, mode="exp1")

layout = causal_shuffle_layout("exp1")
print(f"training rows: {N}; exposure block vs covariate block decoupled in the test set")

cfg = config_with_test_data(TrainConfig.causal_profile(seed=0, eval_every=5), critic_holdout)
net, trace = train(train_main, layout, cfg)
weights = compute_weights(net, train_main, layout)
print(f"critic stop: {trace.stop_reason} at step {trace.steps.max()}, "
      f"ESS {effective_sample_size(weights):.0f} of {N}")

cols = causal_feature_columns()
xi = [train_main.column_index(c) for c in cols]
x = train_main.values[:, xi]
y = train_main.values[:, train_main.column_index("y")]

plain = weighted_linear_regression(x, y)
weighted = weighted_linear_regression(x, y, weights)

rmse_plain = evaluate_cace(plain, test_main, feature_columns=cols).rmse_vs_truth
rmse_nbw = evaluate_cace(weighted, test_main, feature_columns=cols).rmse_vs_truth

print(f"\nout-of-sample RMSE against the noiseless truth:")
print(f"  unweighted linear learner: {rmse_plain:.4f}")
print(f"  weighted linear learner:   {rmse_nbw:.4f}")
print("\nAt this sample size the weights stay close to uniform and the two")
print("learners coincide; the gap opens only at much larger N, which is the")
print("documented sample-size limitation of this weighting approach.")
