"""Neural balancing weights via variational alpha-divergence estimation.

Train a small critic network so that exp(-T) estimates the density ratio
between observed data and its product-of-marginals counterpart; normalize
it into mean-one balancing weights; validate against held-out data;
diagnose with a fresh checker critic; and feed the weights to downstream
learners for causal-effect estimation.
"""

from .balancing import (
    BalanceReport,
    BalancingWeights,
    check_balance,
    compute_weights,
    effective_sample_size,
)
from .divergence import AlphaLossTerms, AlphaParam, alpha_loss, asymptotic_variance, plugin_estimate
from .errors import ConfigError, DivergenceSignal, NbwError, NumericError, ParseError
from .net import (
    AdamState,
    RatioNet,
    adam_step,
    backward_alpha,
    finite_diff_grad,
    forward,
    init_adam,
    init_net,
)
from .oracle import (
    ZeroMeanGaussian,
    alpha_divergence,
    alpha_divergence_quadrature,
    alpha_information,
    equicorrelation,
    log_density_ratio,
)
from .sampler import (
    Dataset,
    ShuffledView,
    VariableLayout,
    features,
    load_csv,
    minibatch_indices,
    product_shuffle,
    save_csv,
)
from .trainer import EarlyStop, TrainConfig, TrainTrace, early_stop_step, split, train
from .effect import (
    EffectEstimate,
    LinearModel,
    MlpRegressor,
    RegressionProfile,
    evaluate_cace,
    weighted_linear_regression,
    weighted_mlp_train,
)
from .synthdata import (
    GaussianSpec,
    gaussian_layout,
    gen_causal_test,
    gen_causal_train,
    gen_gaussian,
    gen_logistic_binary,
    logistic_layout,
)

__version__ = "0.1.0"
