"""Generators for the experiment suites.

Three families: equicorrelated Gaussians (divergence estimation sweeps), a
causal benchmark with latent variables, a noncentral chi-square exposure,
nonlinear observed transforms and a noiseless counterfactual test set, and
a binary-treatment logistic design whose true stabilized inverse-propensity
weights are known in closed form.

Every generator is deterministic in its seed and uses the package's fixed
sampling algorithms, so emitted datasets are bit-stable across platforms.
Latent columns ride along in a side dataset for oracle checks and are never
fed to learners.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .oracle import equicorrelation
from .rng import derive_seed, noncentral_chi_square, normal, stream, uniform
from .sampler import Dataset, VariableLayout, product_shuffle

logger = logging.getLogger(__name__)

# centering constant for the outcome: E[(W1+3)^2] + 2 E[(W2-25)^2] + E[W3]
# = (1 + 2.5^2) + 2 (1 + 24^2) + 0 with the generator's latent moments
OUTCOME_CENTER = 7.25 + 2.0 * 577.0

_CAUSAL_COLUMNS = ("a", "x11", "x12", "x13", "x2", "x3a", "x3b", "y")
_LATENT_COLUMNS = ("w1", "w2", "w3", "w4", "w5", "eps")


@dataclass(frozen=True)
class GaussianSpec:
    """Zero-mean unit-variance Gaussian with constant pairwise correlation."""

    d: int
    rho: float

    def __post_init__(self):
        equicorrelation(self.d, self.rho)  # validates the PD range

    @property
    def covariance(self) -> np.ndarray:
        return equicorrelation(self.d, self.rho)


def gen_gaussian(spec: GaussianSpec, n: int, seed: int) -> Dataset:
    """n i.i.d. rows via the Cholesky factor of the equicorrelation matrix."""
    if n < 1:
        raise ConfigError("need at least one row")
    gen = stream(seed)
    z = normal(gen, n * spec.d).reshape(n, spec.d)
    values = z @ np.linalg.cholesky(spec.covariance).T
    return Dataset(values=values, columns=tuple(f"x{i + 1}" for i in range(spec.d)))


def gaussian_layout(d: int) -> VariableLayout:
    """Each coordinate its own group: the target is the full product law."""
    return VariableLayout(groups=tuple((f"x{i + 1}", (i,)) for i in range(d)))


def causal_transform(w1, w2, w3, w4, w5):
    """Observed columns (x11, x12, x13, x2, x3a, x3b) from latents."""
    x11 = np.exp(w1 / 2.0)
    x12 = w2 / (1.0 + np.exp(w1)) + 10.0
    x13 = w1 * w3 / 25.0 + 0.6
    x2 = (w4 - 1.0) ** 2
    x3a = (w5 == 0).astype(float)
    x3b = (w5 == 1).astype(float)
    return x11, x12, x13, x2, x3a, x3b


def causal_inverse(x11, x12, x13, x2, x3a, x3b):
    """Latents from observed columns.

    Exact for w1, w2, w3 and w5.  The square in x2 loses the sign of
    w4 - 1, so w4 comes back on the upper branch; nothing downstream uses
    w4 (it only feeds the exposure, which is observed directly).  Rows with
    x11 == 1 would make the w3 inverse singular; the generator rejects the
    measure-zero latents that could produce them.
    """
    log_x11 = np.log(x11)
    w1 = 2.0 * log_x11
    w2 = (x12 - 10.0) * (1.0 + x11**2)
    w3 = 25.0 * (x13 - 0.6) / (2.0 * log_x11)
    w4 = np.sqrt(x2) + 1.0
    w5 = np.where(x3a == 1.0, 0.0, np.where(x3b == 1.0, 1.0, 2.0))
    return w1, w2, w3, w4, w5


def causal_truth(a, w1, w2, w3):
    """Noiseless outcome: the generator's formula without the noise term."""
    return (
        (-0.15 * a**2 + a * (w1**2 + w2**2) - 15.0)
        + ((w1 + 3.0) ** 2 + 2.0 * (w2 - 25.0) ** 2 + w3)
        - OUTCOME_CENTER
    ) / 50.0


def _draw_latents(gen, n: int):
    w1 = -0.5 + normal(gen, n)
    # |w1| below 2e-12 would make log(x11) numerically zero and the w3
    # inverse singular; resample those rows rather than silently patching.
    for _ in range(100):
        bad = np.abs(w1) < 2e-12
        if not bad.any():
            break
        logger.warning("resampling %d rows with w1 too close to 0", int(bad.sum()))
        w1[bad] = -0.5 + normal(gen, int(bad.sum()))
    w2 = 1.0 + normal(gen, n)
    w3 = normal(gen, n)
    w4 = 1.0 + normal(gen, n)
    u = gen.random(n)
    w5 = np.where(u < 0.70, 0.0, np.where(u < 0.85, 1.0, 2.0))
    return w1, w2, w3, w4, w5


def _draw_causal(n: int, seed: int) -> tuple[Dataset, Dataset]:
    gen = stream(seed)
    w1, w2, w3, w4, w5 = _draw_latents(gen, n)
    mu = 5.0 * np.abs(w1) + 6.0 * np.abs(w2) + np.abs(w4) + np.choose(w5.astype(int), [0.0, 1.0, 5.0])
    a = noncentral_chi_square(gen, 3.0, mu)
    eps = normal(gen, n)
    y = causal_truth(a, w1, w2, w3) + eps / 50.0
    x11, x12, x13, x2, x3a, x3b = causal_transform(w1, w2, w3, w4, w5)
    main = Dataset(
        values=np.column_stack([a, x11, x12, x13, x2, x3a, x3b, y]),
        columns=_CAUSAL_COLUMNS,
    )
    latent = Dataset(
        values=np.column_stack([w1, w2, w3, w4, w5, eps]),
        columns=_LATENT_COLUMNS,
    )
    return main, latent


def gen_causal_train(n: int, seed: int) -> tuple[Dataset, Dataset]:
    """Observational training data; returns (observed, latent) datasets."""
    if n < 1:
        raise ConfigError("need at least one row")
    return _draw_causal(n, seed)


def causal_shuffle_layout(mode: str) -> VariableLayout:
    """Blocks moved as units when constructing the counterfactual target."""
    if mode == "exp1":
        return VariableLayout(groups=(("a", (0,)), ("x", (1, 2, 3, 4, 5, 6))))
    if mode == "exp2":
        return VariableLayout(
            groups=(("a", (0,)), ("x1", (1, 2, 3)), ("x2", (4,)), ("x3", (5, 6)))
        )
    raise ConfigError(f"mode must be 'exp1' or 'exp2', got '{mode}'")


def gen_causal_test(n: int, seed: int, mode: str = "exp1") -> tuple[Dataset, Dataset]:
    """Counterfactual test data with a noiseless truth column.

    Draws fresh observational rows, permutes the intervention blocks
    independently (exposure versus all observed covariates for ``exp1``;
    exposure and each covariate block separately for ``exp2``), recovers
    the latents from the shuffled covariates by the inverse transforms, and
    recomputes the outcome without noise as ``y_true``.  A noisy ``y`` with
    fresh noise rides along for schema parity with the training set.
    """
    if n < 1:
        raise ConfigError("need at least one row")
    layout = causal_shuffle_layout(mode)
    main, _ = _draw_causal(n, seed)
    shuffled = product_shuffle(main, layout, derive_seed(seed, 1)).materialize()

    a = shuffled[:, 0]
    w1, w2, w3, w4, w5 = causal_inverse(*(shuffled[:, i] for i in range(1, 7)))
    y_true = causal_truth(a, w1, w2, w3)
    eps = normal(stream(derive_seed(seed, 2)), n)
    y = y_true + eps / 50.0

    test = Dataset(
        values=np.column_stack([shuffled[:, :7], y, y_true]),
        columns=_CAUSAL_COLUMNS + ("y_true",),
    )
    latent = Dataset(
        values=np.column_stack([w1, w2, w3, w4, w5, eps]),
        columns=_LATENT_COLUMNS,
    )
    return test, latent


def causal_feature_columns() -> list[str]:
    """Learner inputs: the exposure and all observed covariates."""
    return ["a", "x11", "x12", "x13", "x2", "x3a", "x3b"]


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def gen_logistic_binary(
    n: int, seed: int, beta: tuple[float, float] = (1.0, 1.0)
) -> tuple[Dataset, Dataset]:
    """Binary treatment with logistic propensity and known true weights.

    Z ~ N(0, I2) and X ~ Bernoulli(sigmoid(beta . Z)).  By the symmetry of
    Z the marginal P(X=1) is exactly 1/2 for any beta, so the true
    stabilized weights are 0.5/e(z) on treated rows and 0.5/(1 - e(z)) on
    controls; they are emitted in the side dataset together with e(z).
    """
    if n < 1:
        raise ConfigError("need at least one row")
    gen = stream(seed)
    z = normal(gen, 2 * n).reshape(n, 2)
    propensity = _sigmoid(z @ np.asarray(beta, dtype=float))
    x = (uniform(gen, n) <= propensity).astype(float)
    true_weight = np.where(x == 1.0, 0.5 / propensity, 0.5 / (1.0 - propensity))
    main = Dataset(values=np.column_stack([x, z]), columns=("x", "z1", "z2"))
    side = Dataset(
        values=np.column_stack([propensity, true_weight]),
        columns=("propensity", "true_weight"),
    )
    return main, side


def logistic_layout() -> VariableLayout:
    """One treatment group, two covariate columns."""
    return VariableLayout(groups=(("x", (0,)),), covariates=(1, 2))
