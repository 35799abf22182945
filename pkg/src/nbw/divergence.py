"""Empirical alpha-divergence quantities.

The variational objective for a critic T splits into two empirical
expectations, e_q = mean(exp(alpha * T)) over target-side samples and
e_p = mean(exp((alpha - 1) * T)) over source-side samples.  The loss
e_q / alpha + e_p / (1 - alpha) is what training minimizes; subtracting it
from 1 / (alpha * (1 - alpha)) gives the divergence estimate, which at the
optimal critic attains the true divergence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DivergenceSignal

# exp overflows just above 709; anything beyond this is already divergence
EXP_GUARD = 700.0


@dataclass(frozen=True)
class AlphaParam:
    """The divergence order; 0 and 1 are excluded poles.

    Values inside (0, 1) are the stable regime: both exponents in the loss
    have opposite signs there, which rules out the vanishing-gradient fixed
    points that orders outside the interval admit.
    """

    value: float

    def __post_init__(self):
        v = float(self.value)
        if not np.isfinite(v) or v in (0.0, 1.0):
            raise ConfigError("alpha must not be 0 or 1")
        object.__setattr__(self, "value", v)

    @property
    def stable(self) -> bool:
        return 0.0 < self.value < 1.0


def guarded_exp(exponent: np.ndarray, what: str) -> np.ndarray:
    """exp() that raises a DivergenceSignal instead of overflowing."""
    exponent = np.asarray(exponent, dtype=float)
    if exponent.size and not np.isfinite(exponent).all():
        raise DivergenceSignal(f"non-finite exponent in {what}", magnitude=float("inf"))
    if exponent.size:
        peak = float(exponent.max())
        if peak > EXP_GUARD:
            raise DivergenceSignal(
                f"{what} overflows: exponent reached {peak:.1f} (limit {EXP_GUARD:.0f})",
                magnitude=peak,
            )
    return np.exp(exponent)


@dataclass(frozen=True)
class AlphaLossTerms:
    """The two empirical expectations plus the derived loss and estimate."""

    e_q: float
    e_p: float
    alpha: float

    @property
    def loss(self) -> float:
        return self.e_q / self.alpha + self.e_p / (1.0 - self.alpha)

    @property
    def estimate(self) -> float:
        return 1.0 / (self.alpha * (1.0 - self.alpha)) - self.loss


def alpha_loss(
    t_p: np.ndarray,
    t_q: np.ndarray,
    alpha: AlphaParam | float,
    p_weights: np.ndarray | None = None,
) -> AlphaLossTerms:
    """Loss terms from critic values on source (P) and target (Q) samples.

    ``p_weights`` turns the source-side mean into a weighted expectation
    (1/N) * sum(w_i * exp((alpha-1) * T_i)), the form the balance checker
    uses against a reweighted source distribution.  Weights are expected to
    have mean one; unit weights reduce exactly to the plain estimator.
    """
    a = alpha.value if isinstance(alpha, AlphaParam) else AlphaParam(alpha).value
    t_p = np.asarray(t_p, dtype=float).ravel()
    t_q = np.asarray(t_q, dtype=float).ravel()
    if t_p.size == 0 or t_q.size == 0:
        raise ConfigError("need at least one sample on each side")
    e_q = float(np.mean(guarded_exp(a * t_q, "target-side exp(alpha*T)")))
    p_terms = guarded_exp((a - 1.0) * t_p, "source-side exp((alpha-1)*T)")
    if p_weights is not None:
        w = np.asarray(p_weights, dtype=float).ravel()
        if w.shape != t_p.shape:
            raise ConfigError(f"{w.size} weights for {t_p.size} source samples")
        p_terms = w * p_terms
    e_p = float(np.mean(p_terms))
    return AlphaLossTerms(e_q=e_q, e_p=e_p, alpha=a)


def plugin_estimate(t_p: np.ndarray, t_q: np.ndarray, alpha: AlphaParam | float) -> float:
    """Divergence estimate at a fixed critic evaluated on fresh samples."""
    return alpha_loss(t_p, t_q, alpha).estimate


def asymptotic_variance(alpha: AlphaParam | float, d_alpha: float, d_2am1: float | None = None) -> float:
    """Limit of N * Var of the plug-in estimator at the optimal critic.

    Parameters
    ----------
    alpha : divergence order.
    d_alpha : true divergence of order alpha between target and source.
    d_2am1 : true divergence of order 2 * alpha - 1; required away from
        alpha = 1/2, ignored there (the order-zero term drops out).
    """
    a = alpha.value if isinstance(alpha, AlphaParam) else AlphaParam(alpha).value
    if a == 0.5:
        return 4.0 * d_alpha - 0.5 * d_alpha**2
    if d_2am1 is None:
        raise ConfigError("d_2am1 is required for alpha != 1/2")
    c1 = (1.0 / a**2 + 1.0 / (1.0 - a) ** 2) * (2.0 * a - 1.0) * (2.0 * a - 2.0)
    c2 = 2.0 * (a**2 + (1.0 - a) ** 2) / (a * (1.0 - a))
    c3 = -(a**2) - (1.0 - a) ** 2
    return c1 * d_2am1 + c2 * d_alpha + c3 * d_alpha**2
