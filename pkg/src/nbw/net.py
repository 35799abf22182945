"""Critic network with explicit reverse-mode gradients and Adam.

The critic is a plain fully connected net mapping a feature row to one real
number; the output layer is affine so the critic is unbounded in both
directions.  Gradients of the variational loss are back-propagated from
per-sample output cotangents: exp(alpha * T) / M on target rows and
-w * exp((alpha - 1) * T) / M on source rows.  Nothing here depends on an
autodiff framework.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .divergence import AlphaLossTerms, AlphaParam, alpha_loss, guarded_exp
from .errors import ConfigError, DivergenceSignal

_ACTIVATIONS = ("relu", "tanh")


@dataclass
class RatioNet:
    """Layer dims (D, h1, ..., hL, 1) with weights (in x out) and biases."""

    dims: tuple[int, ...]
    activation: str
    weights: list[np.ndarray] = field(repr=False)
    biases: list[np.ndarray] = field(repr=False)

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        if len(self.dims) < 2:
            raise ConfigError("need at least input and output dims")
        if self.dims[-1] != 1:
            raise ConfigError(f"output dim must be 1, got {self.dims[-1]}")
        if any(d < 1 for d in self.dims):
            raise ConfigError("all layer dims must be positive")
        if self.activation not in _ACTIVATIONS:
            raise ConfigError(f"unknown activation '{self.activation}'")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.dims[i], self.dims[i + 1]) or b.shape != (self.dims[i + 1],):
                raise ConfigError(f"layer {i} shapes inconsistent with dims {self.dims}")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ConfigError(f"layer {i} has non-finite parameters")

    @property
    def input_dim(self) -> int:
        return self.dims[0]

    @property
    def n_params(self) -> int:
        return int(sum(w.size + b.size for w, b in zip(self.weights, self.biases)))

    def clone(self) -> "RatioNet":
        return RatioNet(
            dims=self.dims,
            activation=self.activation,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "dims": list(self.dims),
                "activation": self.activation,
                "layers": [
                    {"w": [float(v) for v in w.ravel()], "b": [float(v) for v in b]}
                    for w, b in zip(self.weights, self.biases)
                ],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "RatioNet":
        try:
            raw = json.loads(text)
            dims = tuple(raw["dims"])
            weights = [
                np.array(layer["w"], dtype=float).reshape(dims[i], dims[i + 1])
                for i, layer in enumerate(raw["layers"])
            ]
            biases = [np.array(layer["b"], dtype=float) for layer in raw["layers"]]
            return cls(dims=dims, activation=raw["activation"], weights=weights, biases=biases)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad model JSON: {exc}") from exc

    def param_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


def init_net(dims, activation: str = "relu", seed: int = 0) -> RatioNet:
    """Fan-in-scaled uniform weights, zero biases, deterministic in seed."""
    from .rng import stream

    dims = tuple(int(d) for d in dims)
    gen = stream(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append((gen.random((fan_in, fan_out)) * 2.0 - 1.0) * bound)
        biases.append(np.zeros(fan_out))
    return RatioNet(dims=dims, activation=activation, weights=weights, biases=biases)


def _act(name: str, z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0) if name == "relu" else np.tanh(z)


def _act_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    return (z > 0).astype(float) if name == "relu" else 1.0 - a * a


def _forward_cached(net: RatioNet, batch: np.ndarray):
    x = np.asarray(batch, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != net.input_dim:
        raise ConfigError(f"batch width {x.shape[1]} != input dim {net.input_dim}")
    pre, post = [], [x]
    h = x
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w + b
        pre.append(z)
        h = _act(net.activation, z) if i < len(net.weights) - 1 else z
        post.append(h)
    return pre, post, h[:, 0]


def forward(net: RatioNet, batch: np.ndarray) -> np.ndarray:
    """Critic values for each row of the batch; pure."""
    return _forward_cached(net, batch)[2]


def flatten_params(net: RatioNet) -> np.ndarray:
    return np.concatenate([a.ravel() for pair in zip(net.weights, net.biases) for a in pair])


def set_params(net: RatioNet, flat: np.ndarray) -> None:
    flat = np.asarray(flat, dtype=float)
    if flat.size != net.n_params:
        raise ConfigError(f"{flat.size} values for {net.n_params} parameters")
    pos = 0
    for w, b in zip(net.weights, net.biases):
        w[...] = flat[pos : pos + w.size].reshape(w.shape)
        pos += w.size
        b[...] = flat[pos : pos + b.size]
        pos += b.size


def output_gradient_backward(net: RatioNet, batch: np.ndarray, output_cotangent: np.ndarray) -> np.ndarray:
    """Flat parameter gradient of sum_i cot_i * T(x_i)."""
    pre, post, _ = _forward_cached(net, batch)
    return _backprop(net, pre, post, np.asarray(output_cotangent, dtype=float))


def _backprop(net: RatioNet, pre, post, dout: np.ndarray) -> np.ndarray:
    grads: list[np.ndarray] = []
    delta = dout[:, None]
    for i in range(len(net.weights) - 1, -1, -1):
        grads.append(np.concatenate([(post[i].T @ delta).ravel(), delta.sum(axis=0)]))
        if i > 0:
            delta = delta @ net.weights[i].T
            delta = delta * _act_grad(net.activation, pre[i - 1], post[i])
    return np.concatenate(grads[::-1])


def backward_alpha(
    net: RatioNet,
    batch_p: np.ndarray,
    batch_q: np.ndarray,
    alpha: AlphaParam | float,
    p_weights: np.ndarray | None = None,
) -> tuple[np.ndarray, AlphaLossTerms]:
    """Gradient of the empirical variational loss over exactly these batches.

    Returns the flat parameter gradient together with the loss terms.  The
    per-sample output cotangents are exp(alpha * T) / M on target rows and
    -w * exp((alpha - 1) * T) / M on source rows; overflow of either
    exponential raises a :class:`DivergenceSignal` rather than polluting the
    parameters with infinities.
    """
    a = alpha.value if isinstance(alpha, AlphaParam) else AlphaParam(alpha).value
    pre_q, post_q, t_q = _forward_cached(net, batch_q)
    pre_p, post_p, t_p = _forward_cached(net, batch_p)
    if t_p.size == 0 or t_q.size == 0:
        raise ConfigError("need at least one sample on each side")

    q_terms = guarded_exp(a * t_q, "target-side exp(alpha*T)")
    p_terms = guarded_exp((a - 1.0) * t_p, "source-side exp((alpha-1)*T)")
    if p_weights is not None:
        w = np.asarray(p_weights, dtype=float).ravel()
        if w.shape != t_p.shape:
            raise ConfigError(f"{w.size} weights for {t_p.size} source samples")
        p_terms = w * p_terms

    terms = AlphaLossTerms(
        e_q=float(np.mean(q_terms)), e_p=float(np.mean(p_terms)), alpha=a
    )
    grad = _backprop(net, pre_q, post_q, q_terms / t_q.size)
    grad -= _backprop(net, pre_p, post_p, p_terms / t_p.size)
    if not np.isfinite(grad).all():
        raise DivergenceSignal("non-finite gradient", magnitude=float("inf"))
    return grad, terms


def loss_terms(
    net: RatioNet,
    batch_p: np.ndarray,
    batch_q: np.ndarray,
    alpha: AlphaParam | float,
    p_weights: np.ndarray | None = None,
) -> AlphaLossTerms:
    """Loss terms without a gradient, for evaluation passes."""
    return alpha_loss(forward(net, batch_p), forward(net, batch_q), alpha, p_weights=p_weights)


def finite_diff_grad(
    net: RatioNet,
    batch_p: np.ndarray,
    batch_q: np.ndarray,
    alpha: AlphaParam | float,
    step: float = 1e-5,
    p_weights: np.ndarray | None = None,
) -> np.ndarray:
    """Central-difference gradient of the loss; the test oracle for backprop."""
    if step == 0:
        raise ConfigError("finite-difference step must be nonzero")
    theta = flatten_params(net)
    probe = net.clone()
    grad = np.empty_like(theta)
    for i in range(theta.size):
        bumped = theta.copy()
        bumped[i] = theta[i] + step
        set_params(probe, bumped)
        hi = loss_terms(probe, batch_p, batch_q, alpha, p_weights=p_weights).loss
        bumped[i] = theta[i] - step
        set_params(probe, bumped)
        lo = loss_terms(probe, batch_p, batch_q, alpha, p_weights=p_weights).loss
        grad[i] = (hi - lo) / (2.0 * step)
    return grad


@dataclass
class AdamState:
    """First/second moment accumulators plus the step counter."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_adam(net: RatioNet, lr: float = 1e-3) -> AdamState:
    n = net.n_params
    return AdamState(m=np.zeros(n), v=np.zeros(n), lr=float(lr))


def adam_step(state: AdamState, net: RatioNet, grad: np.ndarray) -> tuple[RatioNet, AdamState]:
    """Standard bias-corrected Adam update, in place on net and state."""
    grad = np.asarray(grad, dtype=float)
    if grad.size != net.n_params:
        raise ConfigError(f"gradient size {grad.size} != {net.n_params} parameters")
    if not np.isfinite(grad).all():
        raise DivergenceSignal("non-finite gradient passed to Adam", magnitude=float("inf"))
    peak = float(np.abs(grad).max(initial=0.0))
    if peak > 1e150:  # squaring would overflow the second-moment accumulator
        raise DivergenceSignal(f"gradient magnitude {peak:.2e} overflows Adam", magnitude=peak)
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = state.m / (1.0 - state.beta1**state.step)
    v_hat = state.v / (1.0 - state.beta2**state.step)
    theta = flatten_params(net) - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    set_params(net, theta)
    return net, state
