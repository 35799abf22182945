"""Reproducible random streams and fixed sampling algorithms.

All randomness in the package flows through Philox, a counter-based 64-bit
generator whose output is identical across platforms for a given seed.
Parallel streams are split by XOR-ing the user seed with a stream index
(groups of a variable layout use their position; internal consumers use
tags mixed through SplitMix64 so they cannot collide with small indices).

Distribution sampling is pinned to fixed, named algorithms rather than
whatever a library version happens to ship: Box-Muller for normals,
Marsaglia-Tsang for gamma, Knuth's product method for Poisson, and the
Poisson mixture representation for the noncentral chi-square.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError

_MASK64 = (1 << 64) - 1
# SplitMix64 increment; standard constant for decorrelating derived seeds.
_GOLDEN = 0x9E3779B97F4A7C15


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Philox stream for (seed, index); index 0 is the base stream."""
    return np.random.Generator(np.random.Philox(key=(int(seed) ^ int(index)) & _MASK64))


def derive_seed(seed: int, tag: int) -> int:
    """Mix a purpose tag into a seed (SplitMix64 finalizer).

    Used when one user-facing seed must feed several unrelated consumers
    (data split, net init, shuffling, batching) without stream overlap.
    """
    z = (int(seed) + (tag + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def uniform(gen: np.random.Generator, n: int) -> np.ndarray:
    """n doubles in the open-closed interval (0, 1]."""
    return 1.0 - gen.random(n)


def normal(gen: np.random.Generator, n: int) -> np.ndarray:
    """n standard normals via Box-Muller on the stream's uniforms."""
    m = (n + 1) // 2
    u1 = uniform(gen, m)
    u2 = gen.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])
    return z[:n]


def gamma(gen: np.random.Generator, shape: np.ndarray, n: int | None = None) -> np.ndarray:
    """Gamma(shape, scale=1) draws via Marsaglia-Tsang squeeze-rejection.

    ``shape`` may be a scalar or an array of per-draw shapes; shapes below 1
    use the boosting identity Gamma(a) = Gamma(a+1) * U^(1/a).
    """
    a = np.asarray(shape, dtype=float)
    if n is not None and a.ndim == 0:
        a = np.full(n, float(a))
    if np.any(a <= 0):
        raise ConfigError("gamma shape must be positive")
    out = np.empty(a.shape, dtype=float)

    boost = a < 1.0
    a_eff = np.where(boost, a + 1.0, a)
    d = a_eff - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)

    alive = np.ones(a.shape, dtype=bool)
    while np.any(alive):
        idx = np.flatnonzero(alive)
        x = normal(gen, idx.size)
        v = (1.0 + c[idx] * x) ** 3
        u = uniform(gen, idx.size)
        ok = v > 0
        # squeeze test, then the full log acceptance test
        accept = ok & (np.log(u) < 0.5 * x * x + d[idx] * (1.0 - v + np.log(np.where(ok, v, 1.0))))
        took = idx[accept]
        out[took] = d[took] * v[accept]
        alive[took] = False

    if np.any(boost):
        idx = np.flatnonzero(boost)
        u = uniform(gen, idx.size)
        out[idx] *= u ** (1.0 / a[idx])
    return out


def poisson(gen: np.random.Generator, lam: np.ndarray, n: int | None = None) -> np.ndarray:
    """Poisson draws via Knuth's product-of-uniforms method.

    O(lambda) per draw; rejected above lambda=500 where exp(-lambda)
    underflows long before any use in this package gets there.
    """
    lam_arr = np.asarray(lam, dtype=float)
    if n is not None and lam_arr.ndim == 0:
        lam_arr = np.full(n, float(lam_arr))
    if np.any(lam_arr < 0):
        raise ConfigError("poisson rate must be nonnegative")
    if np.any(lam_arr > 500):
        raise ConfigError("poisson rate above 500 unsupported by the product method")

    target = np.exp(-lam_arr)
    prod = np.ones(lam_arr.shape, dtype=float)
    count = np.zeros(lam_arr.shape, dtype=np.int64)
    alive = prod > target
    while np.any(alive):
        idx = np.flatnonzero(alive)
        prod[idx] *= uniform(gen, idx.size)
        still = prod[idx] > target[idx]
        count[idx[still]] += 1
        alive[idx] = still
    return count


def chi_square(gen: np.random.Generator, df: np.ndarray, n: int | None = None) -> np.ndarray:
    """Central chi-square: 2 * Gamma(df / 2)."""
    df_arr = np.asarray(df, dtype=float)
    if n is not None and df_arr.ndim == 0:
        df_arr = np.full(n, float(df_arr))
    return 2.0 * gamma(gen, df_arr / 2.0)


def noncentral_chi_square(gen: np.random.Generator, df: float, noncentrality: np.ndarray) -> np.ndarray:
    """Noncentral chi-square as the mixture chi2(df + 2K), K ~ Poisson(mu/2).

    The mixture gives mean df + mu exactly, which the test suite checks
    against the empirical mean.
    """
    mu = np.asarray(noncentrality, dtype=float)
    if np.any(mu < 0):
        raise ConfigError("noncentrality must be nonnegative")
    k = poisson(gen, mu / 2.0)
    return chi_square(gen, df + 2.0 * k.astype(float))
