"""Ornstein-Uhlenbeck reference process dY = -theta*Y dt + sigma dW.

Transitions are sampled exactly from the Gaussian conditional law, so Monte
Carlo comparisons against it carry no discretization bias.  The stationary
law is Normal(0, sigma2/(2*theta)) and the stationary autocovariance at lag
u is that variance times exp(-theta*u).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import RngStream, as_generator


@dataclass(frozen=True)
class OUParams:
    """Mean-reversion rate theta, squared noise intensity sigma2, and initial
    law: a point mass at ``init``, or the stationary normal when ``init`` is
    None."""

    theta: float
    sigma2: float
    init: float | None = None

    def __post_init__(self) -> None:
        if not self.theta > 0:
            raise ValueError("theta must be positive")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")


def ou_stationary(p: OUParams) -> tuple[float, float]:
    """(mean, variance) of the stationary normal law."""
    return 0.0, p.sigma2 / (2.0 * p.theta)


def ou_autocov(p: OUParams, lag: float) -> float:
    """Stationary autocovariance at the given nonnegative lag."""
    if lag < 0:
        raise ValueError("lag must be nonnegative")
    return p.sigma2 / (2.0 * p.theta) * math.exp(-p.theta * lag)


def ou_exact_step(
    y: float | np.ndarray,
    dt: float,
    p: OUParams,
    rng: RngStream | np.random.Generator,
):
    """Draw Y_{t+dt} given Y_t = y from the exact Gaussian transition

    Normal(y*exp(-theta*dt), sigma2*(1 - exp(-2*theta*dt))/(2*theta)).
    Accepts a scalar or an array of current values (one draw per entry).
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    gen = as_generator(rng)
    decay = math.exp(-p.theta * dt)
    var = p.sigma2 * (1.0 - decay * decay) / (2.0 * p.theta)
    sd = math.sqrt(var)
    y = np.asarray(y, dtype=np.float64)
    noise = gen.standard_normal(size=y.shape)
    out = y * decay + sd * noise
    return float(out) if out.ndim == 0 else out


def ou_initial_draw(
    p: OUParams,
    size: int,
    rng: RngStream | np.random.Generator,
) -> np.ndarray:
    """Sample the initial law: the point mass at ``init`` or the stationary
    normal."""
    gen = as_generator(rng)
    if p.init is not None:
        return np.full(size, float(p.init))
    _, var = ou_stationary(p)
    return math.sqrt(var) * gen.standard_normal(size)


def ou_sample_at(
    obs_times: np.ndarray,
    p: OUParams,
    size: int,
    rng: RngStream | np.random.Generator,
) -> np.ndarray:
    """Exact joint sample of ``size`` independent OU paths at the given
    strictly increasing nonnegative times; shape (len(obs_times), size)."""
    gen = as_generator(rng)
    obs = np.asarray(obs_times, dtype=np.float64)
    if obs.ndim != 1 or obs.size == 0:
        raise ValueError("obs_times must be a nonempty 1-d array")
    if np.any(obs < 0) or (obs.size > 1 and np.any(np.diff(obs) <= 0)):
        raise ValueError("obs_times must be nonnegative and strictly increasing")
    y = ou_initial_draw(p, size, gen)
    out = np.empty((obs.size, size))
    prev = 0.0
    for i, t in enumerate(obs):
        if t > prev:
            y = ou_exact_step(y, float(t - prev), p, gen)
            prev = float(t)
        out[i] = y
    return out


def ou_generator(f, x, p: OUParams):
    """Generator of the diffusion applied to a twice-differentiable test
    function: -theta*x*f'(x) + (sigma2/2)*f''(x).  ``f`` must expose ``df``
    and ``d2f`` evaluations."""
    x = np.asarray(x, dtype=np.float64)
    out = -p.theta * x * f.df(x) + 0.5 * p.sigma2 * f.d2f(x)
    return float(out) if out.ndim == 0 else out
