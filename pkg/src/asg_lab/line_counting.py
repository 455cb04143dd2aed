"""Line counting process of the Moran ancestral selection graph.

The number of potential ancestors of a sample is a birth-death chain on
{1, ..., N} with up rate k*s*(1 - k/N) and down rate (gamma/N)*binom(k, 2).
Its stationary law is Binomial(N, 2s/(2s+gamma)) conditioned to be nonzero.
This module provides the rates, the stationary law (closed form and a
detailed-balance oracle), the fluctuation rescaling, and the embedded-chain
drift diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .ctmc import JumpRateMap, OffsetMoves, Path
from .rng import RngStream, as_generator

_REGIMES = ("", "strong", "moderate", "weak")


@dataclass(frozen=True)
class MoranParams:
    """Moran model parameters: population size N, neutral reproduction rate
    gamma (each individual reproduces at rate gamma/2), selection strength s.

    ``regime`` is a descriptive tag for experiment configs; nothing branches
    on it.
    """

    N: int
    gamma: float
    s: float
    regime: str = ""

    def __post_init__(self) -> None:
        if int(self.N) < 1:
            raise ValueError("N must be a positive integer")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.s > 0:
            raise ValueError("s must be positive")
        if self.regime not in _REGIMES:
            raise ValueError(f"regime must be one of {_REGIMES[1:]} or empty")


@dataclass(frozen=True)
class RescaledPath:
    """Fluctuation-rescaled trajectory: time sped up, values centered at mu
    and scaled by sigma.  Values live on the lattice {(k - mu)/sigma}."""

    times: np.ndarray
    values: np.ndarray
    mu: float
    sigma: float
    horizon: float

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if times.ndim != 1 or values.ndim != 1 or times.size != values.size:
            raise ValueError("times and values must be 1-d and equally long")
        if times.size == 0 or times[0] != 0.0:
            raise ValueError("rescaled paths start at time 0")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("jump times must be strictly increasing")
        if not np.isfinite(self.horizon) or self.horizon < times[-1]:
            raise ValueError("horizon must be finite and >= the last jump time")
        times.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def value_at(self, t: float) -> float:
        if not 0.0 <= t <= self.horizon:
            raise ValueError(f"t={t} outside [0, {self.horizon}]")
        idx = int(np.searchsorted(self.times, t, side="right")) - 1
        return float(self.values[idx])


def rates_B(k: int, p: MoranParams) -> tuple[float, float]:
    """(up, down) rates of the line counting chain at state k in [1, N]."""
    if not 1 <= k <= p.N:
        raise ValueError(f"state {k} outside [1, {p.N}]")
    up = k * p.s * (1.0 - k / p.N)
    down = (0.5 * p.gamma / p.N) * (k * (k - 1.0))
    return up, down


def jump_map_B(p: MoranParams) -> JumpRateMap:
    """Jump-rate map view for the event-driven simulator."""

    def rate_map(k: int) -> list[tuple[int, float]]:
        up, down = rates_B(k, p)
        out = []
        if up > 0.0:
            out.append((k + 1, up))
        if down > 0.0:
            out.append((k - 1, down))
        return out

    return rate_map


def moves_B(p: MoranParams) -> OffsetMoves:
    """Vectorized (+1, -1) move structure for ensemble simulation."""
    N, s, gamma = p.N, p.s, p.gamma

    def rates(states: np.ndarray) -> np.ndarray:
        k = states.astype(np.float64)
        up = k * s * (1.0 - k / N)
        down = (0.5 * gamma / N) * (k * (k - 1.0))
        return np.stack([up, down])

    return OffsetMoves(offsets=(1, -1), rates=rates)


def mu_sigma_B(p: MoranParams) -> tuple[float, float]:
    """Centering and spread of the stationary law: the Binomial(N, q) mean
    and standard deviation with q = 2s/(2s+gamma)."""
    q = 2.0 * p.s / (2.0 * p.s + p.gamma)
    return q * p.N, float(np.sqrt(q * (1.0 - q) * p.N))


def stationary_B(p: MoranParams) -> np.ndarray:
    """Stationary law on {1, ..., N}: Binomial(N, 2s/(2s+gamma)) conditioned
    to be nonzero.  Computed in log space so large N does not overflow."""
    N = p.N
    q = 2.0 * p.s / (2.0 * p.s + p.gamma)
    k = np.arange(1, N + 1, dtype=np.float64)
    logpmf = (
        gammaln(N + 1.0)
        - gammaln(k + 1.0)
        - gammaln(N - k + 1.0)
        + k * np.log(q)
        + (N - k) * np.log1p(-q)
    )
    return np.exp(logpmf - logsumexp(logpmf))


_ORACLE_MAX_N = 10_000


class ModelChainError(ValueError):
    """The birth-death product formula does not apply to the given chain."""


def stationary_oracle_B(p: MoranParams) -> np.ndarray:
    """Independent stationary law from the birth-death product formula
    pi(k+1)/pi(k) = up(k)/down(k+1), normalized in log space."""
    if p.N > _ORACLE_MAX_N:
        raise ValueError(f"oracle limited to N <= {_ORACLE_MAX_N}")
    logpi = np.zeros(p.N)
    for k in range(1, p.N):
        up, _ = rates_B(k, p)
        _, down_next = rates_B(k + 1, p)
        if down_next <= 0.0:
            raise ModelChainError(f"down rate vanishes at state {k + 1}")
        logpi[k] = logpi[k - 1] + np.log(up) - np.log(down_next)
    return np.exp(logpi - logsumexp(logpi))


def sample_stationary_B(p: MoranParams, size: int, rng: RngStream | np.random.Generator) -> np.ndarray:
    """Draw iid states from the stationary law (values in {1, ..., N})."""
    gen = as_generator(rng)
    pi = stationary_B(p)
    return gen.choice(np.arange(1, p.N + 1), size=size, p=pi)


def rescale_B(path: Path, p: MoranParams) -> RescaledPath:
    """Fluctuation rescaling: time t -> t*s, state k -> (k - mu)/sigma."""
    mu, sigma = mu_sigma_B(p)
    return RescaledPath(
        times=path.times * p.s,
        values=(path.states - mu) / sigma,
        mu=mu,
        sigma=sigma,
        horizon=path.horizon * p.s,
    )


def drift_embedded_B(k: int, p: MoranParams) -> float:
    """Rate imbalance up(k) - down(k); same sign as the embedded chain's
    expected increment (up - down)/(up + down)."""
    up, down = rates_B(k, p)
    return up - down


def drift_sign_change_B(p: MoranParams) -> tuple[int, int]:
    """Scan the drift over [1, N]; returns (number of sign changes, first
    state with negative drift)."""
    k = np.arange(1, p.N + 1, dtype=np.float64)
    drift = k * p.s * (1.0 - k / p.N) - (0.5 * p.gamma / p.N) * (k * (k - 1.0))
    signs = np.sign(drift)
    changes = int(np.sum(signs[1:] != signs[:-1]))
    neg = np.nonzero(signs < 0)[0]
    first_neg = int(neg[0]) + 1 if neg.size else 0
    return changes, first_neg
