"""Frequency-dependent logistic branching processes.

State k >= 1: each individual gives birth at rate rho*h(k) to a litter of
size j with probability pi_j, dies at rate d, and suffers competition death
at rate c*(k-1).  State 0 is absorbing.  The module also provides the
fluctuation rescaling around mu = pi_bar*rho/c, the assumption diagnostics
for sequences of parameter bundles, the embedding of the Moran line counting
chain as a logistic process, and the weak-selection limit chain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .ctmc import JumpRateMap, ModelError, OffsetMoves, Path
from .line_counting import MoranParams, RescaledPath

_PROB_TOL = 1e-12


@dataclass(frozen=True)
class OffspringDistribution:
    """Litter-size law with finite support on {1, 2, ...}.

    ``truncation_mass`` records the tail probability dropped when the law was
    built by truncating an infinite-support family.
    """

    sizes: np.ndarray
    probs: np.ndarray
    truncation_mass: float = 0.0

    def __post_init__(self) -> None:
        sizes = np.asarray(self.sizes, dtype=np.int64)
        probs = np.asarray(self.probs, dtype=np.float64)
        if sizes.ndim != 1 or probs.ndim != 1 or sizes.size != probs.size or sizes.size == 0:
            raise ValueError("sizes and probs must be nonempty 1-d arrays of equal length")
        if np.any(sizes < 1):
            raise ValueError("litter sizes must be >= 1")
        if np.any(np.diff(sizes) <= 0):
            raise ValueError("litter sizes must be strictly increasing")
        if np.any(probs < 0) or np.any(~np.isfinite(probs)):
            raise ValueError("probabilities must be finite and nonnegative")
        if abs(probs.sum() - 1.0) > _PROB_TOL:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        sizes.flags.writeable = False
        probs.flags.writeable = False
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "probs", probs)
        if self.v2 < self.pi_bar**2 - 1e-9:
            raise ValueError("second moment below squared mean (broken law)")

    @property
    def pi_bar(self) -> float:
        """Mean litter size."""
        return float(np.dot(self.sizes, self.probs))

    @property
    def v2(self) -> float:
        """Second raw moment of the litter size."""
        return float(np.dot(self.sizes.astype(np.float64) ** 2, self.probs))

    @property
    def m3(self) -> float:
        """Third raw moment of the litter size."""
        return float(np.dot(self.sizes.astype(np.float64) ** 3, self.probs))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]]) -> "OffspringDistribution":
        """Build from (size, probability) pairs, e.g. parsed from a config."""
        items = sorted((int(j), float(pj)) for j, pj in pairs)
        return cls(
            sizes=np.array([j for j, _ in items]),
            probs=np.array([pj for _, pj in items]),
        )

    @classmethod
    def point_mass(cls, j: int = 1) -> "OffspringDistribution":
        return cls(sizes=np.array([j]), probs=np.array([1.0]))

    @classmethod
    def truncated(cls, pmf: Callable[[int], float], j_max: int) -> "OffspringDistribution":
        """Truncate an infinite-support pmf at j_max and renormalize; the
        dropped tail mass is reported on the instance."""
        sizes = np.arange(1, j_max + 1)
        raw = np.array([float(pmf(int(j))) for j in sizes])
        if np.any(raw < 0):
            raise ValueError("pmf returned a negative probability")
        total = raw.sum()
        if total <= 0:
            raise ValueError("pmf has no mass on {1, ..., j_max}")
        tail = max(0.0, 1.0 - total)
        return cls(sizes=sizes, probs=raw / total, truncation_mass=tail)


def constant_h(value: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """Frequency-independent birth modifier h == value (array-aware)."""

    def h(k):
        return np.full_like(np.asarray(k, dtype=np.float64), value)

    return h


def moran_h(N: int) -> Callable[[np.ndarray], np.ndarray]:
    """Birth modifier h(k) = 1 - k/N of the Moran embedding (array-aware)."""

    def h(k):
        return 1.0 - np.asarray(k, dtype=np.float64) / N

    return h


@dataclass(frozen=True)
class LogisticParams:
    """Parameter bundle: total per-individual birth rate rho, birth modifier
    h with its declared bound, death rate d, pairwise competition rate c, and
    litter-size law pi.  h must accept numpy integer arrays."""

    rho: float
    h: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    h_bound: float
    d: float
    c: float
    pi: OffspringDistribution

    def __post_init__(self) -> None:
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if not (np.isfinite(self.h_bound) and self.h_bound > 0):
            raise ValueError("h_bound must be a positive finite real")
        if self.d < 0 or self.c < 0:
            raise ValueError("d and c must be nonnegative")

    def h_at(self, k) -> np.ndarray:
        """Evaluate h with domain and bound checks."""
        k = np.asarray(k)
        if np.any(k < 1):
            raise ValueError("h is defined on positive integers only")
        hv = np.asarray(self.h(k), dtype=np.float64)
        hv = np.broadcast_to(hv, k.shape)
        if np.any(~np.isfinite(hv)) or np.any(hv < 0.0):
            raise ModelError("h produced a negative or non-finite value")
        if np.any(hv > self.h_bound):
            raise ModelError("h exceeded its declared bound")
        return hv


class NoCarryingCapacityError(ValueError):
    """Rescaling requires a positive competition rate c."""


def rates_X(i: int, p: LogisticParams) -> list[tuple[int, float]]:
    """Outgoing (target, rate) pairs at state i; empty at the absorbing 0.

    Up moves: rate rho*i*h(i)*pi_j to i+j for each litter size j.  Down move:
    rate d*i + c*i*(i-1) to i-1.  Zero-rate transitions are omitted.
    """
    if i < 0:
        raise ValueError("state must be a nonnegative integer")
    if i == 0:
        return []
    hv = float(p.h_at(i))
    out = []
    for j, pj in zip(p.pi.sizes, p.pi.probs):
        rate = p.rho * i * hv * pj
        if rate > 0.0:
            out.append((i + int(j), rate))
    down = p.d * i + p.c * (i * (i - 1.0))
    if down > 0.0:
        out.append((i - 1, down))
    return out


def jump_map_X(p: LogisticParams) -> JumpRateMap:
    return lambda i: rates_X(i, p)


def moves_X(p: LogisticParams) -> OffsetMoves:
    """Vectorized move structure (litter sizes up, one down) for ensembles."""
    sizes = p.pi.sizes
    probs = p.pi.probs

    def rates(states: np.ndarray) -> np.ndarray:
        k = states.astype(np.float64)
        alive = k >= 1.0
        hv = p.h_at(np.maximum(states, 1))
        birth = p.rho * k * hv * alive
        ups = birth[None, :] * probs[:, None]
        down = (p.d * k + p.c * (k * (k - 1.0))) * alive
        return np.vstack([ups, down[None, :]])

    return OffsetMoves(offsets=tuple(int(j) for j in sizes) + (-1,), rates=rates)


def mu_sigma_X(p: LogisticParams) -> tuple[float, float]:
    """Carrying-capacity centering mu = pi_bar*rho/c and spread sqrt(mu)."""
    if p.c == 0.0:
        raise NoCarryingCapacityError("c must be positive to center the process")
    mu = p.pi.pi_bar * p.rho / p.c
    return mu, float(np.sqrt(mu))


def rescale_X(path: Path, p: LogisticParams) -> RescaledPath:
    """Fluctuation rescaling: time t -> t*rho, state k -> (k - mu)/sigma."""
    mu, sigma = mu_sigma_X(p)
    return RescaledPath(
        times=path.times * p.rho,
        values=(path.states - mu) / sigma,
        mu=mu,
        sigma=sigma,
        horizon=path.horizon * p.rho,
    )


def moran_as_logistic(p: MoranParams) -> LogisticParams:
    """Embed the line counting chain: rho = s, litters of exactly one,
    h(k) = 1 - k/N, c = gamma/(2N), d = 0.  The resulting rates_X agree with
    rates_B at every state in [1, N], including floating point."""
    return LogisticParams(
        rho=p.s,
        h=moran_h(p.N),
        h_bound=1.0,
        d=0.0,
        c=0.5 * p.gamma / p.N,
        pi=OffspringDistribution.point_mass(1),
    )


def weak_selection_Z(alpha: float, gamma: float) -> JumpRateMap:
    """Limit chain of the line counting process under weak selection: birth
    rate alpha per individual, competition gamma/2 per ordered pair, 0
    absorbing."""
    if not alpha > 0 or not gamma > 0:
        raise ValueError("alpha and gamma must be positive")
    c = 0.5 * gamma

    def rate_map(k: int) -> list[tuple[int, float]]:
        if k < 0:
            raise ValueError("state must be a nonnegative integer")
        if k == 0:
            return []
        out = [(k + 1, alpha * k)]
        down = c * (k * (k - 1.0))
        if down > 0.0:
            out.append((k - 1, down))
        return out

    return rate_map


def moves_Z(alpha: float, gamma: float) -> OffsetMoves:
    if not alpha > 0 or not gamma > 0:
        raise ValueError("alpha and gamma must be positive")

    def rates(states: np.ndarray) -> np.ndarray:
        k = states.astype(np.float64)
        up = alpha * k
        down = 0.5 * gamma * (k * (k - 1.0))
        return np.stack([up, down])

    return OffsetMoves(offsets=(1, -1), rates=rates)


_H_PROXY_GRID = np.array([-3.0, -2.5, -2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0])
_H_PROXY_ZERO = 1e-12


@dataclass(frozen=True)
class AssumptionReport:
    """Diagnostics for a sequence of parameter bundles indexed by N.

    The h proxy is max_x |h(round(mu + x*sigma)) - 1| / (|x| sigma/mu) over a
    fixed grid of x values; it is a finite-N heuristic for the requirement
    that frequency dependence vanish near the carrying capacity, flagged
    unless it decreases along the sweep (or is identically zero).
    """

    Ns: tuple[int, ...]
    rho_decreasing: bool
    rho_over_c_increasing: bool
    death_ratio_ok: bool
    h_proxy: np.ndarray
    h_proxy_ok: bool

    @property
    def passed(self) -> bool:
        return (
            self.rho_decreasing
            and self.rho_over_c_increasing
            and self.death_ratio_ok
            and self.h_proxy_ok
        )


def check_assumptions(
    entries: Sequence[tuple[int, LogisticParams]],
    x_grid: np.ndarray | None = None,
) -> AssumptionReport:
    """Trend diagnostics for an N-indexed family of logistic parameters.

    Requires at least three entries with increasing N.  Verifies rho_N
    decreasing, rho_N/c_N increasing, c_N/d_N increasing (vacuous when every
    d_N is zero), and the h proxy described on :class:`AssumptionReport`.
    """
    if len(entries) < 3:
        raise ValueError("need at least 3 values of N to judge trends")
    Ns = [int(n) for n, _ in entries]
    if any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise ValueError("N values must be strictly increasing")
    grid = _H_PROXY_GRID if x_grid is None else np.asarray(x_grid, dtype=np.float64)
    if np.any(grid == 0.0):
        raise ValueError("x grid must exclude 0")

    rhos = np.array([p.rho for _, p in entries])
    cs = np.array([p.c for _, p in entries])
    ds = np.array([p.d for _, p in entries])
    if np.any(cs == 0.0):
        raise NoCarryingCapacityError("c must be positive to center the process")
    rho_dec = bool(np.all(np.diff(rhos) < 0))
    ratio_inc = bool(np.all(np.diff(rhos / cs) > 0))
    if np.all(ds == 0.0):
        death_ok = True
    else:
        with np.errstate(divide="ignore"):
            cd = np.where(ds > 0, cs / np.where(ds > 0, ds, 1.0), np.inf)
        death_ok = bool(np.all(np.diff(cd) > 0))

    proxy = np.empty(len(entries))
    for i, (_, p) in enumerate(entries):
        mu, sigma = mu_sigma_X(p)
        states = np.maximum(np.rint(mu + grid * sigma).astype(np.int64), 1)
        dev = np.abs(p.h_at(states) - 1.0)
        proxy[i] = float(np.max(dev / (np.abs(grid) * sigma / mu)))
    if np.max(proxy) < _H_PROXY_ZERO:
        proxy_ok = True
    else:
        proxy_ok = bool(np.all(np.diff(proxy) < 0))

    return AssumptionReport(
        Ns=tuple(Ns),
        rho_decreasing=rho_dec,
        rho_over_c_increasing=ratio_inc,
        death_ratio_ok=death_ok,
        h_proxy=proxy,
        h_proxy_ok=proxy_ok,
    )
