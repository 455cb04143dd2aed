"""Numerical verification machinery for the fluctuation limits.

Provides the C^3_b test-function library, the rescaled generators of the
line counting and logistic chains on their fluctuation lattices, the sup gap
between those generators and the limiting diffusion generator on a compact
window, the hypergeometric duality Monte Carlo, and small distribution
statistics (KS distance, cross-replicate autocovariance).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .ctmc import simulate_marginals
from .line_counting import (
    MoranParams,
    RescaledPath,
    moves_B,
    mu_sigma_B,
    rates_B,
)
from .logistic import LogisticParams, moves_X, mu_sigma_X
from .moran import moves_forward_count
from .ou import OUParams, ou_generator
from .rng import RngStream, as_generator

_DERIV_GRID = np.linspace(-10.0, 10.0, 81)
_DERIV_STEP = 1e-4
_DERIV_TOL = 1e-6
_LATTICE_TOL = 1e-6


class DegenerateGridError(ValueError):
    """The compact window contains no lattice states."""


@dataclass(frozen=True)
class TestFunction:
    """A bounded test function with analytic first and second derivatives
    and declared bounds on |f|, |f'|, |f''|, |f'''|.

    Construction validates the supplied derivatives against central finite
    differences on [-10, 10]; a mismatch beyond 1e-6 is rejected.
    """

    __test__ = False  # keep pytest from collecting the class

    name: str
    fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    dfn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    d2fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    bounds: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        if any(not np.isfinite(b) or b < 0 for b in self.bounds):
            raise ValueError("bounds must be finite and nonnegative")
        x = _DERIV_GRID
        h = _DERIV_STEP
        fd1 = (self(x + h) - self(x - h)) / (2.0 * h)
        if np.max(np.abs(fd1 - self.df(x))) > _DERIV_TOL:
            raise ValueError(f"{self.name}: first derivative disagrees with finite differences")
        fd2 = (self(x + h) - 2.0 * self(x) + self(x - h)) / (h * h)
        if np.max(np.abs(fd2 - self.d2f(x))) > _DERIV_TOL:
            raise ValueError(f"{self.name}: second derivative disagrees with finite differences")

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=np.float64))

    def df(self, x):
        return self.dfn(np.asarray(x, dtype=np.float64))

    def d2f(self, x):
        return self.d2fn(np.asarray(x, dtype=np.float64))


def function_library() -> tuple[TestFunction, ...]:
    """The fixed verification library: sin, tanh, 1/(1+x^2), exp(-x^2) and a
    constant, chosen to mix odd/even symmetry and curvature profiles."""
    return (
        TestFunction(
            "sin", np.sin, np.cos, lambda x: -np.sin(x), (1.0, 1.0, 1.0, 1.0)
        ),
        TestFunction(
            "tanh",
            np.tanh,
            lambda x: 1.0 / np.cosh(x) ** 2,
            lambda x: -2.0 * np.tanh(x) / np.cosh(x) ** 2,
            (1.0, 1.0, 0.77, 2.0),
        ),
        TestFunction(
            "inverse_quadratic",
            lambda x: 1.0 / (1.0 + x * x),
            lambda x: -2.0 * x / (1.0 + x * x) ** 2,
            lambda x: (6.0 * x * x - 2.0) / (1.0 + x * x) ** 3,
            (1.0, 0.65, 2.0, 5.0),
        ),
        TestFunction(
            "gaussian_bump",
            lambda x: np.exp(-x * x),
            lambda x: -2.0 * x * np.exp(-x * x),
            lambda x: (4.0 * x * x - 2.0) * np.exp(-x * x),
            (1.0, 0.86, 2.0, 4.5),
        ),
        TestFunction(
            "constant",
            lambda x: np.ones_like(x),
            lambda x: np.zeros_like(x),
            lambda x: np.zeros_like(x),
            (1.0, 0.0, 0.0, 0.0),
        ),
    )


def function_by_name(name: str) -> TestFunction:
    for f in function_library():
        if f.name == name:
            return f
    raise KeyError(f"unknown test function {name!r}")


@dataclass(frozen=True)
class GridSpec:
    """Compact evaluation window K = [-half_width, half_width].  In lattice
    mode evaluation is restricted to rescaled chain states inside K; an
    explicit resolution instead places an even grid (not valid for the
    generator sup, whose argument must be a chain state)."""

    half_width: float
    lattice: bool = True
    resolution: int | None = None

    def __post_init__(self) -> None:
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")
        if not self.lattice and (self.resolution is None or self.resolution < 2):
            raise ValueError("non-lattice grids need a resolution >= 2")


def _lattice_states(
    mu: float, sigma: float, half_width: float, k_min: int, k_max: int | None
) -> np.ndarray:
    lo = max(k_min, int(np.ceil(mu - half_width * sigma)))
    hi = int(np.floor(mu + half_width * sigma))
    if k_max is not None:
        hi = min(k_max, hi)
    if hi < lo:
        raise DegenerateGridError("no lattice states inside the window")
    return np.arange(lo, hi + 1, dtype=np.int64)


def _gen_B_at_states(
    f: TestFunction, k: np.ndarray, p: MoranParams, lattice: tuple[float, float]
) -> np.ndarray:
    """Rescaled line-counting generator at integer states k, expressed on the
    fluctuation lattice (mu, sigma): rates divided by s (the time rescaling),
    function increments of size 1/sigma."""
    mu, sigma = lattice
    kf = k.astype(np.float64)
    x = (kf - mu) / sigma
    up = kf * p.s * (1.0 - kf / p.N) / p.s
    down = (0.5 * p.gamma / p.N) * (kf * (kf - 1.0)) / p.s
    fx = f(x)
    return up * (f(x + 1.0 / sigma) - fx) + down * (f(x - 1.0 / sigma) - fx)


def _gen_X_at_states(
    f: TestFunction, k: np.ndarray, p: LogisticParams, lattice: tuple[float, float]
) -> np.ndarray:
    """Rescaled logistic generator at integer states k on the lattice
    (mu, sigma); the competition term uses the exact k*(k-1)."""
    mu, sigma = lattice
    kf = k.astype(np.float64)
    x = (kf - mu) / sigma
    hv = p.h_at(k)
    fx = f(x)
    out = np.zeros_like(x)
    for j, pj in zip(p.pi.sizes, p.pi.probs):
        out += (p.rho * kf * hv * pj) / p.rho * (f(x + j / sigma) - fx)
    down = (p.d * kf + p.c * (kf * (kf - 1.0))) / p.rho
    out += down * (f(x - 1.0 / sigma) - fx)
    return out


def _state_from_lattice(x: float, mu: float, sigma: float) -> int:
    k = mu + x * sigma
    kr = float(np.rint(k))
    if abs(k - kr) > _LATTICE_TOL * max(1.0, abs(k)):
        raise ValueError(f"x={x} is not a lattice point (k={k})")
    return int(kr)


def generator_B_rescaled(
    f: TestFunction,
    x: float,
    p: MoranParams,
    lattice: tuple[float, float] | None = None,
) -> float:
    """Rescaled line-counting generator applied to f at lattice point x.

    The state k = mu + x*sigma must be an integer in [1, N].  ``lattice``
    overrides the (mu, sigma) pair defining the fluctuation lattice; by
    default the chain's own stationary centering is used.
    """
    mu, sigma = mu_sigma_B(p) if lattice is None else lattice
    k = _state_from_lattice(x, mu, sigma)
    if not 1 <= k <= p.N:
        raise ValueError(f"state {k} outside [1, {p.N}]")
    return float(_gen_B_at_states(f, np.array([k]), p, (mu, sigma))[0])


def generator_X_rescaled(
    f: TestFunction,
    x: float,
    p: LogisticParams,
    lattice: tuple[float, float] | None = None,
) -> float:
    """Rescaled logistic generator applied to f at lattice point x.

    The state k = mu + x*sigma must be a positive integer.  With parameters
    from the Moran embedding and a shared ``lattice`` override, this agrees
    with :func:`generator_B_rescaled` exactly, rate for rate.
    """
    mu, sigma = mu_sigma_X(p) if lattice is None else lattice
    k = _state_from_lattice(x, mu, sigma)
    if k < 1:
        raise ValueError(f"state {k} is not a positive integer")
    return float(_gen_X_at_states(f, np.array([k]), p, (mu, sigma))[0])


def sup_generator_gap(
    f: TestFunction,
    grid: GridSpec,
    params: MoranParams | LogisticParams,
    ou: OUParams,
    lattice: tuple[float, float] | None = None,
) -> float:
    """Max over lattice states in K of |rescaled chain generator - diffusion
    generator| applied to f.  ``lattice`` overrides the (mu, sigma) pair, as
    in the generator operations."""
    if not grid.lattice:
        raise ValueError("the generator sup is defined on lattice grids only")
    if isinstance(params, MoranParams):
        mu, sigma = mu_sigma_B(params) if lattice is None else lattice
        k = _lattice_states(mu, sigma, grid.half_width, 1, params.N)
        gen = _gen_B_at_states(f, k, params, (mu, sigma))
    elif isinstance(params, LogisticParams):
        mu, sigma = mu_sigma_X(params) if lattice is None else lattice
        k = _lattice_states(mu, sigma, grid.half_width, 1, None)
        gen = _gen_X_at_states(f, k, params, (mu, sigma))
    else:
        raise TypeError("params must be MoranParams or LogisticParams")
    x = (k.astype(np.float64) - mu) / sigma
    return float(np.max(np.abs(gen - ou_generator(f, x, ou))))


def falling_factorial_ratio(x: int, m: int, N: int) -> float:
    """prod_{i=0}^{m-1} (x - i)/(N - i); the empty product (m = 0) is 1 and
    any x < m gives 0."""
    if N < 1:
        raise ValueError("N must be a positive integer")
    if not 0 <= m <= N:
        raise ValueError(f"m={m} outside [0, {N}]")
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x < m:
        return 0.0
    out = 1.0
    for i in range(m):
        out *= (x - i) / (N - i)
    return out


def _ffr_of_states(states: np.ndarray, m: int, N: int) -> np.ndarray:
    """falling_factorial_ratio(state, m, N) for an int array of states."""
    out = np.ones(states.size)
    xf = states.astype(np.float64)
    for i in range(m):
        out *= (xf - i) / (N - i)
    return np.where(states < m, 0.0, out)


def _ffr_table(k: int, N: int) -> np.ndarray:
    """falling_factorial_ratio(k, m, N) tabulated for m = 0..N."""
    factors = (k - np.arange(N, dtype=np.float64)) / (N - np.arange(N, dtype=np.float64))
    table = np.concatenate([[1.0], np.cumprod(factors)])
    table[min(k, N) + 1 :] = 0.0
    return table


@dataclass(frozen=True)
class DualityEstimate:
    """Monte Carlo estimates of the two sides of the hypergeometric duality
    with their standard errors."""

    lhs_mean: float
    lhs_se: float
    rhs_mean: float
    rhs_se: float
    replicates: int

    def __post_init__(self) -> None:
        if self.lhs_se < 0 or self.rhs_se < 0:
            raise ValueError("standard errors must be nonnegative")

    @property
    def gap(self) -> float:
        return abs(self.lhs_mean - self.rhs_mean)

    @property
    def tolerance(self) -> float:
        return 3.0 * (self.lhs_se + self.rhs_se)

    @property
    def consistent(self) -> bool:
        return self.gap <= self.tolerance


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    mean = float(values.mean())
    if values.size < 2:
        return mean, 0.0
    return mean, float(values.std(ddof=1) / np.sqrt(values.size))


def duality_check(
    p: MoranParams,
    k: int,
    n: int,
    t: float,
    replicates: int,
    rng: RngStream | np.random.Generator,
) -> DualityEstimate:
    """Monte Carlo check of the hypergeometric duality at one configuration.

    Left side: forward wild-type count started at k, falling-factorial ratio
    of order n at time t.  Right side: line counting chain started at n,
    ratio with the random order B_t evaluated at k.  The two expectations are
    equal in law, so the estimates should agree within Monte Carlo error.
    """
    if not 1 <= k <= p.N or not 1 <= n <= p.N:
        raise ValueError("k and n must lie in [1, N]")
    if t < 0:
        raise ValueError("t must be nonnegative")
    if replicates < 1:
        raise ValueError("replicates must be positive")
    gen = as_generator(rng)
    cells = duality_cells(p, [k], [n], [t], replicates, gen)
    return cells[(k, n, t)]


def duality_cells(
    p: MoranParams,
    ks: Sequence[int],
    ns: Sequence[int],
    ts: Sequence[float],
    replicates: int,
    rng: RngStream | np.random.Generator,
) -> Mapping[tuple[int, int, float], DualityEstimate]:
    """Duality estimates over a (k, n, t) grid, sharing replicate ensembles:
    one forward ensemble per k and one line-counting ensemble per n, each
    observed at every t."""
    gen = as_generator(rng)
    ks = [int(v) for v in ks]
    ns = [int(v) for v in ns]
    ts = sorted(float(v) for v in ts)
    if len(set(ts)) != len(ts):
        raise ValueError("duplicate observation times")
    fwd_moves = moves_forward_count(p)
    b_moves = moves_B(p)

    lhs: dict[tuple[int, float, int], tuple[float, float]] = {}
    for k in ks:
        marg = simulate_marginals(fwd_moves, np.full(replicates, k, dtype=np.int64), ts, gen)
        for ti, t in enumerate(ts):
            for n in ns:
                lhs[(k, t, n)] = _mean_se(_ffr_of_states(marg[ti], n, p.N))
    rhs: dict[tuple[int, float, int], tuple[float, float]] = {}
    for n in ns:
        marg = simulate_marginals(b_moves, np.full(replicates, n, dtype=np.int64), ts, gen)
        for ti, t in enumerate(ts):
            for k in ks:
                table = _ffr_table(k, p.N)
                rhs[(n, t, k)] = _mean_se(table[marg[ti]])

    out = {}
    for k in ks:
        for n in ns:
            for t in ts:
                lm, ls = lhs[(k, t, n)]
                rm, rs = rhs[(n, t, k)]
                out[(k, n, t)] = DualityEstimate(lm, ls, rm, rs, replicates)
    return out


def ks_statistic(samples: np.ndarray | Sequence[float], cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Sup-norm distance between the empirical CDF of the samples and cdf."""
    samples = np.sort(np.asarray(samples, dtype=np.float64))
    if samples.size == 0:
        raise ValueError("samples must be nonempty")
    n = samples.size
    cv = np.asarray(cdf(samples), dtype=np.float64)
    grid = np.arange(n, dtype=np.float64)
    d_plus = np.max((grid + 1.0) / n - cv)
    d_minus = np.max(cv - grid / n)
    return float(max(d_plus, d_minus))


def empirical_autocov(
    paths: Sequence[RescaledPath],
    lags: Sequence[float],
    at_time: float,
) -> np.ndarray:
    """Cross-replicate covariance between the path value at ``at_time`` and
    at ``at_time + lag``, one entry per lag (lag 0 gives the variance)."""
    lags = np.asarray(lags, dtype=np.float64)
    if len(paths) < 2:
        raise ValueError("need at least two paths")
    if np.any(lags < 0):
        raise ValueError("lags must be nonnegative")
    end = at_time + float(lags.max(initial=0.0))
    if any(end > path.horizon for path in paths):
        raise ValueError("at_time + max lag exceeds a path horizon")
    base = np.array([path.value_at(at_time) for path in paths])
    out = np.empty(lags.size)
    for i, lag in enumerate(lags):
        vals = np.array([path.value_at(at_time + float(lag)) for path in paths])
        out[i] = paired_covariance(base, vals)
    return out


def paired_covariance(a: np.ndarray, b: np.ndarray) -> float:
    """Sample covariance (ddof=1) between two equally long vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(np.cov(a, b, ddof=1)[0, 1])
