"""Exact event-driven simulation of continuous-time Markov chains on the
nonnegative integers.

Two simulation surfaces are provided:

* :func:`simulate_ctmc` — one replicate at a time, arbitrary jump-rate maps,
  returns the full càdlàg path.  Exponential holding times are sampled by
  inverse CDF on a uniform draw.
* :func:`simulate_marginals` — a vectorized ensemble stepper for chains whose
  jumps are a small fixed set of integer offsets with state-dependent rates
  (birth-death and branching chains).  It advances every replicate one event
  per sweep and records states only at requested observation times, which is
  what the large Monte Carlo verifications need.  The whole ensemble draws
  from a single stream; determinism is per (seed, configuration).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .rng import RngStream, as_generator

#: A jump-rate map sends a state k to the finitely many (target, rate) pairs
#: of outgoing transitions.  Rates are nonnegative and finite; targets are
#: nonnegative integers distinct from k.  An empty map marks an absorbing
#: state.
JumpRateMap = Callable[[int], Iterable[tuple[int, float]]]


class ModelError(ValueError):
    """A rate map produced a malformed transition (negative, non-finite,

    self-targeted or negative-state)."""


@dataclass(frozen=True)
class Path:
    """Piecewise-constant càdlàg trajectory on the nonnegative integers.

    ``times[0] == 0.0`` carries the initial state; later entries are jump
    times.  ``horizon`` is the end of the observed window.  ``truncated`` is
    set when simulation stopped at a jump cap, in which case ``horizon`` is
    the time of the last simulated jump.
    """

    times: np.ndarray
    states: np.ndarray
    horizon: float
    truncated: bool = False

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=np.float64)
        states = np.asarray(self.states, dtype=np.int64)
        if times.ndim != 1 or states.ndim != 1 or times.size != states.size:
            raise ValueError("times and states must be 1-d and equally long")
        if times.size == 0:
            raise ValueError("a path carries at least its initial state")
        if times[0] != 0.0:
            raise ValueError("paths start at time 0")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("jump times must be strictly increasing")
        if np.any(states < 0):
            raise ValueError("states must be nonnegative")
        if times.size > 1 and np.any(states[1:] == states[:-1]):
            raise ValueError("consecutive states must differ")
        if not np.isfinite(self.horizon) or self.horizon < times[-1]:
            raise ValueError("horizon must be finite and >= the last jump time")
        times.flags.writeable = False
        states.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    @property
    def n_jumps(self) -> int:
        return self.times.size - 1


def evaluate_at(path: Path, t: float) -> int:
    """State of the right-continuous step function at time t in [0, horizon]."""
    if not 0.0 <= t <= path.horizon:
        raise ValueError(f"t={t} outside [0, {path.horizon}]")
    idx = int(np.searchsorted(path.times, t, side="right")) - 1
    return int(path.states[idx])


def embedded_chain(path: Path) -> np.ndarray:
    """Sequence of visited states (the jump chain), initial state included."""
    return path.states.copy()


def _validated_transitions(rates: JumpRateMap, state: int) -> list[tuple[int, float]]:
    out = []
    for target, rate in rates(state):
        target = int(target)
        rate = float(rate)
        if not np.isfinite(rate) or rate < 0.0:
            raise ModelError(f"rate {rate!r} for {state}->{target} is not a finite nonnegative real")
        if target < 0 or target == state:
            raise ModelError(f"target {target} invalid from state {state}")
        if rate > 0.0:
            out.append((target, rate))
    return out


def simulate_ctmc(
    rates: JumpRateMap,
    init: int,
    horizon: float,
    rng: RngStream | np.random.Generator,
    max_jumps: int | None = None,
) -> Path:
    """Sample one path of the chain with generator ``rates`` on [0, horizon].

    Absorbing states (total rate 0) hold forever.  ``horizon`` may be
    ``math.inf`` only together with ``max_jumps``; if the cap is reached the
    returned path is flagged ``truncated`` and its horizon is the last jump
    time.
    """
    if init < 0:
        raise ValueError("init must be a nonnegative integer")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if not np.isfinite(horizon) and max_jumps is None:
        raise ValueError("an infinite horizon requires max_jumps")
    gen = as_generator(rng)

    times = [0.0]
    states = [int(init)]
    t = 0.0
    state = int(init)
    while True:
        transitions = _validated_transitions(rates, state)
        total = sum(rate for _, rate in transitions)
        if total == 0.0:
            return Path(np.array(times), np.array(states), horizon)
        # inverse-CDF exponential: u in [0,1) -> -log(1-u)/total
        hold = -np.log1p(-gen.random()) / total
        if t + hold > horizon:
            return Path(np.array(times), np.array(states), horizon)
        t += hold
        pick = gen.random() * total
        acc = 0.0
        for target, rate in transitions:
            acc += rate
            if pick < acc:
                state = target
                break
        else:
            state = transitions[-1][0]
        times.append(t)
        states.append(state)
        if max_jumps is not None and len(times) - 1 >= max_jumps:
            return Path(np.array(times), np.array(states), t, truncated=True)


@dataclass(frozen=True)
class OffsetMoves:
    """Jump structure for the ensemble stepper: a fixed tuple of nonzero
    integer offsets and a vectorized rate function mapping a state vector of
    shape (n,) to the (len(offsets), n) rate array."""

    offsets: tuple[int, ...]
    rates: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    def __post_init__(self) -> None:
        if len(self.offsets) == 0 or any(o == 0 for o in self.offsets):
            raise ValueError("offsets must be nonzero and nonempty")

    def as_jump_map(self) -> JumpRateMap:
        """Scalar jump-rate map view of the same chain (for cross-checks)."""

        def rate_map(k: int) -> list[tuple[int, float]]:
            r = np.asarray(self.rates(np.array([k], dtype=np.int64)), dtype=float)
            return [
                (k + off, float(r[i, 0]))
                for i, off in enumerate(self.offsets)
                if r[i, 0] > 0.0
            ]

        return rate_map


def simulate_marginals(
    moves: OffsetMoves,
    init: np.ndarray | Sequence[int],
    obs_times: np.ndarray | Sequence[float],
    rng: RngStream | np.random.Generator,
    max_steps: int | None = None,
) -> np.ndarray:
    """States of an ensemble of independent replicates at fixed times.

    ``init`` holds one starting state per replicate; ``obs_times`` is an
    increasing sequence of nonnegative observation times.  Returns an int64
    array of shape (len(obs_times), len(init)).  Absorbing states hold to the
    end.  One event is processed per replicate per sweep, so the cost is the
    total number of events in the ensemble.
    """
    gen = as_generator(rng)
    init = np.asarray(init, dtype=np.int64)
    obs = np.asarray(obs_times, dtype=np.float64)
    if init.ndim != 1 or init.size == 0:
        raise ValueError("init must be a nonempty 1-d array of states")
    if np.any(init < 0):
        raise ValueError("states must be nonnegative")
    if obs.ndim != 1 or obs.size == 0:
        raise ValueError("obs_times must be a nonempty 1-d array")
    if np.any(obs < 0) or (obs.size > 1 and np.any(np.diff(obs) <= 0)):
        raise ValueError("obs_times must be nonnegative and strictly increasing")

    n = init.size
    n_obs = obs.size
    offsets = np.asarray(moves.offsets, dtype=np.int64)
    states = init.copy()
    times = np.zeros(n)
    ptr = np.zeros(n, dtype=np.int64)  # next observation to record, per replicate
    out = np.empty((n_obs, n), dtype=np.int64)
    active = np.arange(n)

    sweeps = 0
    while active.size:
        if max_steps is not None and sweeps >= max_steps:
            raise RuntimeError(f"ensemble did not finish within {max_steps} sweeps")
        sweeps += 1
        s = states[active]
        r = np.asarray(moves.rates(s), dtype=np.float64)
        if r.shape != (offsets.size, active.size):
            raise ModelError("rate function returned a wrongly shaped array")
        if np.any(~np.isfinite(r)) or np.any(r < 0.0):
            raise ModelError("rates must be finite and nonnegative")
        total = r.sum(axis=0)
        absorbed = total <= 0.0
        u = gen.random(active.size)
        with np.errstate(divide="ignore"):
            dt = -np.log1p(-u) / np.where(absorbed, 1.0, total)
        t_new = np.where(absorbed, np.inf, times[active] + dt)

        # record every observation that falls before the pending jump
        while True:
            p = ptr[active]
            due = p < n_obs
            due[due] = obs[p[due]] < t_new[due]
            if not due.any():
                break
            rows = p[due]
            cols = active[due]
            out[rows, cols] = states[cols]
            ptr[cols] += 1

        # apply the pending jump where one exists
        u2 = gen.random(active.size)
        cum = np.cumsum(r, axis=0)
        pick = np.minimum((cum < u2 * total).sum(axis=0), offsets.size - 1)
        jumping = ~absorbed
        movers = active[jumping]
        states[movers] += offsets[pick[jumping]]
        if np.any(states[movers] < 0):
            raise ModelError("a positive-rate move left the nonnegative integers")
        times[movers] = t_new[jumping]
        active = active[jumping & (ptr[active] < n_obs)]

    return out
