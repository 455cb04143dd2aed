"""Graphical construction of the two-type Moran model with directional
selection, forward type propagation, and the backward ancestral traversal.

Individuals carry labels 1..N.  Each individual fires neutral reproduction
arrows at rate gamma/2 and selective arrows at rate s, each onto a uniform
target (possibly itself).  Forward in time a neutral arrow i->j always copies
i's type onto j; a selective arrow copies only when i carries the beneficial
type.  Backward in time the same arrows define the potential ancestry of a
sample: a selective arrow into the current ancestor set adds its source, a
neutral arrow into the set relocates the hit line to the source (coalescing
when the source is already present).

Type configurations are boolean arrays of length N, entry ``i-1`` True when
individual i carries the beneficial type.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .ctmc import OffsetMoves, Path
from .line_counting import MoranParams
from .rng import RngStream, as_generator

KIND_NEUTRAL = "neutral"
KIND_SELECTIVE = "selective"


@dataclass(frozen=True)
class ArrowEvent:
    """A single reproduction arrow: source reproduces onto target at time."""

    time: float
    source: int
    target: int
    kind: str


@dataclass(frozen=True)
class GraphicalRepresentation:
    """Time-sorted arrow events of one Moran realization on [0, horizon].

    ``selective`` flags selective arrows; all arrays share one length and the
    event times are strictly increasing.
    """

    N: int
    gamma: float
    s: float
    horizon: float
    times: np.ndarray
    sources: np.ndarray
    targets: np.ndarray
    selective: np.ndarray

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=np.float64)
        sources = np.asarray(self.sources, dtype=np.int64)
        targets = np.asarray(self.targets, dtype=np.int64)
        selective = np.asarray(self.selective, dtype=bool)
        n = times.size
        if not (sources.size == targets.size == selective.size == n):
            raise ValueError("event arrays must share one length")
        if n and not np.all(np.diff(times) > 0):
            raise ValueError("event times must be strictly increasing")
        if n and (times[0] <= 0.0 or times[-1] > self.horizon):
            raise ValueError("event times must lie in (0, horizon]")
        for arr in (sources, targets):
            if n and (arr.min() < 1 or arr.max() > self.N):
                raise ValueError("labels must lie in [1, N]")
        for name, arr in (("times", times), ("sources", sources),
                          ("targets", targets), ("selective", selective)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_events(self) -> int:
        return self.times.size

    def events(self) -> Iterator[ArrowEvent]:
        for t, i, j, sel in zip(self.times, self.sources, self.targets, self.selective):
            yield ArrowEvent(float(t), int(i), int(j),
                             KIND_SELECTIVE if sel else KIND_NEUTRAL)

    def write_events_csv(self, path) -> None:
        """Dump the arrows as CSV (time, source, target, kind) for debugging
        and cross-implementation diffing."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["time", "source", "target", "kind"])
            for ev in self.events():
                writer.writerow([format(ev.time, ".17g"), ev.source, ev.target, ev.kind])


@dataclass(frozen=True)
class AncestrySnapshot:
    """Potential-ancestor set at one (forward) time during the backward
    traversal."""

    time: float
    ancestors: frozenset[int]


def build_graphical(
    N: int,
    gamma: float,
    s: float,
    horizon: float,
    rng: RngStream | np.random.Generator,
) -> GraphicalRepresentation:
    """Draw the arrow events: per individual, neutral arrow times form a
    Poisson process of rate gamma/2 and selective times one of rate s, all
    independent, targets uniform on [1, N].  Exact floating-point time ties
    (probability zero) are resolved by redrawing the later event."""
    if N < 1:
        raise ValueError("N must be a positive integer")
    if not (gamma > 0 and s > 0):
        raise ValueError("gamma and s must be positive")
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    gen = as_generator(rng)

    n_neutral = gen.poisson(0.5 * gamma * horizon, size=N)
    n_selective = gen.poisson(s * horizon, size=N)
    total_n = int(n_neutral.sum())
    total_s = int(n_selective.sum())
    # 1 - U puts the times in (0, horizon], keeping them clear of time 0
    times = horizon * (1.0 - gen.random(total_n + total_s))
    targets = gen.integers(1, N + 1, size=total_n + total_s)
    sources = np.concatenate([
        np.repeat(np.arange(1, N + 1), n_neutral),
        np.repeat(np.arange(1, N + 1), n_selective),
    ])
    selective = np.zeros(total_n + total_s, dtype=bool)
    selective[total_n:] = True

    order = np.argsort(times, kind="stable")
    times, sources, targets, selective = (
        times[order], sources[order], targets[order], selective[order])
    while times.size > 1:
        dup = np.nonzero(np.diff(times) == 0.0)[0]
        if dup.size == 0:
            break
        times = times.copy()
        times[dup + 1] = horizon * (1.0 - gen.random(dup.size))
        order = np.argsort(times, kind="stable")
        times, sources, targets, selective = (
            times[order], sources[order], targets[order], selective[order])

    return GraphicalRepresentation(
        N=N, gamma=gamma, s=s, horizon=horizon,
        times=times, sources=sources, targets=targets, selective=selective,
    )


def propagate_forward(
    graph: GraphicalRepresentation,
    init: np.ndarray | Sequence[bool],
    until: float | None = None,
) -> tuple[np.ndarray, Path]:
    """Push types through the arrows on [0, until] (default: the horizon).

    Returns the type configuration at the end time and the trajectory of the
    wild-type count as a càdlàg path.
    """
    end = graph.horizon if until is None else float(until)
    if not 0.0 <= end <= graph.horizon:
        raise ValueError("until must lie in [0, horizon]")
    types = np.array(init, dtype=bool)
    if types.shape != (graph.N,):
        raise ValueError(f"init must assign a type to each of the {graph.N} individuals")

    wild = int(graph.N - types.sum())
    jump_times = [0.0]
    counts = [wild]
    stop = int(np.searchsorted(graph.times, end, side="right"))
    for idx in range(stop):
        i = graph.sources[idx] - 1
        j = graph.targets[idx] - 1
        if graph.selective[idx] and not types[i]:
            continue  # silent: wild-type source cannot use a selective arrow
        if types[j] != types[i]:
            wild += 1 if types[j] else -1
            types[j] = types[i]
            jump_times.append(float(graph.times[idx]))
            counts.append(wild)
    return types, Path(np.array(jump_times), np.array(counts), end)


def trace_asg(
    graph: GraphicalRepresentation,
    sample: Iterable[int],
    from_time: float,
) -> list[AncestrySnapshot]:
    """Trace the potential ancestry of a sample backward from ``from_time``.

    Events are scanned in decreasing time: a selective arrow i->j with j in
    the current set inserts i (branching); a neutral arrow i->j with j in the
    set removes j and inserts i, which coalesces two lines when i was already
    present.  A snapshot is recorded at every change; the final snapshot is
    the ancestor set at time 0.
    """
    current = frozenset(int(v) for v in sample)
    if not current:
        raise ValueError("sample must be nonempty")
    if any(v < 1 or v > graph.N for v in current):
        raise ValueError("sample labels must lie in [1, N]")
    if not 0.0 <= from_time <= graph.horizon:
        raise ValueError("from_time must lie in [0, horizon]")

    snapshots = [AncestrySnapshot(float(from_time), current)]
    start = int(np.searchsorted(graph.times, from_time, side="right")) - 1
    working = set(current)
    for idx in range(start, -1, -1):
        i = int(graph.sources[idx])
        j = int(graph.targets[idx])
        if j not in working:
            continue
        if graph.selective[idx]:
            if i in working:
                continue
            working.add(i)
        else:
            working.discard(j)
            working.add(i)
            if working == snapshots[-1].ancestors:
                continue
        snapshots.append(AncestrySnapshot(float(graph.times[idx]), frozenset(working)))
    if snapshots[-1].time != 0.0:
        snapshots.append(AncestrySnapshot(0.0, snapshots[-1].ancestors))
    return snapshots


def line_counts(snapshots: Sequence[AncestrySnapshot]) -> np.ndarray:
    """Number of potential ancestors per snapshot."""
    return np.array([len(s.ancestors) for s in snapshots], dtype=np.int64)


def check_pathwise_duality(
    graph: GraphicalRepresentation,
    individual: int,
    init: np.ndarray | Sequence[bool],
    t: float,
) -> bool:
    """Verdict of the pathwise duality for a single sampled individual:

    the individual carries the beneficial type at time t exactly when its
    potential-ancestor set at time 0 contains an initially beneficial
    individual.  Returns whether the two sides agree (they always should).
    """
    types_t, _ = propagate_forward(graph, init, until=t)
    forward = bool(types_t[individual - 1])
    ancestors0 = trace_asg(graph, [individual], from_time=t)[-1].ancestors
    init = np.asarray(init, dtype=bool)
    backward = bool(any(init[a - 1] for a in ancestors0))
    return forward == backward


def rates_forward_count(x: int, p: MoranParams) -> tuple[float, float]:
    """(up, down) rates of the wild-type count x under the arrow dynamics.

    Wild-type gains come from neutral arrows wild -> beneficial, so
    up = x*(N-x)/N * gamma/2; losses from neutral or selective arrows
    beneficial -> wild, so down = x*(N-x)/N * (gamma/2 + s).  States 0 and N
    are absorbing.
    """
    if not 0 <= x <= p.N:
        raise ValueError(f"count {x} outside [0, {p.N}]")
    pair = x * (p.N - x) / p.N
    return pair * 0.5 * p.gamma, pair * (0.5 * p.gamma + p.s)


def moves_forward_count(p: MoranParams) -> OffsetMoves:
    """Vectorized move structure of the wild-type count chain."""
    N, gamma, s = p.N, p.gamma, p.s

    def rates(states: np.ndarray) -> np.ndarray:
        x = states.astype(np.float64)
        pair = x * (N - x) / N
        return np.stack([pair * 0.5 * gamma, pair * (0.5 * gamma + s)])

    return OffsetMoves(offsets=(1, -1), rates=rates)
