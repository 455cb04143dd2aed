import csv

import numpy as np
import pytest
from scipy.stats import chi2_contingency

from asg_lab import (
    GraphicalRepresentation,
    MoranParams,
    RngStream,
    build_graphical,
    check_pathwise_duality,
    evaluate_at,
    line_counts,
    moves_B,
    moves_forward_count,
    propagate_forward,
    rates_forward_count,
    simulate_marginals,
    trace_asg,
)

# Hand-traced five-individual scenario: individual 3 starts beneficial, and
# the event list below is traced both forward (type propagation) and backward
# (potential ancestry of individual 2).  The two variants differ only in the
# kind of the t=40 arrow 1->2.
_SCENARIO = [
    (5.0, 5, 3, True),
    (10.0, 3, 4, False),
    (15.0, 3, 2, False),
    (23.0, 1, 5, False),
    (33.0, 5, 3, False),
    (40.0, 1, 2, None),  # filled per variant
    (52.0, 2, 3, False),
    (55.0, 1, 3, True),
    (63.0, 4, 5, False),
    (70.0, 4, 2, True),
]
_HORIZON = 80.0


def scenario_graph(t40_selective: bool) -> GraphicalRepresentation:
    events = [
        (t, i, j, t40_selective if sel is None else sel)
        for t, i, j, sel in _SCENARIO
    ]
    return GraphicalRepresentation(
        N=5,
        gamma=1.0,
        s=0.5,
        horizon=_HORIZON,
        times=np.array([e[0] for e in events]),
        sources=np.array([e[1] for e in events]),
        targets=np.array([e[2] for e in events]),
        selective=np.array([e[3] for e in events]),
    )


def only_three_beneficial() -> np.ndarray:
    init = np.zeros(5, dtype=bool)
    init[2] = True
    return init


def test_forward_scenario_types_and_wild_count() -> None:
    graph = scenario_graph(t40_selective=False)
    types, wild = propagate_forward(graph, only_three_beneficial())
    assert set(np.flatnonzero(types) + 1) == {2, 4, 5}
    assert wild.times.tolist() == [0.0, 10.0, 15.0, 33.0, 40.0, 63.0, 70.0]
    assert wild.states.tolist() == [4, 3, 2, 3, 4, 3, 2]


def test_forward_selective_arrow_from_wild_source_is_silent() -> None:
    # the t=5 selective arrow 5->3 must not replace the beneficial individual 3
    graph = scenario_graph(t40_selective=False)
    types, _ = propagate_forward(graph, only_three_beneficial(), until=6.0)
    assert types[2]
    assert set(np.flatnonzero(types) + 1) == {3}


def test_backward_scenario_ancestry() -> None:
    graph = scenario_graph(t40_selective=True)
    snaps = trace_asg(graph, [2], from_time=_HORIZON)
    assert snaps[0].ancestors == frozenset({2})
    assert snaps[-1].time == 0.0
    assert snaps[-1].ancestors == frozenset({1, 3, 5})
    assert line_counts(snaps).tolist() == [1, 2, 3, 3, 2, 3, 3]
    assert [s.time for s in snaps] == [80.0, 70.0, 40.0, 15.0, 10.0, 5.0, 0.0]


def test_pathwise_duality_on_scenario() -> None:
    graph = scenario_graph(t40_selective=True)
    assert check_pathwise_duality(graph, 2, only_three_beneficial(), _HORIZON)


def test_zero_horizon_gives_empty_graph() -> None:
    graph = build_graphical(5, 2.0, 1.0, 0.0, RngStream(1))
    assert graph.n_events == 0


def test_arrow_rates() -> None:
    # gamma=2, s=1, T=100: both arrow kinds average 100 per individual
    reps, N, T = 300, 5, 100.0
    neutral = np.zeros((reps, N))
    selective = np.zeros((reps, N))
    for r in range(reps):
        graph = build_graphical(N, 2.0, 1.0, T, RngStream(99, r))
        for i in range(1, N + 1):
            mask = graph.sources == i
            neutral[r, i - 1] = np.sum(mask & ~graph.selective)
            selective[r, i - 1] = np.sum(mask & graph.selective)
    for counts in (neutral.ravel(), selective.ravel()):
        se = counts.std(ddof=1) / np.sqrt(counts.size)
        assert abs(counts.mean() - 100.0) <= 3 * se


def test_build_is_deterministic() -> None:
    a = build_graphical(8, 1.0, 0.5, 10.0, RngStream(5, 2))
    b = build_graphical(8, 1.0, 0.5, 10.0, RngStream(5, 2))
    assert np.array_equal(a.times, b.times)
    assert np.array_equal(a.sources, b.sources)
    assert np.array_equal(a.targets, b.targets)
    assert np.array_equal(a.selective, b.selective)


def test_propagate_without_events_keeps_types() -> None:
    graph = build_graphical(6, 1.0, 0.5, 0.0, RngStream(2))
    init = np.array([True, False, True, False, False, True])
    types, wild = propagate_forward(graph, init)
    assert np.array_equal(types, init)
    assert wild.states.tolist() == [3]


def test_all_beneficial_is_absorbing() -> None:
    graph = build_graphical(6, 1.0, 0.5, 20.0, RngStream(3))
    types, wild = propagate_forward(graph, np.ones(6, dtype=bool))
    assert types.all()
    assert wild.states.tolist() == [0]


def test_trace_without_events_is_constant() -> None:
    graph = build_graphical(6, 1.0, 0.5, 0.0, RngStream(4))
    snaps = trace_asg(graph, [2, 4], from_time=0.0)
    assert len(snaps) == 1
    assert snaps[0].ancestors == frozenset({2, 4})


def test_single_selective_arrow_adds_one_line() -> None:
    graph = GraphicalRepresentation(
        N=4, gamma=1.0, s=0.5, horizon=2.0,
        times=np.array([1.0]), sources=np.array([3]),
        targets=np.array([2]), selective=np.array([True]),
    )
    snaps = trace_asg(graph, [2], from_time=2.0)
    assert line_counts(snaps).tolist() == [1, 2, 2]
    assert snaps[-1].ancestors == frozenset({2, 3})


def test_self_loops_are_no_ops() -> None:
    graph = GraphicalRepresentation(
        N=3, gamma=1.0, s=0.5, horizon=2.0,
        times=np.array([0.5, 1.0]), sources=np.array([2, 2]),
        targets=np.array([2, 2]), selective=np.array([False, True]),
    )
    init = np.array([False, True, False])
    types, wild = propagate_forward(graph, init)
    assert np.array_equal(types, init)
    assert wild.n_jumps == 0
    snaps = trace_asg(graph, [2], from_time=2.0)
    assert line_counts(snaps).tolist() == [1, 1]


def test_duality_trivial_configurations() -> None:
    graph = build_graphical(6, 1.0, 0.5, 3.0, RngStream(6))
    assert check_pathwise_duality(graph, 3, np.zeros(6, dtype=bool), 3.0)
    assert check_pathwise_duality(graph, 3, np.ones(6, dtype=bool), 3.0)


def test_duality_random_sweep() -> None:
    gen = RngStream(8).generator()
    for i in range(300):
        graph = build_graphical(6, 1.0, 0.5, 2.0, RngStream(9, i))
        init = gen.random(6) < gen.random()
        individual = int(gen.integers(1, 7))
        t = float(gen.uniform(0.0, 2.0))
        assert check_pathwise_duality(graph, individual, init, t)


def test_line_counts_stay_in_range() -> None:
    for i in range(50):
        graph = build_graphical(7, 1.5, 0.8, 3.0, RngStream(10, i))
        snaps = trace_asg(graph, [1, 4, 6], from_time=3.0)
        counts = line_counts(snaps)
        assert counts.min() >= 1
        assert counts.max() <= 7


def test_neutral_wild_count_is_a_martingale() -> None:
    """With vanishing selection the wild-type count keeps its mean and is
    absorbed at 0 or N with probability matching the initial fraction."""
    N, wild0, horizon, reps = 6, 4, 100.0, 1500
    init = np.zeros(N, dtype=bool)
    init[wild0:] = True  # individuals wild0+1..N beneficial
    finals = np.empty(reps)
    for r in range(reps):
        graph = build_graphical(N, 1.0, 1e-12, horizon, RngStream(12, r))
        _, wild = propagate_forward(graph, init)
        finals[r] = evaluate_at(wild, horizon)
    se = finals.std(ddof=1) / np.sqrt(reps)
    assert abs(finals.mean() - wild0) <= 3 * se
    absorbed = (finals == 0) | (finals == N)
    assert absorbed.mean() > 0.95
    fixed = np.mean(finals[absorbed] == N)
    p = wild0 / N
    se_fix = np.sqrt(p * (1 - p) / absorbed.sum())
    assert abs(fixed - p) <= 4 * se_fix


def test_forward_count_rates_hand_value() -> None:
    up, down = rates_forward_count(4, MoranParams(10, 1.0, 0.5))
    assert up == pytest.approx(1.2, rel=1e-15)
    assert down == pytest.approx(2.4, rel=1e-15)
    assert rates_forward_count(0, MoranParams(10, 1.0, 0.5)) == (0.0, 0.0)


def test_graphical_forward_count_matches_derived_chain() -> None:
    """The wild-count marginal read off the arrows agrees with the birth-death
    chain (up x(N-x)/N*gamma/2, down x(N-x)/N*(gamma/2+s))."""
    p = MoranParams(10, 1.0, 0.5)
    t, reps = 1.0, 3000
    init = np.zeros(p.N, dtype=bool)
    init[5:] = True  # 5 wild, 5 beneficial
    graphical = np.empty(reps, dtype=np.int64)
    for r in range(reps):
        graph = build_graphical(p.N, p.gamma, p.s, t, RngStream(14, r))
        _, wild = propagate_forward(graph, init)
        graphical[r] = evaluate_at(wild, t)
    chain = simulate_marginals(
        moves_forward_count(p), np.full(reps, 5, dtype=np.int64), [t], RngStream(15)
    )[0]
    bins = np.arange(p.N + 2)
    c1, _ = np.histogram(graphical, bins=bins)
    c2, _ = np.histogram(chain, bins=bins)
    keep = (c1 + c2) >= 10
    assert chi2_contingency(np.stack([c1[keep], c2[keep]])).pvalue > 0.01


def test_asg_line_count_matches_counting_chain() -> None:
    """Backward line counts from the arrows follow the counting chain's law."""
    p = MoranParams(10, 1.0, 0.5)
    t, reps, n0 = 0.8, 3000, 3
    traced = np.empty(reps, dtype=np.int64)
    for r in range(reps):
        graph = build_graphical(p.N, p.gamma, p.s, t, RngStream(16, r))
        traced[r] = len(trace_asg(graph, range(1, n0 + 1), from_time=t)[-1].ancestors)
    chain = simulate_marginals(
        moves_B(p), np.full(reps, n0, dtype=np.int64), [t], RngStream(17)
    )[0]
    bins = np.arange(1, p.N + 2)
    c1, _ = np.histogram(traced, bins=bins)
    c2, _ = np.histogram(chain, bins=bins)
    keep = (c1 + c2) >= 10
    assert chi2_contingency(np.stack([c1[keep], c2[keep]])).pvalue > 0.01


def test_events_csv_dump(tmp_path) -> None:
    graph = build_graphical(5, 1.0, 0.5, 4.0, RngStream(18))
    out = tmp_path / "events.csv"
    graph.write_events_csv(out)
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == graph.n_events
    assert [float(r["time"]) for r in rows] == graph.times.tolist()
    assert all(r["kind"] in ("neutral", "selective") for r in rows)


def test_sample_validation() -> None:
    graph = build_graphical(5, 1.0, 0.5, 2.0, RngStream(19))
    with pytest.raises(ValueError):
        trace_asg(graph, [], from_time=1.0)
    with pytest.raises(ValueError):
        trace_asg(graph, [6], from_time=1.0)
    with pytest.raises(ValueError):
        trace_asg(graph, [1], from_time=3.0)
