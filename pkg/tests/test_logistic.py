import numpy as np
import pytest

from asg_lab import (
    LogisticParams,
    ModelError,
    MoranParams,
    NoCarryingCapacityError,
    OffspringDistribution,
    RngStream,
    check_assumptions,
    constant_h,
    moran_as_logistic,
    moran_h,
    mu_sigma_X,
    rates_B,
    rates_X,
    rescale_X,
    weak_selection_Z,
)
from asg_lab.ctmc import Path
from asg_lab.logistic import moves_X


def two_point() -> OffspringDistribution:
    return OffspringDistribution.from_pairs([(1, 0.6), (2, 0.4)])


def test_offspring_moments() -> None:
    pi = two_point()
    assert pi.pi_bar == pytest.approx(1.4, rel=1e-15)
    assert pi.v2 == pytest.approx(2.2, rel=1e-15)
    assert pi.m3 == pytest.approx(3.8, rel=1e-15)


def test_offspring_validation() -> None:
    with pytest.raises(ValueError):
        OffspringDistribution.from_pairs([(1, 0.6), (2, 0.5)])
    with pytest.raises(ValueError):
        OffspringDistribution.from_pairs([(1, 1.2), (2, -0.2)])
    with pytest.raises(ValueError):
        OffspringDistribution.from_pairs([(0, 1.0)])
    with pytest.raises(ValueError):
        OffspringDistribution(sizes=np.array([1, 1]), probs=np.array([0.5, 0.5]))


def test_truncated_family_reports_tail_mass() -> None:
    q = 0.3
    geom = lambda j: q * (1 - q) ** (j - 1)
    pi = OffspringDistribution.truncated(geom, j_max=25)
    assert pi.truncation_mass == pytest.approx((1 - q) ** 25, rel=1e-9)
    assert pi.probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert pi.pi_bar == pytest.approx(1.0 / q, abs=0.01)


def default_params(**kw) -> LogisticParams:
    base = dict(rho=2.0, h=constant_h(1.0), h_bound=1.0, d=0.1, c=0.05,
                pi=OffspringDistribution.from_pairs([(1, 0.5), (2, 0.5)]))
    base.update(kw)
    return LogisticParams(**base)


def test_rates_zero_is_absorbing() -> None:
    assert rates_X(0, default_params()) == []


def test_rates_single_individual_no_competition() -> None:
    p = default_params(d=0.0)
    targets = dict(rates_X(1, p))
    assert 0 not in targets  # death and competition both vanish


def test_rates_hand_values() -> None:
    # rho=2, h=1, pi={1:.5, 2:.5}, i=3, d=0.1, c=0.05
    targets = dict(rates_X(3, default_params()))
    assert targets[4] == pytest.approx(3.0, rel=1e-15)
    assert targets[5] == pytest.approx(3.0, rel=1e-15)
    assert targets[2] == pytest.approx(0.6, rel=1e-15)


def test_h_validation() -> None:
    p = default_params(h=constant_h(1.0), h_bound=0.5)
    with pytest.raises(ModelError):
        rates_X(3, p)
    bad = default_params(h=lambda k: np.asarray(k, dtype=float) * -1.0)
    with pytest.raises(ModelError):
        rates_X(3, bad)
    with pytest.raises(ValueError):
        default_params().h_at(0)


def test_mu_sigma_hand_values() -> None:
    pi1 = OffspringDistribution.point_mass(1)
    p = LogisticParams(rho=0.1, h=constant_h(), h_bound=1.0, d=0.0, c=0.001, pi=pi1)
    mu, sigma = mu_sigma_X(p)
    assert mu == pytest.approx(100.0, rel=1e-12)
    assert sigma == pytest.approx(10.0, rel=1e-12)


def test_mu_equals_pibar_when_rho_equals_c() -> None:
    p = default_params(rho=0.05, c=0.05, d=0.0)
    mu, sigma = mu_sigma_X(p)
    assert mu == pytest.approx(p.pi.pi_bar, rel=1e-12)
    assert sigma**2 == pytest.approx(mu, rel=1e-12)


def test_missing_carrying_capacity() -> None:
    with pytest.raises(NoCarryingCapacityError):
        mu_sigma_X(default_params(c=0.0))


def test_rescale_hand_values() -> None:
    pi1 = OffspringDistribution.point_mass(1)
    p = LogisticParams(rho=0.5, h=constant_h(), h_bound=1.0, d=0.0, c=0.005, pi=pi1)
    mu, sigma = mu_sigma_X(p)  # mu = 100, sigma = 10
    path = Path(times=np.array([0.0, 2.0]), states=np.array([100, 102]), horizon=2.0)
    rp = rescale_X(path, p)
    assert rp.times.tolist() == [0.0, 1.0]
    assert rp.values.tolist() == [0.0, 0.2]


def test_moran_embedding_rate_identity_is_exact() -> None:
    for N in (2, 3, 5, 17, 64, 128, 200):
        p = MoranParams(N, 1.3, 0.37)
        lp = moran_as_logistic(p)
        for k in range(1, N + 1):
            up, down = rates_B(k, p)
            targets = dict(rates_X(k, lp))
            assert targets.get(k + 1, 0.0) == up
            assert targets.get(k - 1, 0.0) == down


def test_weak_selection_chain() -> None:
    Z = weak_selection_Z(1.0, 2.0)
    assert Z(0) == []
    assert dict(Z(1)) == {2: 1.0}
    assert dict(Z(3)) == {4: 3.0, 2: 6.0}


def test_weak_selection_equals_logistic_instance() -> None:
    alpha, gamma = 2.0, 1.0
    Z = weak_selection_Z(alpha, gamma)
    p = LogisticParams(rho=alpha, h=constant_h(), h_bound=1.0, d=0.0,
                       c=0.5 * gamma, pi=OffspringDistribution.point_mass(1))
    for k in range(0, 40):
        assert dict(Z(k)) == dict(rates_X(k, p))


def test_moves_X_match_scalar_rates() -> None:
    p = default_params()
    moves = moves_X(p)
    states = np.array([0, 1, 3, 7])
    r = moves.rates(states)
    for col, k in enumerate(states):
        expected = dict(rates_X(int(k), p))
        for row, off in enumerate(moves.offsets):
            assert r[row, col] == pytest.approx(expected.get(int(k) + off, 0.0), rel=1e-12)


def _sequence(Ns, rho_of, c_of, d_of, h_of=None):
    out = []
    for N in Ns:
        h = constant_h(1.0) if h_of is None else h_of(N)
        out.append((N, LogisticParams(rho=rho_of(N), h=h, h_bound=1.0,
                                      d=d_of(N), c=c_of(N),
                                      pi=OffspringDistribution.point_mass(1))))
    return out


def test_assumption_check_passes_for_valid_scaling() -> None:
    seq = _sequence([100, 1000, 10_000],
                    lambda N: N**-0.5, lambda N: 1.0 / N, lambda N: N**-2.0)
    report = check_assumptions(seq)
    assert report.passed
    assert np.all(report.h_proxy == 0.0)


def test_assumption_check_flags_strong_frequency_dependence() -> None:
    # Moran-style h with s_N = N^{-1/4} keeps a non-vanishing proxy
    seq = _sequence([1000, 10_000, 100_000],
                    lambda N: N**-0.25, lambda N: 0.5 / N, lambda N: 0.0,
                    h_of=lambda N: moran_h(N))
    report = check_assumptions(seq)
    assert not report.h_proxy_ok
    assert not report.passed


def test_assumption_check_accepts_weak_frequency_dependence() -> None:
    seq = _sequence([1000, 10_000, 100_000],
                    lambda N: N**-0.5, lambda N: 0.5 / N, lambda N: 0.0,
                    h_of=lambda N: moran_h(N))
    assert check_assumptions(seq).h_proxy_ok


def test_assumption_check_flags_constant_rho() -> None:
    seq = _sequence([100, 1000, 10_000],
                    lambda N: 0.5, lambda N: 1.0 / N, lambda N: 0.0)
    report = check_assumptions(seq)
    assert not report.rho_decreasing
    assert not report.passed


def test_assumption_check_needs_three_entries() -> None:
    seq = _sequence([100, 1000], lambda N: N**-0.5, lambda N: 1.0 / N, lambda N: 0.0)
    with pytest.raises(ValueError):
        check_assumptions(seq)


def test_params_validation() -> None:
    with pytest.raises(ValueError):
        default_params(rho=0.0)
    with pytest.raises(ValueError):
        default_params(d=-0.1)
    with pytest.raises(ValueError):
        default_params(h_bound=float("inf"))
