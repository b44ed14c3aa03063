import numpy as np
import pytest
from scipy import integrate

from econcast import _kernel
from econcast.gibbs import steady_state_distribution
from econcast.network import NetworkConfig, Topology, TopologyError
from econcast.simulator import (
    SimConfig,
    estimate_listeners_ping,
    replica_seed,
    run_simulation,
    verify_detailed_balance,
)
from econcast.states import NodeState, state_index

PING_INTERVAL, PING_LENGTH = 8e-3, 4e-4


@pytest.fixture(scope="module")
def short_run():
    net = NetworkConfig.homogeneous(4, 1e-5, 5e-4, 5e-4)
    cfg = SimConfig(net, 0.5, duration=2000.0, seed=11, trace_events=2_000_000)
    return cfg, run_simulation(cfg)


def test_same_seed_is_bit_identical(paper_net):
    cfg = SimConfig(paper_net(3), 0.5, duration=300.0, seed=42)
    a, b = run_simulation(cfg), run_simulation(cfg)
    for name in ("groupput", "anyput", "events", "packets", "collided_time"):
        assert getattr(a, name) == getattr(b, name)
    for name in ("burst_lengths", "latencies", "per_node_energy_rate", "multiplier_trace", "final_multipliers"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    c = run_simulation(cfg.with_seed(43))
    assert c.events != a.events


def test_replica_seeds_differ():
    seeds = {replica_seed(7, r) for r in range(100)}
    assert len(seeds) == 100
    assert replica_seed(7, 3) == replica_seed(7, 3)


def test_clique_never_has_two_transmitters(short_run):
    _, m = short_run
    assert m.max_simultaneous_transmitters == 1
    assert m.collided_time == 0.0


def test_anyput_below_groupput(short_run):
    _, m = short_run
    assert 0 <= m.anyput <= m.groupput
    assert m.groupput > 0


@pytest.mark.parametrize("variant", ["capture", "noncapture"])
def test_two_nodes_anyput_equals_groupput(paper_net, variant):
    m = run_simulation(SimConfig(paper_net(2), 0.5, variant=variant, duration=500.0, seed=5))
    assert m.groupput > 0
    assert m.anyput == m.groupput


def test_energy_identity_without_ping_interval(paper_net):
    net = paper_net(3)
    m = run_simulation(SimConfig(net, 0.5, duration=500.0, seed=2, ping_interval_as_listen=False))
    expected = m.listen_fraction * net.listen_cost + m.transmit_fraction * net.transmit_cost
    assert m.per_node_energy_rate == pytest.approx(expected, rel=1e-12)
    assert (m.per_node_energy_rate >= 0).all()


def test_energy_identity_with_ping_interval(short_run):
    cfg, m = short_run
    net = cfg.network
    L, X = net.listen_cost, net.transmit_cost
    expected = (m.listen_fraction + m.ping_listen_fraction) * L + (m.transmit_fraction - m.ping_listen_fraction) * X
    assert m.per_node_energy_rate == pytest.approx(expected, rel=1e-12)


def test_occupancy_matches_gibbs_law(paper_net):
    net = paper_net(3)
    m = run_simulation(SimConfig(net, 1.0, duration=300.0, seed=3, freeze_multipliers=(0, 0, 0),
                                 collect_occupancy=True))
    assert m.occupancy.sum() == pytest.approx(1.0, abs=1e-9)
    d = steady_state_distribution(net, np.zeros(3), 1.0, "groupput")
    assert 0.5 * np.abs(m.occupancy - d.probabilities).sum() < 0.02


def test_occupancy_guard():
    net = NetworkConfig.homogeneous(9, 1e-5, 5e-4, 5e-4)
    with pytest.raises(ValueError):
        SimConfig(net, 0.5, collect_occupancy=True)


def test_zero_budget_starves(paper_net):
    net = NetworkConfig.homogeneous(3, 1e-12, 5e-4, 5e-4)
    m = run_simulation(SimConfig(net, 0.5, duration=2000.0, seed=1, freeze_multipliers=(1e5,) * 3))
    assert m.groupput < 1e-6
    assert (m.listen_fraction + m.transmit_fraction < 1e-6).all()


def test_overspending_raises_multipliers(paper_net):
    m = run_simulation(SimConfig(paper_net(3), 0.5, duration=200.0, seed=1))
    assert (m.final_multipliers > 0).all()
    assert m.multiplier_trace.shape[1] == 3


def test_warmup_is_excluded(paper_net):
    m = run_simulation(SimConfig(paper_net(3), 0.5, duration=300.0, warmup=100.0, seed=1))
    assert m.measured_time == pytest.approx(200.0)
    assert m.listen_fraction.max() <= 1.0


def test_grid_records_collisions():
    net = NetworkConfig.homogeneous(9, 1e-5, 5e-4, 5e-4, Topology.grid(3, 3))
    m = run_simulation(SimConfig(net, 0.5, duration=2000.0, seed=4))
    assert m.max_simultaneous_transmitters >= 2
    assert m.collided_time > 0
    assert 0 <= m.anyput <= m.groupput


def test_trace_and_bursts_are_consistent(short_run):
    _, m = short_run
    assert m.trace_dropped == 0
    assert np.all(np.diff(m.trace.time) >= 0)
    assert np.all(m.trace.old != m.trace.new)
    assert m.burst_lengths.min() >= 1
    assert m.episode_burst_lengths.min() >= 1
    assert m.burst_receivers.size == m.burst_lengths.size


def test_every_latency_contains_a_sleep(short_run):
    _, m = short_run
    assert m.latencies.size > 100
    tr = m.trace
    sleeps = {i: tr.time[(tr.node == i) & (tr.new == NodeState.SLEEP)] for i in range(4)}
    for node, start, end in m.latency_intervals:
        s = sleeps[int(node)]
        k = np.searchsorted(s, start)
        assert k < s.size and s[k] <= end
    assert m.latencies == pytest.approx(m.latency_intervals[:, 2] - m.latency_intervals[:, 1])


def test_balance_small_clique():
    net = NetworkConfig.homogeneous(2, 1.0, 1.0, 1.0)
    rep = verify_detailed_balance(net, [0.0, 0.0], 1.0, "capture", "groupput")
    assert rep.pairs_checked > 0
    assert rep.max_violation < 1e-12


@pytest.mark.parametrize("variant", ["capture", "noncapture"])
@pytest.mark.parametrize("mode", ["groupput", "anyput"])
def test_balance_random_multipliers(rng, variant, mode):
    net = NetworkConfig.homogeneous(4, 1e-5, 5e-4, 5e-4)
    eta = rng.uniform(0, 3000, size=4)
    rep = verify_detailed_balance(net, eta, 0.25, variant, mode)
    assert rep.max_violation < 1e-12


def test_balance_detects_perturbation():
    net = NetworkConfig.homogeneous(3, 1e-5, 5e-4, 5e-4)
    eta = [100.0, 200.0, 300.0]
    for w in [(1, 0, 0), (1, 1, 0), (2, 1, 1)]:
        rep = verify_detailed_balance(net, eta, 0.5, "capture", "groupput", perturb=(state_index(w), 0, 1.01))
        assert rep.max_violation > 1e-3


def test_balance_rejects_grids():
    net = NetworkConfig.homogeneous(4, 1e-5, 5e-4, 5e-4, Topology.grid(2, 2))
    with pytest.raises(TopologyError):
        verify_detailed_balance(net, np.zeros(4), 0.5, "capture", "groupput")


def ping_cfg(paper_net):
    return SimConfig(paper_net(2), 0.5, estimator="ping")


def test_ping_trivial_counts(paper_net, rng):
    cfg = ping_cfg(paper_net)
    zero = estimate_listeners_ping(set(), rng, cfg)
    assert (zero.count_estimate, zero.any_estimate) == (0, 0)
    for _ in range(100):
        one = estimate_listeners_ping({3}, rng, cfg)
        assert (one.count_estimate, one.any_estimate) == (1, 1)


def survival_probability(k, interval, length):
    # a ping at x survives when the other k - 1 starts avoid (x - length, x + length)
    span = interval - length

    def alone(x):
        blocked = min(x + length, span) - max(x - length, 0.0)
        return (1.0 - blocked / span) ** (k - 1)

    return integrate.quad(alone, 0.0, span, points=[length, span - length], epsabs=1e-13)[0] / span


def monte_carlo_mean(k, interval, length, draws, seed):
    starts = np.sort(np.random.default_rng(seed).uniform(0, interval - length, size=(draws, k)), axis=1)
    gap = np.diff(starts, axis=1) >= length
    left = np.concatenate([np.ones((draws, 1), bool), gap], axis=1)
    right = np.concatenate([gap, np.ones((draws, 1), bool)], axis=1)
    return (left & right).sum(axis=1).mean()


def test_ping_oracles_agree():
    exact = 4 * survival_probability(4, PING_INTERVAL, PING_LENGTH)
    mc = monte_carlo_mean(4, PING_INTERVAL, PING_LENGTH, 1_000_000, 9)
    assert mc == pytest.approx(exact, abs=4e-3)
    assert exact < 4


def test_ping_estimator_matches_oracle(paper_net):
    cfg = ping_cfg(paper_net)
    exact = 4 * survival_probability(4, PING_INTERVAL, PING_LENGTH)
    r = np.random.default_rng(1)
    draws = [estimate_listeners_ping({0, 1, 2, 3}, r, cfg) for _ in range(100_000)]
    counts = np.array([d.count_estimate for d in draws])
    assert all(d.any_estimate == (d.count_estimate >= 1) for d in draws[:1000])
    # standard error of the mean is about 0.003
    assert counts.mean() == pytest.approx(exact, abs=0.012)
    kernel = _kernel.ping_counts(4, PING_INTERVAL, PING_LENGTH, 1_000_000, 3)
    assert kernel.mean() == pytest.approx(exact, abs=4e-3)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"sigma": 0.0},
        {"duration": 0.0},
        {"packet_length": -1.0},
        {"ping_length": 9e-3},
        {"warmup": 500.0, "duration": 100.0},
        {"freeze_multipliers": (1.0,)},
        {"eta0": (-1.0, 0.0, 0.0)},
        {"seed": -1},
        {"step_schedule": "harmonic"},
    ],
)
def test_config_validation(paper_net, kwargs):
    base = {"sigma": 0.5}
    base.update(kwargs)
    with pytest.raises(ValueError):
        SimConfig(paper_net(3), **base)
