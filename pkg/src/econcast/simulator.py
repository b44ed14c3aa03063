"""Continuous-time simulation of the distributed protocol on a network.

Each node runs exponential clocks for sleep/listen/transmit changes with the
rates of :mod:`econcast.protocol`; transmissions are sent as back-to-back
packets, carrier sensing freezes the neighbours of a transmitter, and
multipliers follow the virtual battery. The event loop itself lives in
:mod:`econcast._kernel`; this module handles configuration, seeding and
turning raw counters into :class:`SimMetrics`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _kernel
from .gibbs import steady_state_distribution
from .network import NetworkConfig
from .protocol import ListenerEstimate, NodeRuntime, ProtocolVariant, transition_rates
from .states import ThroughputMode, enumerate_states, num_states

__all__ = [
    "Estimator",
    "SimConfig",
    "SimMetrics",
    "BalanceReport",
    "run_simulation",
    "replica_seed",
    "estimate_listeners_ping",
    "verify_detailed_balance",
    "MAX_OCCUPANCY_NODES",
]

MAX_OCCUPANCY_NODES = 8
_MAX_SNAPSHOTS = 10_000


class Estimator(str, Enum):
    PERFECT = "perfect"
    PING = "ping"

    @classmethod
    def parse(cls, value) -> "Estimator":
        if isinstance(value, cls):
            return value
        key = str(value).lower()
        if key in ("pingbased", "ping_based", "ping-based"):
            key = "ping"
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown estimator {value!r}; expected perfect or ping") from None


def replica_seed(seed: int, replica: int = 0) -> int:
    """Independent 32-bit seed for replica ``replica`` of a run seeded with ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(replica),))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


@dataclass(frozen=True, eq=False)
class SimConfig:
    """Everything needed to reproduce one simulation run.

    Times are in seconds and powers in watts. ``warmup`` seconds at the start
    are simulated but excluded from every metric. ``freeze_multipliers``
    pins the multipliers (1/W) for the whole run; otherwise they start at
    ``eta0`` (default zero) and are updated every ``tau`` seconds.
    """

    network: NetworkConfig
    sigma: float
    variant: ProtocolVariant = ProtocolVariant.CAPTURE
    mode: ThroughputMode = ThroughputMode.GROUPPUT
    duration: float = 1e5
    seed: int = 0
    packet_length: float = 1e-3
    delta: float = 0.01
    tau: float = 10.0
    estimator: Estimator = Estimator.PERFECT
    ping_interval: float = 8e-3
    ping_length: float = 4e-4
    freeze_multipliers: tuple | None = None
    warmup: float = 0.0
    eta0: tuple | None = None
    step_schedule: str = "constant"
    phase_offsets: tuple | None = None
    battery_capacity: float | None = None
    ping_interval_as_listen: bool = True
    collect_occupancy: bool = False
    max_events: int | None = None
    trace_events: int = 0
    multiplier_snapshot_every: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", ProtocolVariant.parse(self.variant))
        object.__setattr__(self, "mode", ThroughputMode.parse(self.mode))
        object.__setattr__(self, "estimator", Estimator.parse(self.estimator))
        n = self.network.n
        for name in ("freeze_multipliers", "eta0", "phase_offsets"):
            v = getattr(self, name)
            if v is not None:
                v = tuple(float(x) for x in np.ravel(v))
                if len(v) != n:
                    raise ValueError(f"{name} needs {n} entries, got {len(v)}")
                if any(x < 0 or not math.isfinite(x) for x in v):
                    raise ValueError(f"{name} entries must be finite and nonnegative")
                object.__setattr__(self, name, v)
        checks = [
            (self.sigma > 0, "sigma must be positive"),
            (self.duration > 0, "duration must be positive"),
            (self.packet_length > 0, "packet_length must be positive"),
            (self.tau > 0, "tau must be positive"),
            (self.delta > 0, "delta must be positive"),
            (0 <= self.warmup < self.duration, "warmup must lie in [0, duration)"),
            (0 < self.ping_length < self.ping_interval, "ping_length must be positive and below ping_interval"),
            (self.step_schedule in ("constant", "theorem"), "step_schedule must be constant or theorem"),
            (self.battery_capacity is None or self.battery_capacity > 0, "battery_capacity must be positive"),
            (self.trace_events >= 0, "trace_events must be nonnegative"),
            (self.max_events is None or self.max_events > 0, "max_events must be positive"),
            (not self.collect_occupancy or n <= MAX_OCCUPANCY_NODES,
             f"occupancy collection is limited to {MAX_OCCUPANCY_NODES} nodes"),
            (self.phase_offsets is None or all(p < self.tau for p in self.phase_offsets),
             "phase offsets must be below tau"),
            (0 <= int(self.seed) < 2**64, "seed must be a 64-bit unsigned integer"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)

    def with_seed(self, seed: int) -> "SimConfig":
        from dataclasses import replace

        return replace(self, seed=int(seed))


@dataclass(eq=False)
class SimMetrics:
    """Measurements of one run over the post-warmup window.

    ``burst_lengths`` counts packets per burst per receiver;
    ``episode_burst_lengths`` counts packets per transmission episode that
    had at least one listener. Latencies are gaps, per receiver, between the
    end of one burst and the start of the next when the receiver slept in
    between; ``latency_intervals`` holds ``(node, start, end)`` rows.
    """

    groupput: float
    anyput: float
    burst_lengths: np.ndarray
    burst_receivers: np.ndarray
    episode_burst_lengths: np.ndarray
    latencies: np.ndarray
    latency_intervals: np.ndarray
    per_node_energy_rate: np.ndarray
    listen_fraction: np.ndarray
    transmit_fraction: np.ndarray
    ping_listen_fraction: np.ndarray
    multiplier_times: np.ndarray
    multiplier_trace: np.ndarray
    final_multipliers: np.ndarray
    final_battery: np.ndarray
    occupancy: np.ndarray | None
    collided_time: float
    max_simultaneous_transmitters: int
    measured_time: float
    end_time: float
    events: int
    packets: int
    trace: np.ndarray | None = None
    trace_dropped: int = 0
    extra: dict = field(default_factory=dict)


def _csr(config: NetworkConfig):
    adj = config.topology.matrix()
    indptr = np.zeros(config.n + 1, np.int64)
    indptr[1:] = np.cumsum(adj.sum(axis=1))
    indices = np.concatenate([np.flatnonzero(row) for row in adj]).astype(np.int64) if config.n else np.zeros(0, np.int64)
    return indptr, indices


def run_simulation(config: SimConfig) -> SimMetrics:
    """Simulate the protocol and collect metrics.

    Parameters
    ----------
    config : SimConfig

    Returns
    -------
    SimMetrics
        Identical configurations (including ``seed``) give identical metrics.
    """
    net = config.network
    n = net.n
    indptr, indices = _csr(net)
    u = np.maximum(net.listen_cost, net.transmit_cost)
    freeze = config.freeze_multipliers is not None
    if freeze:
        eta0 = np.array(config.freeze_multipliers, float)
    elif config.eta0 is not None:
        eta0 = np.array(config.eta0, float)
    else:
        eta0 = np.zeros(n)
    phase = np.zeros(n) if config.phase_offsets is None else np.array(config.phase_offsets, float)
    cap_lo, cap_hi = (-np.inf, np.inf) if config.battery_capacity is None else (0.0, float(config.battery_capacity))
    counts = np.array([num_states(k) for k in range(n + 1)], np.int64)
    max_events = np.iinfo(np.int64).max if config.max_events is None else int(config.max_events)
    if config.multiplier_snapshot_every is not None:
        snap = float(config.multiplier_snapshot_every)
    else:
        snap = config.tau * max(1, math.ceil(config.duration / config.tau / _MAX_SNAPSHOTS))
    ping = config.estimator is Estimator.PING

    out = _kernel.simulate(
        indptr,
        indices,
        net.rho,
        net.listen_cost,
        net.transmit_cost,
        u,
        float(config.sigma),
        config.variant is ProtocolVariant.CAPTURE,
        config.mode is ThroughputMode.GROUPPUT,
        float(config.packet_length),
        ping,
        float(config.ping_interval),
        float(config.ping_length),
        bool(config.ping_interval_as_listen),
        float(config.duration),
        float(config.warmup),
        float(config.tau),
        float(config.delta),
        config.step_schedule == "theorem",
        phase,
        freeze,
        eta0,
        cap_lo,
        cap_hi,
        replica_seed(config.seed),
        max_events,
        bool(config.collect_occupancy),
        counts,
        int(config.trace_events),
        snap,
    )
    (
        t_end, events, packets, g_credit, a_credit, m_listen, m_tx, m_txping, consumed, occ,
        bursts, bnode, episodes, lat, lat_node, lat_start, snap_t, snaps, eta, bat, collided,
        max_ntx, tr_t, tr_node, tr_old, tr_new, tr_dropped,
    ) = out
    measured = max(t_end - config.warmup, 0.0)
    scale = 1.0 / measured if measured > 0 else 0.0
    occupancy = None
    if config.collect_occupancy:
        occupancy = occ * scale
    trace = None
    if config.trace_events:
        trace = np.rec.fromarrays([tr_t, tr_node, tr_old, tr_new], names="time,node,old,new")
    intervals = np.column_stack([lat_node.astype(float), lat_start, lat_start + lat]) if lat.size else np.zeros((0, 3))
    return SimMetrics(
        groupput=g_credit * scale,
        anyput=a_credit * scale,
        burst_lengths=bursts,
        burst_receivers=bnode,
        episode_burst_lengths=episodes,
        latencies=lat,
        latency_intervals=intervals,
        per_node_energy_rate=consumed * scale,
        listen_fraction=m_listen * scale,
        transmit_fraction=m_tx * scale,
        ping_listen_fraction=m_txping * scale,
        multiplier_times=snap_t,
        multiplier_trace=snaps,
        final_multipliers=eta,
        final_battery=bat,
        occupancy=occupancy,
        collided_time=float(collided),
        max_simultaneous_transmitters=int(max_ntx),
        measured_time=float(measured),
        end_time=float(t_end),
        events=int(events),
        packets=int(packets),
        trace=trace,
        trace_dropped=int(tr_dropped),
    )


def estimate_listeners_ping(listening_nodes, rng: np.random.Generator, config: SimConfig) -> ListenerEstimate:
    """Count the listeners whose pings survive collisions on one pinging interval.

    Each listener starts a ping of ``ping_length`` at a uniform time in
    ``[0, ping_interval - ping_length]``; two pings collide when their starts
    are closer than ``ping_length``, and collided pings are lost.
    """
    k = len(listening_nodes)
    if k <= 1:
        return ListenerEstimate.from_count(k)
    span = config.ping_interval - config.ping_length
    starts = rng.uniform(0.0, span, size=k)
    gaps = np.abs(starts[:, None] - starts[None, :])
    np.fill_diagonal(gaps, np.inf)
    alive = (gaps >= config.ping_length).all(axis=1)
    return ListenerEstimate.from_count(int(alive.sum()))


@dataclass(frozen=True)
class BalanceReport:
    max_violation: float
    pairs_checked: int
    worst_pair: tuple | None


def _transition_rate(config, eta, sigma, variant, mode, w, i, dest) -> float:
    others = np.delete(w, i)
    clear = not np.any(others == 2)
    if w[i] == 1 and dest == 2:
        est = int(np.count_nonzero(others == 1))
    elif w[i] == 2:
        est = int(np.count_nonzero(others == 1))
    else:
        est = 0
    rt = NodeRuntime(config.nodes[i], multiplier=float(eta[i]))
    rates = transition_rates(rt, sigma, clear, ListenerEstimate.from_count(est), variant, mode)
    return rates.out_of(int(w[i]))[dest]


def verify_detailed_balance(
    config: NetworkConfig,
    eta,
    sigma: float,
    variant: ProtocolVariant | str,
    mode: ThroughputMode | str,
    perturb: tuple[int, int, float] | None = None,
) -> BalanceReport:
    """Check detailed balance of the protocol rates against the Gibbs law.

    For every pair of states that differ in one node's state, compares
    ``pi_w r(w, w')`` with ``pi_w' r(w', w)`` using ground-truth listener
    counts and carrier sensing. ``perturb=(state_index, node, factor)``
    scales the rates out of one state for one node, to check that the test
    can fail.

    Returns
    -------
    BalanceReport
        ``max_violation`` is the largest ``|a/b - 1|`` over checked pairs.
    """
    config.require_clique("verify_detailed_balance")
    if config.n > MAX_OCCUPANCY_NODES:
        raise ValueError(f"detailed balance check is limited to {MAX_OCCUPANCY_NODES} nodes")
    variant = ProtocolVariant.parse(variant)
    mode = ThroughputMode.parse(mode)
    eta = np.asarray(eta, float)
    dist = steady_state_distribution(config, eta, sigma, mode)
    logp = dist.log_weights - dist.log_partition
    states = enumerate_states(config.n)
    index = {tuple(int(v) for v in w): k for k, w in enumerate(states)}
    moves = {0: (1,), 1: (0, 2), 2: (1,)}
    worst, worst_pair, checked = 0.0, None, 0
    for k, w in enumerate(states):
        for i in range(config.n):
            for dest in moves[int(w[i])]:
                w2 = w.copy()
                w2[i] = dest
                k2 = index.get(tuple(int(v) for v in w2))
                if k2 is None or k2 < k:
                    continue
                r12 = _transition_rate(config, eta, sigma, variant, mode, w, i, dest)
                r21 = _transition_rate(config, eta, sigma, variant, mode, w2, i, int(w[i]))
                if perturb is not None:
                    pk, pi_, f = perturb
                    if pk == k and pi_ == i:
                        r12 *= f
                    if pk == k2 and pi_ == i:
                        r21 *= f
                if r12 == 0.0 and r21 == 0.0:
                    continue
                checked += 1
                if r12 == 0.0 or r21 == 0.0:
                    v = math.inf
                else:
                    v = abs(math.expm1((logp[k] + math.log(r12)) - (logp[k2] + math.log(r21))))
                if v > worst:
                    worst, worst_pair = v, (k, k2, i)
    return BalanceReport(worst, checked, worst_pair)
