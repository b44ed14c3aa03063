"""Burst lengths, latency statistics, heterogeneous networks and normalized reports."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .gibbs import GibbsResult, StateDistribution, gradient_descent
from .network import NetworkConfig, NodePowerProfile, Topology
from .oracle import OracleSolution, solve_oracle
from .states import NodeState, ThroughputMode, enumerate_states

__all__ = [
    "BurstinessReport",
    "LatencyReport",
    "UndefinedBurstError",
    "EmptySampleError",
    "AlignmentError",
    "ReplicateRecord",
    "analytic_burst_length",
    "burstiness_report",
    "latency_report",
    "nearest_rank",
    "sample_heterogeneous_network",
    "confidence_interval",
    "normalized_report",
    "heterogeneity_replicate",
]

Z95 = 1.96


class UndefinedBurstError(ValueError):
    """No probability mass on states with a transmitter and a listener."""


class EmptySampleError(ValueError):
    """A statistic was requested from an empty sample."""


class AlignmentError(ValueError):
    """Report inputs do not describe the same configuration."""


@dataclass(frozen=True)
class BurstinessReport:
    analytic_mean: float
    empirical_mean: float
    relative_gap: float
    mode: ThroughputMode
    sigma: float
    samples: int = 0


@dataclass(frozen=True, eq=False)
class LatencyReport:
    mean: float
    p99: float
    cdf: np.ndarray
    samples: int


def analytic_burst_length(
    dist: StateDistribution, sigma: float, mode: ThroughputMode | str, config: NetworkConfig | None = None
) -> float:
    """Mean packets per transmission episode with at least one listener.

    Groupput: ratio of the mass of states with one transmitter and ``c >= 1``
    listeners to the same mass weighted by ``exp(-c / sigma)``. Anyput: the
    release probability is ``exp(-1/sigma)`` in every such state, so the mean
    is ``exp(1 / sigma)``.
    """
    mode = ThroughputMode.parse(mode)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if config is not None and config.n != dist.n:
        raise AlignmentError("distribution and configuration disagree on node count")
    if mode is ThroughputMode.ANYPUT:
        return math.exp(1.0 / sigma)
    states = enumerate_states(dist.n)
    c = np.count_nonzero(states == NodeState.LISTEN, axis=1)
    one_tx = np.count_nonzero(states == NodeState.TRANSMIT, axis=1) == 1
    sel = one_tx & (c >= 1)
    logp = dist.log_weights[sel] - dist.log_partition
    if not sel.any() or not np.isfinite(logp).any():
        raise UndefinedBurstError("no mass on states with a transmitter and a listener")
    return float(np.exp(logsumexp(logp) - logsumexp(logp - c[sel] / sigma)))


def burstiness_report(result: GibbsResult, samples) -> BurstinessReport:
    """Compare the analytic burst length of a converged run with observed samples."""
    analytic = analytic_burst_length(result.distribution, result.sigma, result.mode)
    samples = np.asarray(samples, float)
    emp = float(samples.mean()) if samples.size else float("nan")
    return BurstinessReport(analytic, emp, (emp - analytic) / analytic, result.mode, result.sigma, int(samples.size))


def nearest_rank(samples, q: float) -> float:
    """Nearest-rank percentile: the ``ceil(q/100 * n)``-th smallest sample."""
    x = np.sort(np.asarray(samples, float))
    if x.size == 0:
        raise EmptySampleError("percentile of an empty sample")
    k = max(1, math.ceil(q / 100.0 * x.size))
    return float(x[k - 1])


def latency_report(metrics_or_samples) -> LatencyReport:
    """Empirical CDF, mean and nearest-rank 99th percentile of latencies (s)."""
    samples = getattr(metrics_or_samples, "latencies", metrics_or_samples)
    x = np.sort(np.asarray(samples, float))
    if x.size == 0:
        raise EmptySampleError("no latency samples")
    values, counts = np.unique(x, return_counts=True)
    cdf = np.column_stack([values, np.cumsum(counts) / x.size])
    return LatencyReport(float(x.mean()), nearest_rank(x, 99), cdf, int(x.size))


def sample_heterogeneous_network(h: float, n: int, rng: np.random.Generator) -> NetworkConfig:
    """Draw a clique whose budgets and costs spread with heterogeneity ``h``.

    Costs ``L_i, X_i ~ U[510 - h, 490 + h]`` uW. Budgets are
    ``exp(h')`` uW with ``h' ~ U[-ln(h/100), ln h]``. At ``h = 10`` every
    node gets ``L = X = 500`` uW and ``rho = 10`` uW.
    """
    if not 10 <= h <= 250:
        raise ValueError(f"heterogeneity h must lie in [10, 250], got {h!r}")
    if n < 1:
        raise ValueError("need at least one node")
    lo, hi = 510.0 - h, 490.0 + h
    L = rng.uniform(lo, hi, size=n) if hi > lo else np.full(n, lo)
    X = rng.uniform(lo, hi, size=n) if hi > lo else np.full(n, lo)
    # ln(100/h) rather than -ln(h/100) so both ends are the same float at h = 10
    a, b = math.log(100.0 / h), math.log(h)
    hp = rng.uniform(a, b, size=n) if b > a else np.full(n, a)
    rho = np.exp(hp)
    nodes = tuple(NodePowerProfile(r * 1e-6, l * 1e-6, x * 1e-6) for r, l, x in zip(rho, L, X))
    return NetworkConfig(nodes, Topology.clique(n))


def confidence_interval(samples, z: float = Z95) -> tuple[float, float, float, bool]:
    """Normal-approximation interval ``mean +- z * stderr``.

    Returns ``(mean, low, high, degenerate)``; a single sample gives a
    zero-width interval flagged as degenerate.
    """
    x = np.asarray(samples, float)
    if x.size == 0:
        raise EmptySampleError("confidence interval of an empty sample")
    mean = float(x.mean())
    if x.size == 1:
        return mean, mean, mean, True
    half = z * float(x.std(ddof=1)) / math.sqrt(x.size)
    return mean, mean - half, mean + half, False


@dataclass(eq=False)
class ReplicateRecord:
    """One replicate of an experiment: its grouping key and the solved pieces."""

    key: dict
    oracle: OracleSolution
    gibbs: GibbsResult
    simulated_throughput: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        return self.gibbs.throughput / self.oracle.throughput

    @property
    def simulated_ratio(self) -> float | None:
        if self.simulated_throughput is None:
            return None
        return self.simulated_throughput / self.oracle.throughput


def normalized_report(records, baselines: dict | None = None) -> list[dict]:
    """Group replicates by key and report throughput ratios with 95% intervals.

    Each row holds the key fields, ``replicates``, ``ratio_mean``,
    ``ratio_ci_low``, ``ratio_ci_high``, ``ci_degenerate``, the same for
    simulated ratios when present, and ``ratio_over_<name>`` for every
    baseline constant supplied.
    """
    groups: dict[tuple, list[ReplicateRecord]] = {}
    order = []
    for rec in records:
        if rec.gibbs.mode is not rec.oracle.mode:
            raise AlignmentError(f"mode mismatch in replicate {rec.key}: {rec.gibbs.mode} vs {rec.oracle.mode}")
        if rec.gibbs.distribution.n != rec.oracle.alpha.size:
            raise AlignmentError(f"node count mismatch in replicate {rec.key}")
        if "sigma" in rec.key and not math.isclose(rec.key["sigma"], rec.gibbs.sigma):
            raise AlignmentError(f"sigma mismatch in replicate {rec.key}")
        k = tuple(sorted(rec.key.items()))
        if k not in groups:
            groups[k] = []
            order.append(k)
        groups[k].append(rec)
    rows = []
    for k in order:
        recs = groups[k]
        row = dict(k)
        row["replicates"] = len(recs)
        mean, lo, hi, deg = confidence_interval([r.ratio for r in recs])
        row.update(ratio_mean=mean, ratio_ci_low=lo, ratio_ci_high=hi, ci_degenerate=deg)
        sims = [r.simulated_ratio for r in recs if r.simulated_ratio is not None]
        if sims:
            smean, slo, shi, sdeg = confidence_interval(sims)
            row.update(sim_ratio_mean=smean, sim_ratio_ci_low=slo, sim_ratio_ci_high=shi)
        for name, value in (baselines or {}).items():
            row[f"ratio_over_{name}"] = mean / float(value)
        rows.append(row)
    return rows


def heterogeneity_replicate(
    h: float,
    sigmas,
    n: int,
    seed: int,
    replicate: int,
    mode: ThroughputMode | str = ThroughputMode.GROUPPUT,
) -> list[ReplicateRecord]:
    """Sample one heterogeneous network and solve it at each ``sigma``."""
    mode = ThroughputMode.parse(mode)
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(round(h * 1000)), int(replicate)))
    rng = np.random.default_rng(ss)
    net = sample_heterogeneous_network(h, n, rng)
    oracle = solve_oracle(net, mode)
    out = []
    for s in sigmas:
        g = gradient_descent(net, float(s), mode, keep_trace=False)
        out.append(ReplicateRecord({"h": float(h), "sigma": float(s)}, oracle, g, extra={"converged": g.converged}))
    return out
