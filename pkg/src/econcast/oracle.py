"""Oracle throughput: linear programs, homogeneous closed forms and periodic schedules.

Every LP here is solved by :func:`econcast.lp.simplex_max`. Optimal faces are
often not single points, so each solver runs a three-stage lexicographic
refinement and returns one canonical optimum:

1. maximize throughput;
2. among optimal points, maximize total awake time ``sum(alpha + beta)``;
3. among those, minimize the largest per-node transmit fraction.

The throughput value is unaffected by stages 2 and 3 (they may only lose a
relative 1e-12 of it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .lp import LPResult, simplex_max
from .network import NetworkConfig, NodePowerProfile, Topology
from .states import NodeState, ThroughputMode

__all__ = [
    "OracleSolution",
    "PeriodicSchedule",
    "RegimeError",
    "ScheduleError",
    "solve_groupput_lp",
    "solve_anyput_lp",
    "solve_oracle",
    "homogeneous_closed_form",
    "nonclique_bounds",
    "build_periodic_schedule",
    "audit_schedule",
    "schedule_groupput",
]

FEAS_TOL = 1e-9
REFINE_SLACK = 1e-12


class RegimeError(ValueError):
    """Closed-form solution requested outside the energy-constrained regime."""


class ScheduleError(ValueError):
    """A solution could not be turned into a valid periodic schedule."""


@dataclass(frozen=True, eq=False)
class OracleSolution:
    """Per-node listen and transmit fractions with the resulting throughput."""

    alpha: np.ndarray
    beta: np.ndarray
    throughput: float
    mode: ThroughputMode
    pair_fractions: np.ndarray | None = None
    duality_gap: float = 0.0

    @property
    def awake(self) -> np.ndarray:
        return self.alpha + self.beta

    @property
    def transmit_share(self) -> np.ndarray:
        """Fraction of awake time spent transmitting (0 for nodes that never wake)."""
        awake = self.awake
        out = np.zeros_like(awake)
        np.divide(self.beta, awake, out=out, where=awake > 0)
        return out

    def check(self, config: NetworkConfig, tol: float = FEAS_TOL) -> list[str]:
        """Names of violated feasibility constraints (empty when feasible)."""
        bad = []
        power = self.alpha * config.listen_cost + self.beta * config.transmit_cost
        if np.any(power > config.rho + tol * np.maximum(1.0, config.rho)):
            bad.append("power budget")
        if np.any(self.awake > 1 + tol):
            bad.append("awake fraction")
        if config.topology.is_complete and self.beta.sum() > 1 + tol:
            bad.append("single transmitter")
        if np.any(self.alpha < -tol) or np.any(self.beta < -tol):
            bad.append("nonnegativity")
        return bad


@dataclass(frozen=True, eq=False)
class PeriodicSchedule:
    """A slotted schedule repeated every ``period`` slots of ``slot_length`` seconds.

    ``assignments[t, i]`` is the :class:`NodeState` code of node ``i`` in slot ``t``.
    """

    period: int
    slot_length: float
    assignments: np.ndarray
    transmit_slots: tuple[int, ...] = field(default=())
    listen_slots: tuple[int, ...] = field(default=())


# ---------------------------------------------------------------------------
# LP assembly


def _unit_power(config: NetworkConfig):
    # power rows are scaled per node so coefficients are O(1) whatever the units
    u = np.maximum(config.listen_cost, config.transmit_cost)
    return config.rho / u, config.listen_cost / u, config.transmit_cost / u


def _refine(c, A, b, awake_w, beta_idx) -> tuple[np.ndarray, LPResult]:
    """Run the three-stage lexicographic solve and return (x, stage-one result)."""
    first = simplex_max(c, A, b)
    t_star = first.objective
    if t_star <= 0:
        return first.x, first
    A2 = np.vstack([A, -c])
    b2 = np.append(b, -(t_star - REFINE_SLACK * abs(t_star)))
    second = simplex_max(awake_w, A2, b2)
    a_star = second.objective

    n = c.size
    pad = np.zeros((A2.shape[0] + 1, 1))
    A3 = np.hstack([np.vstack([A2, -awake_w]), pad])
    b3 = np.append(b2, -(a_star - REFINE_SLACK * abs(a_star)))
    rows = np.zeros((len(beta_idx), n + 1))
    rows[np.arange(len(beta_idx)), beta_idx] = 1.0
    rows[:, -1] = -1.0
    A3 = np.vstack([A3, rows])
    b3 = np.append(b3, np.zeros(len(beta_idx)))
    obj = np.zeros(n + 1)
    obj[-1] = -1.0
    third = simplex_max(obj, A3, b3)
    return third.x[:n], first


def _groupput_program(config: NetworkConfig, adjacency: np.ndarray, single_transmitter: bool):
    n = config.n
    rho, L, X = _unit_power(config)
    eye = np.eye(n)
    blocks = [
        (np.hstack([np.diag(L), np.diag(X)]), rho),
        (np.hstack([eye, eye]), np.ones(n)),
    ]
    if single_transmitter:
        blocks.append((np.hstack([np.zeros((1, n)), np.ones((1, n))]), np.ones(1)))
    # alpha_i - sum of neighbour betas <= 0
    blocks.append((np.hstack([eye, -adjacency.astype(float)]), np.zeros(n)))
    A = np.vstack([blk for blk, _ in blocks])
    b = np.concatenate([rhs for _, rhs in blocks])
    c = np.concatenate([np.ones(n), np.zeros(n)])
    return c, A, b


def _solve_groupput(config, adjacency, single_transmitter) -> OracleSolution:
    n = config.n
    c, A, b = _groupput_program(config, adjacency, single_transmitter)
    x, first = _refine(c, A, b, np.ones(2 * n), np.arange(n, 2 * n))
    x = np.clip(x, 0.0, 1.0)
    alpha, beta = x[:n], x[n:]
    return OracleSolution(
        alpha=alpha,
        beta=beta,
        throughput=float(alpha.sum()),
        mode=ThroughputMode.GROUPPUT,
        duality_gap=first.duality_gap,
    )


def solve_groupput_lp(config: NetworkConfig) -> OracleSolution:
    """Maximum groupput of a clique.

    Maximizes ``sum(alpha)`` subject to the per-node power budget, awake time
    at most one, at most one transmitter at a time, and each node listening
    no more than the others transmit.

    Parameters
    ----------
    config : NetworkConfig
        Must have a clique topology.

    Returns
    -------
    OracleSolution
    """
    config.require_clique("solve_groupput_lp")
    adj = ~np.eye(config.n, dtype=bool)
    return _solve_groupput(config, adj, single_transmitter=True)


def solve_anyput_lp(config: NetworkConfig) -> OracleSolution:
    """Maximum anyput of a clique.

    Variables are the transmit fractions ``beta`` and the pair fractions
    ``chi[i, j]`` (node ``j`` receiving from node ``i``); listen fractions are
    ``alpha[j] = sum_i chi[i, j]``. Each transmission needs at least one
    receiver: ``beta[i] <= sum_j chi[i, j]``, and ``chi[i, j] <= beta[i]``.

    Returns
    -------
    OracleSolution
        With ``pair_fractions`` as an ``(n, n)`` matrix with zero diagonal.
    """
    config.require_clique("solve_anyput_lp")
    n = config.n
    rho, L, X = _unit_power(config)
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    m = len(pairs)
    nv = n + m
    rows, rhs = [], []
    # power: L_j * sum_i chi_ij + X_j beta_j <= rho_j
    for j in range(n):
        r = np.zeros(nv)
        r[j] = X[j]
        for k, (_, jj) in enumerate(pairs):
            if jj == j:
                r[n + k] = L[j]
        rows.append(r)
        rhs.append(rho[j])
    # awake time
    for j in range(n):
        r = np.zeros(nv)
        r[j] = 1.0
        for k, (_, jj) in enumerate(pairs):
            if jj == j:
                r[n + k] = 1.0
        rows.append(r)
        rhs.append(1.0)
    r = np.zeros(nv)
    r[:n] = 1.0
    rows.append(r)
    rhs.append(1.0)
    # every transmission has a receiver
    for i in range(n):
        r = np.zeros(nv)
        r[i] = 1.0
        for k, (ii, _) in enumerate(pairs):
            if ii == i:
                r[n + k] = -1.0
        rows.append(r)
        rhs.append(0.0)
    # a receiver can only hear a node while it transmits; never changes the optimum
    for k, (i, _) in enumerate(pairs):
        r = np.zeros(nv)
        r[n + k] = 1.0
        r[i] = -1.0
        rows.append(r)
        rhs.append(0.0)
    A, b = np.array(rows), np.array(rhs)
    c = np.concatenate([np.ones(n), np.zeros(m)])
    x, first = _refine(c, A, b, np.ones(nv), np.arange(n))
    x = np.clip(x, 0.0, 1.0)
    beta = x[:n]
    chi = np.zeros((n, n))
    for k, (i, j) in enumerate(pairs):
        chi[i, j] = x[n + k]
    alpha = chi.sum(axis=0)
    return OracleSolution(
        alpha=alpha,
        beta=beta,
        throughput=float(beta.sum()),
        mode=ThroughputMode.ANYPUT,
        pair_fractions=chi,
        duality_gap=first.duality_gap,
    )


def solve_oracle(config: NetworkConfig, mode: ThroughputMode | str) -> OracleSolution:
    """Dispatch to the groupput or anyput LP."""
    mode = ThroughputMode.parse(mode)
    if mode is ThroughputMode.GROUPPUT:
        return solve_groupput_lp(config)
    return solve_anyput_lp(config)


def homogeneous_closed_form(
    n: int, profile: NodePowerProfile, mode: ThroughputMode | str
) -> OracleSolution:
    """Closed-form optimum for ``n`` identical, energy-constrained nodes.

    Groupput: ``beta = rho / (X + (n-1) L)``, ``alpha = (n-1) beta``.
    Anyput: ``alpha = beta = rho / (X + L)``.

    Raises
    ------
    RegimeError
        If the budget is loose enough that the awake-time or single-transmitter
        constraint would bind; solve the LP instead.
    """
    mode = ThroughputMode.parse(mode)
    if n < 2:
        raise RegimeError("closed forms need at least two nodes; use the LP")
    rho, L, X = profile.rho, profile.listen_cost, profile.transmit_cost
    if mode is ThroughputMode.GROUPPUT:
        beta = rho / (X + (n - 1) * L)
        alpha = (n - 1) * beta
        total = n * alpha
    else:
        alpha = beta = rho / (X + L)
        total = n * beta
    if alpha + beta > 1 + FEAS_TOL or n * beta > 1 + FEAS_TOL:
        raise RegimeError(
            f"profile is not energy-constrained (alpha+beta={alpha + beta:.4g}, "
            f"sum(beta)={n * beta:.4g}); use the LP solver"
        )
    return OracleSolution(
        alpha=np.full(n, alpha),
        beta=np.full(n, beta),
        throughput=float(total),
        mode=mode,
    )


def nonclique_bounds(config: NetworkConfig) -> tuple[OracleSolution, OracleSolution]:
    """Lower and upper bounds on the maximum groupput of a general graph.

    Both programs restrict listening to neighbours' transmissions,
    ``alpha_i <= sum_{j in N(i)} beta_j``. The lower bound also keeps the
    single-transmitter constraint ``sum(beta) <= 1``; the upper bound drops it.
    """
    adj = config.topology.matrix()
    lower = _solve_groupput(config, adj, single_transmitter=True)
    upper = _solve_groupput(config, adj, single_transmitter=False)
    return lower, upper


# ---------------------------------------------------------------------------
# periodic schedules


def _rationalize(values, max_denominator, tol) -> list[Fraction]:
    fracs = [Fraction(float(v)).limit_denominator(max_denominator) for v in values]
    resid = [abs(float(f) - float(v)) for f, v in zip(fracs, values)]
    worst = max(resid, default=0.0)
    if worst > tol:
        raise ScheduleError(
            f"fractions are not rational with denominator <= {max_denominator}; "
            f"worst residual {worst:.3e}"
        )
    return fracs


def build_periodic_schedule(
    solution: OracleSolution,
    slot_length: float = 1e-3,
    max_denominator: int = 10_000,
    tol: float = 1e-9,
    max_period: int = 10_000_000,
) -> PeriodicSchedule:
    """Turn listen/transmit fractions into a slotted periodic schedule.

    The period is the least common multiple of the rationalized denominators.
    Transmit slots are handed out round-robin in node order, one slot per
    node per round. Each node then listens, in slot order, to the first
    available slots in which some other node transmits.

    Raises
    ------
    ScheduleError
        If rationalization fails or the fractions do not admit a schedule.
    """
    if slot_length <= 0:
        raise ValueError("slot_length must be positive")
    alpha = np.clip(np.asarray(solution.alpha, float), 0, None)
    beta = np.clip(np.asarray(solution.beta, float), 0, None)
    n = alpha.size
    fa = _rationalize(alpha, max_denominator, tol)
    fb = _rationalize(beta, max_denominator, tol)
    period = 1
    for f in fa + fb:
        period = math.lcm(period, f.denominator)
        if period > max_period:
            raise ScheduleError(f"period exceeds {max_period} slots; lower max_denominator")
    n_tx = [int(f * period) for f in fb]
    n_rx = [int(f * period) for f in fa]
    if sum(n_tx) > period:
        raise ScheduleError("transmit fractions sum to more than one")

    grid = np.zeros((period, n), dtype=np.int8)
    owner = np.full(period, -1)
    left = list(n_tx)
    slot = 0
    while any(left):
        for i in range(n):
            if left[i]:
                owner[slot] = i
                grid[slot, i] = NodeState.TRANSMIT
                left[i] -= 1
                slot += 1
    for i in range(n):
        need = n_rx[i]
        if need == 0:
            continue
        usable = np.flatnonzero((owner >= 0) & (owner != i))
        if usable.size < need:
            raise ScheduleError(f"node {i} needs {need} listen slots but only {usable.size} exist")
        grid[usable[:need], i] = NodeState.LISTEN
    grid.setflags(write=False)
    return PeriodicSchedule(period, float(slot_length), grid, tuple(n_tx), tuple(n_rx))


def schedule_groupput(schedule: PeriodicSchedule) -> float:
    """Average number of receivers per slot over one period."""
    g = schedule.assignments
    tx = (g == NodeState.TRANSMIT).sum(axis=1) == 1
    rx = (g == NodeState.LISTEN).sum(axis=1)
    return float((rx * tx).sum() / schedule.period)


def audit_schedule(schedule: PeriodicSchedule, config: NetworkConfig | None = None) -> dict:
    """Check the structural invariants of a schedule; returns a dict of booleans."""
    g = schedule.assignments
    tx = g == NodeState.TRANSMIT
    rx = g == NodeState.LISTEN
    tx_per_slot = tx.sum(axis=1)
    out = {
        "single_transmitter": bool((tx_per_slot <= 1).all()),
        "listen_covered": bool((~rx.any(axis=1) | (tx_per_slot == 1)).all()),
        "transmit_counts": tuple(int(v) for v in tx.sum(axis=0)) == tuple(schedule.transmit_slots),
        "listen_counts": tuple(int(v) for v in rx.sum(axis=0)) == tuple(schedule.listen_slots),
    }
    if config is not None:
        T = schedule.period * schedule.slot_length
        energy = (rx.sum(axis=0) * config.listen_cost + tx.sum(axis=0) * config.transmit_cost) * schedule.slot_length
        out["energy"] = bool(np.all(energy <= config.rho * T * (1 + 1e-9) + 1e-15))
    return out
