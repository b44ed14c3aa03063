"""Exact stationary distributions and the dual gradient method for the entropy-perturbed problem.

For multipliers ``eta`` and temperature ``sigma`` the state ``w`` gets weight

    exp((T_w - sum_{i listens} eta_i L_i - sum_{i transmits} eta_i X_i) / sigma)

and the dual function is ``D(eta) = sigma * log Z(eta) + eta @ rho``. Its
gradient is the budget slack ``rho_i - alpha_i L_i - beta_i X_i``, and
:func:`gradient_descent` runs projected descent on ``D`` to find the
multipliers at which every node spends exactly its budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import entr, logsumexp

from .network import NetworkConfig
from .states import NodeState, ThroughputMode, enumerate_states, throughput_vector

__all__ = [
    "StateDistribution",
    "GibbsResult",
    "TraceRecord",
    "AlignmentError",
    "steady_state_distribution",
    "marginal_fractions",
    "p4_objective",
    "dual_function",
    "dual_gradient",
    "gradient_descent",
    "step_schedule",
    "power_scale",
]


class AlignmentError(ValueError):
    """A distribution does not match the state space of a configuration."""


@lru_cache(maxsize=16)
def _space(n: int):
    states = enumerate_states(n)
    listen = (states == NodeState.LISTEN).astype(float)
    transmit = (states == NodeState.TRANSMIT).astype(float)
    tput = {m: throughput_vector(states, m) for m in ThroughputMode}
    return states, listen, transmit, tput


@dataclass(frozen=True, eq=False)
class StateDistribution:
    """A probability vector over the canonical state space of ``n`` nodes."""

    n: int
    log_weights: np.ndarray
    probabilities: np.ndarray
    log_partition: float

    @classmethod
    def from_probabilities(cls, n: int, p) -> "StateDistribution":
        p = np.asarray(p, dtype=float)
        _check_size(n, p)
        p = p / p.sum()
        with np.errstate(divide="ignore"):
            logw = np.log(p)
        return cls(n, logw, p, 0.0)

    @classmethod
    def from_log_weights(cls, n: int, log_weights) -> "StateDistribution":
        logw = np.asarray(log_weights, dtype=float)
        _check_size(n, logw)
        log_z = float(logsumexp(logw))
        return cls(n, logw, np.exp(logw - log_z), log_z)

    @property
    def states(self) -> np.ndarray:
        return enumerate_states(self.n)

    @property
    def entropy(self) -> float:
        return float(entr(self.probabilities).sum())


def _check_size(n, v):
    if v.ndim != 1 or v.size != len(enumerate_states(n)):
        raise AlignmentError(f"vector of length {v.size} does not index the {n}-node state space")


@dataclass(frozen=True)
class TraceRecord:
    eta: np.ndarray
    throughput: float
    slack: np.ndarray


@dataclass(frozen=True, eq=False)
class GibbsResult:
    """Outcome of :func:`gradient_descent`.

    Attributes
    ----------
    eta : ndarray
        Final multipliers (1/W).
    distribution : StateDistribution
        Stationary law at ``eta``.
    throughput, entropy, objective : float
        ``objective = throughput + sigma * entropy`` (entropy in nats).
    alpha, beta : ndarray
        Listen and transmit marginals.
    converged : bool
        Whether the stopping rule fired before ``max_iters``.
    iterations : int
    trace : list of TraceRecord
        One record per iteration, multipliers and slack before the update.
    """

    eta: np.ndarray
    distribution: StateDistribution
    throughput: float
    entropy: float
    objective: float
    alpha: np.ndarray
    beta: np.ndarray
    sigma: float
    mode: ThroughputMode
    converged: bool
    iterations: int
    trace: list = field(default_factory=list, repr=False)

    @property
    def multipliers(self) -> np.ndarray:
        return self.eta


def _check_sigma(sigma):
    if not np.isfinite(sigma) or sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")


def _state_log_weights(config: NetworkConfig, eta, sigma, mode) -> np.ndarray:
    _, listen, transmit, tput = _space(config.n)
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (config.n,):
        raise AlignmentError(f"expected {config.n} multipliers, got shape {eta.shape}")
    if np.any(eta < 0):
        raise ValueError("multipliers must be nonnegative")
    cost = listen @ (eta * config.listen_cost) + transmit @ (eta * config.transmit_cost)
    return (tput[ThroughputMode.parse(mode)] - cost) / sigma


def steady_state_distribution(
    config: NetworkConfig, eta, sigma: float, mode: ThroughputMode | str
) -> StateDistribution:
    """Stationary law of the protocol at fixed multipliers, computed in log space.

    Parameters
    ----------
    config : NetworkConfig
        Clique network.
    eta : array_like
        Nonnegative multipliers, one per node (1/W).
    sigma : float
        Temperature, strictly positive.
    mode : ThroughputMode

    Returns
    -------
    StateDistribution
    """
    config.require_clique("steady_state_distribution")
    _check_sigma(sigma)
    return StateDistribution.from_log_weights(config.n, _state_log_weights(config, eta, sigma, mode))


def marginal_fractions(dist: StateDistribution, config: NetworkConfig) -> tuple[np.ndarray, np.ndarray]:
    """Per-node probability of listening and of transmitting."""
    if dist.n != config.n:
        raise AlignmentError(f"distribution is over {dist.n} nodes, config has {config.n}")
    _, listen, transmit, _ = _space(config.n)
    p = dist.probabilities
    return listen.T @ p, transmit.T @ p


def p4_objective(dist: StateDistribution, sigma: float, mode: ThroughputMode | str, config: NetworkConfig) -> float:
    """Expected throughput plus ``sigma`` times the Shannon entropy (nats)."""
    if dist.n != config.n:
        raise AlignmentError(f"distribution is over {dist.n} nodes, config has {config.n}")
    _, _, _, tput = _space(config.n)
    p = dist.probabilities
    value = float(p @ tput[ThroughputMode.parse(mode)])
    if sigma:
        value += sigma * dist.entropy
    return value


def dual_function(config: NetworkConfig, eta, sigma: float, mode: ThroughputMode | str) -> float:
    """``sigma * log Z(eta) + eta @ rho``; convex in ``eta``."""
    config.require_clique("dual_function")
    _check_sigma(sigma)
    logw = _state_log_weights(config, eta, sigma, mode)
    return float(sigma * logsumexp(logw) + np.asarray(eta, float) @ config.rho)


def dual_gradient(config: NetworkConfig, eta, sigma: float, mode: ThroughputMode | str) -> np.ndarray:
    """Budget slack ``rho_i - (alpha_i L_i + beta_i X_i)`` at multipliers ``eta`` (W)."""
    dist = steady_state_distribution(config, eta, sigma, mode)
    alpha, beta = marginal_fractions(dist, config)
    return config.rho - (alpha * config.listen_cost + beta * config.transmit_cost)


def power_scale(config: NetworkConfig) -> np.ndarray:
    """Per-node power unit ``max(L_i, X_i)`` used to make step sizes unit-free."""
    return np.maximum(config.listen_cost, config.transmit_cost)


def step_schedule(rule, sigma: float, n: int) -> Callable[[int], float]:
    """Step size as a function of the 1-based iteration ``k``.

    Steps act on multipliers expressed in units of ``1 / max(L_i, X_i)``.

    ``"constant"``
        ``4 sigma / n``, the inverse of a bound on the dual Hessian.
    ``"harmonic"``
        ``1 / k``.
    ``"theorem"``
        ``1 / ((k + 1) log(k + 1))``.
    A float gives a constant step; a callable is used as is.
    """
    if callable(rule):
        return rule
    if isinstance(rule, (int, float)) and not isinstance(rule, bool):
        value = float(rule)
        return lambda k: value
    if rule == "constant":
        value = 4.0 * sigma / n
        return lambda k: value
    if rule == "harmonic":
        return lambda k: 1.0 / k
    if rule == "theorem":
        return lambda k: 1.0 / ((k + 1) * np.log(k + 1))
    raise ValueError(f"unknown step rule {rule!r}")


def gradient_descent(
    config: NetworkConfig,
    sigma: float,
    mode: ThroughputMode | str = ThroughputMode.GROUPPUT,
    step_rule="constant",
    max_iters: int = 100_000,
    stop_tol: float = 1e-7,
    eta0=None,
    keep_trace: bool = True,
) -> GibbsResult:
    """Projected gradient descent on the dual, starting from ``eta = 0``.

    Each iteration computes the stationary law at the current multipliers,
    takes its listen/transmit marginals, and moves every multiplier against
    its budget slack, clipping at zero. Work is done in normalized
    multipliers ``eta_i * max(L_i, X_i)`` so one step rule fits any units.

    The run stops once the largest relative KKT residual of the budget
    constraints (``|slack_i| / rho_i`` where ``eta_i > 0``, overspend where
    ``eta_i = 0``) and the largest normalized multiplier change both drop
    below ``stop_tol``.

    Parameters
    ----------
    config : NetworkConfig
    sigma : float
    mode : ThroughputMode
    step_rule : str, float or callable
        See :func:`step_schedule`.
    max_iters : int
    stop_tol : float
    eta0 : array_like, optional
        Starting multipliers in 1/W (default zeros).
    keep_trace : bool

    Returns
    -------
    GibbsResult
        ``converged`` is False when ``max_iters`` ran out.
    """
    config.require_clique("gradient_descent")
    _check_sigma(sigma)
    mode = ThroughputMode.parse(mode)
    n = config.n
    _, listen, transmit, tput = _space(n)
    u = power_scale(config)
    rho_u = config.rho / u
    L_u = config.listen_cost / u
    X_u = config.transmit_cost / u
    T = tput[mode]
    step = step_schedule(step_rule, sigma, n)

    e = np.zeros(n) if eta0 is None else np.asarray(eta0, float) * u
    trace = []
    converged = False
    k = 0
    while k < max_iters:
        k += 1
        logw = (T - listen @ (e * L_u) - transmit @ (e * X_u)) / sigma
        p = np.exp(logw - logsumexp(logw))
        alpha, beta = listen.T @ p, transmit.T @ p
        slack = rho_u - alpha * L_u - beta * X_u
        if keep_trace:
            trace.append(TraceRecord(e / u, float(p @ T), slack * u))
        new = np.maximum(0.0, e - step(k) * slack)
        resid = np.where(new > 0, np.abs(slack), np.maximum(0.0, -slack)) / rho_u
        change = np.abs(new - e).max()
        e = new
        if resid.max() < stop_tol and change < stop_tol:
            converged = True
            break

    eta = e / u
    dist = steady_state_distribution(config, eta, sigma, mode)
    alpha, beta = marginal_fractions(dist, config)
    throughput = float(dist.probabilities @ T)
    entropy = dist.entropy
    return GibbsResult(
        eta=eta,
        distribution=dist,
        throughput=throughput,
        entropy=entropy,
        objective=throughput + sigma * entropy,
        alpha=alpha,
        beta=beta,
        sigma=float(sigma),
        mode=mode,
        converged=converged,
        iterations=k,
        trace=trace,
    )
