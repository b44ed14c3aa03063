"""Per-node protocol rules: transition rates, multiplier updates and virtual batteries.

Rates are expressed per packet time. The pure functions at the top
(``node_rates``, ``continuation_probability``, ``multiplier_step``) take only
scalars so the simulator kernel can compile the very same code with numba.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .network import NodePowerProfile
from .states import NodeState, ThroughputMode

__all__ = [
    "ProtocolVariant",
    "RateSet",
    "NodeRuntime",
    "ListenerEstimate",
    "node_rates",
    "continuation_probability",
    "multiplier_step",
    "transition_rates",
    "update_multiplier",
    "transmit_continuation_probability",
]


class ProtocolVariant(str, Enum):
    CAPTURE = "capture"
    NONCAPTURE = "noncapture"

    @classmethod
    def parse(cls, value) -> "ProtocolVariant":
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("-", "").replace("_", "")
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown protocol variant {value!r}; expected capture or noncapture") from None


# --- scalar kernels shared with the simulator -------------------------------


def node_rates(eta, listen_cost, transmit_cost, sigma, carrier_clear, estimate, capture):
    """Return ``(sleep->listen, listen->sleep, listen->transmit, transmit->listen)``.

    ``estimate`` is the listener count (groupput) or indicator (anyput) seen by
    the node. ``carrier_clear`` is 1 when no neighbour is transmitting.
    """
    a = 1.0 if carrier_clear else 0.0
    sl = a * math.exp(-eta * listen_cost / sigma)
    ls = a
    if capture:
        lx = a * math.exp(eta * (listen_cost - transmit_cost) / sigma)
        xl = math.exp(-estimate / sigma)
    else:
        lx = a * math.exp(eta * (listen_cost - transmit_cost) / sigma + estimate / sigma)
        xl = 1.0
    return sl, ls, lx, xl


def continuation_probability(estimate, sigma):
    """Probability of sending one more back-to-back packet, ``1 - exp(-estimate/sigma)``."""
    return 1.0 - math.exp(-estimate / sigma)


def multiplier_step(eta, delta, tau, battery_change):
    """Projected update ``max(0, eta - delta/tau * battery_change)``."""
    v = eta - delta / tau * battery_change
    return v if v > 0.0 else 0.0


# --- typed API ---------------------------------------------------------------


@dataclass(frozen=True)
class RateSet:
    """Transition rates of one node, per packet time."""

    sleep_to_listen: float
    listen_to_sleep: float
    listen_to_transmit: float
    transmit_to_listen: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.sleep_to_listen, self.listen_to_sleep, self.listen_to_transmit, self.transmit_to_listen)

    def out_of(self, state: NodeState) -> dict[NodeState, float]:
        """Rates leaving ``state`` keyed by destination."""
        state = NodeState(state)
        if state is NodeState.SLEEP:
            return {NodeState.LISTEN: self.sleep_to_listen}
        if state is NodeState.LISTEN:
            return {NodeState.SLEEP: self.listen_to_sleep, NodeState.TRANSMIT: self.listen_to_transmit}
        return {NodeState.LISTEN: self.transmit_to_listen}


@dataclass(frozen=True)
class ListenerEstimate:
    """Estimated number of other listeners and whether there is any."""

    count_estimate: int
    any_estimate: int

    @classmethod
    def from_count(cls, count: int) -> "ListenerEstimate":
        count = int(count)
        if count < 0:
            raise ValueError("listener count must be nonnegative")
        return cls(count, int(count >= 1))

    def value(self, mode: ThroughputMode | str) -> int:
        mode = ThroughputMode.parse(mode)
        return self.count_estimate if mode is ThroughputMode.GROUPPUT else self.any_estimate


@dataclass
class NodeRuntime:
    """Mutable protocol state of one node: multiplier and virtual battery (J)."""

    params: NodePowerProfile
    multiplier: float = 0.0
    battery: float = 0.0
    battery_at_interval_start: float = 0.0
    interval_index: int = 0
    capacity: float | None = None

    def __post_init__(self):
        if self.multiplier < 0:
            raise ValueError("multiplier must be nonnegative")
        if self.interval_index < 0:
            raise ValueError("interval index must be nonnegative")

    def consume(self, state: NodeState, dt: float) -> None:
        """Advance the virtual battery by ``dt`` seconds spent in ``state``."""
        state = NodeState(state)
        draw = 0.0
        if state is NodeState.LISTEN:
            draw = self.params.listen_cost
        elif state is NodeState.TRANSMIT:
            draw = self.params.transmit_cost
        b = self.battery + (self.params.rho - draw) * dt
        if self.capacity is not None:
            b = min(max(b, 0.0), self.capacity)
        self.battery = b


def transition_rates(
    runtime: NodeRuntime,
    sigma: float,
    carrier_clear: int | bool,
    est: ListenerEstimate,
    variant: ProtocolVariant | str,
    mode: ThroughputMode | str,
) -> RateSet:
    """Transition rates of a node given its multiplier, carrier sense and listener estimate."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    variant = ProtocolVariant.parse(variant)
    p = runtime.params
    return RateSet(
        *node_rates(
            runtime.multiplier,
            p.listen_cost,
            p.transmit_cost,
            sigma,
            bool(carrier_clear),
            est.value(mode),
            variant is ProtocolVariant.CAPTURE,
        )
    )


def update_multiplier(runtime: NodeRuntime, delta_k: float, tau_k: float, battery_end: float) -> float:
    """Close the current interval: update the multiplier from the battery change.

    Mutates ``runtime`` (multiplier, interval index, interval start level) and
    returns the new multiplier.
    """
    if not tau_k > 0:
        raise ValueError("tau_k must be positive")
    new = multiplier_step(runtime.multiplier, delta_k, tau_k, battery_end - runtime.battery_at_interval_start)
    runtime.multiplier = new
    runtime.interval_index += 1
    runtime.battery_at_interval_start = battery_end
    runtime.battery = battery_end
    return new


def transmit_continuation_probability(est: ListenerEstimate, sigma: float, mode: ThroughputMode | str) -> float:
    """Chance that a capturing transmitter sends another packet."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return continuation_probability(est.value(mode), sigma)
