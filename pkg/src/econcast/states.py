"""Collision-free network states and their per-state throughput.

A network state assigns each of ``n`` nodes one of sleep (0), listen (1) or
transmit (2), with at most one transmitter. States are ordered
lexicographically (first node slowest, sleep < listen < transmit), and
:func:`state_index` / :func:`state_from_index` convert between a state and its
position in :func:`enumerate_states`.
"""

from __future__ import annotations

from enum import Enum, IntEnum
from functools import lru_cache

import numpy as np

__all__ = [
    "MAX_NODES",
    "NodeState",
    "ThroughputMode",
    "num_states",
    "enumerate_states",
    "state_index",
    "state_from_index",
    "listener_stats",
    "state_throughput",
    "throughput_vector",
    "StateSpaceSizeError",
]

MAX_NODES = 20


class StateSpaceSizeError(ValueError):
    """Requested state space exceeds the enumeration cap."""


class NodeState(IntEnum):
    SLEEP = 0
    LISTEN = 1
    TRANSMIT = 2

    @property
    def symbol(self) -> str:
        return "slx"[self.value]


class ThroughputMode(str, Enum):
    GROUPPUT = "groupput"
    ANYPUT = "anyput"

    @classmethod
    def parse(cls, value) -> "ThroughputMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown throughput mode {value!r}; expected groupput or anyput") from None


def num_states(n: int) -> int:
    """Size of the collision-free state space, ``(n + 2) * 2**(n - 1)``."""
    if n == 0:
        return 1
    return (n + 2) << (n - 1)


def _binary_rows(m: int) -> np.ndarray:
    if m == 0:
        return np.zeros((1, 0), dtype=np.int8)
    bits = np.arange(1 << m)[:, None] >> np.arange(m - 1, -1, -1)
    return (bits & 1).astype(np.int8)


@lru_cache(maxsize=8)
def _enumerate(n: int) -> np.ndarray:
    table = np.zeros((1, 0), dtype=np.int8)
    for k in range(1, n + 1):
        rest = table
        tail = _binary_rows(k - 1)
        blocks = []
        for head, body in ((0, rest), (1, rest), (2, tail)):
            col = np.full((body.shape[0], 1), head, dtype=np.int8)
            blocks.append(np.hstack([col, body]))
        table = np.vstack(blocks)
    table.setflags(write=False)
    return table


def enumerate_states(n: int) -> np.ndarray:
    """All collision-free states of ``n`` nodes in canonical order.

    Parameters
    ----------
    n : int
        Node count, ``1 <= n <= MAX_NODES``.

    Returns
    -------
    ndarray of int8, shape (num_states(n), n)
        Read-only array of node codes (0 sleep, 1 listen, 2 transmit).
    """
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_NODES:
        raise StateSpaceSizeError(
            f"node count must be an integer in [1, {MAX_NODES}] "
            f"(state enumeration is capped at {MAX_NODES} nodes), got {n!r}"
        )
    return _enumerate(int(n))


def state_index(w) -> int:
    """Position of state ``w`` in :func:`enumerate_states`."""
    codes = [int(v) for v in w]
    n = len(codes)
    idx = 0
    for p, v in enumerate(codes):
        r = n - p - 1
        if v == 0:
            continue
        if v == 1:
            idx += num_states(r)
            continue
        if v != 2:
            raise ValueError(f"invalid node code {v!r}")
        tail = codes[p + 1 :]
        if any(t not in (0, 1) for t in tail):
            raise ValueError("state has more than one transmitter")
        idx += 2 * num_states(r)
        for t in tail:
            idx += t << (r - 1)
            r -= 1
        return idx
    return idx


def state_from_index(index: int, n: int) -> tuple[int, ...]:
    """Inverse of :func:`state_index`."""
    total = num_states(n)
    if not 0 <= index < total:
        raise IndexError(f"state index {index} out of range for n={n}")
    out = []
    rem = int(index)
    for p in range(n):
        r = n - p - 1
        block = num_states(r)
        if rem < block:
            out.append(0)
        elif rem < 2 * block:
            out.append(1)
            rem -= block
        else:
            out.append(2)
            rem -= 2 * block
            out.extend((rem >> (r - 1 - k)) & 1 for k in range(r))
            return tuple(out)
    return tuple(out)


def listener_stats(w) -> tuple[int, int, int]:
    """Return ``(c, gamma, nu)``: listener count, any-listener and single-transmitter indicators."""
    codes = np.asarray(w)
    c = int(np.count_nonzero(codes == NodeState.LISTEN))
    nu = int(np.count_nonzero(codes == NodeState.TRANSMIT) == 1)
    return c, int(c >= 1), nu


def state_throughput(w, mode: ThroughputMode | str) -> int:
    """Throughput credited to a collision-free state: ``nu*c`` or ``nu*gamma``."""
    mode = ThroughputMode.parse(mode)
    c, gamma, nu = listener_stats(w)
    return nu * (c if mode is ThroughputMode.GROUPPUT else gamma)


def throughput_vector(states: np.ndarray, mode: ThroughputMode | str) -> np.ndarray:
    """Vectorized :func:`state_throughput` over rows of ``states``."""
    mode = ThroughputMode.parse(mode)
    states = np.asarray(states)
    c = np.count_nonzero(states == NodeState.LISTEN, axis=1)
    nu = np.count_nonzero(states == NodeState.TRANSMIT, axis=1) == 1
    if mode is ThroughputMode.ANYPUT:
        c = np.minimum(c, 1)
    return np.where(nu, c, 0).astype(float)
