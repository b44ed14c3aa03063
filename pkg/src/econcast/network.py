"""Node power profiles, topologies and network configurations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NodePowerProfile",
    "Topology",
    "NetworkConfig",
    "grid_adjacency",
    "TopologyError",
]


class TopologyError(ValueError):
    """Raised when a solver receives a topology it does not support."""


@dataclass(frozen=True)
class NodePowerProfile:
    """Power budget and consumption levels of one node, in watts."""

    rho: float
    listen_cost: float
    transmit_cost: float

    def __post_init__(self):
        for name in ("rho", "listen_cost", "transmit_cost"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float, np.floating)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite power in watts, got {v!r}")
            object.__setattr__(self, name, float(v))

    def scaled(self, k: float) -> "NodePowerProfile":
        return NodePowerProfile(self.rho * k, self.listen_cost * k, self.transmit_cost * k)


def grid_adjacency(rows: int, cols: int) -> np.ndarray:
    """Adjacency of a ``rows x cols`` lattice with 4-neighbourhoods, row-major numbering."""
    if rows < 1 or cols < 1:
        raise ValueError("grid dimensions must be positive")
    n = rows * cols
    adj = np.zeros((n, n), dtype=bool)
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                adj[i, i + 1] = adj[i + 1, i] = True
            if r + 1 < rows:
                adj[i, i + cols] = adj[i + cols, i] = True
    return adj


@dataclass(frozen=True, eq=False)
class Topology:
    """Either a clique on ``n`` nodes or an explicit symmetric adjacency matrix."""

    n: int
    adjacency: np.ndarray | None = None
    grid_shape: tuple[int, int] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.adjacency is not None:
            adj = np.asarray(self.adjacency, dtype=bool)
            if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
                raise ValueError("adjacency must be a square matrix")
            if adj.shape[0] != self.n:
                raise ValueError("adjacency size does not match node count")
            if not np.array_equal(adj, adj.T):
                raise ValueError("adjacency must be symmetric")
            if adj.diagonal().any():
                raise ValueError("adjacency must have an empty diagonal")
            adj = adj.copy()
            adj.setflags(write=False)
            object.__setattr__(self, "adjacency", adj)
        if self.n < 1:
            raise ValueError("topology needs at least one node")

    @classmethod
    def clique(cls, n: int) -> "Topology":
        return cls(int(n))

    @classmethod
    def graph(cls, adjacency) -> "Topology":
        adj = np.asarray(adjacency, dtype=bool)
        return cls(adj.shape[0], adj)

    @classmethod
    def grid(cls, rows: int, cols: int) -> "Topology":
        return cls(rows * cols, grid_adjacency(rows, cols), (rows, cols))

    @property
    def kind(self) -> str:
        return "clique" if self.adjacency is None else "graph"

    @property
    def is_complete(self) -> bool:
        """True for a clique, including a complete graph given explicitly."""
        if self.adjacency is None:
            return True
        return bool(self.adjacency.sum() == self.n * (self.n - 1))

    def matrix(self) -> np.ndarray:
        if self.adjacency is None:
            return ~np.eye(self.n, dtype=bool)
        return np.array(self.adjacency)

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.matrix()[i])

    def __eq__(self, other):
        if not isinstance(other, Topology):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.matrix(), other.matrix())

    def __hash__(self):
        return hash((self.n, self.matrix().tobytes()))


@dataclass(frozen=True)
class NetworkConfig:
    """A set of node profiles together with the topology connecting them."""

    nodes: tuple[NodePowerProfile, ...]
    topology: Topology

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if len(self.nodes) != self.topology.n:
            raise ValueError(
                f"topology has {self.topology.n} nodes but {len(self.nodes)} profiles were given"
            )

    @classmethod
    def homogeneous(cls, n: int, rho: float, listen_cost: float, transmit_cost: float, topology=None):
        prof = NodePowerProfile(rho, listen_cost, transmit_cost)
        return cls((prof,) * n, topology if topology is not None else Topology.clique(n))

    @classmethod
    def from_arrays(cls, rho, listen_cost, transmit_cost, topology=None):
        rho, L, X = (np.broadcast_to(np.asarray(v, dtype=float), np.shape(rho)) for v in (rho, listen_cost, transmit_cost))
        nodes = tuple(NodePowerProfile(float(a), float(b), float(c)) for a, b, c in zip(rho, L, X))
        return cls(nodes, topology if topology is not None else Topology.clique(len(nodes)))

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def rho(self) -> np.ndarray:
        return np.array([p.rho for p in self.nodes])

    @property
    def listen_cost(self) -> np.ndarray:
        return np.array([p.listen_cost for p in self.nodes])

    @property
    def transmit_cost(self) -> np.ndarray:
        return np.array([p.transmit_cost for p in self.nodes])

    def scaled(self, k: float) -> "NetworkConfig":
        return NetworkConfig(tuple(p.scaled(k) for p in self.nodes), self.topology)

    def require_clique(self, what: str) -> None:
        if not self.topology.is_complete:
            raise TopologyError(f"{what} requires a clique topology; use nonclique_bounds for graphs")
