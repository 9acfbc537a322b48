"""Agent communication graphs and their Laplacians."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class TopologyError(ValueError):
    """Raised for graphs that cannot host a decentralized problem."""


POWER_MAX_ITERS = 10_000
POWER_RTOL = 1e-12


@dataclass(frozen=True)
class Graph:
    """Undirected, connected graph on agents ``0..m-1``.

    Edges are stored as sorted ``(i, j)`` pairs with ``i < j``.
    """

    m: int
    edges: tuple[tuple[int, int], ...]
    neighbors: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        adj: list[list[int]] = [[] for _ in range(self.m)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        object.__setattr__(self, "neighbors", tuple(tuple(sorted(a)) for a in adj))

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(n) for n in self.neighbors], dtype=np.int64)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def laplacian(self) -> "Laplacian":
        return laplacian(self)


def _is_connected(m: int, neighbors) -> bool:
    seen = {0}
    stack = [0]
    while stack:
        i = stack.pop()
        for j in neighbors[i]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return len(seen) == m


def build_from_edges(m: int, edges) -> Graph:
    """Build a graph from an edge list, dropping duplicate (or reversed) pairs.

    Raises
    ------
    TopologyError
        On self-loops, out-of-range indices or a disconnected result.
    """
    m = int(m)
    if m < 1:
        raise TopologyError(f"agent count must be positive, got {m}")
    canon = set()
    for e in edges:
        i, j = (int(v) for v in e)
        if not (0 <= i < m and 0 <= j < m):
            raise TopologyError(f"edge ({i}, {j}) out of range for m={m}")
        if i == j:
            raise TopologyError(f"self-loop at agent {i}")
        canon.add((min(i, j), max(i, j)))
    g = Graph(m, tuple(sorted(canon)))
    if not _is_connected(m, g.neighbors):
        raise TopologyError("graph is disconnected")
    return g


def build_cycle(m: int) -> Graph:
    """Ring where agent ``i`` talks to ``i-1`` and ``i+1`` (mod m)."""
    if m < 3:
        raise TopologyError(f"a cycle needs at least 3 agents, got {m}")
    return build_from_edges(m, [(i, (i + 1) % m) for i in range(m)])


def parse_topology(topology, m: int | None = None) -> Graph:
    """Parse ``"cycle(10)"``, ``"path(4)"``, ``"complete(5)"`` or an explicit edge list."""
    if isinstance(topology, Graph):
        return topology
    if isinstance(topology, str):
        s = topology.replace(" ", "")
        for name, builder in (("cycle", build_cycle), ("path", build_path), ("complete", build_complete)):
            if s.startswith(name + "(") and s.endswith(")"):
                return builder(int(s[len(name) + 1 : -1]))
        raise TopologyError(f"unrecognized topology {topology!r}")
    edges = [tuple(e) for e in topology]
    if m is None:
        m = 1 + max(max(e) for e in edges)
    return build_from_edges(m, edges)


def build_path(m: int) -> Graph:
    return build_from_edges(m, [(i, i + 1) for i in range(m - 1)])


def build_complete(m: int) -> Graph:
    return build_from_edges(m, [(i, j) for i in range(m) for j in range(i + 1, m)])


def power_iteration_max_eig(M: np.ndarray, max_iters: int = POWER_MAX_ITERS, rtol: float = POWER_RTOL) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration.

    Starts from the normalized all-ones vector. If that start is orthogonal to
    the dominant eigenspace (e.g. a Laplacian, where ones spans the nullspace),
    a fixed deterministic perturbation is used instead.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.allclose(M, M.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(M).max(initial=0.0))):
        raise ValueError("matrix is not symmetric")
    n = M.shape[0]
    if n == 0 or not np.any(M):
        return 0.0
    v = np.ones(n) / np.sqrt(n)
    w = M @ v
    if np.linalg.norm(w) <= 1e-14 * np.abs(M).max():
        # ones is in the nullspace; use a deterministic non-symmetric start
        v = np.arange(1, n + 1, dtype=float) ** 1.5
        v[::2] *= -1.0
        v /= np.linalg.norm(v)
        w = M @ v
    lam = float(v @ w)
    for _ in range(max_iters):
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        w = M @ v
        lam_new = float(v @ w)
        if abs(lam_new - lam) <= rtol * abs(lam_new):
            return lam_new
        lam = lam_new
    return lam


def spectral_norm(L: np.ndarray) -> float:
    """Spectral norm of a symmetric PSD matrix (its largest eigenvalue)."""
    return power_iteration_max_eig(L)


@dataclass(frozen=True)
class Laplacian:
    matrix: np.ndarray
    graph: Graph

    @cached_property
    def spectral_norm(self) -> float:
        return spectral_norm(self.matrix)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Apply ``L (x) I_d`` to agent-stacked rows ``x`` of shape ``(m, d)``."""
        return self.matrix @ x


def laplacian(g: Graph) -> Laplacian:
    L = np.zeros((g.m, g.m))
    for i, j in g.edges:
        L[i, j] = L[j, i] = -1.0
    L[np.diag_indices(g.m)] = g.degrees
    L.setflags(write=False)
    return Laplacian(L, g)
