"""Synchronous message passing between agents, with traffic accounting."""

from __future__ import annotations

import numpy as np

from .graph import Graph


class NetworkError(ValueError):
    pass


class SyncNetwork:
    """Lock-step broadcast network over a fixed graph.

    One broadcast round delivers every agent's payload to each of its
    neighbors: ``2|E|`` messages and ``2|E| * d`` scalars.
    """

    def __init__(self, graph: Graph):
        self.graph = graph
        self.round_counter = 0
        self.message_counter = 0
        self.scalar_counter = 0
        self.history: list[list[np.ndarray]] | None = None

    def record(self, on: bool = True):
        """Keep a copy of every round's payloads in ``history``."""
        self.history = [] if on else None
        return self

    def broadcast_round(self, payloads) -> list[dict[int, np.ndarray]]:
        """Exchange one payload per agent; returns each agent's inbox ``{neighbor: payload}``."""
        g = self.graph
        if len(payloads) != g.m:
            raise NetworkError(f"expected {g.m} payloads, got {len(payloads)}")
        sent = [np.array(p, dtype=float, copy=True) for p in payloads]
        dims = {p.shape for p in sent}
        if len(dims) != 1:
            raise NetworkError(f"payloads have differing shapes {sorted(dims)}")
        d = sent[0].size
        inboxes = [{j: sent[j] for j in g.neighbors[i]} for i in range(g.m)]
        n_msgs = 2 * g.n_edges
        self.round_counter += 1
        self.message_counter += n_msgs
        self.scalar_counter += n_msgs * d
        if self.history is not None:
            self.history.append(sent)
        return inboxes

    def neighborhood_laplacian_combine(self, inbox, own, i: int) -> np.ndarray:
        return neighborhood_laplacian_combine(self.graph, inbox, own, i)

    def counters(self) -> dict:
        return {
            "rounds": self.round_counter,
            "messages": self.message_counter,
            "scalars": self.scalar_counter,
        }


def neighborhood_laplacian_combine(graph: Graph, inbox, own, i: int) -> np.ndarray:
    """``sum_{j in N(i) + {i}} L_ij z_j = |N(i)| z_i - sum_{j in N(i)} z_j``."""
    nbrs = graph.neighbors[i]
    missing = [j for j in nbrs if j not in inbox]
    if missing:
        raise NetworkError(f"agent {i} is missing payloads from {missing}")
    out = len(nbrs) * np.asarray(own, dtype=float)
    for j in nbrs:
        out = out - inbox[j]
    return out
