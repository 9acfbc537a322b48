"""Decentralized Frank-Wolfe baseline with gradient tracking.

A reconstruction of the standard consensus-based DFW scheme, used only as a
comparison point. Per iteration ``t`` (0-based), every agent

1. gossips its iterate: ``xa_i = sum_j W_ij x_j``;
2. gossips its tracker and corrects it with its new local gradient:
   ``g_i = sum_j W_ij g_j + grad f_i(xa_i) - grad f_i(xa_i_prev)``;
3. calls the LMO at ``g_i`` and steps ``x_i = (1 - gamma) xa_i + gamma s_i``
   with ``gamma = 2 / (t + 2)`` (or exact line search on ``f_i``).

Both gossip rounds go through the same simulated network as DCGS, so the
traffic counters are directly comparable.
"""

from __future__ import annotations

import time

import numpy as np

from .core import _row, _stack_start
from .graph import Graph, laplacian
from .inner import line_search_quadratic
from .report import RunReport
from .simnet import SyncNetwork


def metropolis_weights(graph: Graph) -> np.ndarray:
    """Symmetric doubly stochastic mixing matrix with Metropolis-Hastings weights."""
    deg = graph.degrees
    W = np.zeros((graph.m, graph.m))
    for i, j in graph.edges:
        W[i, j] = W[j, i] = 1.0 / (1.0 + max(deg[i], deg[j]))
    W[np.diag_indices(graph.m)] = 1.0 - W.sum(axis=1)
    return W


def _mix(W, i, own, inbox):
    out = W[i, i] * own
    for j, z in inbox.items():
        out = out + W[i, j] * z
    return out


def dfw_run(objectives, feasible_set, graph: Graph, T: int, x0=None, step_rule: str = "harmonic",
            f_ref: float | None = None, keep_history: bool = False) -> RunReport:
    """Run ``T`` iterations of gradient-tracking DFW; one report row per iteration.

    Rows report the loss at the agents' current iterates (no averaging).
    With ``keep_history`` the report also stores iterates and the trackers
    (in ``y_history``).
    """
    if step_rule not in ("harmonic", "line_search"):
        raise ValueError(f"unknown step rule {step_rule!r}")
    m = graph.m
    if len(objectives) != m:
        raise ValueError(f"{len(objectives)} objectives for {m} agents")
    W = metropolis_weights(graph)
    lap = laplacian(graph)
    net = SyncNetwork(graph)
    X = _stack_start(x0, feasible_set, m)
    grads_prev = np.array([f.gradient(x) for f, x in zip(objectives, X)])
    G = grads_prev.copy()
    lo_calls = np.zeros(m, dtype=int)
    report = RunReport("dfw", f_ref=f_ref)
    if keep_history:
        report.x_history, report.y_history = [X.copy()], [G.copy()]
    t_start = time.perf_counter()

    for t in range(T):
        inbox = net.broadcast_round(list(X))
        Xa = np.array([_mix(W, i, X[i], inbox[i]) for i in range(m)])
        grads = np.array([f.gradient(x) for f, x in zip(objectives, Xa)])
        inbox = net.broadcast_round(list(G))
        G = np.array([_mix(W, i, G[i], inbox[i]) for i in range(m)]) + grads - grads_prev
        grads_prev = grads
        X_new = np.empty_like(X)
        for i, f in enumerate(objectives):
            s, _ = feasible_set.lmo(G[i])
            lo_calls[i] += 1
            d = s - Xa[i]
            if step_rule == "line_search":
                gamma = line_search_quadratic(0.5 * f.hess_quad(d), float(grads[i] @ d), 1.0)
            else:
                gamma = 2.0 / (t + 2.0)
            X_new[i] = Xa[i] + gamma * d
        X = X_new
        if keep_history:
            report.x_history.append(X.copy())
            report.y_history.append(G.copy())
        report.rows.append(_row(t + 1, objectives, lap, X, f_ref, net, lo_calls, t_start))

    report.x_bar = X
    report.lo_per_agent = lo_calls
    return report
