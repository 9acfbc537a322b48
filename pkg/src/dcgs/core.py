"""Decentralized conditional gradient sliding (DCGS) and its reference solvers.

The consensus problem ``min sum_i f_i(x_i)`` s.t. ``x_i in X`` and
``(L (x) I) x = 0`` is attacked through its saddle form
``min_x max_y F(x) + <L x, y>``. Each outer iteration ``k`` does

1. extrapolate ``xt_i = alpha_k (x_i^{k-1} - x_i^{k-2}) + x_i^{k-1}``;
2. broadcast ``xt``; ``v_i = sum_j L_ij xt_j``; ``y_i += v_i / tau_k``;
3. broadcast ``y``; ``w_i = sum_j L_ij y_j``;
4. ``x_i^k`` = inner Frank-Wolfe on ``<w_i, x> + f_i(x) + eta_k/2 ||x - x_i^{k-1}||^2``
   to Wolfe gap ``e_k``.

The output is the ``theta``-weighted average of ``x^1..x^N``.
"""

from __future__ import annotations

import time
from concurrent.futures import Executor
from dataclasses import dataclass, field, replace

import numpy as np

from .graph import Graph, laplacian
from .inner import DEFAULT_MAX_ITERS, ActiveSet, InnerBudgetExceeded, Subproblem, cg, pcg
from .objectives import LocalObjective, total_value
from .report import ReportRow, RunReport
from .simnet import SyncNetwork, neighborhood_laplacian_combine

CONVEX = "convex"
STRONGLY_CONVEX = "strongly_convex"


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class Schedule:
    """Closed-form step parameters for a fixed horizon ``N``.

    ``e_override`` replaces the inner tolerance by a constant (used to push
    DCGS towards its exact-subproblem limit).
    """

    regime: str
    N: int
    m: int
    L_norm: float
    u: float
    R: float
    e_override: float | None = None

    def alpha(self, k):
        k = np.asarray(k, dtype=float)
        return np.ones_like(k) if self.regime == CONVEX else k / (k + 1.0)

    def theta(self, k):
        k = np.asarray(k, dtype=float)
        return np.ones_like(k) if self.regime == CONVEX else k + 1.0

    def eta(self, k):
        k = np.asarray(k, dtype=float)
        return np.full_like(k, 2.0 * self.L_norm) if self.regime == CONVEX else k * self.u / 2.0

    def tau(self, k):
        k = np.asarray(k, dtype=float)
        if self.regime == CONVEX:
            return np.full_like(k, self.L_norm)
        return 4.0 * self.L_norm ** 2 / ((k + 1.0) * self.u)

    def e(self, k):
        k = np.asarray(k, dtype=float)
        if self.e_override is not None:
            return np.full_like(k, self.e_override)
        if self.regime == CONVEX:
            return np.full_like(k, self.L_norm * self.R / (self.m * self.N))
        return self.R / (self.m * self.N * k)

    def at(self, k: int) -> dict:
        return {name: float(getattr(self, name)(k)) for name in ("alpha", "theta", "eta", "tau", "e")}

    def with_tolerance(self, e: float) -> "Schedule":
        return replace(self, e_override=float(e))

    def identity_violations(self, rtol: float = 1e-12) -> list[str]:
        """Check the parameter relations the convergence argument relies on.

        * ``alpha_k theta_k = theta_{k-1}``                      (2 <= k <= N)
        * ``theta_{k+1} eta_{k+1} <= theta_k (eta_k + u)``       (1 <= k < N)
        * ``alpha_k ||L||^2 <= tau_k eta_{k-1}``                 (2 <= k <= N)
        * ``theta_N ||L||^2 <= theta_1 tau_1 eta_N``
        """
        u = self.u if self.regime == STRONGLY_CONVEX else 0.0
        L2 = self.L_norm ** 2
        bad = []
        k = np.arange(2, self.N + 1, dtype=float)
        if k.size:
            lhs, rhs = self.alpha(k) * self.theta(k), self.theta(k - 1)
            if np.any(np.abs(lhs - rhs) > rtol * np.abs(rhs)):
                bad.append("alpha_k theta_k = theta_{k-1}")
            lhs, rhs = self.alpha(k) * L2, self.tau(k) * self.eta(k - 1)
            if np.any(lhs > rhs * (1 + rtol)):
                bad.append("alpha_k ||L||^2 <= tau_k eta_{k-1}")
        k = np.arange(1, self.N, dtype=float)
        if k.size:
            lhs, rhs = self.theta(k + 1) * self.eta(k + 1), self.theta(k) * (self.eta(k) + u)
            if np.any(lhs > rhs * (1 + rtol)):
                bad.append("theta_{k+1} eta_{k+1} <= theta_k (eta_k + u)")
        if self.theta(self.N) * L2 > self.theta(1) * self.tau(1) * self.eta(self.N) * (1 + rtol):
            bad.append("theta_N ||L||^2 <= theta_1 tau_1 eta_N")
        return bad


def make_schedule(regime: str, N: int, m: int, L_norm: float, u: float = 0.0, R: float = 1.0) -> Schedule:
    """Build the convex or strongly convex schedule and verify its identities."""
    if regime not in (CONVEX, STRONGLY_CONVEX):
        raise ScheduleError(f"unknown regime {regime!r}")
    if int(N) < 1:
        raise ScheduleError("N must be at least 1")
    if not L_norm > 0:
        raise ScheduleError("||L|| must be positive (a single agent has nothing to agree on)")
    if regime == STRONGLY_CONVEX and not u > 0:
        raise ScheduleError("the strongly convex schedule needs u > 0")
    if not R > 0:
        raise ScheduleError("tolerance scale R must be positive")
    s = Schedule(regime, int(N), int(m), float(L_norm), float(u), float(R))
    bad = s.identity_violations()
    if bad:
        raise ScheduleError(f"schedule violates: {', '.join(bad)}")
    return s


def default_R(regime: str, m: int, diameter: float, u: float = 0.0) -> float:
    """Stand-in for the unknown ``max(||x0 - x*||^2, ||y0||^2)`` with ``y0 = 0``.

    ``||x0 - x*||^2 <= m D^2`` always; the strongly convex scale carries ``u``.
    """
    R = m * diameter ** 2
    return u * R if regime == STRONGLY_CONVEX else R


def oracle_R(regime: str, X0, x_star, u: float = 0.0, L_norm: float = 0.0, Y0=None) -> float:
    """The schedule constant from a known optimum ``x*``.

    Convex: ``max(||x0 - x*||^2, ||y0||^2)``; strongly convex:
    ``max(u ||x0 - x*||^2, ||L||^2 ||y0||^2 / u)``, with ``x*`` repeated over
    the agents.
    """
    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    dx = float(np.sum((X0 - np.asarray(x_star, dtype=float)[None, :]) ** 2))
    dy = 0.0 if Y0 is None else float(np.sum(np.asarray(Y0, dtype=float) ** 2))
    if regime == STRONGLY_CONVEX:
        if not u > 0:
            raise ScheduleError("strongly convex regime needs u > 0")
        return max(u * dx, L_norm ** 2 * dy / u)
    return max(dx, dy)


@dataclass
class AgentState:
    x_prev: np.ndarray
    x_prev2: np.ndarray
    y: np.ndarray
    avg_accum: np.ndarray
    theta_sum: float = 0.0
    active_set: ActiveSet | None = None
    lo_calls: int = 0
    inner_iters: list = field(default_factory=list)


def _stack_start(x0, feasible_set, m):
    d = feasible_set.dim
    if x0 is None:
        x0 = feasible_set.default_point()
    x0 = np.asarray(x0, dtype=float)
    X = np.tile(x0, (m, 1)) if x0.ndim == 1 else x0.copy()
    if X.shape != (m, d):
        raise ValueError(f"x0 must have shape ({d},) or ({m}, {d}), got {x0.shape}")
    for i in range(m):
        if not feasible_set.contains(X[i]):
            raise ValueError(f"x0 for agent {i} is infeasible")
    return X


def _stack_dual(y0, m, d):
    if y0 is None:
        return np.zeros((m, d))
    Y = np.asarray(y0, dtype=float)
    Y = np.tile(Y, (m, 1)) if Y.ndim == 1 else Y.copy()
    if Y.shape != (m, d):
        raise ValueError(f"y0 must have shape ({d},) or ({m}, {d})")
    return Y


def consensus_residual(lap, X) -> float:
    """``||(L (x) I) x||`` for agent-stacked rows ``X``."""
    L = lap.matrix if hasattr(lap, "matrix") else np.asarray(lap)
    return float(np.linalg.norm(L @ np.asarray(X, dtype=float)))


def gap_Q(objectives, lap, z, z_bar) -> float:
    """Primal-dual gap ``F(x) + <Lx, y_bar> - F(x_bar) - <L x_bar, y>``.

    ``z`` and ``z_bar`` are ``(x, y)`` pairs of agent-stacked ``(m, d)`` arrays.
    """
    L = lap.matrix if hasattr(lap, "matrix") else np.asarray(lap)
    x, y = (np.asarray(a, dtype=float) for a in z)
    xb, yb = (np.asarray(a, dtype=float) for a in z_bar)
    return (total_value(objectives, x) + float(np.sum((L @ x) * yb))
            - total_value(objectives, xb) - float(np.sum((L @ xb) * y)))


def _solve_local(kind, f, center, w, eta, e, feasible_set, active_set, step_rule, max_iters, backend):
    sub = Subproblem(f, center, w, eta, e, feasible_set)
    if kind == "pcg":
        return pcg(sub, active_set, max_iters=max_iters, backend=backend)
    return cg(sub, center, step_rule=step_rule, max_iters=max_iters, backend=backend)


def _with_context(err: InnerBudgetExceeded, k: int, i: int) -> InnerBudgetExceeded:
    new = InnerBudgetExceeded(f"outer iteration {k}, agent {i}: {err}", err.best_iterate, err.best_gap, err.result)
    new.k, new.agent = k, i
    return new


def dcgs_run(objectives, feasible_set, graph: Graph, schedule: Schedule, inner: str = "cg",
             x0=None, y0=None, step_rule: str = "harmonic", max_inner_iters: int = DEFAULT_MAX_ITERS,
             f_ref: float | None = None, keep_history: bool = False, backend: str = "auto",
             executor: Executor | None = None, network: SyncNetwork | None = None) -> RunReport:
    """Run ``schedule.N`` outer DCGS iterations on the simulated network.

    Parameters
    ----------
    objectives : sequence of LocalObjective
        One per agent.
    inner : {"cg", "pcg"}
        Frank-Wolfe or pairwise Frank-Wolfe for the local subproblems. ``pcg``
        keeps each agent's active set across outer iterations.
    x0, y0 : array_like, optional
        Shared ``(d,)`` or per-agent ``(m, d)`` starts; defaults are the
        set's default point and zero.
    f_ref : float, optional
        Reference optimum; rows then carry ``F(mean_i x_bar_i^k) - f_ref`` as gap,
        the loss at the network average (a consensus point) minus the reference.
    executor : concurrent.futures.Executor, optional
        Solve the agents' subproblems concurrently. Results do not depend on it.
    """
    if inner not in ("cg", "pcg"):
        raise ValueError(f"unknown inner solver {inner!r}")
    m, d = graph.m, feasible_set.dim
    if len(objectives) != m:
        raise ValueError(f"{len(objectives)} objectives for {m} agents")
    lap = laplacian(graph)
    net = network if network is not None else SyncNetwork(graph)
    X0 = _stack_start(x0, feasible_set, m)
    Y0 = _stack_dual(y0, m, d)
    agents = [
        AgentState(X0[i].copy(), X0[i].copy(), Y0[i].copy(), np.zeros(d),
                   active_set=ActiveSet.from_point(feasible_set, X0[i]) if inner == "pcg" else None)
        for i in range(m)
    ]
    report = RunReport(f"dcgs_{inner}", f_ref=f_ref)
    if keep_history:
        report.x_history, report.y_history, report.theta = [X0.copy()], [Y0.copy()], []
    t_start = time.perf_counter()

    for k in range(1, schedule.N + 1):
        p = schedule.at(k)
        xt = [p["alpha"] * (a.x_prev - a.x_prev2) + a.x_prev for a in agents]
        inbox = net.broadcast_round(xt)
        for i, a in enumerate(agents):
            v = neighborhood_laplacian_combine(graph, inbox[i], xt[i], i)
            a.y = a.y + v / p["tau"]
        inbox = net.broadcast_round([a.y for a in agents])
        ws = [neighborhood_laplacian_combine(graph, inbox[i], a.y, i) for i, a in enumerate(agents)]

        args = [(inner, objectives[i], a.x_prev, ws[i], p["eta"], p["e"], feasible_set, a.active_set,
                 step_rule, max_inner_iters, backend) for i, a in enumerate(agents)]
        if executor is None:
            results = []
            for i, arg in enumerate(args):
                try:
                    results.append(_solve_local(*arg))
                except InnerBudgetExceeded as err:
                    raise _with_context(err, k, i) from err
        else:
            futures = [executor.submit(_solve_local, *arg) for arg in args]
            results = []
            for i, fut in enumerate(futures):
                try:
                    results.append(fut.result())
                except InnerBudgetExceeded as err:
                    raise _with_context(err, k, i) from err

        for a, res in zip(agents, results):
            a.x_prev2, a.x_prev = a.x_prev, res.solution
            a.active_set = res.active_set
            a.lo_calls += res.lo_calls
            a.inner_iters.append(res.iterations)
            a.avg_accum = a.avg_accum + p["theta"] * res.solution
            a.theta_sum += p["theta"]

        x_bar = np.array([a.avg_accum / a.theta_sum for a in agents])
        if keep_history:
            report.x_history.append(np.array([a.x_prev for a in agents]))
            report.y_history.append(np.array([a.y for a in agents]))
            report.theta.append(p["theta"])
        report.rows.append(_row(k, objectives, lap, x_bar, f_ref, net, [a.lo_calls for a in agents], t_start))

    report.x_bar = x_bar
    report.lo_per_agent = np.array([a.lo_calls for a in agents])
    return report


def _row(k, objectives, lap, X, f_ref, net, lo_calls, t_start) -> ReportRow:
    loss = total_value(objectives, X)
    # the stacked loss can dip below F* while agents disagree; the gap is taken
    # at the network average, a consensus point, so it is >= 0 up to F_ref accuracy
    x_avg = np.broadcast_to(X.mean(axis=0), X.shape)
    return ReportRow(
        k=k,
        loss=loss,
        gap=total_value(objectives, x_avg) - f_ref if f_ref is not None else float("nan"),
        consensus=consensus_residual(lap, X),
        comm_rounds=net.round_counter,
        messages=net.message_counter,
        scalars=net.scalar_counter,
        lo_total=int(sum(lo_calls)),
        lo_max_agent=int(max(lo_calls)),
        seconds=time.perf_counter() - t_start,
    )


def primal_dual_reference_run(objectives, feasible_set, graph: Graph, schedule: Schedule, x0=None, y0=None,
                              exact_tol: float = 1e-10, max_inner_iters: int = 1_000_000,
                              f_ref: float | None = None) -> RunReport:
    """Centralized primal-dual iteration on the lifted saddle problem.

    Works on the stacked vectors with the dense ``L (x) I_d`` operator and no
    message passing. The primal step is solved to Wolfe gap ``exact_tol``
    (pairwise Frank-Wolfe on polyhedral sets, line-search Frank-Wolfe
    otherwise), standing in for the exact argmin. Trajectories are always
    kept. Row counters report the traffic the same iteration would cost on
    the network (two rounds per iteration).
    """
    m, d = graph.m, feasible_set.dim
    lap = laplacian(graph)
    Lk = np.kron(lap.matrix, np.eye(d))
    X0 = _stack_start(x0, feasible_set, m)
    x_prev = X0.ravel().copy()
    x_prev2 = x_prev.copy()
    y = _stack_dual(y0, m, d).ravel()
    accum, theta_sum = np.zeros(m * d), 0.0
    lo_calls = np.zeros(m, dtype=int)
    report = RunReport("reference", f_ref=f_ref, x_history=[X0.copy()], y_history=[y.reshape(m, d).copy()],
                       theta=[])
    net = SyncNetwork(graph)  # counters only
    t_start = time.perf_counter()
    for k in range(1, schedule.N + 1):
        p = schedule.at(k)
        xt = p["alpha"] * (x_prev - x_prev2) + x_prev
        y = y + (Lk @ xt) / p["tau"]
        Ly = (Lk @ y).reshape(m, d)
        x_new = np.empty(m * d)
        for i in range(m):
            blk = slice(i * d, (i + 1) * d)
            sub = Subproblem(objectives[i], x_prev[blk], Ly[i], p["eta"], exact_tol, feasible_set)
            if feasible_set.polyhedral:
                res = pcg(sub, ActiveSet.from_point(feasible_set, x_prev[blk]), max_iters=max_inner_iters,
                          backend="generic")
            else:
                res = cg(sub, x_prev[blk], step_rule="line_search", max_iters=max_inner_iters, backend="generic")
            x_new[blk] = res.solution
            lo_calls[i] += res.lo_calls
        x_prev2, x_prev = x_prev, x_new
        accum += p["theta"] * x_new
        theta_sum += p["theta"]
        net.round_counter += 2
        net.message_counter += 4 * graph.n_edges
        net.scalar_counter += 4 * graph.n_edges * d
        X = (accum / theta_sum).reshape(m, d)
        report.x_history.append(x_new.reshape(m, d).copy())
        report.y_history.append(y.reshape(m, d).copy())
        report.theta.append(p["theta"])
        report.rows.append(_row(k, objectives, lap, X, f_ref, net, lo_calls, t_start))
    report.x_bar = X
    report.lo_per_agent = lo_calls
    return report


class SumObjective(LocalObjective):
    """``sum_i f_i`` as a single objective on the shared variable."""

    def __init__(self, objectives):
        self.parts = list(objectives)
        self.dim = self.parts[0].dim
        self._qf = None

    def value(self, x):
        return float(sum(f.value(x) for f in self.parts))

    def gradient(self, x):
        return np.sum([f.gradient(x) for f in self.parts], axis=0)

    def hess_quad(self, d):
        return float(sum(f.hess_quad(d) for f in self.parts))

    def constants(self):
        cs = [f.constants() for f in self.parts]
        return sum(c[0] for c in cs), sum(c[1] for c in cs)

    def quadratic_form(self):
        if self._qf is None:
            qfs = [f.quadratic_form() for f in self.parts]
            if any(q is None for q in qfs):
                return None
            self._qf = (np.ascontiguousarray(sum(q[0] for q in qfs)), sum(q[1] for q in qfs),
                        sum(q[2] for q in qfs))
        return self._qf


@dataclass
class ReferenceOptimum:
    value: float
    x: np.ndarray
    gap: float
    lo_calls: int
    method: str

    def provenance(self) -> dict:
        return {"value": self.value, "wolfe_gap": self.gap, "lo_calls": self.lo_calls, "method": self.method}


def reference_optimum(objectives, feasible_set, tol: float = 1e-10, budget: int = 1_000_000,
                      x0=None) -> ReferenceOptimum:
    """Centralized long-run Frank-Wolfe solve of ``min_{x in X} sum_i f_i(x)``.

    Polyhedral sets use pairwise steps (linearly convergent). Sets with a
    cheap Euclidean projection (the nuclear ball) use accelerated projected
    gradient, since Frank-Wolfe is sublinear there; its answer is still
    certified by the Wolfe gap. Anything else falls back to Frank-Wolfe with
    exact line search. Stops at Wolfe gap ``tol`` or after ``budget``
    iterations, returning the best iterate either way.
    """
    f = SumObjective(objectives)
    x0 = feasible_set.default_point() if x0 is None else np.asarray(x0, dtype=float)
    sub = Subproblem(f, x0, np.zeros(f.dim), 0.0, tol, feasible_set)
    if not feasible_set.polyhedral and hasattr(feasible_set, "project"):
        x, gap, lo = _projected_reference(f, feasible_set, x0, tol, budget)
        return ReferenceOptimum(f.value(x), x, gap, lo, "apg_projected")
    if feasible_set.polyhedral:
        res = pcg(sub, ActiveSet.from_point(feasible_set, x0), max_iters=budget - 1, raise_on_budget=False)
        method = "pairwise_fw"
    else:
        res = cg(sub, x0, step_rule="line_search", max_iters=budget - 1, raise_on_budget=False)
        method = "fw_line_search"
    x = res.solution
    return ReferenceOptimum(f.value(x), x, res.final_gap, res.lo_calls, method)


def _projected_reference(f, feasible_set, x0, tol, budget, check_every: int = 10):
    """FISTA with adaptive restart; returns ``(best x, its Wolfe gap, LMO calls)``."""
    step = 1.0 / max(f.constants()[0], 1e-300)
    x = feasible_set.project(x0)
    z, t = x.copy(), 1.0
    best_x, best_gap, lo = x, np.inf, 0
    for it in range(budget):
        g = f.gradient(z)
        x_new = feasible_set.project(z - step * g)
        if float(g @ (x_new - x)) > 0:  # restart when momentum points uphill
            t = 1.0
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x, t = x_new, t_new
        if it % check_every == 0 or it == budget - 1:
            gx = f.gradient(x)
            lo += 1
            if hasattr(feasible_set, "support"):
                gap = float(gx @ x) + feasible_set.support(gx)
            else:
                s_vtx, _ = feasible_set.lmo(gx)
                gap = float(gx @ (x - s_vtx))
            if gap < best_gap:
                best_x, best_gap = x.copy(), gap
            if gap <= tol:
                break
    return best_x, best_gap, lo
