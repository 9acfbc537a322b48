"""Inner Frank-Wolfe solvers for the agents' proximal subproblems.

Each agent at outer step ``k`` approximately minimizes

    phi(z) = <w, z> + f(z) + (eta / 2) ||z - center||^2

over the feasible set, stopping once the Wolfe gap ``<grad phi(z), z - s>``
(``s`` the LMO answer at ``grad phi(z)``) is at most ``e``.

``cg`` is plain Frank-Wolfe; ``pcg`` is pairwise Frank-Wolfe with an explicit
active set. When the set is an atom set (l1 ball or simplex) and the
objective exposes a dense quadratic form, both dispatch to the compiled
kernels in :mod:`dcgs.kernels`; otherwise a generic numpy loop runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import count

import numpy as np

from . import kernels
from .kernels import line_search_quadratic
from .objectives import LocalObjective
from .sets import FeasibleSet, PolyhedralSet

DEFAULT_MAX_ITERS = 50_000
PURGE_TOL = 1e-12
RENORM_TOL = 1e-10


class ConfigurationError(ValueError):
    pass


class InnerBudgetExceeded(RuntimeError):
    """The inner loop hit ``max_iters`` before reaching the Wolfe-gap target.

    Attributes
    ----------
    best_iterate : ndarray
        The iterate with the smallest Wolfe gap seen.
    best_gap : float
    result : InnerResult
        Telemetry of the aborted run (``solution`` is the last iterate).
    """

    def __init__(self, msg, best_iterate, best_gap, result):
        super().__init__(msg)
        self.best_iterate = best_iterate
        self.best_gap = best_gap
        self.result = result


@dataclass
class Subproblem:
    f: LocalObjective
    center: np.ndarray
    w: np.ndarray
    eta: float
    e: float
    set: FeasibleSet

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.w = np.asarray(self.w, dtype=float)
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")

    def grad(self, z):
        return self.f.gradient(z) + self.w + self.eta * (z - self.center)

    def value(self, z):
        dz = z - self.center
        return float(self.w @ z) + self.f.value(z) + 0.5 * self.eta * float(dz @ dz)

    def curvature(self, d):
        """``d' (hess phi) d``."""
        return self.f.hess_quad(d) + self.eta * float(d @ d)

    def smoothness(self):
        return self.f.constants()[0] + self.eta


@dataclass
class ActiveSet:
    """Convex-combination bookkeeping for pairwise Frank-Wolfe.

    ``weights`` maps vertex ids of ``set`` to positive weights summing to 1;
    ``iterate`` caches the weighted sum of the vertices.
    """

    set: PolyhedralSet
    weights: dict
    iterate: np.ndarray

    @classmethod
    def from_point(cls, feasible_set: PolyhedralSet, x) -> "ActiveSet":
        x = np.asarray(x, dtype=float)
        return cls(feasible_set, feasible_set.decompose(x), x.copy())

    @classmethod
    def from_vertex(cls, feasible_set: PolyhedralSet, vid) -> "ActiveSet":
        return cls(feasible_set, {vid: 1.0}, feasible_set.vertex(vid).astype(float))

    def copy(self) -> "ActiveSet":
        return ActiveSet(self.set, dict(self.weights), self.iterate.copy())

    def combination(self) -> np.ndarray:
        out = np.zeros(self.set.dim)
        for vid, a in self.weights.items():
            out += a * self.set.vertex(vid)
        return out

    def check(self, atol: float = 1e-9) -> None:
        """Raise AssertionError if any invariant is violated."""
        assert all(a > 0 for a in self.weights.values()), "non-positive weight"
        total = sum(self.weights.values())
        assert abs(total - 1.0) <= 1e-10, f"weights sum to {total!r}"
        err = float(np.max(np.abs(self.combination() - self.iterate), initial=0.0))
        assert err <= atol * max(1.0, float(np.abs(self.iterate).max(initial=0.0))), (
            f"iterate off the combination by {err:g}"
        )

    def to_dense(self) -> np.ndarray:
        w = np.zeros(self.set.n_atoms)
        for vid, a in self.weights.items():
            w[self.set.atom_id(vid)] += a
        return w

    @classmethod
    def from_dense(cls, feasible_set, w, iterate) -> "ActiveSet":
        weights = {feasible_set.atom_vid(int(a)): float(w[a]) for a in np.flatnonzero(w > 0)}
        return cls(feasible_set, weights, np.array(iterate, dtype=float))


@dataclass
class InnerResult:
    solution: np.ndarray
    lo_calls: int
    iterations: int
    final_gap: float
    active_set: ActiveSet | None = None
    converged: bool = True
    trace: list = field(default_factory=list, repr=False)


def wolfe_gap(sub: Subproblem, z, s) -> float:
    """``<grad phi(z), z - s>``."""
    return float(sub.grad(z) @ (np.asarray(z) - np.asarray(s)))


def _use_kernel(sub: Subproblem, backend: str) -> bool:
    if backend == "generic":
        return False
    ok = getattr(sub.set, "atom_kind", None) is not None and sub.f.quadratic_form() is not None
    if backend == "kernel" and not ok:
        raise ConfigurationError("compiled kernels need an l1/simplex set and a quadratic objective")
    return ok


def _finish(sub, result, best_iterate, best_gap, raise_on_budget, what):
    if not result.converged and raise_on_budget:
        raise InnerBudgetExceeded(
            f"{what} stopped after {result.iterations} iterations with Wolfe gap "
            f"{result.final_gap:.3e} > {sub.e:.3e}",
            best_iterate,
            best_gap,
            result,
        )
    return result


def cg(sub: Subproblem, start=None, step_rule: str = "harmonic", max_iters: int = DEFAULT_MAX_ITERS,
       raise_on_budget: bool = True, backend: str = "auto", trace: bool = False) -> InnerResult:
    """Frank-Wolfe on ``phi`` from ``start`` (default: the proximal center).

    ``step_rule`` is ``"harmonic"`` (``2 / (t + 2)``) or ``"line_search"``
    (exact, since ``phi`` is quadratic). One LMO call is made per loop pass,
    including the pass that detects termination, so ``lo_calls ==
    iterations + 1``. With ``trace=True`` the generic loop records
    ``(t, z, gap)`` for every pass.
    """
    if step_rule not in ("harmonic", "line_search"):
        raise ValueError(f"unknown step rule {step_rule!r}")
    if not sub.e > 0:
        raise ValueError("tolerance e must be positive")
    z = np.array(sub.center if start is None else start, dtype=float)
    line_search = step_rule == "line_search"

    if not trace and _use_kernel(sub, backend):
        H, q, _ = sub.f.quadratic_form()
        c = np.ascontiguousarray(q + sub.w)
        Hz = H @ z
        z, Hz, t, gap, status, best_z, best_gap = kernels.fw_atoms(
            H, c, float(sub.eta), np.ascontiguousarray(sub.center), z, Hz,
            sub.set.atom_kind, float(sub.set.radius), float(sub.e), int(max_iters), line_search,
        )
        res = InnerResult(z, t + 1, t, float(gap), converged=status == kernels.STATUS_CONVERGED)
        return _finish(sub, res, best_z, best_gap, raise_on_budget, "cg")

    best_gap, best_z = np.inf, z.copy()
    tr = []
    for t in count():
        g = sub.grad(z)
        s, _ = sub.set.lmo(g)
        d = s - z
        gap = -float(g @ d)
        if trace:
            tr.append((t, z.copy(), gap))
        if gap < best_gap:
            best_gap, best_z = gap, z.copy()
        if gap <= sub.e or t >= max_iters:
            break
        if line_search:
            gamma = line_search_quadratic(0.5 * sub.curvature(d), -gap, 1.0)
        else:
            gamma = 2.0 / (t + 2.0)
        z = z + gamma * d
    res = InnerResult(z, t + 1, t, gap, converged=gap <= sub.e, trace=tr)
    return _finish(sub, res, best_z, best_gap, raise_on_budget, "cg")


def pcg(sub: Subproblem, start_active_set: ActiveSet | None = None, max_iters: int = DEFAULT_MAX_ITERS,
        raise_on_budget: bool = True, backend: str = "auto", callback=None) -> InnerResult:
    """Pairwise Frank-Wolfe on ``phi`` over a polyhedral set.

    Each pass makes one LMO call for the toward vertex ``s``; the away
    vertex ``v`` is the active vertex maximizing ``<grad phi, v>`` (no LMO).
    The step along ``s - v`` is the exact minimizer of ``phi`` on
    ``[0, alpha_v]``. ``start_active_set`` is updated copy-on-write: the
    returned result carries a fresh ``ActiveSet``.

    ``callback(t, active_set)`` is invoked after every step (generic path only).
    """
    if not getattr(sub.set, "polyhedral", False):
        raise ConfigurationError("pairwise Frank-Wolfe needs a polyhedral feasible set")
    if not sub.e > 0:
        raise ValueError("tolerance e must be positive")
    if start_active_set is None:
        start_active_set = ActiveSet.from_point(sub.set, sub.center)

    if callback is None and _use_kernel(sub, backend):
        H, q, _ = sub.f.quadratic_form()
        c = np.ascontiguousarray(q + sub.w)
        z = start_active_set.iterate.astype(float).copy()
        w = start_active_set.to_dense()
        Hz = H @ z
        z, Hz, w, t, gap, status, best_z, best_gap = kernels.pairwise_atoms(
            H, c, float(sub.eta), np.ascontiguousarray(sub.center), w, z, Hz,
            sub.set.atom_kind, float(sub.set.radius), float(sub.e), int(max_iters),
        )
        aset = ActiveSet.from_dense(sub.set, w, z)
        res = InnerResult(z, t + 1, t, float(gap), active_set=aset,
                          converged=status == kernels.STATUS_CONVERGED)
        return _finish(sub, res, best_z, best_gap, raise_on_budget, "pcg")

    fs = sub.set
    order = fs.atom_id if getattr(fs, "atom_kind", None) is not None else (lambda vid: vid)
    weights = dict(start_active_set.weights)
    verts = {vid: fs.vertex(vid).astype(float) for vid in weights}
    z = start_active_set.iterate.astype(float).copy()
    best_gap, best_z = np.inf, z.copy()
    stalled = False
    for t in count():
        g = sub.grad(z)
        s, s_id = fs.lmo(g)
        gap = float(g @ (z - s))
        if gap < best_gap:
            best_gap, best_z = gap, z.copy()
        if gap <= sub.e or t >= max_iters:
            break
        v_id = max(sorted(weights, key=order), key=lambda vid: float(g @ verts[vid]))
        if v_id == s_id:
            stalled = True
            break
        d = s - verts[v_id]
        gamma = line_search_quadratic(0.5 * sub.curvature(d), float(g @ d), weights[v_id])
        z = z + gamma * d
        if gamma > 0 and s_id not in weights:
            weights[s_id] = 0.0
            verts[s_id] = s
        if s_id in weights:
            weights[s_id] += gamma
        weights[v_id] -= gamma
        rebuild = False
        if weights[v_id] < PURGE_TOL:
            rebuild = weights[v_id] != 0.0
            del weights[v_id]
            del verts[v_id]
        total = sum(weights.values())
        if abs(total - 1.0) > RENORM_TOL:
            weights = {k: a / total for k, a in weights.items()}
            rebuild = True
        if rebuild:
            z = np.sum([a * verts[k] for k, a in weights.items()], axis=0)
        if callback is not None:
            callback(t, ActiveSet(fs, dict(weights), z.copy()))
    aset = ActiveSet(fs, weights, z)
    res = InnerResult(z, t + 1, t, gap, active_set=aset, converged=gap <= sub.e and not stalled)
    return _finish(sub, res, best_z, best_gap, raise_on_budget, "pcg")
