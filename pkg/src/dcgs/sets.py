"""Feasible sets and their linear minimization oracles (LMOs).

Every set works on flat vectors. Matrix variables (the nuclear ball) use
row-major flattening of a ``rows x cols`` matrix.

Polyhedral sets also name their vertices with hashable ids so that active-set
methods can keep weights per vertex:

* ``L1Ball``: ``(j, +1)`` or ``(j, -1)`` for ``+-rho * e_j``
* ``Simplex``: ``j`` for ``scale * e_j``
* ``Box``: a tuple of 0/1 flags, 1 meaning the upper bound is active
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

NUCLEAR_MAX_ITERS = 5_000
NUCLEAR_RTOL = 1e-9


def _check_grad(g, dim):
    g = np.asarray(g, dtype=float).ravel()
    if g.shape[0] != dim:
        raise ValueError(f"gradient has dimension {g.shape[0]}, set has {dim}")
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient contains non-finite entries")
    return g


class FeasibleSet:
    """Base class. Subclasses define ``dim``, ``lmo``, ``diameter`` and ``contains``."""

    polyhedral = False
    dim: int

    def lmo(self, g):
        """Return ``(point, vertex_id)`` minimizing ``<g, s>``; ``vertex_id`` is None if not polyhedral."""
        raise NotImplementedError

    def diameter(self) -> float:
        raise NotImplementedError

    def contains(self, x, tol: float = 1e-9) -> bool:
        raise NotImplementedError

    def default_point(self) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng, n_atoms: int = 4) -> np.ndarray:
        """A random feasible point, as a convex combination of a few extreme points."""
        lam = rng.dirichlet(np.ones(n_atoms))
        pts = [self.lmo(rng.standard_normal(self.dim))[0] for _ in range(n_atoms)]
        return np.sum([w * p for w, p in zip(lam, pts)], axis=0)


class PolyhedralSet(FeasibleSet):
    polyhedral = True

    def vertex(self, vid) -> np.ndarray:
        raise NotImplementedError

    def vertices(self):
        """Enumerate ``(vid, point)`` pairs. Only sensible for small dimension."""
        raise NotImplementedError

    def decompose(self, x) -> dict:
        """Write a feasible ``x`` as a convex combination ``{vid: weight}`` of vertices."""
        raise NotImplementedError

    # Atom-set protocol used by the compiled kernels: vertices that are
    # scaled signed basis vectors, indexed by a dense integer atom id.
    atom_kind: int | None = None

    def atom_id(self, vid) -> int:
        raise NotImplementedError

    def atom_vid(self, a: int):
        raise NotImplementedError

    @property
    def n_atoms(self) -> int:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class L1Ball(PolyhedralSet):
    """``{x : ||x||_1 <= rho}``."""

    rho: float
    dim: int
    atom_kind = kernels.ATOM_L1

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if self.dim < 1:
            raise ValueError("dimension must be positive")

    def lmo(self, g):
        g = _check_grad(g, self.dim)
        j = int(np.argmax(np.abs(g)))  # argmax returns lowest index on ties
        sign = -1 if g[j] > 0 else 1
        s = np.zeros(self.dim)
        s[j] = sign * self.rho
        return s, (j, sign)

    def vertex(self, vid):
        j, sign = vid
        s = np.zeros(self.dim)
        s[j] = sign * self.rho
        return s

    def vertices(self):
        for j in range(self.dim):
            for sign in (1, -1):
                yield (j, sign), self.vertex((j, sign))

    def diameter(self):
        return 2.0 * self.rho

    def contains(self, x, tol=1e-9):
        return float(np.abs(x).sum()) <= self.rho * (1.0 + tol) + tol

    def default_point(self):
        return np.zeros(self.dim)

    def decompose(self, x):
        x = np.asarray(x, dtype=float)
        w = {}
        for j in np.flatnonzero(x):
            w[(int(j), 1 if x[j] > 0 else -1)] = abs(float(x[j])) / self.rho
        slack = 1.0 - sum(w.values())
        if slack > 1e-12:
            # the origin is the midpoint of +-rho e_0
            for vid in ((0, 1), (0, -1)):
                w[vid] = w.get(vid, 0.0) + slack / 2
        # opposite atoms on e_0 may now carry the same coordinate twice; that is fine
        return {k: v for k, v in w.items() if v > 0}

    def atom_id(self, vid):
        j, sign = vid
        return 2 * j + (0 if sign > 0 else 1)

    def atom_vid(self, a):
        return (a // 2, 1 if a % 2 == 0 else -1)

    @property
    def n_atoms(self):
        return 2 * self.dim

    @property
    def radius(self):
        return self.rho


@dataclass(frozen=True, eq=False)
class Simplex(PolyhedralSet):
    """``{x >= 0 : sum(x) = scale}``."""

    scale: float
    dim: int
    atom_kind = kernels.ATOM_SIMPLEX

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if self.dim < 2:
            raise ValueError("simplex needs dimension >= 2")

    def lmo(self, g):
        g = _check_grad(g, self.dim)
        j = int(np.argmin(g))
        s = np.zeros(self.dim)
        s[j] = self.scale
        return s, j

    def vertex(self, vid):
        s = np.zeros(self.dim)
        s[vid] = self.scale
        return s

    def vertices(self):
        for j in range(self.dim):
            yield j, self.vertex(j)

    def diameter(self):
        return float(np.sqrt(2.0) * self.scale)

    def contains(self, x, tol=1e-9):
        x = np.asarray(x)
        return bool(np.all(x >= -tol) and abs(x.sum() - self.scale) <= tol * max(1.0, self.scale))

    def default_point(self):
        return np.full(self.dim, self.scale / self.dim)

    def decompose(self, x):
        x = np.asarray(x, dtype=float)
        return {int(j): float(x[j]) / self.scale for j in np.flatnonzero(x > 0)}

    def atom_id(self, vid):
        return int(vid)

    def atom_vid(self, a):
        return int(a)

    @property
    def n_atoms(self):
        return self.dim

    @property
    def radius(self):
        return self.scale


class Box(PolyhedralSet):
    """``{x : lo <= x <= hi}`` coordinatewise."""

    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, dtype=float).ravel()
        self.hi = np.asarray(hi, dtype=float).ravel()
        if self.lo.shape != self.hi.shape:
            raise ValueError("lo and hi must have the same shape")
        if np.any(self.lo > self.hi):
            raise ValueError("box requires lo <= hi coordinatewise")
        self.dim = self.lo.shape[0]
        if self.diameter() <= 0:
            raise ValueError("box is a single point")

    def lmo(self, g):
        g = _check_grad(g, self.dim)
        upper = (g < 0) & (self.hi > self.lo)
        vid = tuple(int(b) for b in upper)
        return np.where(upper, self.hi, self.lo), vid

    def vertex(self, vid):
        return np.where(np.asarray(vid, dtype=bool), self.hi, self.lo)

    def vertices(self):
        import itertools

        for bits in itertools.product((0, 1), repeat=self.dim):
            yield bits, self.vertex(bits)

    def diameter(self):
        return float(np.linalg.norm(self.hi - self.lo))

    def contains(self, x, tol=1e-9):
        x = np.asarray(x)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def default_point(self):
        return (self.lo + self.hi) / 2

    def decompose(self, x):
        # Staircase decomposition: sort coordinates by their relative position t_j
        # in [lo_j, hi_j] and peel off at most dim+1 vertices.
        x = np.asarray(x, dtype=float)
        width = self.hi - self.lo
        t = np.where(width > 0, (x - self.lo) / np.where(width > 0, width, 1.0), 0.0)
        t = np.clip(t, 0.0, 1.0)
        order = np.argsort(-t, kind="stable")
        w = {}
        bits = np.zeros(self.dim, dtype=int)
        prev = 1.0
        for j in order:
            if width[j] <= 0:
                continue
            tj = t[j]
            if prev - tj > 0:
                w[tuple(int(b) for b in bits)] = w.get(tuple(int(b) for b in bits), 0.0) + prev - tj
            bits[j] = 1
            prev = tj
        bits[width <= 0] = 0  # degenerate coordinates have a single vertex id
        if prev > 0:
            key = tuple(int(b) for b in bits)
            w[key] = w.get(key, 0.0) + prev
        return {k: v for k, v in w.items() if v > 0}


@dataclass(frozen=True, eq=False)
class NuclearBall(FeasibleSet):
    """``{X : ||X||_* <= rho}`` for ``rows x cols`` matrices, flattened row-major."""

    rho: float
    rows: int
    cols: int

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")

    @property
    def dim(self):
        return self.rows * self.cols

    def lmo(self, g):
        g = _check_grad(g, self.dim)
        return lmo_nuclear(self, g.reshape(self.rows, self.cols)).ravel(), None

    def diameter(self):
        return 2.0 * self.rho

    def contains(self, x, tol=1e-9):
        X = np.asarray(x, dtype=float).reshape(self.rows, self.cols)
        return float(np.linalg.svd(X, compute_uv=False).sum()) <= self.rho * (1.0 + tol) + tol

    def default_point(self):
        return np.zeros(self.dim)

    def support(self, g) -> float:
        """``max_{S in ball} <-g, S> = rho * sigma_max(g)``, exact via a full SVD."""
        G = np.asarray(g, dtype=float).reshape(self.rows, self.cols)
        return self.rho * float(np.linalg.svd(G, compute_uv=False)[0])

    def project(self, x):
        """Euclidean projection: singular values projected onto the l1 ball."""
        X = np.asarray(x, dtype=float).reshape(self.rows, self.cols)
        U, s, Vt = np.linalg.svd(X, full_matrices=False)
        return ((U * project_l1(s, self.rho)) @ Vt).ravel()

    def sample(self, rng, n_atoms=4):
        lam = rng.dirichlet(np.ones(n_atoms))
        out = np.zeros((self.rows, self.cols))
        for w in lam:
            u = rng.standard_normal(self.rows)
            v = rng.standard_normal(self.cols)
            out += w * self.rho * np.outer(u / np.linalg.norm(u), v / np.linalg.norm(v))
        return out.ravel()


def project_l1(v, rho: float) -> np.ndarray:
    """Euclidean projection of ``v`` onto ``{x : ||x||_1 <= rho}`` (sort-based)."""
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    if a.sum() <= rho:
        return v.copy()
    mu = np.sort(a)[::-1]
    css = np.cumsum(mu) - rho
    k = np.flatnonzero(mu * np.arange(1, a.size + 1) > css)[-1]
    return np.sign(v) * np.maximum(a - css[k] / (k + 1.0), 0.0)


def top_singular_pair(G: np.ndarray, max_iters: int = NUCLEAR_MAX_ITERS, rtol: float = NUCLEAR_RTOL):
    """Top singular triple ``(sigma, u, v)`` of ``G`` by power iteration on ``G^T G``.

    Iteration starts from ``u0`` = the first column of ``G`` (all-ones if that
    column is zero), i.e. ``v0 = G^T u0``. The sign is fixed so that the first
    nonzero entry of ``u`` is positive.
    """
    G = np.ascontiguousarray(G, dtype=float)
    sigma, u, v = kernels.top_singular_pair(G, max_iters, rtol)
    nz = np.flatnonzero(np.abs(u) > 0)
    if nz.size and u[nz[0]] < 0:
        u, v = -u, -v
    return sigma, u, v


def lmo_nuclear(ball: NuclearBall, G) -> np.ndarray:
    """Rank-one minimizer ``-rho u v^T`` of ``<G, S>`` over the nuclear ball."""
    G = np.asarray(G, dtype=float)
    if G.shape != (ball.rows, ball.cols):
        raise ValueError(f"gradient shape {G.shape} does not match {(ball.rows, ball.cols)}")
    if not np.all(np.isfinite(G)):
        raise ValueError("gradient contains non-finite entries")
    if not np.any(G):
        return np.zeros_like(G)
    _, u, v = top_singular_pair(G)
    return -ball.rho * np.outer(u, v)


def lmo(feasible_set: FeasibleSet, g):
    return feasible_set.lmo(g)


def diameter(feasible_set: FeasibleSet) -> float:
    return feasible_set.diameter()


def make_set(kind: str, dim: int, rho: float = 1.0, rows: int | None = None, cols: int | None = None,
             lo=None, hi=None) -> FeasibleSet:
    """Factory behind the ``set`` key of file problems (``set = "l1"``, ``rho = 1e3``)."""
    kind = kind.lower()
    if kind in ("l1", "l1_ball"):
        return L1Ball(float(rho), int(dim))
    if kind == "simplex":
        return Simplex(float(rho), int(dim))
    if kind in ("nuclear", "nuclear_ball"):
        if rows is None or cols is None:
            raise ValueError("nuclear ball needs rows and cols")
        return NuclearBall(float(rho), int(rows), int(cols))
    if kind == "box":
        return Box(lo, hi)
    raise ValueError(f"unknown constraint kind {kind!r}")
