"""Local smooth objectives ``f_i`` held by the agents.

All objectives here are quadratics, so each exposes ``hess_quad(d)`` (the
curvature ``d' H d``) for exact line searches, and, where it is cheap, a
dense ``quadratic_form()`` for the compiled atom kernels.
"""

from __future__ import annotations

import numpy as np

from .graph import power_iteration_max_eig


def _as_point(x, dim):
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != dim:
        raise ValueError(f"point has dimension {x.shape[0]}, objective expects {dim}")
    return x


def _check_weight(weight):
    weight = float(weight)
    if not weight > 0:
        raise ValueError(f"loss weight must be positive, got {weight}")
    return weight


class LocalObjective:
    dim: int

    def value(self, x) -> float:
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def hess_quad(self, d) -> float:
        raise NotImplementedError

    def constants(self) -> tuple[float, float]:
        """``(l, u)``: smoothness and strong-convexity constants."""
        raise NotImplementedError

    def quadratic_form(self):
        """``(H, q, c)`` with ``f(x) = 0.5 x'Hx + q'x + c``, or None if not available."""
        return None


class LeastSquares(LocalObjective):
    """``f(x) = weight * ||A x - b||^2``.

    A global ``weight = 1/n`` turns the summed objective into a mean squared error.
    """

    def __init__(self, A, b, weight: float = 1.0):
        self.A = np.ascontiguousarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float).ravel()
        if self.A.ndim != 2 or self.A.shape[0] != self.b.shape[0]:
            raise ValueError(f"incompatible shapes A{self.A.shape}, b{self.b.shape}")
        self.dim = self.A.shape[1]
        self.weight = _check_weight(weight)
        self._consts = None
        self._qf = None

    def value(self, x):
        r = self.A @ _as_point(x, self.dim) - self.b
        return self.weight * float(r @ r)

    def gradient(self, x):
        return 2.0 * self.weight * (self.A.T @ (self.A @ _as_point(x, self.dim) - self.b))

    def hess_quad(self, d):
        Ad = self.A @ d
        return 2.0 * self.weight * float(Ad @ Ad)

    def constants(self):
        if self._consts is None:
            n, d = self.A.shape
            if n == 0:
                self._consts = (0.0, 0.0)
            else:
                # the Gram matrix A A' has the same nonzero spectrum and is smaller when n < d
                gram = self.A @ self.A.T if n < d else self.A.T @ self.A
                lmax = power_iteration_max_eig(gram)
                if n < d or lmax == 0.0:
                    lmin = 0.0
                else:
                    lmin = max(0.0, lmax - power_iteration_max_eig(lmax * np.eye(d) - gram))
                self._consts = (2.0 * self.weight * lmax, 2.0 * self.weight * lmin)
        return self._consts

    def quadratic_form(self):
        if self._qf is None:
            w = self.weight
            H = 2.0 * w * (self.A.T @ self.A)
            self._qf = (np.ascontiguousarray(H), -2.0 * w * (self.A.T @ self.b), w * float(self.b @ self.b))
        return self._qf


class MatrixCompletion(LocalObjective):
    """``f(X) = weight * sum over observed (a, b, v) of (X[a, b] - v)^2``, ``X`` flattened row-major."""

    def __init__(self, rows, cols, triplets, weight: float = 1.0):
        self.rows, self.cols = int(rows), int(cols)
        self.dim = self.rows * self.cols
        t = np.asarray(triplets, dtype=float).reshape(-1, 3)
        a = t[:, 0].astype(np.int64)
        b = t[:, 1].astype(np.int64)
        if np.any((a < 0) | (a >= self.rows) | (b < 0) | (b >= self.cols)):
            raise ValueError("observed entry outside the matrix")
        self.flat_idx = a * self.cols + b
        self.values = t[:, 2].copy()
        self.triplets = t
        self.weight = _check_weight(weight)
        self._mult = np.bincount(self.flat_idx, minlength=self.dim).astype(float)

    def value(self, x):
        x = _as_point(x, self.dim)
        r = x[self.flat_idx] - self.values
        return self.weight * float(r @ r)

    def gradient(self, x):
        x = _as_point(x, self.dim)
        g = np.zeros(self.dim)
        np.add.at(g, self.flat_idx, 2.0 * self.weight * (x[self.flat_idx] - self.values))
        return g

    def hess_quad(self, d):
        return 2.0 * self.weight * float(self._mult @ (d * d))

    def constants(self):
        return (2.0 * self.weight * float(self._mult.max(initial=0.0)), 0.0)

    def quadratic_form(self):
        w = self.weight
        H = np.diag(2.0 * w * self._mult)
        q = np.zeros(self.dim)
        np.add.at(q, self.flat_idx, -2.0 * w * self.values)
        return H, q, w * float(self.values @ self.values)


class Ridge(LocalObjective):
    """``f(x) + (mu / 2) ||x||^2``."""

    def __init__(self, inner: LocalObjective, mu: float):
        if not mu > 0:
            raise ValueError(f"ridge weight must be positive, got {mu}")
        self.inner = inner
        self.mu = float(mu)
        self.dim = inner.dim
        self._qf = None

    def value(self, x):
        x = _as_point(x, self.dim)
        return self.inner.value(x) + 0.5 * self.mu * float(x @ x)

    def gradient(self, x):
        x = _as_point(x, self.dim)
        return self.inner.gradient(x) + self.mu * x

    def hess_quad(self, d):
        return self.inner.hess_quad(d) + self.mu * float(d @ d)

    def constants(self):
        l, u = self.inner.constants()
        return (l + self.mu, u + self.mu)

    def quadratic_form(self):
        if self._qf is None:
            qf = self.inner.quadratic_form()
            if qf is None:
                return None
            H, q, c = qf
            self._qf = (np.ascontiguousarray(H + self.mu * np.eye(self.dim)), q, c)
        return self._qf


class Quadratic(LocalObjective):
    """``f(x) = 0.5 x'Hx + q'x + c`` with symmetric PSD ``H``."""

    def __init__(self, H, q=None, c=0.0):
        self.H = np.ascontiguousarray(H, dtype=float)
        self.dim = self.H.shape[0]
        self.q = np.zeros(self.dim) if q is None else np.asarray(q, dtype=float).ravel()
        self.c = float(c)
        if self.H.shape != (self.dim, self.dim) or not np.allclose(self.H, self.H.T):
            raise ValueError("H must be a symmetric square matrix")

    def value(self, x):
        x = _as_point(x, self.dim)
        return 0.5 * float(x @ self.H @ x) + float(self.q @ x) + self.c

    def gradient(self, x):
        return self.H @ _as_point(x, self.dim) + self.q

    def hess_quad(self, d):
        return float(d @ self.H @ d)

    def constants(self):
        ev = np.linalg.eigvalsh(self.H)
        return (max(float(ev[-1]), 0.0), max(float(ev[0]), 0.0))

    def quadratic_form(self):
        return self.H, self.q, self.c


class Zero(LocalObjective):
    """The zero function; handy for stationarity checks."""

    def __init__(self, dim):
        self.dim = int(dim)

    def value(self, x):
        _as_point(x, self.dim)
        return 0.0

    def gradient(self, x):
        _as_point(x, self.dim)
        return np.zeros(self.dim)

    def hess_quad(self, d):
        return 0.0

    def constants(self):
        return (0.0, 0.0)

    def quadratic_form(self):
        return np.zeros((self.dim, self.dim)), np.zeros(self.dim), 0.0


def ridge_wrap(obj: LocalObjective, mu: float) -> Ridge:
    return Ridge(obj, mu)


def value(obj: LocalObjective, x) -> float:
    return obj.value(x)


def gradient(obj: LocalObjective, x) -> np.ndarray:
    return obj.gradient(x)


def constants(obj: LocalObjective) -> tuple[float, float]:
    return obj.constants()


def global_constants(objectives) -> tuple[float, float]:
    """Reduce heterogeneous ``(l_i, u_i)`` to ``(max l_i, min u_i)``."""
    cs = [o.constants() for o in objectives]
    return max(c[0] for c in cs), min(c[1] for c in cs)


def total_value(objectives, X) -> float:
    """``F(x) = sum_i f_i(x_i)`` for agent-stacked rows ``X``."""
    return float(sum(f.value(x) for f, x in zip(objectives, X)))
