"""Synthetic problem instances and their split across agents.

All randomness comes from ``make_rng(seed)``: numpy's ``Generator`` on the
counter-based Philox-4x64 bit generator keyed by the seed. Nothing reads
ambient entropy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..objectives import LeastSquares, MatrixCompletion


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator for ``seed``; ``stream`` selects an independent substream."""
    return np.random.Generator(np.random.Philox(key=[int(seed), int(stream)]))


# substream ids, one per consumer, so adding draws in one place never shifts another
STREAM_DATA = 0
STREAM_SPLIT = 1


@dataclass
class LassoData:
    X: np.ndarray
    y: np.ndarray
    theta_true: np.ndarray


@dataclass
class MatCompData:
    triplets: np.ndarray  # rows of (a, b, value)
    truth: np.ndarray
    rows: int
    cols: int


def gen_lasso_synthetic(n: int, d: int, nnz: int, sigma: float, seed: int, theta_norm: float = 100.0) -> LassoData:
    """Gaussian design, ``nnz``-sparse ``theta_true`` scaled to Euclidean norm ``theta_norm``,
    targets ``X theta_true + N(0, sigma^2)``."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    if not 0 <= nnz <= d:
        raise ValueError(f"nnz={nnz} must lie in [0, d={d}]")
    rng = make_rng(seed, STREAM_DATA)
    X = rng.standard_normal((n, d))
    theta = np.zeros(d)
    support = np.sort(rng.choice(d, size=nnz, replace=False))
    mags = rng.uniform(0.5, 1.5, size=nnz) * rng.choice([-1.0, 1.0], size=nnz)
    theta[support] = mags
    if nnz:
        theta *= theta_norm / np.linalg.norm(theta)
    noise = rng.standard_normal(n) * sigma
    return LassoData(X, X @ theta + noise, theta)


def gen_matcomp_synthetic(dim: int, rank: int, n_obs: int, sigma: float, seed: int) -> MatCompData:
    """Low-rank ``U V'`` truth with ``n_obs`` distinct observed entries plus ``N(0, sigma^2)`` noise."""
    if not 1 <= rank <= dim:
        raise ValueError(f"rank={rank} must lie in [1, dim={dim}]")
    if not 1 <= n_obs <= dim * dim:
        raise ValueError(f"n_obs={n_obs} must lie in [1, dim^2={dim * dim}]")
    rng = make_rng(seed, STREAM_DATA)
    U = rng.standard_normal((dim, rank))
    V = rng.standard_normal((dim, rank))
    truth = U @ V.T
    pos = np.sort(rng.choice(dim * dim, size=n_obs, replace=False))
    a, b = np.divmod(pos, dim)
    vals = truth[a, b] + rng.standard_normal(n_obs) * sigma
    trip = np.column_stack([a.astype(float), b.astype(float), vals])
    return MatCompData(trip, truth, dim, dim)


def shard_indices(n_samples: int, m: int, seed: int) -> list[np.ndarray]:
    """Seeded random partition of ``range(n_samples)`` into ``m`` near-equal sorted shards."""
    if m < 2:
        raise ValueError("need at least two agents")
    if n_samples < m:
        raise ValueError(f"{n_samples} samples cannot feed {m} agents")
    perm = make_rng(seed, STREAM_SPLIT).permutation(n_samples)
    return [np.sort(s) for s in np.array_split(perm, m)]


def split_across_agents(data, m: int, seed: int, loss: str = "sum") -> list:
    """Per-agent objectives whose sum is the centralized loss.

    ``loss="sum"`` keeps the plain sum of squared residuals; ``loss="mean"``
    divides by the total sample count, so the network objective is the mean
    squared error.
    """
    if loss not in ("sum", "mean"):
        raise ValueError(f"loss must be 'sum' or 'mean', got {loss!r}")
    if isinstance(data, LassoData):
        w = 1.0 / len(data.y) if loss == "mean" else 1.0
        return [LeastSquares(data.X[idx], data.y[idx], weight=w) for idx in shard_indices(len(data.y), m, seed)]
    if isinstance(data, MatCompData):
        w = 1.0 / len(data.triplets) if loss == "mean" else 1.0
        return [MatrixCompletion(data.rows, data.cols, data.triplets[idx], weight=w)
                for idx in shard_indices(len(data.triplets), m, seed)]
    raise TypeError(f"cannot split {type(data).__name__}")
