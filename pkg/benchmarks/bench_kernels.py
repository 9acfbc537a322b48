"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5] [--dim 500]

Each kernel runs on the same seeded subproblem under both backends; the
script checks that the outputs agree before reporting timings.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from dcgs.kernels import ATOM_L1, backends


def _problem(dim, seed=0):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((dim // 2, dim))
    H = np.ascontiguousarray(2.0 * A.T @ A / dim)
    c = rng.standard_normal(dim)
    center = np.zeros(dim)
    return H, c, center


def _time(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def bench(dim: int, repeat: int, iters: int) -> list[tuple]:
    H, c, center = _problem(dim)
    rho, eta, tol = 5.0, 1.0, 1e-12
    z0 = np.zeros(dim)
    w0 = np.zeros(2 * dim)
    w0[0] = 1.0
    z1 = np.zeros(dim)
    z1[0] = rho
    G = np.random.default_rng(1).standard_normal((60, 40))
    cases = {
        "fw_atoms (harmonic)": lambda k: k.fw_atoms(H, c, eta, center, z0.copy(), H @ z0, ATOM_L1, rho, tol, iters, False),
        "fw_atoms (line search)": lambda k: k.fw_atoms(H, c, eta, center, z0.copy(), H @ z0, ATOM_L1, rho, tol, iters, True),
        "pairwise_atoms": lambda k: k.pairwise_atoms(H, c, eta, center, w0.copy(), z1.copy(), H @ z1, ATOM_L1, rho, tol, iters),
        "top_singular_pair 60x40": lambda k: k.top_singular_pair(G, 5000, 1e-9),
    }
    kinds = backends()
    rows = []
    for name, call in cases.items():
        timings, outs = {}, {}
        for bname, mod in kinds.items():
            timings[bname], outs[bname] = _time(lambda: call(mod), repeat)
        if len(outs) == 2:
            a, b = outs["python"][0], outs["cython"][0]
            if not np.allclose(a, b, rtol=1e-8, atol=1e-8):
                raise SystemExit(f"{name}: backends disagree")
        rows.append((name, timings.get("python"), timings.get("cython")))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=500)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--iters", type=int, default=2000)
    args = ap.parse_args()
    print(f"dim={args.dim} iters={args.iters} best of {args.repeat}")
    print(f"{'kernel':28s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name, tp, tc in bench(args.dim, args.repeat, args.iters):
        if tc is None:
            print(f"{name:28s} {tp * 1e3:12.2f} {'n/a':>12s}")
        else:
            print(f"{name:28s} {tp * 1e3:12.2f} {tc * 1e3:12.2f} {tp / tc:8.1f}x")


if __name__ == "__main__":
    main()
