"""Build an instance from a config, run the chosen solver, write CSV and JSON."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict
from importlib import resources
from pathlib import Path

import numpy as np

from .. import kernels
from ..core import (STRONGLY_CONVEX, ReferenceOptimum, dcgs_run, default_R, make_schedule, oracle_R,
                    primal_dual_reference_run, reference_optimum)
from ..dfw import dfw_run
from ..graph import laplacian, parse_topology
from ..objectives import LeastSquares, MatrixCompletion, Ridge, global_constants
from ..sets import L1Ball, NuclearBall, make_set
from . import dataio
from .config import ExperimentConfig
from .generators import gen_lasso_synthetic, gen_matcomp_synthetic, shard_indices, split_across_agents


class ExperimentError(RuntimeError):
    """A solver or data error, annotated with the experiment name."""


def summary_schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("summary.schema.json").read_text())


def build_instance(cfg: ExperimentConfig):
    """``(objectives, feasible_set, graph)`` for ``cfg``; the data depend only on the seed."""
    graph = parse_topology(cfg.topology)
    p = cfg.problem
    if p["kind"] == "lasso_synthetic":
        data = gen_lasso_synthetic(p["n"], p["d"], p["nnz"], p["noise_sigma"], cfg.seed, theta_norm=p["theta_norm"])
        objs = split_across_agents(data, graph.m, cfg.seed, cfg.loss)
        fset = L1Ball(float(p["rho"]), p["d"])
    elif p["kind"] == "matcomp_synthetic":
        data = gen_matcomp_synthetic(p["dim"], p["rank"], p["n_obs"], p["noise_sigma"], cfg.seed)
        objs = split_across_agents(data, graph.m, cfg.seed, cfg.loss)
        rho = p["rho"]
        if rho is None:
            rho = p["rho_factor"] * float(np.linalg.svd(data.truth, compute_uv=False).sum())
        fset = NuclearBall(float(rho), p["dim"], p["dim"])
    else:
        objs, fset = _file_instance(cfg, graph.m)
    if cfg.regime == STRONGLY_CONVEX:
        objs = [Ridge(f, cfg.mu) for f in objs]
    return objs, fset, graph


def _file_instance(cfg, m):
    p = cfg.problem
    if p["rho"] is None:
        raise ExperimentError("file problems need an explicit rho")
    if p["format"] == "libsvm":
        X, y = dataio.load_libsvm(p["path"])
        # dense per-agent blocks: desk-sized files only
        w = 1.0 / len(y) if cfg.loss == "mean" else 1.0
        objs = [LeastSquares(X[idx].toarray(), y[idx], weight=w) for idx in shard_indices(len(y), m, cfg.seed)]
        fset = make_set(p["set"] or "l1_ball", dim=X.shape[1], rho=p["rho"])
    elif p["format"] == "triplets":
        trip, rows, cols = dataio.load_triplets(p["path"])
        rows, cols = p["rows"] or rows, p["cols"] or cols
        w = 1.0 / len(trip) if cfg.loss == "mean" else 1.0
        objs = [MatrixCompletion(rows, cols, trip[idx], weight=w) for idx in shard_indices(len(trip), m, cfg.seed)]
        fset = NuclearBall(float(p["rho"]), rows, cols)
    else:
        raise ExperimentError(f"unknown file format {p['format']!r}")
    return objs, fset


def _cache_key(cfg: ExperimentConfig) -> str:
    keyed = {k: getattr(cfg, k) for k in ("problem", "seed", "loss", "regime", "mu", "topology", "ref_tol", "ref_budget")}
    blob = json.dumps(keyed, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def cached_reference(cfg: ExperimentConfig, objectives, feasible_set) -> tuple[ReferenceOptimum, bool]:
    """Reference optimum for the instance, memoized under ``<output>/cache``."""
    cache = cfg.output_path() / "cache"
    key = _cache_key(cfg)
    meta_path, x_path = cache / f"fref_{key}.json", cache / f"fref_{key}.npy"
    if meta_path.exists() and x_path.exists():
        meta = json.loads(meta_path.read_text())
        ref = ReferenceOptimum(meta["value"], np.load(x_path), meta["wolfe_gap"], meta["lo_calls"], meta["method"])
        return ref, True
    ref = reference_optimum(objectives, feasible_set, tol=cfg.ref_tol, budget=cfg.ref_budget)
    cache.mkdir(parents=True, exist_ok=True)
    np.save(x_path, ref.x)
    meta_path.write_text(json.dumps(ref.provenance(), indent=2, sort_keys=True))
    return ref, False


def resolve_R(cfg: ExperimentConfig, objectives, feasible_set, graph, ref: ReferenceOptimum) -> float:
    u = global_constants(objectives)[1]
    if isinstance(cfg.R, (int, float)):
        return float(cfg.R)
    if cfg.R == "default":
        return default_R(cfg.regime, graph.m, feasible_set.diameter(), u)
    X0 = np.tile(feasible_set.default_point(), (graph.m, 1))
    R = oracle_R(cfg.regime, X0, ref.x, u)
    if R <= 0:  # x0 already optimal; any positive scale works
        R = default_R(cfg.regime, graph.m, feasible_set.diameter(), u)
    return R


def execute(cfg: ExperimentConfig):
    """Run the configured solver; returns ``(report, summary dict)`` without writing files."""
    objs, fset, graph = build_instance(cfg)
    ref, cached = cached_reference(cfg, objs, fset)
    R = resolve_R(cfg, objs, fset, graph, ref)
    u = global_constants(objs)[1]
    try:
        if cfg.algorithm == "dfw":
            report = dfw_run(objs, fset, graph, cfg.N, step_rule=cfg.inner_step, f_ref=ref.value)
        else:
            sched = make_schedule(cfg.regime, cfg.N, graph.m, laplacian(graph).spectral_norm, u, R)
            if cfg.algorithm == "reference":
                report = primal_dual_reference_run(objs, fset, graph, sched, exact_tol=cfg.exact_tol,
                                                   f_ref=ref.value)
            else:
                report = dcgs_run(objs, fset, graph, sched, inner=cfg.algorithm.split("_")[1],
                                  step_rule=cfg.inner_step, max_inner_iters=cfg.max_inner_iters,
                                  f_ref=ref.value)
    except Exception as err:
        raise ExperimentError(f"experiment {cfg.name!r} ({cfg.algorithm}): {err}") from err
    final = asdict(report.final)
    if not cfg.timing:
        final.pop("seconds")
    summary = {
        "name": cfg.name,
        "algorithm": cfg.algorithm,
        "config": cfg.to_dict(),
        "final": final,
        "f_ref": {**ref.provenance(), "cached": cached},
        "R": R,
        "n_rows": len(report.rows),
        "backend": kernels.BACKEND,
    }
    return report, summary


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run and write ``<name>.csv`` and ``<name>.json``; returns the written paths."""
    report, summary = execute(cfg)
    out = cfg.output_path()
    out.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = out / f"{cfg.name}.csv", out / f"{cfg.name}.json"
    csv_path.write_text(report.to_csv(timing=cfg.timing))
    json_path.write_text(json.dumps(summary, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return {"csv": csv_path, "json": json_path, "summary": summary}


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, Path):
        return str(v)
    raise TypeError(f"not JSON serializable: {type(v).__name__}")
