"""Experiment configuration: a small TOML file, validated into ``ExperimentConfig``.

Example::

    name = "lasso_desk"
    seed = 0
    algorithm = "dcgs_pcg"      # dcgs_cg | dcgs_pcg | dfw | reference
    regime = "convex"           # or "strongly_convex" together with mu
    N = 200                     # outer iterations (DFW: iterations T)
    R = "auto"                  # "auto" | "default" | a number
    topology = "cycle(10)"

    [problem]
    kind = "lasso_synthetic"
    n = 200
    d = 500
    nnz = 20
    noise_sigma = 1.0
    theta_norm = 1.0
    rho = 10.0

``R = "auto"`` takes ``max(||x0 - x*||^2, ||y0||^2)`` (times ``u`` in the
strongly convex regime) from the cached reference solution; ``"default"``
uses the oracle-free bound ``m D^2``.
"""

from __future__ import annotations

import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

ALGORITHMS = ("dcgs_cg", "dcgs_pcg", "dfw", "reference")
PROBLEMS = ("lasso_synthetic", "matcomp_synthetic", "file")
OUTPUT_ENV = "DCGS_OUTPUT_DIR"

_PROBLEM_DEFAULTS = {
    "lasso_synthetic": {"n": 200, "d": 500, "nnz": 20, "noise_sigma": 1.0, "theta_norm": 1.0, "rho": 10.0},
    # rho = None means rho_factor * ||Theta*||_*
    "matcomp_synthetic": {"dim": 30, "rank": 3, "n_obs": 300, "noise_sigma": 1.0, "rho": None, "rho_factor": 1.2},
    "file": {"path": None, "format": "libsvm", "set": None, "rho": None, "rows": None, "cols": None},
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    problem: dict
    name: str = "experiment"
    seed: int = 0
    algorithm: str = "dcgs_cg"
    regime: str = "convex"
    mu: float | None = None
    N: int = 100
    R: float | str = "auto"
    topology: str = "cycle(10)"
    loss: str = "sum"
    inner_step: str = "harmonic"
    max_inner_iters: int = 50_000
    exact_tol: float = 1e-10
    ref_tol: float = 1e-10
    ref_budget: int = 1_000_000
    output_dir: str = "results"
    timing: bool = False

    def __post_init__(self):
        kind = self.problem.get("kind")
        if kind not in PROBLEMS:
            raise ConfigError(f"problem.kind must be one of {PROBLEMS}, got {kind!r}")
        unknown = set(self.problem) - set(_PROBLEM_DEFAULTS[kind]) - {"kind"}
        if unknown:
            raise ConfigError(f"unknown keys for {kind}: {sorted(unknown)}")
        self.problem = {"kind": kind, **_PROBLEM_DEFAULTS[kind], **self.problem}
        if kind == "file" and not self.problem["path"]:
            raise ConfigError("problem.path is required for file problems")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.regime not in ("convex", "strongly_convex"):
            raise ConfigError(f"regime must be convex or strongly_convex, got {self.regime!r}")
        if self.regime == "strongly_convex" and not (self.mu and self.mu > 0):
            raise ConfigError("strongly_convex needs mu > 0 (the ridge weight)")
        if self.regime == "convex" and self.mu is not None:
            raise ConfigError("mu is only meaningful with regime = 'strongly_convex'")
        if not (isinstance(self.N, int) and self.N >= 1):
            raise ConfigError(f"N must be a positive integer, got {self.N!r}")
        if isinstance(self.R, str):
            if self.R not in ("auto", "default"):
                raise ConfigError(f"R must be 'auto', 'default' or a positive number, got {self.R!r}")
        elif not self.R > 0:
            raise ConfigError(f"R must be positive, got {self.R}")
        if self.loss not in ("sum", "mean"):
            raise ConfigError(f"loss must be 'sum' or 'mean', got {self.loss!r}")
        if self.inner_step not in ("harmonic", "line_search"):
            raise ConfigError(f"inner_step must be harmonic or line_search, got {self.inner_step!r}")

    def output_path(self) -> Path:
        """Output directory; the ``DCGS_OUTPUT_DIR`` environment variable wins over the config."""
        return Path(os.environ.get(OUTPUT_ENV) or self.output_dir)

    def to_dict(self) -> dict:
        return asdict(self)


def config_from_dict(raw: dict) -> ExperimentConfig:
    raw = dict(raw)
    if "problem" not in raw or not isinstance(raw["problem"], dict):
        raise ConfigError("missing [problem] table")
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    return ExperimentConfig(**raw)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"{path}: {err}") from err
    try:
        cfg = config_from_dict(raw)
    except (ConfigError, TypeError) as err:
        raise ConfigError(f"{path}: {err}") from err
    # relative data paths are taken relative to the config file
    if cfg.problem["kind"] == "file" and not Path(cfg.problem["path"]).is_absolute():
        cfg.problem["path"] = str(path.parent / cfg.problem["path"])
    return cfg
