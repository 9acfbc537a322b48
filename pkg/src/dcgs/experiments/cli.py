"""Command line: ``dcgs run | gen | report``."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import dataio
from .config import ConfigError, load_config
from .generators import gen_lasso_synthetic, gen_matcomp_synthetic
from .runner import ExperimentError, run_experiment
from ..report import read_csv

AXES = {"lo": "lo_total", "comm": "comm_rounds"}


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.output_dir:
        cfg.output_dir = args.output_dir
    paths = run_experiment(cfg)
    final = paths["summary"]["final"]
    print(f"{cfg.name}: k={final['k']} loss={final['loss']:.6g} gap={final['gap']:.3g} "
          f"rounds={final['comm_rounds']} lo_total={final['lo_total']}")
    print(f"wrote {paths['csv']} and {paths['json']}")
    return 0


def _cmd_gen(args) -> int:
    if args.problem == "lasso_synthetic":
        data = gen_lasso_synthetic(args.n, args.d, args.nnz, args.sigma, args.seed, theta_norm=args.theta_norm)
        dataio.write_libsvm(args.out, data.X, data.y)
    else:
        data = gen_matcomp_synthetic(args.dim, args.rank, args.n_obs, args.sigma, args.seed)
        dataio.write_triplets(args.out, data.triplets, data.rows, data.cols)
        if args.truth:
            np.save(args.truth, data.truth)
    print(f"wrote {args.out}")
    return 0


def _cmd_report(args) -> int:
    rows = read_csv(args.input)
    col = AXES[args.axes]
    out = sys.stdout
    out.write(f"{col},loss\n")
    for r in rows:
        out.write(f"{r[col]},{r['loss']!r}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dcgs", description="Decentralized conditional gradient sliding experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment from a TOML config")
    run.add_argument("--config", required=True)
    run.add_argument("--output-dir", help="overrides the config (DCGS_OUTPUT_DIR overrides both)")
    run.set_defaults(func=_cmd_run)

    gen = sub.add_parser("gen", help="write a synthetic instance to a data file")
    gen.add_argument("--problem", required=True, choices=["lasso_synthetic", "matcomp_synthetic"])
    gen.add_argument("--out", required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--sigma", type=float, default=1.0)
    gen.add_argument("--n", type=int, default=200)
    gen.add_argument("--d", type=int, default=500)
    gen.add_argument("--nnz", type=int, default=20)
    gen.add_argument("--theta-norm", type=float, default=1.0)
    gen.add_argument("--dim", type=int, default=30)
    gen.add_argument("--rank", type=int, default=3)
    gen.add_argument("--n-obs", type=int, default=300)
    gen.add_argument("--truth", help="also save the ground-truth matrix (.npy)")
    gen.set_defaults(func=_cmd_gen)

    rep = sub.add_parser("report", help="print the (x, loss) columns for plotting")
    rep.add_argument("--in", dest="input", required=True)
    rep.add_argument("--axes", choices=sorted(AXES), default="comm")
    rep.set_defaults(func=_cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ExperimentError, dataio.ParseError, OSError, ValueError) as err:
        print(f"dcgs {args.command}: error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
