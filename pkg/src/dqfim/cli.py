"""Command-line front end.

Subcommands ``rank``, ``dla``, ``train``, ``sweep`` and ``bound``. Each reads an
optional ``--config`` file of ``key = value`` lines; flags override it.

Exit codes: 0 ok, 1 configuration error, 2 no rank plateau, 3 truncated Lie
closure, 4 sweep with more than 5% failed cells.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import experiments as ex
from .metric import NoPlateauError

EXIT_OK, EXIT_CONFIG, EXIT_NO_PLATEAU, EXIT_TRUNCATED, EXIT_SWEEP_FAILED = 0, 1, 2, 3, 4

# flag name -> (config key, type for argparse, help)
_COMMON = {
    "--config": (None, str, "flat key = value configuration file"),
    "--id": ("experiment_id", str, "experiment id used in file names"),
    "--family": ("family", str, "he, xy, xy_open, xxz, ycz or custom"),
    "--n": ("n_qubits", int, "number of qubits"),
    "--generators": ("generators", str, "comma-separated Pauli labels for --family custom"),
    "--ensemble": ("ensemble", str, "haar, product, basis or sector:<p>"),
    "--seed": ("seed", int, "master seed"),
    "--out": ("output", str, "output directory"),
    "--workers": ("workers", int, "worker processes (0: all cores)"),
}
_RANK = {
    "--lmax": ("l_max", int, "largest training-set size"),
    "--n-theta": ("n_theta", int, "parameter draws per depth"),
    "--n-data": ("n_data", int, "dataset redraws per size"),
    "--rel-tol": ("rel_tol", float, "relative rank tolerance"),
    "--abs-tol": ("abs_tol", float, "absolute rank tolerance"),
    "--g-max": ("g_max", int, "depth cap of the scan"),
}
_TRAIN = {
    "--layers": ("layers", int, "circuit depth G"),
    "--g-grid": ("g_grid", str, "depth grid, e.g. 4,8,16"),
    "--m-grid": ("m_grid", str, "parameter-count grid (multiples of K)"),
    "--l-grid": ("l_grid", str, "training-set sizes, e.g. 1,2,4 or 1..8"),
    "--target-layers": ("target_layers", int, "depth of the target circuit"),
    "--test-ensemble": ("test_ensemble", str, "test distribution (default: training one)"),
    "--reps": ("reps", int, "repetitions per cell"),
    "--optimizer": ("optimizer", str, "optimizer preset: bfgs, bfgs-1e-3, gd, adam"),
    "--threshold": ("convergence_threshold", float, "C_train convergence threshold"),
    "--max-steps": ("max_steps", int, "iteration cap"),
    "--n-test": ("n_test", int, "Monte-Carlo test states"),
}


def _add(parser, table):
    for flag, (key, typ, help_) in table.items():
        parser.add_argument(flag, dest=(key or flag[2:]).replace("-", "_"), type=typ, default=None, help=help_)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dqfim", description="Data-QFIM rank analysis and unitary-learning sweeps.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    rank = sub.add_parser("rank", help="effective-dimension saturation profile")
    _add(rank, _COMMON)
    _add(rank, _RANK)
    rank.add_argument("--with-dla", dest="with_dla", action="store_const", const="true", default=None)

    dla = sub.add_parser("dla", help="dimension of the dynamical Lie algebra")
    _add(dla, _COMMON)
    dla.add_argument("--cap", dest="cap", type=int, default=None, help="stop at this dimension")

    for name, help_ in (("train", "seeded training runs"), ("sweep", "(M, L, seed) phase-diagram sweep")):
        sp = sub.add_parser(name, help=help_)
        _add(sp, _COMMON)
        _add(sp, _TRAIN)
        sp.add_argument(
            "--theta0-from-target", dest="theta0_from_target", action="store_const", const="true", default=None
        )
        if name == "sweep":
            _add(sp, _RANK)
            sp.add_argument("--no-overlay", dest="overlay", action="store_const", const="false", default=None)
            sp.add_argument(
                "--wall-time", dest="record_wall_time", action="store_const", const="true", default=None,
                help="record wall times (rows are then no longer byte-reproducible)",
            )

    bound = sub.add_parser("bound", help="maximal rank of an isometry from L states")
    bound.add_argument("--n", dest="n_qubits", type=int, required=True)
    bound.add_argument("--lmax", dest="l_max", type=int, required=True)
    return p


def _config(args) -> ex.ExperimentConfig:
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "verbose", "config") and v is not None}
    cfg = ex.load_config(getattr(args, "config", None), overrides)
    cfg.validate(args.command)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        if args.command == "bound":
            if args.n_qubits < 1 or args.l_max < 1:
                raise ex.ConfigError("--n and --lmax must be >= 1")
            for L, b in ex.bound_table(args.n_qubits, args.l_max):
                print(f"{L}\t{b}")
            return EXIT_OK
        cfg = _config(args)
    except ex.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "rank":
        try:
            out = ex.run_rank(cfg)
        except NoPlateauError as exc:
            print(f"no plateau: {exc}", file=sys.stderr)
            return EXIT_NO_PLATEAU
        print(json.dumps(out.summary, sort_keys=True))
        return EXIT_OK

    if args.command == "dla":
        rec = ex.run_dla(cfg)
        ex.write_config(cfg, "dla")
        (Path(cfg.output) / f"{cfg.experiment_id}_dla.json").write_text(json.dumps(rec, sort_keys=True) + "\n")
        print(json.dumps(rec, sort_keys=True))
        return EXIT_TRUNCATED if rec["truncated"] else EXIT_OK

    if args.command == "train":
        rows = ex.run_train(cfg)
        sys.stdout.write(ex.rows_to_csv(rows))
        failed = [r for r in rows if r["status"].startswith("error")]
        return EXIT_SWEEP_FAILED if failed else EXIT_OK

    try:
        out = ex.run_sweep(cfg)
    except NoPlateauError as exc:
        print(f"no plateau while computing the boundary overlay: {exc}", file=sys.stderr)
        return EXIT_NO_PLATEAU
    print(f"{len(out.rows)} rows, {out.success_fraction:.1%} succeeded -> {out.csv_path}")
    return EXIT_OK if out.success_fraction >= 0.95 else EXIT_SWEEP_FAILED


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
