"""Command-line front end.

    hlgap density         --n 8 --omega 2 --omega-tilde 1 --samples 10000 --out run/
    hlgap gap             --n 28 --nf 14 --omega 1 --omega-tilde 0.04 --g 8 --out run/
    hlgap fermi-fluct     --n 64 --nf 32 --omega-tilde 1 --out run/
    hlgap number-variance --n 64 --omega-tilde 1 --out run/
    hlgap predict         --n 16 --nf 8 --omega 2 --omega-tilde 2 --g 0
    hlgap replay          run/manifest.json --out rerun/

Usage errors exit with status 2, I/O failures with status 1.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .core import EnsembleParams
from .errors import NumericError, ParameterError
from .experiments import (
    ExperimentConfig,
    Grid,
    centered_half_interval,
    default_grid,
    run_density_experiment,
    run_fermi_fluctuation_experiment,
    run_gap_experiment,
    run_number_variance_experiment,
    run_prediction,
)
from .reporting import read_manifest, write_report

COMMANDS = ("density", "gap", "fermi-fluct", "number-variance", "predict")
_NEEDS_NF = {"gap", "fermi-fluct", "predict"}
_HELP = {
    "density": "empirical vs analytic level density",
    "gap": "filled/empty densities and the gap width",
    "fermi-fluct": "sample-to-sample spread of the Fermi level",
    "number-variance": "variance of the level count in an interval",
    "predict": "analytic curves and scalars only, no sampling",
}


def _default_seed() -> int:
    env = os.environ.get("RMT_SEED")
    return int(env) if env not in (None, "") else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hlgap", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"hlgap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in COMMANDS:
        p = sub.add_parser(name, help=_HELP[name])
        p.add_argument("--n", type=int, required=True, help="matrix order N")
        p.add_argument("--nf", type=int, required=name in _NEEDS_NF, default=None,
                       help="number of filled levels")
        p.add_argument("--omega", type=float, default=1.0)
        p.add_argument("--omega-tilde", type=float, default=1.0)
        p.add_argument("--g", type=float, default=0.0)
        p.add_argument("--samples", type=int, default=10_000)
        p.add_argument("--seed", type=int, default=None,
                       help="master seed (default: $RMT_SEED, else 0)")
        p.add_argument("--bins", type=int, default=101)
        p.add_argument("--xmin", type=float, default=None)
        p.add_argument("--xmax", type=float, default=None,
                       help="grid limits (default: support plus smearing plus shift)")
        p.add_argument("--out", default="hlgap-out")
        p.add_argument("--rho0", choices=("semicircle", "finite-n"), default="semicircle")
        p.add_argument("--ensemble", choices=("quenched", "combined"), default="quenched",
                       help="matrix ensemble for fermi-fluct and number-variance")
        p.add_argument("--edge-threshold", type=float, default=0.01)
        p.add_argument("--workers", type=int, default=1)
        if name == "number-variance":
            p.add_argument("--interval", type=float, nargs=2, metavar=("LO", "HI"), default=None)

    rp = sub.add_parser("replay", help="re-run from a manifest.json")
    rp.add_argument("manifest")
    rp.add_argument("--out", default="hlgap-out")
    rp.add_argument("--workers", type=int, default=1)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    nf = args.nf if args.nf is not None else 0
    params = EnsembleParams(args.n, nf, args.omega, args.omega_tilde, args.g)
    grid = None
    if args.xmin is not None or args.xmax is not None or args.bins != 101:
        dflt = default_grid(params, args.bins)
        grid = Grid(
            dflt.xmin if args.xmin is None else args.xmin,
            dflt.xmax if args.xmax is None else args.xmax,
            args.bins,
        )
    seed = args.seed if args.seed is not None else _default_seed()
    return ExperimentConfig(
        params,
        args.samples,
        seed=seed,
        grid=grid,
        rho0=args.rho0,
        ensemble=args.ensemble,
        edge_threshold=args.edge_threshold,
    )


def parse_cli(argv=None):
    """Return ``(command, config, namespace)``; usage errors exit with status 2."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "replay":
        return "replay", None, args
    if args.workers < 1:
        parser.error("--workers must be >= 1")
    if args.command in ("gap", "fermi-fluct") and not 1 <= args.nf <= args.n - 1:
        parser.error(f"--nf must lie in [1, n-1] for {args.command}")
    try:
        cfg = config_from_args(args)
    except ParameterError as exc:
        parser.error(str(exc))
    return args.command, cfg, args


def _stiffness(cfg: ExperimentConfig) -> float:
    return cfg.params.omega_tilde if cfg.ensemble == "quenched" else cfg.params.c


def run_command(command: str, cfg: ExperimentConfig, workers: int = 1, interval=None):
    if command == "density":
        return run_density_experiment(cfg, workers)
    if command == "gap":
        return run_gap_experiment(cfg, workers)
    if command == "fermi-fluct":
        return run_fermi_fluctuation_experiment(cfg, workers)
    if command == "predict":
        return run_prediction(cfg)
    if command == "number-variance":
        k = _stiffness(cfg)
        interval = interval or centered_half_interval(cfg.params.n, k)
        report = run_number_variance_experiment(
            cfg.params.n, k, tuple(interval), cfg.n_samples, cfg.seed, workers
        )
        # keep enough to rebuild the ExperimentConfig on replay
        report.manifest.update(cfg.manifest("number-variance"))
        report.manifest["interval"] = list(interval)
        return report
    raise ParameterError(f"unknown command {command!r}")


def config_from_manifest(manifest: dict) -> tuple[str, ExperimentConfig, list | None]:
    params = EnsembleParams(**manifest["params"])
    g = manifest["grid"]
    cfg = ExperimentConfig(
        params,
        manifest["n_samples"],
        seed=manifest["seed"],
        grid=Grid(g["xmin"], g["xmax"], g["bins"]),
        rho0=manifest.get("rho0", "semicircle"),
        ensemble=manifest.get("ensemble", "quenched"),
        edge_threshold=manifest.get("edge_threshold", 0.01),
    )
    return manifest["command"], cfg, manifest.get("interval")


def main(argv=None) -> int:
    command, cfg, args = parse_cli(argv)
    interval = getattr(args, "interval", None)
    try:
        if command == "replay":
            command, cfg, interval = config_from_manifest(read_manifest(args.manifest))
        report = run_command(command, cfg, args.workers, interval)
    except (ParameterError, NumericError, KeyError, TypeError) as exc:
        print(f"hlgap: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"hlgap: error: {exc}", file=sys.stderr)
        return 1
    try:
        write_report(report, args.out)
    except OSError as exc:
        print(f"hlgap: cannot write report to {args.out}: {exc}", file=sys.stderr)
        return 1
    for w in report.warnings:
        print(f"hlgap: warning: {w}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
