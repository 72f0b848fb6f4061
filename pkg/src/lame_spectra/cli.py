"""Command-line entry point.

    lame-spectra <command> --config <path|builtin> --out <dir> [--tol X] [--seed N] [--refine K]
                 [--experiment NAME] [--max-iter N]

Exit status: 0 on success or PASS, 1 on FAIL or a numerical failure (diagnostic in error.json),
2 on a usage or configuration error (nothing is written).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments as E
from .assembly import assemble_pencil, export_coo
from .config import describe_builtins, load_config
from .errors import ConfigError, LameSpectraError, MeshError
from .mesh import write_mesh
from .problem import Kind, factor_threshold, validate
from .spectral import eigensolve, reduce_to_standard, root_chains, sector_check_pencil, write_spectrum_csv

COMMANDS = ("mesh", "assemble", "eig", "sector", "experiment", "builtins")
_NEEDS_CONFIG = ("mesh", "assemble", "eig", "sector")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lame-spectra", description="Spectral analysis of perturbed Lame boundary forms.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="INI file or built-in name")
    p.add_argument("--out", help="output directory")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--refine", type=int, default=0, help="extra uniform refinements")
    p.add_argument("--experiment", choices=sorted(E.EXPERIMENTS))
    p.add_argument("--max-iter", type=int, default=None, help="total QR sweeps (default 200 N)")
    return p


def _hash_params(params: dict) -> str:
    return hashlib.sha256(json.dumps(params, sort_keys=True).encode()).hexdigest()


def _run_experiment(args, problem) -> E.ExperimentReport:
    name = args.experiment
    if name == "exp_sector_sweep":
        if problem is None:
            rep = E.exp_sector_sweep(M_list=(0.1, 0.3, float(np.sin(np.pi / 4)), 0.9), trials=20, seed=args.seed)
        else:
            rep = E.exp_sector_sweep(problem, seed=args.seed)
    elif name == "exp_korn_scan":
        rep = E.exp_korn_scan(problem.kind if problem is not None else Kind.D2)
    elif name == "exp_identity_greens":
        rep = E.exp_identity_greens(seed=args.seed)
    else:
        rep = E.EXPERIMENTS[name]()
    if problem is not None and problem.config_hash:
        rep.config_hash = problem.config_hash
    elif not rep.config_hash:
        rep.config_hash = _hash_params({"experiment": name, "seed": args.seed, **rep.parameters})
    return rep


def _check_args(args) -> None:
    if args.command == "builtins":
        return
    if args.out is None:
        raise ConfigError("--out is required")
    if args.command in _NEEDS_CONFIG and args.config is None:
        raise ConfigError(f"{args.command} needs --config")
    if args.command == "experiment" and args.experiment is None:
        raise ConfigError("experiment needs --experiment NAME")
    if args.tol <= 0 or args.refine < 0 or (args.max_iter is not None and args.max_iter < 1):
        raise ConfigError("--tol, --max-iter must be positive and --refine non-negative")
    out = Path(args.out)
    if out.exists() and not out.is_dir():
        raise ConfigError(f"{out} exists and is not a directory")


def _execute(args, problem, out: Path) -> int:
    cmd = args.command
    h = problem.config_hash if problem is not None else ""
    if cmd == "mesh":
        write_mesh(problem.mesh, out / "mesh.txt", header=[f"config_sha256 {h}"])
        return 0
    if cmd == "experiment":
        rep = _run_experiment(args, problem)
        rep.write(out)
        print(f"{rep.name}: {rep.verdict}")
        return 0 if rep.passed else 1
    pencil = assemble_pencil(problem)
    if cmd == "assemble":
        export_coo(pencil.B, out / "B.coo", h)
        export_coo(pencil.A, out / "A.coo", h)
        export_coo(pencil.P, out / "P.coo", h)
        return 0
    if cmd == "eig":
        C = reduce_to_standard(pencil.A, pencil.B)
        spec = eigensolve(C, tol=args.tol, max_iter=args.max_iter)
        chains = root_chains(C, spec)
        write_spectrum_csv(out / "spectrum.csv", spec, chains, h)
        return 0
    # sector
    rep = sector_check_pencil(pencil, tol=args.tol, completeness_threshold=factor_threshold(problem.kind))
    lam = rep.eigenvalues
    info = {
        "config_sha256": h, "N": pencil.N, "M": rep.M, "M_compact": rep.M_compact,
        "bound_angle": rep.bound, "max_angle": rep.max_angle, "max_disc": rep.max_disc,
        "fredholm_margin": rep.fredholm_margin, "threshold_breach": rep.threshold_breach,
        "completeness_threshold": rep.completeness_threshold,
        "below_completeness_threshold": rep.below_completeness_threshold,
        "violations": [[v.real, v.imag] for v in rep.violations],
        # with a compact part only finitely many eigenvalues may leave the sector
        "verdict": "PASS" if rep.ok else ("FINITE_EXCEPTIONS" if rep.M_compact > 0 else "FAIL"),
    }
    (out / "sector.json").write_text(json.dumps(info, indent=2, sort_keys=True) + "\n")
    lines = [f"# config_sha256 {h}", "re,im"] + [f"{float(v.real)!r},{float(v.imag)!r}" for v in lam]
    (out / "sector.csv").write_text("\n".join(lines) + "\n")
    print(f"sector: {info['verdict']} (M = {rep.M:.6g})")
    return 1 if info["verdict"] == "FAIL" else 0


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _check_args(args)
        if args.command == "builtins":
            print(describe_builtins())
            return 0
        problem = None
        if args.config is not None:
            problem = load_config(args.config, refine_extra=args.refine)
            validate(problem)
    except ConfigError as exc:
        print(f"lame-spectra: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (MeshError, LameSpectraError) as exc:
        print(f"lame-spectra: invalid problem: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return _execute(args, problem, out)
    except LameSpectraError as exc:
        diag = {"error": exc.code, "message": str(exc), "command": args.command,
                "config_sha256": problem.config_hash if problem is not None else ""}
        (out / "error.json").write_text(json.dumps(diag, indent=2, sort_keys=True) + "\n")
        print(f"lame-spectra: {exc.code}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
