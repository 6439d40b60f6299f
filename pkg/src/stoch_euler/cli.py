"""Command-line entry point ``stoch-euler``.

Exit codes: 0 success, 1 check failures, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .diagnostics import DiagnosticsSettings, record
from .ensemble import (SOLVERS, EnsembleSpec, initial_grid, initial_particles, run_ensemble,
                       simulate, write_grid_snapshot)
from .measures import save_particles, total_variation
from .torus_kernel import KernelTable, build_kernel_table, kernel_eval
from .verify import TARGETS, run_verify

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        return load_config(path)
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from None
    except ConfigError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _report(result, outdir: Path) -> int:
    for solver, member, err in result.failures:
        print(f"member {member} ({solver}) failed: {err.splitlines()[0]}", file=sys.stderr)
    bad = [r for r in result.reports if not r.passed]
    for r in bad:
        print(f"FAIL {r.check} (first violation at t={r.first_failure})", file=sys.stderr)
    print(f"outputs written to {outdir}")
    return EXIT_OK if result.passed else EXIT_FAIL


def cmd_simulate(args) -> int:
    cfg = _config(args.config)
    out = Path(args.out or cfg.output.dir)
    return _report(simulate(cfg, out, args.seed, args.solver), out)


def cmd_ensemble(args) -> int:
    cfg = _config(args.config)
    if args.members < 1:
        raise UsageError("--members must be >= 1")
    out = Path(args.out or cfg.output.dir)
    seed = cfg.sim.seed if args.seed is None else args.seed
    return _report(run_ensemble(EnsembleSpec(args.members, seed, args.solver), cfg, out), out)


def cmd_verify(args) -> int:
    ok, paths = run_verify(args.target, args.out, quick=args.quick)
    for p in paths:
        print(f"report: {p}")
    print("all checks passed" if ok else "some checks FAILED")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_kernel_table(args) -> int:
    if args.load:
        path = Path(args.load)
        if not path.is_file():
            raise UsageError(f"kernel table not found: {path}")
        try:
            table = KernelTable.load(path)
        except ValueError as exc:
            raise UsageError(f"{path}: {exc}") from None
    else:
        table = build_kernel_table(args.resolution, args.cutoff)
        if args.out:
            table.save(args.out)
            print(f"wrote {args.out}")
    rng = np.random.default_rng(0)
    r = rng.uniform(0.2, 3.0, 512)
    th = rng.uniform(0, 2 * np.pi, 512)
    pts = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
    err = float(np.max(np.abs(table(pts) - kernel_eval(pts, table.cutoff))))
    print(json.dumps({"resolution": table.resolution, "cutoff": table.cutoff,
                      "max_interp_error_far_field": err}))
    return EXIT_OK


def cmd_init_preview(args) -> int:
    cfg = _config(args.config)
    mu = initial_particles(cfg)
    settings = DiagnosticsSettings(cfg.output.hminus1_cutoff, cfg.output.hminus4_cutoff)
    rec = record(mu, mu, settings)
    info = {"kind": cfg.init.kind, "atoms": len(mu), "mass": rec.mass, "tv_norm": total_variation(mu),
            "min_weight": rec.min_weight, "hminus1_trunc": rec.hminus1_trunc}
    if cfg.spectral.enabled:
        xi = initial_grid(cfg, mu)
        info.update(grid_resolution=xi.resolution, grid_mass=xi.integral(),
                    grid_min=float(xi.values.min()), grid_max=float(xi.values.max()))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        save_particles(mu, out / "init_particles.jsonl", kind=cfg.init.kind)
        if cfg.spectral.enabled:
            write_grid_snapshot(xi, out / "init_grid", epsilon=cfg.init.epsilon)
        info["out"] = str(out)
    print(json.dumps(info, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stoch-euler",
                                description="Stochastic 2D Euler with transport noise on the torus.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, members=False):
        sp.add_argument("--config", metavar="PATH", help="run configuration file")
        sp.add_argument("--seed", type=int, help="base seed (default: sim.seed)")
        sp.add_argument("--solver", choices=SOLVERS, default="particle")
        sp.add_argument("--out", metavar="DIR", help="output directory (default: output.dir)")
        if members:
            sp.add_argument("--members", type=int, default=4)

    sp = sub.add_parser("simulate", help="single run")
    common(sp)
    sp.set_defaults(func=cmd_simulate)
    sp = sub.add_parser("ensemble", help="ensemble run with checks")
    common(sp, members=True)
    sp.set_defaults(func=cmd_ensemble)

    sp = sub.add_parser("verify", help="run the property suite")
    sp.add_argument("target", nargs="?", default="all", choices=TARGETS)
    sp.add_argument("--quick", action="store_true", help="smaller canned runs")
    sp.add_argument("--out", metavar="DIR", default="verify_out")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("kernel-table", help="emit or load a kernel table file")
    sp.add_argument("--resolution", type=int, default=1024)
    sp.add_argument("--cutoff", type=int, default=32)
    sp.add_argument("--out", metavar="FILE", help="write the table here")
    sp.add_argument("--load", metavar="FILE", help="load and check an existing table")
    sp.set_defaults(func=cmd_kernel_table)

    sp = sub.add_parser("init-preview", help="summarize (and optionally dump) the initial datum")
    sp.add_argument("--config", metavar="PATH")
    sp.add_argument("--out", metavar="DIR")
    sp.set_defaults(func=cmd_init_preview)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"stoch-euler {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
