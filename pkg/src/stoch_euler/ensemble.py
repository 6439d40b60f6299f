"""Single runs and ensembles: initial data, member loops, outputs on disk.

Member ``m`` of a run with base seed ``s`` draws its step-``n`` increment from
the counter-based stream ``(s, m, n)``, whichever solver consumes it, so the
particle and spectral solvers of one member share a Brownian path and the
results do not depend on scheduling.
"""

from __future__ import annotations

import json
import os
import platform
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, emit_config
from .diagnostics import (DiagnosticsRecord, DiagnosticsSettings, EnsembleSummary, Report,
                          check_energy_bound, check_holder_scaling, check_hminus1_uniform,
                          check_mass_positivity, record, sobolev_vector, write_records_csv,
                          write_report_csv)
from .grid import GridField
from .measures import (CurveSpec, ParticleMeasure, blob_grid, load_particles, mollify,
                       sample_vortex_sheet, save_particles, total_variation, weakstar_distance)
from .noise_model import NoiseBasis, make_basis
from .particle_solver import SimState, StepPlan, step
from .rng import brownian_increments, member_seed
from .spectral_solver import SpectralState, step_ito

SOLVERS = ("particle", "spectral", "both")


@dataclass(frozen=True)
class EnsembleSpec:
    members: int = 1
    base_seed: int = 0
    solver: str = "particle"

    def __post_init__(self):
        if self.members < 1:
            raise ValueError("members must be >= 1")
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}, got {self.solver!r}")


def initial_particles(cfg: RunConfig) -> ParticleMeasure:
    i = cfg.init
    n = cfg.sim.particles
    if i.kind == "sheet_circle":
        mu = sample_vortex_sheet(CurveSpec("circle", center=(i.center1, i.center2), radius=i.radius),
                                 n, i.mass)
    elif i.kind == "sheet_segment":
        mu = sample_vortex_sheet(CurveSpec("segment", start=(i.start1, i.start2), end=(i.end1, i.end2)),
                                 n, i.mass)
    elif i.kind == "blob_grid":
        side = int(round(np.sqrt(n)))
        if side * side != n:
            raise ValueError(f"blob_grid needs a square particle count, got {n}")
        mu = blob_grid(side, i.mass, i.amplitude)
    else:
        mu, _ = load_particles(i.file)
    if total_variation(mu) > i.mass_bound * (1 + 1e-12):
        raise ValueError(f"initial total variation {total_variation(mu):.6g} exceeds "
                         f"init.mass_bound = {i.mass_bound}")
    return ParticleMeasure(mu.positions, mu.weights, i.mass_bound)


def initial_grid(cfg: RunConfig, particles: ParticleMeasure | None = None) -> GridField:
    """Mollified initial measure on the spectral grid."""
    mu = particles if particles is not None else initial_particles(cfg)
    return mollify(mu, cfg.init.epsilon, cfg.spectral.resolution)


def noise_basis(cfg: RunConfig) -> NoiseBasis | None:
    return make_basis(cfg.noise.beta, cfg.noise.cutoff) if cfg.noise.enabled else None


def step_plan(cfg: RunConfig) -> StepPlan:
    s = cfg.sim
    return StepPlan(s.dt, s.blob_radius, s.kernel_cutoff, cfg.noise.enabled, s.table_resolution)


def diag_settings(cfg: RunConfig) -> DiagnosticsSettings:
    return DiagnosticsSettings(cfg.output.hminus1_cutoff, cfg.output.hminus4_cutoff)


def _output_steps(cfg: RunConfig) -> list[int]:
    steps = cfg.steps
    out = list(range(0, steps + 1, cfg.output.every))
    if out[-1] != steps:
        out.append(steps)
    return out


@dataclass
class MemberResult:
    member: int
    solver: str
    records: list = field(default_factory=list)
    holder: list = field(default_factory=list)
    final: object = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def write_grid_snapshot(xi: GridField, path_stem: Path, **meta) -> None:
    """Row-major little-endian float64 dump plus a JSON header."""
    path_stem = Path(path_stem)
    path_stem.with_suffix(".bin").write_bytes(np.ascontiguousarray(xi.values, dtype="<f8").tobytes())
    header = {"resolution": xi.resolution, "dtype": "float64-le", "order": "row-major, axis 0 = x1"}
    header.update(meta)
    path_stem.with_suffix(".json").write_text(json.dumps(header, sort_keys=True), encoding="utf-8")


def read_grid_snapshot(path_stem) -> tuple[GridField, dict]:
    path_stem = Path(path_stem)
    header = json.loads(path_stem.with_suffix(".json").read_text(encoding="utf-8"))
    n = header["resolution"]
    data = np.frombuffer(path_stem.with_suffix(".bin").read_bytes(), dtype="<f8")
    return GridField(data.reshape(n, n).astype(float)), header


def run_particle_member(cfg: RunConfig, member: int, base_seed: int,
                        outdir: Path | None = None) -> MemberResult:
    basis = noise_basis(cfg)
    plan = step_plan(cfg)
    mu0 = initial_particles(cfg)
    settings = diag_settings(cfg)
    state = SimState.initial(mu0, basis, base_seed, member)
    res = MemberResult(member, "particle")
    outputs = set(_output_steps(cfg))

    def emit(st):
        res.records.append(record(st, mu0, settings))
        res.holder.append(sobolev_vector(st.particles, -4.0, settings.hminus4_cutoff))
        if outdir is not None and cfg.output.snapshots:
            save_particles(st.particles, outdir / f"snap_{st.step_index}.jsonl",
                           t=st.t, step=st.step_index, member=member)

    try:
        emit(state)
        for _ in range(cfg.steps):
            state = step(state, plan, basis)
            if state.step_index in outputs:
                emit(state)
    except Exception as exc:  # recorded, the ensemble carries on
        res.error = f"{type(exc).__name__}: {exc}"
    res.final = state
    return res


def run_spectral_member(cfg: RunConfig, member: int, base_seed: int,
                        outdir: Path | None = None) -> MemberResult:
    basis = noise_basis(cfg)
    xi0 = initial_grid(cfg)
    settings = diag_settings(cfg)
    state = SpectralState.from_field(xi0)
    res = MemberResult(member, "spectral")
    outputs = set(_output_steps(cfg))
    dt = cfg.sim.dt

    def emit(st):
        xi = st.xi
        res.records.append(record(xi, xi0, settings, t=st.t))
        res.holder.append(sobolev_vector(xi, -4.0, settings.hminus4_cutoff))
        if outdir is not None and cfg.output.snapshots:
            write_grid_snapshot(xi, outdir / f"snap_{st.step_index}", t=st.t, step=st.step_index,
                                member=member)

    try:
        emit(state)
        for n in range(cfg.steps):
            dW = brownian_increments(basis.size, dt, base_seed, member, n) if basis is not None else None
            state = step_ito(state, dt, dW, basis, advect=cfg.spectral.advect)
            if state.step_index in outputs:
                emit(state)
    except Exception as exc:
        res.error = f"{type(exc).__name__}: {exc}"
    res.final = state
    return res


def run_member(cfg: RunConfig, member: int, base_seed: int, solver: str,
               outdir: Path | None = None) -> list[MemberResult]:
    out = []
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
    for name in (("particle", "spectral") if solver == "both" else (solver,)):
        sub = None
        if outdir is not None:
            sub = outdir / name if solver == "both" else outdir
            sub.mkdir(parents=True, exist_ok=True)
        fn = run_particle_member if name == "particle" else run_spectral_member
        try:
            r = fn(cfg, member, base_seed, sub)
        except Exception as exc:
            r = MemberResult(member, name, error=f"{type(exc).__name__}: {exc}\n{traceback.format_exc()}")
        if sub is not None and r.records:
            write_records_csv(r.records, sub / "diag.csv")
        out.append(r)
    if solver == "both" and outdir is not None and all(r.ok for r in out):
        _write_cross(out, cfg, outdir / "cross.csv")
    return out


def _write_cross(results: list[MemberResult], cfg: RunConfig, path: Path) -> None:
    p, s = results
    lines = ["t,weakstar_particle_vs_spectral"]
    # both solvers emit at the same output steps; compare the final states
    d = weakstar_distance(p.final.particles, s.final.xi, diag_settings(cfg).family)
    lines.append(f"{p.final.t!r},{d!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def worker_count() -> int:
    env = os.environ.get("SEL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"SEL_THREADS must be an integer, got {env!r}") from None
    return max(1, os.cpu_count() or 1)


@dataclass
class EnsembleResult:
    spec: EnsembleSpec
    results: dict                     # solver -> list[MemberResult] sorted by member
    reports: list
    summaries: dict
    failures: list

    @property
    def passed(self) -> bool:
        return not self.failures and all(r.passed for r in self.reports)


def manifest(cfg: RunConfig, spec: EnsembleSpec) -> dict:
    basis = noise_basis(cfg)
    plan = step_plan(cfg)
    return {
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config": cfg.as_dict(),
        "config_text": emit_config(cfg),
        "ensemble": {"members": spec.members, "base_seed": spec.base_seed, "solver": spec.solver,
                     "member_seeds": [member_seed(spec.base_seed, m) for m in range(spec.members)],
                     "rng": "Philox(SeedSequence([base_seed, member, step]))"},
        "noise": basis.summary() if basis is not None else {"enabled": False},
        "particle": {"blob_radius": plan.blob_radius, "kernel_cutoff": plan.cutoff,
                     "table_resolution": plan.table_resolution},
        "spectral": {"resolution": cfg.spectral.resolution, "dealias": "2/3",
                     "mollifier_epsilon": cfg.init.epsilon},
        "diagnostics": {"hminus1_cutoff": cfg.output.hminus1_cutoff,
                        "hminus4_cutoff": cfg.output.hminus4_cutoff, "weakstar_family": 40},
    }


def ensemble_checks(cfg: RunConfig, results: list[MemberResult], solver: str) -> list[Report]:
    """All a priori checks whose preconditions the ensemble meets."""
    ok = [r for r in results if r.ok]
    if not ok:
        return []
    reports = []
    basis = noise_basis(cfg)
    c1 = basis.c1_sum if basis is not None else 0.0
    if solver == "particle":
        for r in ok:
            rep = check_mass_positivity(r.records)
            rep.check = f"mass_positivity[{r.member}]"
            reports.append(rep)
    else:
        max0 = float(np.max(initial_grid(cfg).values))
        for r in ok:
            rep = check_mass_positivity(r.records, max_xi0=max0)
            rep.check = f"mass_positivity[{r.member}]"
            reports.append(rep)
    times = np.array([x.t for x in ok[0].records])
    if len(ok) >= 16:
        energies = [[x.energy for x in r.records] for r in ok]
        reports.append(check_energy_bound(times, energies, c1))
    h1 = [[x.hminus1_trunc for x in r.records] for r in ok]
    first = ok[0].records[0]
    reports.append(check_hminus1_uniform(times, h1, first.hminus1_trunc, first.tv_norm, c1))
    if len(ok) >= 32:
        try:
            reports.append(check_holder_scaling(times, [r.holder for r in ok], cfg.sim.dt))
        except ValueError:
            pass  # too few dyadic lags for this run length
    return reports


def run_ensemble(spec: EnsembleSpec, cfg: RunConfig, outdir=None, workers: int | None = None
                 ) -> EnsembleResult:
    outdir = Path(outdir) if outdir is not None else None
    workers = workers or worker_count()
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)

    def job(m):
        sub = outdir / f"member_{m:04d}" if outdir is not None else None
        return run_member(cfg, m, spec.base_seed, spec.solver, sub)

    if workers == 1 or spec.members == 1:
        raw = [job(m) for m in range(spec.members)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(job, range(spec.members)))
    by_solver: dict = {}
    for member_results in raw:
        for r in member_results:
            by_solver.setdefault(r.solver, []).append(r)
    reports, summaries, failures = [], {}, []
    for solver, rs in by_solver.items():
        rs.sort(key=lambda r: r.member)
        failures += [(solver, r.member, r.error) for r in rs if not r.ok]
        good = [r for r in rs if r.ok]
        if not good:
            continue
        summary = EnsembleSummary.from_records([r.records for r in good])
        reps = ensemble_checks(cfg, rs, solver)
        holder = [r for r in reps if r.check == "holder_scaling"]
        if holder:
            summary.holder_slope = holder[0].notes["slope"]
            summary.holder_r2 = holder[0].notes["r2"]
        for rep in reps:
            rep.check = f"{solver}:{rep.check}"
        summaries[solver] = summary
        reports += reps
    result = EnsembleResult(spec, by_solver, reports, summaries, failures)
    if outdir is not None:
        for solver, summary in summaries.items():
            summary.write_csv(outdir / f"summary_{solver}.csv")
        write_report_csv(reports, outdir / "checks.csv")
        man = manifest(cfg, spec)
        man["failures"] = [{"solver": s, "member": m, "error": e.splitlines()[0]} for s, m, e in failures]
        (outdir / "manifest.json").write_text(json.dumps(man, indent=2, sort_keys=True), encoding="utf-8")
    return result


def simulate(cfg: RunConfig, outdir, seed: int | None = None, solver: str = "particle") -> EnsembleResult:
    """A single run: member 0 of an ensemble of one."""
    spec = EnsembleSpec(1, cfg.sim.seed if seed is None else seed, solver)
    return run_ensemble(spec, cfg, outdir, workers=1)


__all__ = [
    "EnsembleSpec", "EnsembleResult", "MemberResult", "initial_particles", "initial_grid",
    "noise_basis", "step_plan", "run_member", "run_ensemble", "simulate", "manifest",
    "worker_count", "write_grid_snapshot", "read_grid_snapshot", "ensemble_checks",
]
