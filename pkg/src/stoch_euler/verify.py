"""Property suite behind ``stoch-euler verify``.

Three groups of checks, each written to its own CSV:

* ``properties.csv``  noise assumptions and kernel identities
* ``nonlinear.csv``   oracle equivalence, invariances, continuity of N
* ``apriori.csv``     a priori bounds on a canned small ensemble

The first two use the columns ``case, metric, value, tolerance, pass``;
the last uses the report columns of :mod:`stoch_euler.diagnostics`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig
from .diagnostics import Report, write_report_csv
from .ensemble import EnsembleSpec, run_ensemble
from .grid import AREA, GridField, mesh
from .measures import CurveSpec, ParticleMeasure, mollify, sample_vortex_sheet
from .noise_model import covariance, covariance_y_derivative_at_diagonal, divergence_check, make_basis, \
    strat_drift_correction
from .nonlinear import (C_REG, TestFunction, classical_nonlinear, continuity_experiment, f_phi,
                        n_bound_check, nonlinear_functional, zero_average_check)
from .torus_kernel import kernel_eval, spectral_curl, spectral_divergence, velocity_from_vorticity

ROW_COLUMNS = ("case", "metric", "value", "tolerance", "pass")


@dataclass(frozen=True)
class CheckRow:
    case: str
    metric: str
    value: float
    tolerance: float
    passed: bool

    @classmethod
    def upper(cls, case: str, metric: str, value: float, tolerance: float) -> "CheckRow":
        """Row that passes iff ``value <= tolerance``."""
        value = float(value)
        return cls(case, metric, value, float(tolerance), bool(value <= tolerance))


def write_rows_csv(rows, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(ROW_COLUMNS)
        for r in rows:
            w.writerow([r.case, r.metric, repr(r.value), repr(r.tolerance), "1" if r.passed else "0"])
    return path


def read_rows_csv(path) -> list[CheckRow]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return [CheckRow(r[0], r[1], float(r[2]), float(r[3]), r[4] == "1") for r in rows[1:]]


# ----------------------------------------------------------------------------- noise and kernel

def paper_c(beta: float, cutoff: int) -> float:
    """``2 sum_{k1 >= 0, k2 > 0, |k| <= cutoff} |k|^(2 - 2 beta)``."""
    k = np.arange(-cutoff, cutoff + 1)
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    r2 = (k1**2 + k2**2).astype(float)
    sel = (k1 >= 0) & (k2 > 0) & (r2 <= cutoff**2)
    return float(2.0 * np.sum(r2[sel] ** (1.0 - beta)))


def verify_noise(beta: float = 4.0, cutoff: int = 8, seed: int = 0) -> list[CheckRow]:
    basis = make_basis(beta, cutoff)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, 2 * np.pi, size=(100, 2))
    diag = max(float(np.max(np.abs(covariance(basis, p, p) - basis.c * np.eye(2)))) for p in pts)
    deriv = max(float(np.max(np.abs(covariance_y_derivative_at_diagonal(basis, p)))) for p in pts)
    strat = max(float(np.max(np.abs(strat_drift_correction(basis, p)))) for p in pts)
    case = f"noise(beta={beta:g},cutoff={cutoff})"
    return [
        CheckRow.upper(case, "max_divergence", np.max(divergence_check(basis)), 1e-12),
        CheckRow.upper(case, "diag_covariance_minus_cI", diag, 1e-12),
        CheckRow.upper(case, "diag_covariance_y_derivative", deriv, 1e-12),
        CheckRow.upper(case, "strat_correction", strat, 1e-12),
        CheckRow.upper(case, "c_vs_lattice_formula_rel",
                       abs(basis.c - paper_c(beta, cutoff)) / basis.c, 1e-12),
        CheckRow(case, "c1_sum_finite", basis.c1_sum, np.inf, bool(np.isfinite(basis.c1_sum))),
    ]


def verify_kernel(n: int = 128, cutoff: int = 32, seed: int = 0) -> list[CheckRow]:
    rng = np.random.default_rng(seed)
    x = rng.uniform(-np.pi, np.pi, size=(256, 2))
    odd = float(np.max(np.abs(kernel_eval(x, cutoff) + kernel_eval(-x, cutoff))))
    # random mean-free field; the Nyquist row and column carry no well-defined derivative
    coeffs = GridField(rng.standard_normal((n, n))).coeffs.copy()
    coeffs[0, 0] = 0.0
    coeffs[n // 2, :] = 0.0
    coeffs[:, n // 2] = 0.0
    xi = GridField(np.fft.ifft2(coeffs).real * n * n)
    u1, u2 = velocity_from_vorticity(xi)
    scale = float(np.max(np.abs(xi.values)))
    div = float(np.max(np.abs(spectral_divergence(u1, u2)))) / scale
    back = spectral_curl(u1, u2)
    trip = float(np.linalg.norm(back.values - xi.values) / np.linalg.norm(xi.values))
    case = f"kernel(n={n},cutoff={cutoff})"
    return [
        CheckRow.upper(case, "oddness", odd, 1e-12),
        CheckRow.upper(case, "divergence_rel", div, 1e-12),
        CheckRow.upper(case, "curl_biot_savart_roundtrip_rel", trip, 1e-12),
    ]


# ----------------------------------------------------------------------------- nonlinear term

def steady_datum(n: int) -> GridField:
    x1, x2 = mesh(n)
    return GridField(2.0 + np.cos(x1) * np.cos(x2))


def rough_datum(n: int) -> GridField:
    """A non-steady smooth positive density (C^2 but not C^3)."""
    x1, x2 = mesh(n)
    return GridField(2.0 + np.cos(x1) * np.cos(x2) + 0.5 * np.abs(np.sin(x1)) ** 3 * np.sin(x2)
                     + 0.3 * np.abs(np.sin((x1 + x2) / 2)) ** 3)


def oracle_error(xi: GridField, phi: TestFunction) -> tuple[float, float]:
    """(|N_grid - classical|, |classical|) with the grid kernel cutoff at the resolution."""
    n_val = nonlinear_functional(xi, phi, xi.resolution)
    c_val = classical_nonlinear(xi, phi)
    return abs(n_val - c_val), abs(c_val)


def _oracle_scale(xi: GridField, phi: TestFunction) -> float:
    u1, u2 = velocity_from_vorticity(xi)
    x1, x2 = mesh(xi.resolution)
    g = phi.grad(x1, x2)
    l2 = np.sqrt(AREA * np.mean(xi.values**2))
    ul2 = np.sqrt(AREA * np.mean(u1.values**2 + u2.values**2))
    return float(l2 * ul2 * np.max(np.hypot(g[..., 0], g[..., 1])))


def verify_nonlinear(quick: bool = False) -> list[CheckRow]:
    rows = []
    phi = TestFunction.trig((0, 1), "sin")
    # steady datum: both sides vanish, check in absolute form
    for n in (64, 128):
        xi = steady_datum(n)
        err, _ = oracle_error(xi, phi)
        rows.append(CheckRow.upper(f"oracle_steady[n={n}]", "abs_error_over_scale",
                                   err / _oracle_scale(xi, phi), 1e-3))
    errs = {}
    for n in ((64, 128) if quick else (64, 128, 256)):
        err, ref = oracle_error(rough_datum(n), phi)
        errs[n] = err / ref
        rows.append(CheckRow.upper(f"oracle_rough[n={n}]", "rel_error", errs[n],
                                   1e-3 if n >= 128 else np.inf))
    ns = sorted(errs)
    rows.append(CheckRow.upper("oracle_rough", "refinement_ratio", errs[ns[-1]] / errs[ns[-2]], 1.0))

    xi = rough_datum(128)
    base = nonlinear_functional(xi, phi, 128)
    shifted = nonlinear_functional(GridField(xi.values + 5.0), phi, 128)
    rows.append(CheckRow.upper("shift_invariance[n=128]", "abs_change", abs(shifted - base), 1e-8))

    psi = TestFunction.trig((2, 1), "cos")
    rows.append(CheckRow.upper("zero_average", "grid_mean_F_phi",
                               abs(zero_average_check(psi, (0.7, 2.3), 32)), 1e-8))
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 2 * np.pi, size=(512, 2))
    y = rng.uniform(0, 2 * np.pi, size=(512, 2))
    sym = float(np.max(np.abs(f_phi(x, y, psi, 32) - f_phi(y, x, psi, 32))))
    rows.append(CheckRow.upper("symmetry", "max_F_xy_minus_F_yx", sym, 1e-12))

    mu = sample_vortex_sheet(CurveSpec("segment", start=(1.5, 2.0), end=(3.5, 2.8)),
                             128 if quick else 256, 1.0)
    lam = 2.5
    a = nonlinear_functional(mu, psi, 32)
    b = nonlinear_functional(ParticleMeasure(mu.positions, lam * mu.weights), psi, 32)
    rows.append(CheckRow.upper("quadratic_scaling", "rel_error", abs(b - lam**2 * a) / abs(lam**2 * a), 1e-12))
    bound = n_bound_check(mu, psi, 32)
    rows.append(CheckRow.upper("bound", "abs_N_over_tv2_c2", bound.ratio, C_REG))

    # mollified sheets converge weak-* to the sheet; N must follow (non-negative measures)
    sheet = sample_vortex_sheet(CurveSpec("segment", start=(1.5, 2.0), end=(3.5, 2.8)), 512, 1.0)
    eps = (0.4, 0.2, 0.1, 0.05) if quick else (0.4, 0.2, 0.1, 0.05, 0.025)
    res = 128 if quick else 256
    rep = continuity_experiment([mollify(sheet, e, res) for e in eps], sheet,
                                TestFunction.trig((1, 1), "sin"), 32)
    for i, d, delta in rep.rows():
        rows.append(CheckRow(f"continuity[eps={eps[i]:g}]", "weakstar_distance", d, np.inf, True))
        rows.append(CheckRow(f"continuity[eps={eps[i]:g}]", "N_delta", delta, np.inf, True))
    need = 5.0 if quick else 10.0
    rows.append(CheckRow("continuity", "reduction_first_to_last", rep.reduction, need,
                         bool(rep.reduction >= need and rep.converging)))
    return rows


# ----------------------------------------------------------------------------- a priori checks

def canned_config(quick: bool = False) -> RunConfig:
    """Small smooth spectral run long enough for the Holder fit (5 dyadic lags)."""
    return RunConfig().with_values(
        sim__dt=2.5e-4, sim__T=0.125, sim__particles=256,
        spectral__resolution=32 if quick else 64,
        init__kind="blob_grid", init__amplitude=0.9, init__epsilon=0.3,
        output__every=2, output__hminus4_cutoff=8, output__snapshots=False)


def canned_particle_config(quick: bool = False) -> RunConfig:
    return RunConfig().with_values(
        sim__dt=1e-3, sim__T=0.25, sim__particles=128 if quick else 256,
        spectral__enabled=False, output__every=25, output__snapshots=False)


def verify_apriori(quick: bool = False, outdir=None, workers: int | None = None) -> list[Report]:
    outdir = Path(outdir) if outdir is not None else None
    sub = (lambda name: outdir / name) if outdir is not None else (lambda name: None)
    spectral = run_ensemble(EnsembleSpec(32 if quick else 64, 0, "spectral"), canned_config(quick),
                            sub("apriori_spectral"), workers)
    particle = run_ensemble(EnsembleSpec(2 if quick else 4, 0, "particle"), canned_particle_config(quick),
                            sub("apriori_particle"), workers)
    reports = spectral.reports + particle.reports
    for solver, member, err in spectral.failures + particle.failures:
        rep = Report(f"{solver}:member_failure[{member}]")
        rep.add(0.0, 1.0, 0.0)
        rep.notes["error"] = err
        reports.append(rep)
    return reports


# ----------------------------------------------------------------------------- driver

TARGETS = ("all", "noise", "kernel", "nonlinear", "apriori")


def run_verify(target: str = "all", outdir="verify_out", quick: bool = False,
               workers: int | None = None) -> tuple[bool, list[Path]]:
    """Run the selected checks, write the CSVs, return (all passed, paths)."""
    if target not in TARGETS:
        raise ValueError(f"unknown verify target {target!r}")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    ok = True
    paths = []
    if target in ("all", "noise", "kernel"):
        rows = []
        if target != "kernel":
            rows += verify_noise()
        if target != "noise":
            rows += verify_kernel()
        paths.append(write_rows_csv(rows, outdir / "properties.csv"))
        ok &= all(r.passed for r in rows)
    if target in ("all", "nonlinear"):
        rows = verify_nonlinear(quick)
        paths.append(write_rows_csv(rows, outdir / "nonlinear.csv"))
        ok &= all(r.passed for r in rows)
    if target in ("all", "apriori"):
        reports = verify_apriori(quick, outdir, workers)
        paths.append(write_report_csv(reports, outdir / "apriori.csv"))
        ok &= all(r.passed for r in reports)
    return bool(ok), paths


__all__ = [
    "CheckRow", "write_rows_csv", "read_rows_csv", "paper_c", "verify_noise", "verify_kernel",
    "verify_nonlinear", "verify_apriori", "canned_config", "canned_particle_config",
    "steady_datum", "rough_datum", "oracle_error", "run_verify", "TARGETS",
]
