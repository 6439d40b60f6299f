"""Vorticity measures: weighted particle clouds and grid densities.

Pairings, Fourier coefficients, truncated negative Sobolev norms, the weak-*
metric over a fixed trigonometric test family, heat-kernel mollification and
vortex-sheet initial data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .grid import AREA, TWO_PI, GridField, grid_points, mesh, wavenumbers, wrap
from .torus_kernel import disk_modes


@dataclass(frozen=True)
class ParticleMeasure:
    """Finite sum of weighted Dirac masses ``sum_j w_j delta_{x_j}``."""

    positions: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    mass_bound: float | None = None

    def __post_init__(self):
        pos = wrap(np.asarray(self.positions, dtype=float).reshape(-1, 2))
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(pos) != len(w):
            raise ValueError(f"{len(pos)} positions but {len(w)} weights")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "weights", w)
        if self.mass_bound is None:
            object.__setattr__(self, "mass_bound", float(np.sum(np.abs(w))))

    def __len__(self):
        return len(self.weights)

    @property
    def mass(self) -> float:
        return float(np.sum(self.weights))

    def with_positions(self, positions) -> "ParticleMeasure":
        return ParticleMeasure(positions, self.weights, self.mass_bound)

    def scaled(self, factor: float) -> "ParticleMeasure":
        return ParticleMeasure(self.positions, self.weights * factor, self.mass_bound * abs(factor))

    def __repr__(self):
        return f"ParticleMeasure(n={len(self)}, mass={self.mass:.6g}, M={self.mass_bound:.6g})"


Measure = ParticleMeasure | GridField


def total_variation(mu: Measure) -> float:
    if isinstance(mu, GridField):
        return float(np.mean(np.abs(mu.values)) * AREA)
    if len(mu) == 0:
        return 0.0
    # merge atoms sitting at exactly the same (reduced) position
    _, inverse = np.unique(mu.positions, axis=0, return_inverse=True)
    merged = np.zeros(inverse.max() + 1)
    np.add.at(merged, inverse.ravel(), mu.weights)
    return float(np.sum(np.abs(merged)))


def mass(mu: Measure) -> float:
    if isinstance(mu, GridField):
        return mu.integral()
    return mu.mass


def fourier_coefficients(mu: Measure, modes) -> np.ndarray:
    """``muhat(k) = (2pi)^-2 <mu, exp(-i k.x)>`` for each row of ``modes``."""
    modes = np.asarray(modes).reshape(-1, 2)
    if isinstance(mu, GridField):
        n = mu.resolution
        if np.any(np.abs(modes) >= n / 2):
            raise ValueError(f"mode outside the resolved band of a {n}-grid")
        return mu.coeffs[modes[:, 0] % n, modes[:, 1] % n]
    phase = mu.positions @ modes.T.astype(float)
    return (mu.weights @ np.exp(-1j * phase)) / AREA


def fourier_coefficient(mu: Measure, k) -> complex:
    return complex(fourier_coefficients(mu, np.asarray(k).reshape(1, 2))[0])


def sobolev_norm(mu: Measure, s: float, cutoff: int) -> float:
    """Truncated ``H^s`` norm, ``( (2pi)^2 sum_{|k|<=cutoff} (1+|k|^2)^s |muhat(k)|^2 )^(1/2)``.

    The ``(2pi)^2`` factor makes ``s = 0`` coincide with the L^2 norm of a density.
    """
    if s > 0:
        raise ValueError("only non-positive orders are supported")
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    modes = np.vstack([[0, 0], disk_modes(cutoff)])
    coeffs = fourier_coefficients(mu, modes)
    weight = (1.0 + np.sum(modes.astype(float) ** 2, axis=1)) ** s
    return float(np.sqrt(AREA * np.sum(weight * np.abs(coeffs) ** 2)))


def pair(mu: Measure, func: Callable) -> float:
    """``<mu, phi>`` for a callable ``phi(x1, x2)``."""
    if isinstance(mu, GridField):
        x1, x2 = mesh(mu.resolution)
        return float(np.mean(mu.values * func(x1, x2)) * AREA)
    return float(mu.weights @ func(mu.positions[:, 0], mu.positions[:, 1]))


@dataclass(frozen=True)
class TestFamily:
    """Trigonometric test functions ordered by |k| then lexicographically.

    The family starts with the constant 1, then ``cos(k.x)`` and ``sin(k.x)``
    for each k in the upper half-lattice.  All members have sup-norm 1 and
    Lipschitz constant |k|.
    """

    __test__ = False  # not a pytest class

    modes: np.ndarray = field(repr=False)
    kinds: tuple = field(repr=False)

    def __len__(self):
        return len(self.kinds)

    @classmethod
    def default(cls, size: int = 40) -> "TestFamily":
        modes = [(0, 0)]
        kinds = ["const"]
        radius = 1
        while len(kinds) < size:
            cand = [tuple(k) for k in disk_modes(radius)
                    if (k[1] > 0 or (k[1] == 0 and k[0] > 0))]
            modes, kinds = [(0, 0)], ["const"]
            for k in cand:
                modes += [k, k]
                kinds += ["cos", "sin"]
            radius += 1
        return cls(np.array(modes[:size]), tuple(kinds[:size]))

    @property
    def lipschitz(self) -> np.ndarray:
        return np.hypot(self.modes[:, 0], self.modes[:, 1])

    @property
    def weights(self) -> np.ndarray:
        return 2.0 ** -np.arange(1, len(self) + 1)

    def pairings(self, mu: Measure) -> np.ndarray:
        """Vector of ``<mu, phi_j>``."""
        if isinstance(mu, GridField):
            # trapezoid rule on the grid is exact for these trigonometric modes
            c = fourier_coefficients(mu, self.modes)
            vals = AREA * c
            out = np.where(np.array(self.kinds) == "sin", -vals.imag, vals.real)
            return out.astype(float)
        phase = mu.positions @ self.modes.T.astype(float)
        funcs = np.where(np.array(self.kinds)[None, :] == "sin", np.sin(phase), np.cos(phase))
        return mu.weights @ funcs


def weakstar_distance(mu: Measure, nu: Measure, family: TestFamily | None = None) -> float:
    """``sum_j 2^-j |<mu - nu, phi_j>|`` over the (finite) test family."""
    if family is None:
        family = TestFamily.default()
    diff = family.pairings(mu) - family.pairings(nu)
    return float(np.sum(family.weights * np.abs(diff)))


def _periodic_gaussian_1d(x: np.ndarray, centers: np.ndarray, eps: float) -> np.ndarray:
    """1D periodized heat kernel rows, shape (len(centers), len(x)), each row summing to n/(2pi)."""
    d = x[None, :] - centers[:, None]
    d = np.mod(d + np.pi, TWO_PI) - np.pi
    images = int(np.ceil(10.0 * eps / TWO_PI)) + 1
    out = np.zeros_like(d)
    for m in range(-images, images + 1):
        out += np.exp(-((d + m * TWO_PI) ** 2) / (2.0 * eps * eps))
    # exact unit mass under the grid quadrature
    out /= out.sum(axis=1, keepdims=True) * (TWO_PI / len(x))
    return out


def mollify(mu: ParticleMeasure, epsilon: float, resolution: int) -> GridField:
    """Convolve with the periodic heat kernel of variance ``epsilon^2``.

    The smoothed density is sampled directly on the grid as a sum of separable
    periodized Gaussians, so it is non-negative whenever the weights are, and
    each atom is normalized to carry exactly its weight under grid quadrature.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if epsilon * resolution < 4:
        raise ValueError(f"resolution {resolution} too coarse for epsilon={epsilon} "
                         f"(need epsilon*resolution >= 4)")
    if isinstance(mu, GridField):
        k1, k2 = wavenumbers(mu.resolution)
        return GridField.from_coeffs(mu.coeffs * np.exp(-0.5 * epsilon**2 * (k1**2 + k2**2)))
    x = grid_points(resolution)
    g1 = _periodic_gaussian_1d(x, mu.positions[:, 0], epsilon)
    g2 = _periodic_gaussian_1d(x, mu.positions[:, 1], epsilon)
    values = (g1 * mu.weights[:, None]).T @ g2
    return GridField(values)


def heat_kernel(x1, x2, epsilon: float, terms: int = 64) -> np.ndarray:
    """Periodic heat kernel from its Fourier series (reference implementation)."""
    k = np.arange(-terms, terms + 1)
    g = np.exp(-0.5 * epsilon**2 * k**2)

    def series(x):
        return (g[None, :] * np.cos(np.multiply.outer(np.ravel(x), k))).sum(axis=1) / TWO_PI

    return (series(x1) * series(x2)).reshape(np.shape(x1))


@dataclass(frozen=True)
class CurveSpec:
    """Vortex-sheet support: ``kind`` is ``"circle"`` or ``"segment"``."""

    kind: str
    center: tuple = (np.pi, np.pi)
    radius: float = 1.0
    start: tuple = (np.pi - 1.0, np.pi)
    end: tuple = (np.pi + 1.0, np.pi)


def sample_vortex_sheet(curve: CurveSpec, n: int, total_mass: float) -> ParticleMeasure:
    if n < 2:
        raise ValueError("need at least two atoms on a sheet")
    if total_mass < 0:
        raise ValueError("total mass must be non-negative")
    if curve.kind == "circle":
        if not 0 < curve.radius < np.pi:
            raise ValueError("circle radius must lie in (0, pi) to avoid self-intersection on the torus")
        th = TWO_PI * np.arange(n) / n
        pts = np.stack([curve.center[0] + curve.radius * np.cos(th),
                        curve.center[1] + curve.radius * np.sin(th)], axis=1)
    elif curve.kind == "segment":
        a, b = np.asarray(curve.start, float), np.asarray(curve.end, float)
        if np.max(np.abs(b - a)) >= TWO_PI or np.allclose(a, b):
            raise ValueError("segment must be non-degenerate and shorter than the torus period")
        t = (np.arange(n) + 0.5) / n
        pts = a[None, :] + t[:, None] * (b - a)[None, :]
    else:
        raise ValueError(f"unknown curve kind {curve.kind!r} (expected 'circle' or 'segment')")
    w = np.full(n, total_mass / n)
    return ParticleMeasure(pts, w, float(total_mass))


def blob_grid(side: int, total_mass: float, amplitude: float = 0.5) -> ParticleMeasure:
    """Uniform lattice of atoms carrying a smooth positive density
    ``(1 + a cos x1 cos x2)`` normalized to ``total_mass``."""
    if not 0 <= amplitude < 1:
        raise ValueError("amplitude must lie in [0, 1) to keep weights positive")
    x = (np.arange(side) + 0.5) * TWO_PI / side
    x1, x2 = np.meshgrid(x, x, indexing="ij")
    dens = 1.0 + amplitude * np.cos(x1) * np.cos(x2)
    w = dens.ravel() / dens.sum() * total_mass
    return ParticleMeasure(np.stack([x1.ravel(), x2.ravel()], axis=1), w, float(total_mass))


def save_particles(mu: ParticleMeasure, path, **metadata) -> None:
    """JSON-lines: a header record then one ``{x1, x2, w}`` record per atom."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        header = {"type": "header", "M": mu.mass_bound, "n": len(mu)}
        header.update(metadata)
        fh.write(json.dumps(header) + "\n")
        for (a, b), w in zip(mu.positions, mu.weights):
            fh.write(json.dumps({"x1": float(a), "x2": float(b), "w": float(w)}) + "\n")


def load_particles(path) -> tuple[ParticleMeasure, dict]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"{path}: empty particle file")
    header = json.loads(lines[0])
    if header.get("type") != "header":
        raise ValueError(f"{path}: first record must be a header")
    recs = [json.loads(line) for line in lines[1:] if line.strip()]
    pos = np.array([[r["x1"], r["x2"]] for r in recs], dtype=float).reshape(-1, 2)
    w = np.array([r["w"] for r in recs], dtype=float)
    if "n" in header and header["n"] != len(w):
        raise ValueError(f"{path}: header announces {header['n']} atoms, found {len(w)}")
    mu = ParticleMeasure(pos, w, float(header.get("M", np.sum(np.abs(w)))))
    if total_variation(mu) > mu.mass_bound * (1 + 1e-12):
        raise ValueError(f"{path}: total variation exceeds declared bound M={mu.mass_bound}")
    return mu, header
