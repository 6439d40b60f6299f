"""Symmetrized nonlinear functional for measure-valued vorticity.

For a test function phi the pair kernel

    F_phi(x, y) = 1/2 K(x - y) . (grad phi(x) - grad phi(y)) 1_{x != y}

is bounded, so ``<N(mu), phi> = iint F_phi d mu d mu`` makes sense for any
finite measure.  On smooth densities it equals ``<xi, u . grad phi>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .grid import AREA, GridField, displacement, mesh, synthesize, wavenumbers, wrap
from .measures import Measure, ParticleMeasure, TestFamily, total_variation, weakstar_distance
from .torus_kernel import kernel_coefficients, kernel_eval

# 1/2 sup_z |z| |K_N(z)| over the torus, measured for N = 32 and N = 64 (0.1111)
# and rounded up.  Bounds |F_phi| / ||phi||_C2 for the truncated kernels used here.
C_REG = 0.12


@dataclass(frozen=True)
class TestFunction:
    """Smooth test function with analytic gradient and Laplacian."""

    __test__ = False  # not a pytest class

    func: Callable
    grad: Callable
    laplacian: Callable
    c2_norm: float
    name: str = "phi"

    def __call__(self, x1, x2):
        return self.func(x1, x2)

    @classmethod
    def trig(cls, k, kind: str = "sin", amplitude: float = 1.0) -> "TestFunction":
        """``amplitude * cos(k.x)`` or ``amplitude * sin(k.x)``; ``k = (0, 0)`` gives a constant."""
        k1, k2 = float(k[0]), float(k[1])
        ksq = k1 * k1 + k2 * k2
        a = float(amplitude)
        if kind == "sin":
            f, df = np.sin, np.cos
            sign = 1.0
        elif kind == "cos":
            f, df = np.cos, np.sin
            sign = -1.0
        else:
            raise ValueError(f"kind must be 'sin' or 'cos', got {kind!r}")

        def func(x1, x2):
            return a * f(k1 * x1 + k2 * x2)

        def grad(x1, x2):
            d = sign * a * df(k1 * x1 + k2 * x2)
            return np.stack([k1 * d, k2 * d], axis=-1)

        def lap(x1, x2):
            return -ksq * func(x1, x2)

        c2 = abs(a) * (1.0 + np.sqrt(ksq) + ksq) if ksq or kind == "cos" else 0.0
        return cls(func, grad, lap, c2, name=f"{kind}({k1:g},{k2:g})")

    @classmethod
    def constant(cls, value: float = 1.0) -> "TestFunction":
        def func(x1, x2):
            return np.full(np.broadcast(x1, x2).shape, float(value))

        def grad(x1, x2):
            return np.zeros(np.broadcast(x1, x2).shape + (2,))

        def lap(x1, x2):
            return np.zeros(np.broadcast(x1, x2).shape)

        return cls(func, grad, lap, abs(float(value)), name=f"const({value:g})")

    @classmethod
    def from_family(cls, family: TestFamily, j: int) -> "TestFunction":
        kind = family.kinds[j]
        if kind == "const":
            return cls.constant(1.0)
        return cls.trig(family.modes[j], kind)


def f_phi(x, y, phi: TestFunction, cutoff: int) -> np.ndarray:
    """Pair kernel F_phi at points ``x``, ``y`` (broadcastable, last axis 2)."""
    x = wrap(np.asarray(x, dtype=float))
    y = wrap(np.asarray(y, dtype=float))
    x, y = np.broadcast_arrays(x, y)
    k = kernel_eval(displacement(x, y), cutoff)
    gx = phi.grad(x[..., 0], x[..., 1])
    gy = phi.grad(y[..., 0], y[..., 1])
    val = 0.5 * np.sum(k * (gx - gy), axis=-1)
    same = np.all(x == y, axis=-1)
    return np.where(same, 0.0, val)


def _pair_sum_particles(mu: ParticleMeasure, phi: TestFunction, kernel: Callable,
                        block: int) -> float:
    """Exact double sum, evaluated in row blocks and combined by pairwise summation."""
    pos, w = mu.positions, mu.weights
    n = len(w)
    g = phi.grad(pos[:, 0], pos[:, 1])
    partial = []
    for start in range(0, n, block):
        rows = slice(start, min(n, start + block))
        d = displacement(pos[rows, None, :], pos[None, :, :])
        kv = kernel(d.reshape(-1, 2)).reshape(d.shape)
        fv = 0.5 * np.sum(kv * (g[rows, None, :] - g[None, :, :]), axis=-1)
        same = np.all(pos[rows, None, :] == pos[None, :, :], axis=-1)
        fv[same] = 0.0
        partial.append(np.sum(w[rows, None] * w[None, :] * fv, axis=1))
    return float(np.sum(np.concatenate(partial)))


def _sampled_kernel(n: int, cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    """Truncated kernel sampled at the offsets of an n-grid (fine synthesis, then subsample)."""
    m = n
    while m < 2 * cutoff + 1:
        m *= 2
    c1, c2 = kernel_coefficients(m, cutoff)
    stride = m // n
    return synthesize(c1)[::stride, ::stride], synthesize(c2)[::stride, ::stride]


def _pair_sum_grid(xi: GridField, phi: TestFunction, cutoff: int) -> float:
    """Tensor quadrature ``h^4 sum_i sum_j F_phi(x_i, x_j) xi_i xi_j`` over grid nodes.

    Grid displacements are themselves grid offsets, so the inner sum is a
    circular convolution with the sampled (odd) kernel and is done by FFT.
    """
    n = xi.resolution
    h2 = (AREA / (n * n))
    k1s, k2s = _sampled_kernel(n, cutoff)
    x1, x2 = mesh(n)
    g = phi.grad(x1, x2)
    v = xi.values
    fv = np.fft.fft2(v)
    conv1 = np.fft.ifft2(np.fft.fft2(k1s) * fv).real * h2
    conv2 = np.fft.ifft2(np.fft.fft2(k2s) * fv).real * h2
    # sum_j K(x_i - x_j) xi_j; the x_i = x_j term is K(0) = 0
    first = np.sum(v * (g[..., 0] * conv1 + g[..., 1] * conv2)) * h2
    # second half: -sum_i sum_j K(x_i - x_j) xi_i . g_j xi_j = +sum_j xi_j g_j . (K * xi)_j
    # by oddness of the sampled kernel, so both halves coincide up to rounding
    return float(first)


def nonlinear_functional(mu: Measure, phi: TestFunction, cutoff: int, *,
                         kernel: Callable | None = None, block: int = 256) -> float:
    """``<N(mu), phi>``.

    Particles: exact double sum with the truncated kernel (or ``kernel`` if
    given, e.g. a :class:`KernelTable`).  Grids: tensor quadrature of the
    double integral with the kernel truncated at ``cutoff`` and sampled at
    grid offsets.
    """
    if isinstance(mu, GridField):
        return _pair_sum_grid(mu, phi, cutoff)
    if len(mu) < 2:
        return 0.0
    if kernel is None:
        def kernel(d):
            return kernel_eval(d, cutoff)
    return _pair_sum_particles(mu, phi, kernel, block)


def nonlinear_functional_spectral(mu: ParticleMeasure, phi: TestFunction, cutoff: int) -> float:
    """Same quantity as the particle double sum, via ``sum_i w_i grad phi(x_i) . u(x_i)``.

    ``u(x_i) = sum_j w_j K(x_i - x_j)`` is synthesized mode by mode from the
    empirical Fourier coefficients; the self term drops out because K(0) = 0.
    """
    from .torus_kernel import disk_modes

    modes = disk_modes(cutoff).astype(float)
    kperp = np.stack([-modes[:, 1], modes[:, 0]], axis=1)
    amp = kperp / np.sum(modes**2, axis=1)[:, None] / AREA
    phase = mu.positions @ modes.T
    s, c = np.sin(phase), np.cos(phase)
    S = mu.weights @ s
    C = mu.weights @ c
    # sum_j w_j sin(k.(x_i - x_j)) = sin(k.x_i) C_k - cos(k.x_i) S_k
    u = (s * C[None, :] - c * S[None, :]) @ amp
    g = phi.grad(mu.positions[:, 0], mu.positions[:, 1])
    return float(np.sum(mu.weights * np.sum(g * u, axis=1)))


def classical_nonlinear(xi: GridField, phi: TestFunction) -> float:
    """``<xi, u . grad phi>`` with the spectral Biot-Savart velocity and grid quadrature."""
    from .torus_kernel import velocity_from_vorticity

    u1, u2 = velocity_from_vorticity(xi)
    x1, x2 = mesh(xi.resolution)
    g = phi.grad(x1, x2)
    return float(np.mean(xi.values * (u1.values * g[..., 0] + u2.values * g[..., 1])) * AREA)


@dataclass
class BoundReport:
    ratio: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.ratio <= self.bound


def n_bound_check(mu: Measure, phi: TestFunction, cutoff: int, bound: float = C_REG) -> BoundReport:
    tv = total_variation(mu)
    if tv == 0 or phi.c2_norm == 0:
        return BoundReport(0.0, bound)
    val = nonlinear_functional(mu, phi, cutoff)
    return BoundReport(abs(val) / (tv * tv * phi.c2_norm), bound)


@dataclass
class ContinuityReport:
    distances: np.ndarray
    deltas: np.ndarray

    @property
    def reduction(self) -> float:
        if self.deltas[0] == 0:
            return np.inf if self.deltas[-1] == 0 else 0.0
        return float(self.deltas[0] / max(self.deltas[-1], np.finfo(float).tiny))

    @property
    def converging(self) -> bool:
        """True when the deltas trend to zero as the distances do (log-log slope > 0)."""
        d, n = self.distances, self.deltas
        if np.all(n == 0):
            return True
        ok = (d > 0) & (n > 0)
        if ok.sum() < 2:
            return bool(n[-1] <= n[0])
        slope = np.polyfit(np.log(d[ok]), np.log(n[ok]), 1)[0]
        return bool(slope > 0 and n[-1] < n[0])

    def rows(self):
        for i, (d, n) in enumerate(zip(self.distances, self.deltas)):
            yield i, float(d), float(n)


def continuity_experiment(sequence: Sequence[Measure], target: Measure, phi: TestFunction,
                          cutoff: int, family: TestFamily | None = None,
                          grid_cutoff: int | None = None) -> ContinuityReport:
    """Tabulate weak-* distance to ``target`` against the nonlinear-term gap.

    ``grid_cutoff`` is the kernel truncation used for grid members (defaults
    to ``cutoff``).
    """
    for mu in list(sequence) + [target]:
        w = mu.values if isinstance(mu, GridField) else mu.weights
        if np.any(w < 0):
            raise ValueError("continuity of N holds on non-negative measures only; "
                             "sequence contains negative weights")
    family = family or TestFamily.default()
    gcut = grid_cutoff or cutoff

    def nval(mu):
        if isinstance(mu, GridField):
            return nonlinear_functional(mu, phi, gcut)
        # equal to the pair sum (K_N(0) = 0), at O(n * modes) cost
        return nonlinear_functional_spectral(mu, phi, cutoff)

    n_target = nval(target)
    dist = np.array([weakstar_distance(mu, target, family) for mu in sequence])
    delta = np.array([abs(nval(mu) - n_target) for mu in sequence])
    return ContinuityReport(dist, delta)


def zero_average_check(phi: TestFunction, y0, cutoff: int, n: int = 128) -> float:
    """Grid average over x of F_phi(x, y0)."""
    x1, x2 = mesh(n)
    pts = np.stack([x1, x2], axis=-1).reshape(-1, 2)
    vals = f_phi(pts, np.broadcast_to(np.asarray(y0, float), pts.shape), phi, cutoff)
    return float(np.mean(vals))


__all__ = [
    "C_REG", "TestFunction", "f_phi", "nonlinear_functional", "nonlinear_functional_spectral",
    "classical_nonlinear", "n_bound_check", "continuity_experiment", "zero_average_check",
    "BoundReport", "ContinuityReport",
]
