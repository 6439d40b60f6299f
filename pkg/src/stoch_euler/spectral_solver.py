"""Pseudo-spectral solver for the Ito form of the stochastic vorticity equation

    d xi = -u.grad xi dt - sum_k sigma_k.grad xi dW_k + (c/2) Laplacian xi dt,   u = K * xi.

Products are formed on the grid and projected with the 2/3 rule.  The
Laplacian term is integrated exactly per mode (integrating factor); advection
and noise are explicit Euler-Maruyama.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .grid import AREA, TWO_PI, GridField, dealias_mask, synthesize, wavenumbers
from .noise_model import NoiseBasis, noise_velocity_coefficients
from .torus_kernel import velocity_coefficients


class CFLError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectralState:
    t: float
    coeffs: np.ndarray = field(repr=False)
    step_index: int = 0

    @property
    def resolution(self) -> int:
        return self.coeffs.shape[0]

    @property
    def xi(self) -> GridField:
        return GridField(synthesize(self.coeffs))

    @classmethod
    def from_field(cls, xi: GridField, t: float = 0.0) -> "SpectralState":
        mask = dealias_mask(xi.resolution)
        return cls(t, np.where(mask, xi.coeffs, 0.0))


class _Operators:
    """Wavenumber arrays cached per resolution."""

    _cache: dict = {}

    def __new__(cls, n: int):
        if n not in cls._cache:
            obj = super().__new__(cls)
            k1, k2 = wavenumbers(n)
            obj.n = n
            obj.ik1 = 1j * k1
            obj.ik2 = 1j * k2
            obj.ksq = k1**2 + k2**2
            obj.mask = dealias_mask(n)
            cls._cache[n] = obj
        return cls._cache[n]


def _grad(coeffs, ops):
    return synthesize(ops.ik1 * coeffs), synthesize(ops.ik2 * coeffs)


def _transport_coeffs(v1, v2, coeffs, ops) -> np.ndarray:
    """Dealiased coefficients of ``v . grad xi`` for grid velocity ``(v1, v2)``."""
    g1, g2 = _grad(coeffs, ops)
    prod = v1 * g1 + v2 * g2
    out = np.fft.fft2(prod) / (ops.n * ops.n)
    out[~ops.mask] = 0.0
    out[0, 0] = 0.0
    return out


def advection_coeffs(coeffs: np.ndarray) -> np.ndarray:
    ops = _Operators(coeffs.shape[0])
    u1, u2 = velocity_coefficients(coeffs)
    return _transport_coeffs(synthesize(u1), synthesize(u2), coeffs, ops)


def noise_coeffs(coeffs: np.ndarray, basis: NoiseBasis, dW) -> np.ndarray:
    """Dealiased ``sum_k sigma_k . grad xi dW_k``."""
    ops = _Operators(coeffs.shape[0])
    c1, c2 = noise_velocity_coefficients(basis, ops.n, dW)
    return _transport_coeffs(synthesize(c1), synthesize(c2), coeffs, ops)


def max_velocity(coeffs: np.ndarray) -> float:
    u1, u2 = velocity_coefficients(coeffs)
    return float(np.max(np.hypot(synthesize(u1), synthesize(u2))))


def rhs_drift(state: SpectralState, basis: NoiseBasis | None, *, advect: bool = True) -> GridField:
    """Deterministic right-hand side ``-u.grad xi + (c/2) Laplacian xi``."""
    ops = _Operators(state.resolution)
    c = basis.c if basis is not None else 0.0
    out = -0.5 * c * ops.ksq * state.coeffs
    if advect:
        out = out - advection_coeffs(state.coeffs)
    return GridField(synthesize(out))


def step_ito(state: SpectralState, dt: float, dW, basis: NoiseBasis | None, *,
             advect: bool = True, check_cfl: bool = True) -> SpectralState:
    """One Euler-Maruyama step with exact damping of the Ito correction."""
    ops = _Operators(state.resolution)
    xi = state.coeffs
    incr = np.zeros_like(xi)
    if advect:
        if check_cfl:
            umax = max_velocity(xi)
            courant = dt * umax * ops.n / TWO_PI
            if courant > 0.5:
                raise CFLError(f"advective CFL {courant:.3g} > 0.5 at t={state.t:.6g} "
                               f"(dt={dt}, max|u|={umax:.3g})")
        incr -= dt * advection_coeffs(xi)
    c = 0.0
    if basis is not None:
        c = basis.c
        if dW is not None:
            incr -= noise_coeffs(xi, basis, dW)
    new = xi + incr
    if c:
        new = new * np.exp(-0.5 * c * ops.ksq * dt)
    new[0, 0] = xi[0, 0]
    new[~ops.mask] = 0.0
    return replace(state, t=state.t + dt, coeffs=new, step_index=state.step_index + 1)


def enstrophy(state: SpectralState) -> float:
    return float(AREA * np.sum(np.abs(state.coeffs) ** 2))


def energy(state: SpectralState) -> float:
    """``||u||_{L^2}^2`` with ``u = K * xi``."""
    ops = _Operators(state.resolution)
    nz = ops.ksq > 0
    return float(AREA * np.sum(np.abs(state.coeffs[nz]) ** 2 / ops.ksq[nz]))


def energy_terms(state: SpectralState, basis: NoiseBasis | None) -> dict:
    """Instantaneous terms of the Ito energy identity for ``||u||^2``.

    ``nonlinear``  = -2 <u, P[(u.grad) u]>, computed as -2 <u, K*(u.grad xi)>
    ``dissipation`` = -c ||grad u||^2
    ``quadratic_variation`` = sum_k ||P[(sigma_k.grad + Dsigma_k^T) u]||^2
                            = sum_k ||K * (sigma_k.grad xi)||^2
    ``martingale`` = per-mode -2 <u, K*(sigma_k.grad xi)>  (multiplies dW_k)
    """
    ops = _Operators(state.resolution)
    xi = state.coeffs
    nz = ops.ksq > 0
    inv = np.zeros_like(ops.ksq)
    inv[nz] = 1.0 / ops.ksq[nz]

    def u_inner(f, g):
        # <K*f, K*g> = (2pi)^2 sum conj(f) g / |k|^2
        return float(AREA * np.real(np.sum(np.conj(f) * g * inv)))

    adv = advection_coeffs(xi)
    out = {"nonlinear": -2.0 * u_inner(xi, adv), "dissipation": 0.0,
           "quadratic_variation": 0.0, "martingale": None}
    if basis is None:
        return out
    # ||grad u||^2 = ||xi - mean(xi)||^2
    out["dissipation"] = -basis.c * (enstrophy(state) - AREA * abs(xi[0, 0]) ** 2)
    mart = np.empty(basis.size)
    qv = 0.0
    unit = np.zeros(basis.size)
    for idx in range(basis.size):
        unit[:] = 0.0
        unit[idx] = 1.0
        b = noise_coeffs(xi, basis, unit)
        mart[idx] = -2.0 * u_inner(xi, b)
        qv += u_inner(b, b)
    out["quadratic_variation"] = qv
    out["martingale"] = mart
    return out


def energy_balance_residual(trajectory, basis: NoiseBasis | None) -> np.ndarray:
    """Per-step residual of the discretized energy identity.

    ``trajectory`` is a sequence of ``(state, dW, dt)`` records where ``dW`` is
    the increment used to advance *from* that state (``None`` for the last).
    """
    res = []
    for (s0, dW, dt), (s1, _, _) in zip(trajectory[:-1], trajectory[1:]):
        terms = energy_terms(s0, basis)
        pred = (terms["nonlinear"] + terms["dissipation"] + terms["quadratic_variation"]) * dt
        if terms["martingale"] is not None and dW is not None:
            pred += float(terms["martingale"] @ np.asarray(dW))
        res.append(energy(s1) - energy(s0) - pred)
    return np.array(res)
