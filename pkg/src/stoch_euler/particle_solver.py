"""Stochastic point-vortex flow and push-forward of the initial measure.

Each atom follows

    dX_j = sum_{i != j} w_i K(X_j - X_i) dt + sum_k sigma_k(X_j) dW_k,

with ONE Brownian increment vector per step shared by every atom (transport
noise is a common random velocity field, not independent diffusion).  Under
the noise assumptions the Stratonovich correction vanishes, so plain
Euler-Maruyama on the Ito form is used.  Weights never change, so mass and
sign are conserved exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np

from ._fast import drift_table
from .grid import TWO_PI, displacement, wrap
from .measures import ParticleMeasure, pair
from .noise_model import NoiseBasis, sigma
from .nonlinear import TestFunction, nonlinear_functional
from .rng import brownian_increments
from .torus_kernel import KernelTable, build_kernel_table

MAX_DISPLACEMENT = np.pi / 2


class StepRejected(RuntimeError):
    def __init__(self, step_index: int, displacement: float):
        super().__init__(f"step {step_index} rejected: max displacement {displacement:.3g} > pi/2")
        self.step_index = step_index
        self.displacement = displacement


@lru_cache(maxsize=4)
def cached_table(resolution: int, cutoff: int) -> KernelTable:
    return build_kernel_table(resolution, cutoff)


class BlobKernel:
    """Table kernel whose magnitude is capped at its maximum on the ``radius`` circle."""

    def __init__(self, table: KernelTable, radius: float):
        if radius < table.h:
            raise ValueError(f"blob radius {radius:.3g} below table spacing {table.h:.3g}")
        self.table = table
        self.radius = float(radius)
        th = TWO_PI * np.arange(256) / 256
        ring = self.radius * np.stack([np.cos(th), np.sin(th)], axis=1)
        self.cap = float(np.max(np.hypot(*table(ring).T)))

    def __call__(self, d) -> np.ndarray:
        d = np.asarray(d, dtype=float)
        k = self.table(d)
        r = np.hypot(d[..., 0], d[..., 1])
        mag = np.hypot(k[..., 0], k[..., 1])
        inside = (r < self.radius) & (mag > self.cap)
        scale = np.where(inside, self.cap / np.where(inside, mag, 1.0), 1.0)
        return k * scale[..., None]


@dataclass(frozen=True)
class StepPlan:
    dt: float
    blob_radius: float = 0.0
    cutoff: int = 32
    noise: bool = True
    table_resolution: int = 1024

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        h = TWO_PI / self.table_resolution
        if self.blob_radius == 0.0:
            object.__setattr__(self, "blob_radius", 2.0 * h)
        elif self.blob_radius < h:
            raise ValueError(f"blob radius {self.blob_radius} below kernel table spacing {h:.4g}")

    @property
    def kernel(self) -> BlobKernel:
        return _blob_kernel(self.table_resolution, self.cutoff, self.blob_radius)


@lru_cache(maxsize=8)
def _blob_kernel(resolution: int, cutoff: int, radius: float) -> BlobKernel:
    return BlobKernel(cached_table(resolution, cutoff), radius)


@dataclass(frozen=True)
class SimState:
    t: float
    particles: ParticleMeasure
    brownian_path: np.ndarray = field(repr=False)
    step_index: int = 0
    seed: int = 0
    member: int = 0

    @classmethod
    def initial(cls, particles: ParticleMeasure, basis: NoiseBasis | None,
                seed: int = 0, member: int = 0) -> "SimState":
        size = basis.size if basis is not None else 0
        return cls(0.0, particles, np.zeros(size), 0, seed, member)


def drift_all(particles: ParticleMeasure, kernel: Callable, block: int = 128) -> np.ndarray:
    """Velocity at every atom, ``sum_{i != j} w_i K(x_j - x_i)``, shape (n, 2)."""
    pos, w = particles.positions, particles.weights
    n = len(w)
    out = np.zeros((n, 2))
    if n < 2:
        return out
    if isinstance(kernel, BlobKernel):
        t = kernel.table
        return drift_table(pos, w, t._packed, t.resolution, t.h, kernel.radius, kernel.cap)
    for start in range(0, n, block):
        rows = slice(start, min(n, start + block))
        d = displacement(pos[rows, None, :], pos[None, :, :])
        kv = kernel(d.reshape(-1, 2)).reshape(d.shape)
        # exclude self and exactly coincident atoms (K(0) = 0 anyway)
        same = np.all(d == 0.0, axis=-1)
        kv[same] = 0.0
        out[rows] = np.sum(kv * w[None, :, None], axis=1)
    return out


def drift(particles: ParticleMeasure, j: int, plan: StepPlan) -> np.ndarray:
    """Velocity of atom ``j`` induced by all other atoms."""
    pos, w = particles.positions, particles.weights
    if len(w) < 2:
        return np.zeros(2)
    d = displacement(pos[j][None, :], pos)
    kv = plan.kernel(d)
    kv[np.all(d == 0.0, axis=-1)] = 0.0
    return np.sum(kv * w[:, None], axis=0)


def noise_displacement(basis: NoiseBasis, positions: np.ndarray, dW: np.ndarray) -> np.ndarray:
    """``sum_k sigma_k(x_j) dW_k`` per atom.

    Reduced with ``np.sum`` row by row, so atoms at identical positions get
    bitwise identical displacements.
    """
    s = sigma(basis, positions)
    return np.sum(s * np.asarray(dW)[None, :, None], axis=1)


def step(state: SimState, plan: StepPlan, basis: NoiseBasis | None,
         dW: np.ndarray | None = None) -> SimState:
    """One Euler-Maruyama step of the flow; returns the new state.

    ``dW`` defaults to the counter-based increment for ``(seed, member, step)``.
    """
    mu = state.particles
    disp = np.zeros_like(mu.positions)
    if np.any(mu.weights != 0):
        disp += plan.dt * drift_all(mu, plan.kernel)
    path = state.brownian_path
    if plan.noise and basis is not None:
        if dW is None:
            dW = brownian_increments(basis.size, plan.dt, state.seed, state.member, state.step_index)
        disp += noise_displacement(basis, mu.positions, dW)
        path = path + dW
    if len(disp):
        biggest = float(np.max(np.hypot(disp[:, 0], disp[:, 1])))
        if biggest > MAX_DISPLACEMENT:
            raise StepRejected(state.step_index, biggest)
    return replace(state, t=state.t + plan.dt,
                   particles=mu.with_positions(wrap(mu.positions + disp)),
                   brownian_path=path, step_index=state.step_index + 1)


@dataclass
class Trajectory:
    """Stored states plus the increments that connect consecutive ones.

    ``increments[i]`` and ``dts[i]`` take ``states[i]`` to ``states[i + 1]``.
    """

    states: list
    increments: list
    dts: list
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.states)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])


def integrate(state: SimState, plan: StepPlan, basis: NoiseBasis | None, steps: int, *,
              every: int = 1, increments: np.ndarray | None = None,
              on_output: Callable | None = None) -> Trajectory:
    """Advance ``steps`` steps, storing every ``every``-th state.

    ``increments`` (shape (steps, m)) overrides the counter-based draws, which
    is how coupled paths at different dt are run.
    """
    traj = Trajectory([state], [], [])
    if on_output is not None:
        traj.records.append(on_output(state))
    size = basis.size if (basis is not None and plan.noise) else 0
    acc = np.zeros(size)
    elapsed = 0.0
    for s in range(steps):
        dW = increments[s] if increments is not None else None
        before = state.brownian_path
        state = step(state, plan, basis, dW)
        if size:
            acc = acc + (state.brownian_path - before)
        elapsed += plan.dt
        if (s + 1) % every == 0 or s + 1 == steps:
            traj.states.append(state)
            traj.increments.append(acc)
            traj.dts.append(elapsed)
            if on_output is not None:
                traj.records.append(on_output(state))
            acc = np.zeros(size)
            elapsed = 0.0
    return traj


def weak_form_residual(trajectory: Trajectory, phi: TestFunction, basis: NoiseBasis | None,
                       kernel: Callable | None = None, cutoff: int = 32) -> np.ndarray:
    """Cumulative residual of the weak formulation after each stored step.

    ``<xi_t, phi> - <xi_0, phi> - sum [<N(xi), phi> dt + sum_k <xi, sigma_k.grad phi> dW_k
    + c/2 <xi, Laplacian phi> dt]`` with left-point (Ito) sums.  ``kernel`` should be the
    kernel that drove the particles, so the residual measures time discretization only.
    """
    states = trajectory.states
    base = pair(states[0].particles, phi)
    acc = 0.0
    out = np.zeros(len(states))
    for i, (s0, dW, dt) in enumerate(zip(states[:-1], trajectory.increments, trajectory.dts)):
        mu = s0.particles
        acc += nonlinear_functional(mu, phi, cutoff, kernel=kernel) * dt
        if basis is not None and len(dW):
            grad = phi.grad(mu.positions[:, 0], mu.positions[:, 1])
            # <xi, sigma_k . grad phi> for each k
            sg = np.einsum("pkj,pj->pk", sigma(basis, mu.positions), grad)
            acc += float(mu.weights @ sg @ np.asarray(dW))
            acc += 0.5 * basis.c * pair(mu, phi.laplacian) * dt
        out[i + 1] = pair(states[i + 1].particles, phi) - base - acc
    return out


def rotation_period(separation: float, weight: float, plan: StepPlan, turns: float = 1.0) -> float:
    """Period of a co-rotating equal pair, measured from the simulated angle."""
    center = np.array([np.pi, np.pi])
    pos = np.array([center - [separation / 2, 0], center + [separation / 2, 0]])
    state = SimState.initial(ParticleMeasure(pos, [weight, weight]), None)
    angle = 0.0
    prev = np.array([1.0, 0.0])
    target = TWO_PI * turns
    while angle < target:
        state = step(state, replace(plan, noise=False), None)
        d = displacement(state.particles.positions[1], state.particles.positions[0])
        d = d / np.hypot(*d)
        dang = np.arctan2(prev[0] * d[1] - prev[1] * d[0], prev @ d)
        if angle + abs(dang) >= target:
            frac = (target - angle) / abs(dang)
            return (state.t - plan.dt + frac * plan.dt) / turns
        angle += abs(dang)
        prev = d
    return state.t / turns


__all__ = [
    "StepRejected", "BlobKernel", "StepPlan", "SimState", "Trajectory", "drift", "drift_all",
    "noise_displacement", "step", "integrate", "weak_form_residual", "rotation_period",
    "cached_table",
]
