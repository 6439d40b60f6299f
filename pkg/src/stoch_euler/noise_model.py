"""Transport-noise basis on the torus.

The fields are

    sigma_k(x) = (cos(k.x) + sin(k.x)) k^perp / |k|^beta,   0 < |k| <= cutoff,

one per integer mode (both half-lattices are kept).  Each field is divergence
free because k^perp . k = 0.  With the full +-k family the covariance
``a(x, y) = sum_k sigma_k(x) (x) sigma_k(y)`` depends only on ``x - y`` and is
even, so ``a(x, x) = c I`` and its first derivatives vanish on the diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import wavenumbers
from .torus_kernel import disk_modes


@dataclass(frozen=True)
class NoiseBasis:
    beta: float
    cutoff: int
    modes: np.ndarray = field(repr=False)
    c: float
    c1_sum: float

    @property
    def size(self) -> int:
        return len(self.modes)

    @property
    def kperp_scaled(self) -> np.ndarray:
        """k^perp / |k|^beta for every mode, shape (m, 2)."""
        k = self.modes.astype(float)
        norm = np.hypot(k[:, 0], k[:, 1])
        return np.stack([-k[:, 1], k[:, 0]], axis=1) / norm[:, None] ** self.beta

    def summary(self) -> dict:
        return {"beta": self.beta, "cutoff": self.cutoff, "modes": self.size,
                "c": self.c, "c1_sum": self.c1_sum}


def make_basis(beta: float, cutoff: int) -> NoiseBasis:
    if not beta > 3:
        raise ValueError(f"beta must be > 3 for sum_k ||sigma_k||_C1^2 < inf, got {beta}")
    if cutoff < 1:
        raise ValueError(f"noise cutoff must be >= 1, got {cutoff}")
    modes = disk_modes(int(cutoff))
    norms = np.hypot(modes[:, 0], modes[:, 1])
    # ||sigma_k||_C1 = sup|sigma_k| + sup|D sigma_k|
    #               = sqrt(2) |k|^(1-beta) + sqrt(2) |k|^(2-beta)
    c1 = np.sqrt(2.0) * (norms ** (1.0 - beta) + norms ** (2.0 - beta))
    partial = NoiseBasis(float(beta), int(cutoff), modes, 0.0, float(np.sum(c1**2)))
    a = covariance(partial, (0.3, 1.1), (0.3, 1.1))
    return NoiseBasis(float(beta), int(cutoff), modes, float(a[0, 0]), partial.c1_sum)


def _phases(basis: NoiseBasis, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x.reshape(-1, 2) @ basis.modes.T.astype(float)


def sigma(basis: NoiseBasis, x) -> np.ndarray:
    """All fields at points ``x``: array of shape (npts, m, 2)."""
    th = _phases(basis, x)
    s = np.cos(th) + np.sin(th)
    return s[:, :, None] * basis.kperp_scaled[None, :, :]


def sigma_jacobian(basis: NoiseBasis, x) -> np.ndarray:
    """``J[p, k, j, l] = d_l sigma_k^j (x_p)``."""
    th = _phases(basis, x)
    ds = np.cos(th) - np.sin(th)
    kp = basis.kperp_scaled
    k = basis.modes.astype(float)
    return ds[:, :, None, None] * kp[None, :, :, None] * k[None, :, None, :]


def covariance(basis: NoiseBasis, x, y) -> np.ndarray:
    """Infinitesimal covariance ``a(x, y) = sum_k sigma_k(x) sigma_k(y)^T``."""
    sx = sigma(basis, x)[0]
    sy = sigma(basis, y)[0]
    return sx.T @ sy


def covariance_y_derivative_at_diagonal(basis: NoiseBasis, x) -> np.ndarray:
    """``D[l, i, j] = d/dy_l a^{ij}(x, y)`` at ``y = x``."""
    sx = sigma(basis, x)[0]
    jac = sigma_jacobian(basis, x)[0]
    return np.einsum("ki,kjl->lij", sx, jac)


def strat_drift_correction(basis: NoiseBasis, x) -> np.ndarray:
    """First-order Ito-Stratonovich term ``1/2 sum_k (sigma_k . grad) sigma_k`` at ``x``."""
    sx = sigma(basis, x)[0]
    jac = sigma_jacobian(basis, x)[0]
    return 0.5 * np.einsum("kl,kjl->j", sx, jac)


def noise_velocity(basis: NoiseBasis, x, dW) -> np.ndarray:
    """``sum_k sigma_k(x) dW_k`` at points ``x``, shape (npts, 2)."""
    th = _phases(basis, x)
    s = (np.cos(th) + np.sin(th)) * np.asarray(dW)[None, :]
    return s @ basis.kperp_scaled


def noise_velocity_coefficients(basis: NoiseBasis, n: int, dW) -> tuple[np.ndarray, np.ndarray]:
    """Fourier coefficients on an n-grid of ``sum_k sigma_k dW_k``.

    cos t + sin t = (1 - i)/2 e^{it} + (1 + i)/2 e^{-it}.
    """
    if 2 * basis.cutoff >= n:
        raise ValueError(f"grid {n} too coarse for noise cutoff {basis.cutoff}")
    dW = np.asarray(dW, dtype=float)
    amp = basis.kperp_scaled * dW[:, None]
    i1 = basis.modes[:, 0] % n
    i2 = basis.modes[:, 1] % n
    j1 = (-basis.modes[:, 0]) % n
    j2 = (-basis.modes[:, 1]) % n
    out = []
    for c in range(2):
        coef = np.zeros((n, n), dtype=complex)
        np.add.at(coef, (i1, i2), 0.5 * (1 - 1j) * amp[:, c])
        np.add.at(coef, (j1, j2), 0.5 * (1 + 1j) * amp[:, c])
        out.append(coef)
    return out[0], out[1]


def sample_noise_increment(basis: NoiseBasis, dt: float, rng: np.random.Generator) -> np.ndarray:
    """One Brownian increment per retained mode, N(0, dt)."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    return np.sqrt(dt) * rng.standard_normal(basis.size)


def divergence_check(basis: NoiseBasis, n: int = 32) -> np.ndarray:
    """Max spectral divergence of each field on an n-grid, shape (m,)."""
    k1, k2 = wavenumbers(n)
    out = np.empty(basis.size)
    unit = np.zeros(basis.size)
    for idx in range(basis.size):
        unit[:] = 0.0
        unit[idx] = 1.0
        c1, c2 = noise_velocity_coefficients(basis, n, unit)
        div = np.fft.ifft2(1j * k1 * c1 + 1j * k2 * c2) * n * n
        out[idx] = np.max(np.abs(div))
    return out
