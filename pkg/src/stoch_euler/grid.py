"""Uniform periodic grids on the torus [0, 2pi)^2 and their Fourier coefficients.

Convention used everywhere in the package::

    f(x) = sum_k fhat(k) exp(i k.x),    fhat(k) = (2 pi)^-2 int f(x) exp(-i k.x) dx

On an N x N grid this is ``fhat = fft2(values) / N**2``.  Axis 0 of every grid
array is x1, axis 1 is x2 (``indexing="ij"``).
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

TWO_PI = 2.0 * np.pi
AREA = TWO_PI**2


def wrap(x):
    """Reduce coordinates to [0, 2pi)."""
    y = np.mod(x, TWO_PI)
    # np.mod can return exactly 2pi for tiny negative inputs
    return np.where(y >= TWO_PI, 0.0, y)


def displacement(a, b):
    """Representative of ``a - b`` in [-pi, pi)^2."""
    return np.mod(np.asarray(a) - np.asarray(b) + np.pi, TWO_PI) - np.pi


def grid_points(n: int) -> np.ndarray:
    return TWO_PI * np.arange(n) / n


def mesh(n: int) -> tuple[np.ndarray, np.ndarray]:
    x = grid_points(n)
    return np.meshgrid(x, x, indexing="ij")


def wavenumbers(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Integer wavenumber arrays (k1, k2) matching ``np.fft.fft2`` layout."""
    k = np.fft.fftfreq(n, d=1.0 / n)
    return np.meshgrid(k, k, indexing="ij")


def dealias_mask(n: int) -> np.ndarray:
    """Boolean mask of modes kept by the 2/3 rule (|k_i| < n/3 on both axes)."""
    k1, k2 = wavenumbers(n)
    kmax = n / 3.0
    return (np.abs(k1) < kmax) & (np.abs(k2) < kmax)


class GridField:
    """Real scalar field sampled on an ``n x n`` periodic grid.

    Instances are treated as immutable; the Fourier coefficients are computed
    lazily and cached.
    """

    def __init__(self, values):
        values = np.array(values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError(f"expected a square 2D array, got shape {values.shape}")
        self.values = values
        self.values.setflags(write=False)

    @classmethod
    def from_coeffs(cls, coeffs) -> "GridField":
        # coefficients are re-derived from the real samples, so any
        # non-Hermitian part of ``coeffs`` is discarded
        return cls(synthesize(np.asarray(coeffs, dtype=complex)))

    @classmethod
    def from_function(cls, func, n: int) -> "GridField":
        x1, x2 = mesh(n)
        return cls(np.broadcast_to(func(x1, x2), (n, n)).copy())

    @property
    def resolution(self) -> int:
        return self.values.shape[0]

    @cached_property
    def coeffs(self) -> np.ndarray:
        n = self.resolution
        return np.fft.fft2(self.values) / (n * n)

    def mean(self) -> float:
        return float(self.coeffs[0, 0].real)

    def integral(self) -> float:
        return self.mean() * AREA

    def l2_squared(self) -> float:
        """Squared L^2 norm, ``int f^2 dx``, via Parseval."""
        return float(AREA * np.sum(np.abs(self.coeffs) ** 2))

    def __add__(self, other):
        if isinstance(other, GridField):
            return GridField(self.values + other.values)
        return GridField(self.values + other)

    def __sub__(self, other):
        if isinstance(other, GridField):
            return GridField(self.values - other.values)
        return GridField(self.values - other)

    def __mul__(self, scalar):
        return GridField(self.values * scalar)

    __rmul__ = __mul__

    def __repr__(self):
        return f"GridField(resolution={self.resolution}, mean={self.mean():.6g})"


def spectral_derivative(coeffs: np.ndarray, axis: int) -> np.ndarray:
    """Coefficients of the partial derivative along ``axis`` (0 -> x1, 1 -> x2)."""
    k1, k2 = wavenumbers(coeffs.shape[0])
    k = k1 if axis == 0 else k2
    if coeffs.shape[0] % 2 == 0:
        # odd derivative of the Nyquist mode is not representable as a real field
        k = np.where(np.abs(k) == coeffs.shape[0] // 2, 0.0, k)
    return 1j * k * coeffs


def synthesize(coeffs: np.ndarray) -> np.ndarray:
    """Real grid values from coefficients in the package convention."""
    n = coeffs.shape[0]
    return np.fft.ifft2(coeffs).real * n * n
