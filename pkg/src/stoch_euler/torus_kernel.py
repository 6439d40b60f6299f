"""Green function of the Laplacian, Biot-Savart kernel and velocity reconstruction.

The Green function ``G`` solves ``Laplacian G = delta_0 - (2pi)^-2`` on the torus
with zero mean, so its Fourier coefficients are ``(2pi)^-2 * (-1/|k|^2)``.  The
Biot-Savart kernel is ``K = grad^perp G = (-d2 G, d1 G)``; its truncated Fourier
synthesis is

    K_N(x) = (2pi)^-2  sum_{0<|k|<=N}  k^perp / |k|^2  sin(k.x)

which is odd term by term and therefore vanishes at the origin.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import AREA, TWO_PI, GridField, spectral_derivative, synthesize, wavenumbers, wrap

TABLE_MAGIC = b"SEKT"
TABLE_VERSION = 1
_HEADER = struct.Struct("<4sIII")


def green_coefficient(k) -> float:
    """Unnormalized spectral symbol of the inverse Laplacian on mean-zero functions."""
    k1, k2 = k
    k2sum = k1 * k1 + k2 * k2
    if k2sum == 0:
        return 0.0
    return -1.0 / k2sum


def disk_modes(cutoff: int) -> np.ndarray:
    """Integer modes with ``0 < |k| <= cutoff``, shape (m, 2), sorted by |k| then lexicographically."""
    r = np.arange(-cutoff, cutoff + 1)
    k1, k2 = np.meshgrid(r, r, indexing="ij")
    k1, k2 = k1.ravel(), k2.ravel()
    n2 = k1 * k1 + k2 * k2
    keep = (n2 > 0) & (n2 <= cutoff * cutoff)
    k1, k2, n2 = k1[keep], k2[keep], n2[keep]
    order = np.lexsort((k2, k1, n2))
    return np.stack([k1[order], k2[order]], axis=1)


def kernel_eval(x, cutoff: int) -> np.ndarray:
    """Truncated Biot-Savart kernel at point(s) ``x`` (last axis of length 2)."""
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    x = np.asarray(x, dtype=float)
    pts = x.reshape(-1, 2)
    modes = disk_modes(cutoff).astype(float)
    kperp = np.stack([-modes[:, 1], modes[:, 0]], axis=1)
    amp = kperp / np.sum(modes**2, axis=1)[:, None] / AREA
    out = np.empty_like(pts)
    chunk = max(1, 2_000_000 // len(modes))
    for start in range(0, len(pts), chunk):
        p = pts[start:start + chunk]
        s = np.sin(p @ modes.T)
        out[start:start + chunk] = s @ amp
    return out.reshape(x.shape)


def kernel_coefficients(n: int, cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    """Fourier coefficients of the two components of the truncated kernel on an n-grid."""
    k1, k2 = wavenumbers(n)
    ksq = k1**2 + k2**2
    keep = (ksq > 0) & (ksq <= cutoff * cutoff)
    inv = np.zeros_like(ksq)
    inv[keep] = 1.0 / ksq[keep]
    # sin(k.x) = (e^{ik.x} - e^{-ik.x}) / 2i, summed over +-k gives coefficient -i k^perp/|k|^2
    c1 = -1j * (-k2) * inv / AREA
    c2 = -1j * k1 * inv / AREA
    return c1, c2


def _odd_part(a: np.ndarray) -> np.ndarray:
    flipped = np.roll(a[::-1, ::-1], 1, axis=(0, 1))
    return 0.5 * (a - flipped)


def _even_part(a: np.ndarray) -> np.ndarray:
    flipped = np.roll(a[::-1, ::-1], 1, axis=(0, 1))
    return 0.5 * (a + flipped)


@dataclass
class KernelTable:
    """Grid samples of the truncated kernel with bicubic Hermite interpolation.

    ``values`` has shape (resolution, resolution, 2).  Derivatives used by the
    interpolant are recomputed spectrally from the samples, so a table loaded
    from disk behaves identically to the one that was saved.
    """

    resolution: int
    cutoff: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=float)
        n = self.resolution
        self.h = TWO_PI / n
        comps = []
        for c in range(2):
            v = self.values[:, :, c]
            coeffs = np.fft.fft2(v) / (n * n)
            d1 = spectral_derivative(coeffs, 0)
            d2 = spectral_derivative(coeffs, 1)
            d12 = spectral_derivative(d1, 1)
            # odd kernel: value odd, first derivatives even, mixed derivative odd
            comps.append(np.stack([
                v,
                _even_part(synthesize(d1)) * self.h,
                _even_part(synthesize(d2)) * self.h,
                _odd_part(synthesize(d12)) * self.h**2,
            ]))
        # shape (2 components, 4 quantities, n, n)
        self._hermite = np.stack(comps)
        # node-major copy: row i*n + j holds the 8 Hermite data of node (i, j),
        # ordered (value, h fx, h fy, h^2 fxy) x (component 1, component 2)
        self._packed = np.ascontiguousarray(
            self._hermite.transpose(2, 3, 1, 0).reshape(n * n, 8))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        pts = wrap(x.reshape(-1, 2)) / self.h
        n = self.resolution
        i0 = np.floor(pts).astype(np.int64)
        t = pts - i0
        i0 %= n
        i1 = (i0 + 1) % n
        hx = _hermite_basis(t[:, 0])
        hy = _hermite_basis(t[:, 1])
        out = np.zeros((len(pts), 2))
        corners = ((i0[:, 0], i0[:, 1], 0, 0), (i1[:, 0], i0[:, 1], 1, 0),
                   (i0[:, 0], i1[:, 1], 0, 1), (i1[:, 0], i1[:, 1], 1, 1))
        for a, b, ca, cb in corners:
            node = self._packed[a * n + b]
            w = np.stack([hx[ca] * hy[cb], hx[2 + ca] * hy[cb],
                          hx[ca] * hy[2 + cb], hx[2 + ca] * hy[2 + cb]], axis=1)
            out += np.einsum("pq,pqc->pc", w, node.reshape(-1, 4, 2))
        return out.reshape(x.shape)

    def save(self, path) -> None:
        path = Path(path)
        with path.open("wb") as fh:
            fh.write(_HEADER.pack(TABLE_MAGIC, TABLE_VERSION, self.resolution, self.cutoff))
            fh.write(self.values.astype("<f8").tobytes(order="C"))

    @classmethod
    def load(cls, path) -> "KernelTable":
        raw = Path(path).read_bytes()
        if len(raw) < _HEADER.size:
            raise ValueError("kernel table file truncated")
        magic, version, res, cutoff = _HEADER.unpack_from(raw)
        if magic != TABLE_MAGIC:
            raise ValueError(f"bad magic {magic!r}, expected {TABLE_MAGIC!r}")
        if version != TABLE_VERSION:
            raise ValueError(f"unsupported kernel table version {version}")
        data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
        if data.size != res * res * 2:
            raise ValueError("kernel table payload size does not match header")
        return cls(res, cutoff, data.reshape(res, res, 2).astype(float))


def _hermite_basis(t):
    t2 = t * t
    t3 = t2 * t
    return (
        2 * t3 - 3 * t2 + 1,   # value weight at left node
        -2 * t3 + 3 * t2,      # value weight at right node
        t3 - 2 * t2 + t,       # slope weight at left node
        t3 - t2,               # slope weight at right node
    )


def build_kernel_table(resolution: int, cutoff: int) -> KernelTable:
    if resolution < 64 or resolution & (resolution - 1):
        raise ValueError(f"resolution must be a power of two >= 64, got {resolution}")
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    if cutoff > resolution // 2:
        raise ValueError(f"cutoff {cutoff} exceeds resolution/2 = {resolution // 2} (aliasing)")
    c1, c2 = kernel_coefficients(resolution, cutoff)
    values = np.stack([_odd_part(synthesize(c1)), _odd_part(synthesize(c2))], axis=-1)
    values[0, 0] = 0.0
    return KernelTable(resolution, cutoff, values)


def velocity_coefficients(coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Spectral Biot-Savart law ``uhat(k) = -i k^perp / |k|^2 * xihat(k)``, ``uhat(0) = 0``."""
    k1, k2 = wavenumbers(coeffs.shape[0])
    ksq = k1**2 + k2**2
    inv = np.zeros_like(ksq)
    nz = ksq > 0
    inv[nz] = 1.0 / ksq[nz]
    u1 = 1j * k2 * inv * coeffs
    u2 = -1j * k1 * inv * coeffs
    return u1, u2


def velocity_from_vorticity(field: GridField) -> tuple[GridField, GridField]:
    u1, u2 = velocity_coefficients(field.coeffs)
    return GridField.from_coeffs(u1), GridField.from_coeffs(u2)


def spectral_divergence(u1: GridField, u2: GridField) -> np.ndarray:
    return synthesize(spectral_derivative(u1.coeffs, 0) + spectral_derivative(u2.coeffs, 1))


def spectral_curl(u1: GridField, u2: GridField) -> GridField:
    return GridField.from_coeffs(spectral_derivative(u2.coeffs, 0) - spectral_derivative(u1.coeffs, 1))
