"""Compiled N-body drift loop over a packed kernel table."""

from __future__ import annotations

import math

import numba
import numpy as np

TWO_PI = 2.0 * math.pi


@numba.njit(cache=True, inline="always")
def _interp(packed, n, h, d1, d2, out):
    """Bicubic Hermite interpolation of the packed table at displacement (d1, d2)."""
    p1 = (d1 % TWO_PI) / h
    p2 = (d2 % TWO_PI) / h
    a0 = int(math.floor(p1))
    b0 = int(math.floor(p2))
    tx = p1 - a0
    ty = p2 - b0
    a0 %= n
    b0 %= n
    a1 = (a0 + 1) % n
    b1 = (b0 + 1) % n
    tx2 = tx * tx
    ty2 = ty * ty
    hx = (2 * tx2 * tx - 3 * tx2 + 1, -2 * tx2 * tx + 3 * tx2,
          tx2 * tx - 2 * tx2 + tx, tx2 * tx - tx2)
    hy = (2 * ty2 * ty - 3 * ty2 + 1, -2 * ty2 * ty + 3 * ty2,
          ty2 * ty - 2 * ty2 + ty, ty2 * ty - ty2)
    k1 = 0.0
    k2 = 0.0
    for corner in range(4):
        ca = corner & 1
        cb = corner >> 1
        row = (a1 if ca else a0) * n + (b1 if cb else b0)
        w0 = hx[ca] * hy[cb]
        w1 = hx[2 + ca] * hy[cb]
        w2 = hx[ca] * hy[2 + cb]
        w3 = hx[2 + ca] * hy[2 + cb]
        k1 += w0 * packed[row, 0] + w1 * packed[row, 2] + w2 * packed[row, 4] + w3 * packed[row, 6]
        k2 += w0 * packed[row, 1] + w1 * packed[row, 3] + w2 * packed[row, 5] + w3 * packed[row, 7]
    out[0] = k1
    out[1] = k2


@numba.njit(cache=True)
def drift_table(pos, w, packed, n, h, radius, cap):
    """Pairwise drift using K(-d) = -K(d): one table lookup per unordered pair.

    The loop is sequential in a fixed order, so the result is reproducible
    bitwise and the pair forces are exactly antisymmetric.
    """
    m = pos.shape[0]
    out = np.zeros((m, 2))
    kv = np.empty(2)
    r2 = radius * radius
    for j in range(m):
        xj1 = pos[j, 0]
        xj2 = pos[j, 1]
        wj = w[j]
        s1 = 0.0
        s2 = 0.0
        for i in range(j + 1, m):
            wi = w[i]
            if wi == 0.0 and wj == 0.0:
                continue
            d1 = (xj1 - pos[i, 0] + math.pi) % TWO_PI - math.pi
            d2 = (xj2 - pos[i, 1] + math.pi) % TWO_PI - math.pi
            if d1 == 0.0 and d2 == 0.0:
                continue
            _interp(packed, n, h, d1, d2, kv)
            if d1 * d1 + d2 * d2 < r2:
                mag = math.sqrt(kv[0] * kv[0] + kv[1] * kv[1])
                if mag > cap:
                    kv[0] *= cap / mag
                    kv[1] *= cap / mag
            s1 += wi * kv[0]
            s2 += wi * kv[1]
            out[i, 0] -= wj * kv[0]
            out[i, 1] -= wj * kv[1]
        out[j, 0] += s1
        out[j, 1] += s2
    return out
