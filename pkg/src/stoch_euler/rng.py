"""Counter-based random streams.

Every Brownian increment is drawn from a generator keyed by
``(seed, member, step)``, so a member's path does not depend on how many
other members ran before it, or on which worker ran it.
"""

from __future__ import annotations

import numpy as np


def step_generator(seed: int, member: int, step: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, member, step])))


def brownian_increments(size: int, dt: float, seed: int, member: int, step: int) -> np.ndarray:
    """N(0, dt) increments for one step, one per noise mode."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    return np.sqrt(dt) * step_generator(seed, member, step).standard_normal(size)


def brownian_path(size: int, dt: float, steps: int, seed: int, member: int) -> np.ndarray:
    """Increments for ``steps`` consecutive steps, shape (steps, size)."""
    out = np.empty((steps, size))
    for s in range(steps):
        out[s] = brownian_increments(size, dt, seed, member, s)
    return out


def coarsen(increments: np.ndarray, factor: int) -> np.ndarray:
    """Sum consecutive blocks of ``factor`` increments (same path, step ``factor * dt``)."""
    inc = np.asarray(increments)
    if factor < 1 or len(inc) % factor:
        raise ValueError(f"cannot coarsen {len(inc)} steps by {factor}")
    return inc.reshape(len(inc) // factor, factor, *inc.shape[1:]).sum(axis=1)


def member_seed(base_seed: int, member: int) -> int:
    """Scalar seed recorded in manifests for a member (diagnostic only)."""
    return int(np.random.SeedSequence([base_seed, member]).generate_state(1, dtype=np.uint64)[0])
