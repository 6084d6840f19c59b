"""Counter-based random streams.

Every draw is a pure function of its integer keys (seed, pixel coords, tick,
salt), so row- or frame-partitioned workers reproduce the exact same values
regardless of schedule.  The core is a splitmix64 chain; normals come from a
fixed two-uniform Box-Muller so no draw ever consumes a variable amount of
state.
"""

from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV53 = float(2.0**-53)


def _mix64(x: np.ndarray) -> np.ndarray:
    # u64 wraparound is intentional here; keep numpy quiet about it
    with np.errstate(over="ignore"):
        x = x + _GAMMA
        x = (x ^ (x >> np.uint64(30))) * _MIX1
        x = (x ^ (x >> np.uint64(27))) * _MIX2
    return x ^ (x >> np.uint64(31))


def hash_u64(seed: int, *keys) -> np.ndarray:
    """Fold integer keys (scalars or arrays, broadcast together) into u64 hashes."""
    h = _mix64(np.uint64(seed))
    for k in keys:
        h = _mix64(h ^ np.asarray(k, dtype=np.uint64))
    return h


def unit_uniform(seed: int, *keys) -> np.ndarray:
    """Uniform floats in [0, 1), one per broadcast key tuple."""
    return (hash_u64(seed, *keys) >> np.uint64(11)).astype(np.float64) * _INV53


def unit_normal(seed: int, *keys) -> np.ndarray:
    """Standard normals via Box-Muller on two chained sub-hashes."""
    h = hash_u64(seed, *keys)
    h1 = _mix64(h ^ np.uint64(0x1))
    h2 = _mix64(h ^ np.uint64(0x2))
    # u1 in (0, 1] so the log is finite
    u1 = ((h1 >> np.uint64(11)).astype(np.float64) + 1.0) * _INV53
    u2 = (h2 >> np.uint64(11)).astype(np.float64) * _INV53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
