"""Counter-based Gaussian draws.

Every draw is a pure function of ``(seed, stream, a, b)``, so results do not
depend on the order or the grouping in which they are requested. The hash is
the splitmix64 finaliser applied to a mixed key; two hashed words feed a
Box-Muller transform.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1

# stream tags
PROGRAM = 1
READ = 2
DRIFT = 3


def _mix(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * _M1
    z = z ^ (z >> np.uint64(27))
    z = z * _M2
    return z ^ (z >> np.uint64(31))


def _key(seed: int, stream: int) -> np.uint64:
    # scalar mixing in Python ints to avoid numpy scalar overflow warnings
    z = (int(seed) * 0x9E3779B97F4A7C15 + int(stream) * 0xD1B54A32D192ED03 + 1) & _MASK64
    for mult in (0xBF58476D1CE4E5B9, 0x94D049BB133111EB):
        z ^= z >> 31
        z = (z * mult) & _MASK64
    return np.uint64(z)


def _unit(h: np.ndarray) -> np.ndarray:
    # top 53 bits -> (0, 1]
    return ((h >> np.uint64(11)).astype(np.float64) + 1.0) * (1.0 / 9007199254740992.0)


def counter_normals(seed: int, stream: int, a, b) -> np.ndarray:
    """Standard normal draws indexed by broadcast integer counters ``a`` and ``b``."""
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = _mix(_key(seed, stream) ^ (a * _GOLDEN))
        h = _mix(h ^ (b * _M2 + _GOLDEN))
        u1 = _unit(_mix(h))
        u2 = _unit(_mix(h ^ _GOLDEN))
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def grid_normals(seed: int, stream: int, ident: int, shape: tuple[int, int]) -> np.ndarray:
    """Normals for a 2-D grid, cell (r, c) keyed by (ident, r << 32 | c)."""
    rows, cols = shape
    r = np.arange(rows, dtype=np.uint64)[:, None] << np.uint64(32)
    c = np.arange(cols, dtype=np.uint64)[None, :]
    return counter_normals(seed, stream, np.uint64(ident), r | c)
