"""Counter-based random numbers for reproducible, order-independent Monte Carlo.

Every random draw is a pure function of (master seed, stream index, counter),
so ensembles are bit-reproducible no matter how paths are batched or scheduled
across workers.  The construction is a two-level splitmix64: the master seed
spawns one child seed per stream (path), and each stream draws by hashing its
own golden-ratio counter sequence.

The same constants are inlined in the numba kernels (``_kernels.py``); the
functions here are the numpy-vectorized reference used by vectorized code and
by the tests that pin kernel/reference agreement.
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 1.1102230246251565e-16  # 2**-53
_TWO_PI = 6.283185307179586


def mix64(z: np.ndarray | int) -> np.ndarray | np.uint64:
    """splitmix64 finalizer (avalanching bijection on uint64)."""
    z = np.uint64(z) if np.isscalar(z) else z.astype(np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def stream_seeds(master_seed: int, start: int, count: int) -> np.ndarray:
    """Child seeds for streams ``start .. start+count-1`` (splitmix64 stream)."""
    idx = np.arange(start, start + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(np.uint64(master_seed) + (idx + np.uint64(1)) * GOLDEN)


def uniforms(seeds: np.ndarray, counters: np.ndarray) -> np.ndarray:
    """U(0,1] draws at ``counters`` for each stream seed (shapes broadcast)."""
    s = np.asarray(seeds, dtype=np.uint64)
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = mix64(s + (c + np.uint64(1)) * GOLDEN)
    # top 53 bits -> (0, 1]; never exactly 0, safe under log
    return ((h >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53


def normals(seeds: np.ndarray, counters: np.ndarray) -> np.ndarray:
    """Standard normals via Box-Muller; consumes counters c and c+1."""
    c = np.asarray(counters, dtype=np.uint64)
    u1 = uniforms(seeds, c)
    u2 = uniforms(seeds, c + np.uint64(1))
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)
