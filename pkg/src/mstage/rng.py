"""Counter-based Philox4x32-10 streams addressed by ``(seed, replication)``.

Every uniform is a pure function of ``(seed, replication, lane, index)``, so
replications can be generated in any order or concurrently and still yield
identical values.
"""

from __future__ import annotations

import numpy as np

__all__ = ["philox4x32", "uniforms", "DEFAULT_SEED"]

DEFAULT_SEED = 20240601

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint32(0x9E3779B9)
_W1 = np.uint32(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_SHIFT = np.uint64(32)


def _mulhilo(m: np.uint64, x: np.ndarray):
    prod = m * x.astype(np.uint64)
    return (prod >> _SHIFT).astype(np.uint32), (prod & _MASK).astype(np.uint32)


def philox4x32(counter: np.ndarray, key: np.ndarray, rounds: int = 10) -> np.ndarray:
    """Philox4x32 block function.

    Args:
        counter: ``uint32`` array of shape ``(..., 4)``.
        key: ``uint32`` array of shape ``(..., 2)`` broadcastable against ``counter``.
        rounds: Number of rounds (10 for the standard generator).

    Returns:
        ``uint32`` array of shape ``(..., 4)``.
    """
    c = np.asarray(counter, dtype=np.uint32)
    k = np.asarray(key, dtype=np.uint32)
    c0, c1, c2, c3 = (c[..., j].copy() for j in range(4))
    k0 = np.broadcast_to(k[..., 0], c0.shape).copy()
    k1 = np.broadcast_to(k[..., 1], c0.shape).copy()
    with np.errstate(over="ignore"):
        for r in range(rounds):
            hi0, lo0 = _mulhilo(_M0, c0)
            hi1, lo1 = _mulhilo(_M1, c2)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
            if r + 1 < rounds:
                k0 = k0 + _W0
                k1 = k1 + _W1
    return np.stack([c0, c1, c2, c3], axis=-1)


def _split64(v) -> tuple:
    v = int(v) & 0xFFFFFFFFFFFFFFFF
    return v & 0xFFFFFFFF, v >> 32


def uniforms(seed: int, reps: np.ndarray, count: int, lane: int = 0) -> np.ndarray:
    """Open-interval uniforms for a batch of replications.

    Row ``r`` depends only on ``(seed, reps[r], lane)``; column ``j`` is the
    ``j``-th draw of that substream.  Each Philox block yields two 53-bit
    doubles strictly inside ``(0, 1)``.

    Args:
        seed: 64-bit master seed (the Philox key).
        reps: Replication indices (non-negative, below ``2**32``).
        count: Draws per replication.
        lane: Independent sub-stream selector (e.g. one per sample).

    Returns:
        Array of shape ``(len(reps), count)``.
    """
    reps = np.asarray(reps, dtype=np.uint64).reshape(-1)
    if count <= 0:
        return np.empty((reps.size, 0))
    if not 0 <= lane < 2**32:
        raise ValueError("lane must fit in 32 bits")
    nblocks = (count + 1) // 2
    blocks = np.arange(nblocks, dtype=np.uint64)
    ctr = np.empty((reps.size, nblocks, 4), dtype=np.uint32)
    ctr[..., 0] = (blocks & _MASK).astype(np.uint32)[None, :]
    ctr[..., 1] = np.uint32(lane)
    ctr[..., 2] = (reps & _MASK).astype(np.uint32)[:, None]
    ctr[..., 3] = (reps >> _SHIFT).astype(np.uint32)[:, None]
    key = np.array(_split64(seed), dtype=np.uint32)
    out = philox4x32(ctr, key).astype(np.uint64)
    hi = np.concatenate([out[..., 0:1], out[..., 2:3]], axis=-1) >> np.uint64(5)
    lo = np.concatenate([out[..., 1:2], out[..., 3:4]], axis=-1) >> np.uint64(6)
    ints = (hi << np.uint64(26)) | lo
    u = (ints.astype(np.float64) + 0.5) * 2.0**-53
    return u.reshape(reps.size, 2 * nblocks)[:, :count]
