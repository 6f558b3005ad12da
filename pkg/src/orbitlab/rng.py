"""Counter-based normal variates (Philox4x32-10 + Box-Muller).

Each draw is a pure function of (key, counter), so a sample can be
regenerated from its ordinal alone and work can be split across any number
of workers without changing a single bit of the stream.

Stream layout (stable across versions): for sample ``index`` and redraw
``attempt``, block ``b`` uses counter (index_lo, index_hi, b, attempt) and
key (seed_lo, seed_hi).  Each block yields two 53-bit uniforms and hence two
normals.
"""
from __future__ import annotations

import numpy as np
from numba import njit

PHILOX_M0 = np.uint64(0xD2511F53)
PHILOX_M1 = np.uint64(0xCD9E8D57)
PHILOX_W0 = np.uint64(0x9E3779B9)
PHILOX_W1 = np.uint64(0xBB67AE85)
MASK32 = np.uint64(0xFFFFFFFF)
TWO_PI = 2.0 * np.pi


@njit(cache=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Ten rounds of Philox4x32; all arguments are uint64 holding 32-bit words."""
    for _ in range(10):
        p0 = PHILOX_M0 * c0
        p1 = PHILOX_M1 * c2
        hi0 = p0 >> np.uint64(32)
        lo0 = p0 & MASK32
        hi1 = p1 >> np.uint64(32)
        lo1 = p1 & MASK32
        c0, c1, c2, c3 = (hi1 ^ c1 ^ k0) & MASK32, lo1, (hi0 ^ c3 ^ k1) & MASK32, lo0
        k0 = (k0 + PHILOX_W0) & MASK32
        k1 = (k1 + PHILOX_W1) & MASK32
    return c0, c1, c2, c3


@njit(cache=True)
def _uniform53(a, b):
    return float(((a >> np.uint64(5)) << np.uint64(26)) + (b >> np.uint64(6))) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def fill_normals(out, seed, index, attempt):
    """Fill the 1-D array ``out`` with standard normals for one sample."""
    k0 = np.uint64(seed) & MASK32
    k1 = np.uint64(seed) >> np.uint64(32)
    i0 = np.uint64(index) & MASK32
    i1 = np.uint64(index) >> np.uint64(32)
    m = out.shape[0]
    nblocks = (m + 1) // 2
    for b in range(nblocks):
        r0, r1, r2, r3 = philox4x32(i0, i1, np.uint64(b), np.uint64(attempt), k0, k1)
        u1 = 1.0 - _uniform53(r0, r1)  # (0, 1]
        u2 = _uniform53(r2, r3)
        rad = np.sqrt(-2.0 * np.log(u1))
        out[2 * b] = rad * np.cos(TWO_PI * u2)
        if 2 * b + 1 < m:
            out[2 * b + 1] = rad * np.sin(TWO_PI * u2)


def normals(seed: int, index: int, size: int, attempt: int = 0) -> np.ndarray:
    out = np.empty(size)
    fill_normals(out, np.uint64(seed), np.uint64(index), np.uint64(attempt))
    return out


def derive_seed(seed: int, *tags: int) -> int:
    """Independent 64-bit key for a named substream of ``seed``."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *[int(t) for t in tags]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
