"""Reproducible Haar sampling on SO(n).

A sample is a Gaussian matrix from the counter-based stream of
``(seed, index)``, orthonormalized by Gram-Schmidt.  The triangular factor
of Gram-Schmidt has a positive diagonal, so the sign correction that turns
QR output into Haar measure on O(n) is the identity here; the O(n) \\ SO(n)
component is folded onto SO(n) by negating the first column.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .linalg import Rotation
from .rng import fill_normals

# reject draws whose Gram-Schmidt pivots fall below this (probability ~ 0)
_PIVOT_FLOOR = 1e-10


@dataclass(frozen=True)
class SamplerConfig:
    seed: int = 0
    n: int = 3
    batch: int = 1 << 16

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.batch < 1:
            raise ValueError("batch must be positive")


@njit(cache=True)
def _orthonormalize(k, n):
    """In-place Gram-Schmidt (two passes) on the columns of k; returns min pivot."""
    minpiv = np.inf
    for j in range(n):
        for _ in range(2):
            for i in range(j):
                dot = 0.0
                for r in range(n):
                    dot += k[r, i] * k[r, j]
                for r in range(n):
                    k[r, j] -= dot * k[r, i]
        nrm = 0.0
        for r in range(n):
            nrm += k[r, j] * k[r, j]
        nrm = np.sqrt(nrm)
        if nrm < minpiv:
            minpiv = nrm
        if nrm == 0.0:
            return 0.0
        for r in range(n):
            k[r, j] /= nrm
    return minpiv


@njit(cache=True)
def _det(k, n, work):
    for i in range(n):
        for j in range(n):
            work[i, j] = k[i, j]
    det = 1.0
    for c in range(n):
        p = c
        best = abs(work[c, c])
        for r in range(c + 1, n):
            if abs(work[r, c]) > best:
                best = abs(work[r, c])
                p = r
        if best == 0.0:
            return 0.0
        if p != c:
            for j in range(n):
                tmp = work[c, j]
                work[c, j] = work[p, j]
                work[p, j] = tmp
            det = -det
        det *= work[c, c]
        for r in range(c + 1, n):
            f = work[r, c] / work[c, c]
            for j in range(c, n):
                work[r, j] -= f * work[c, j]
    return det


@njit(cache=True)
def haar_into(k, seed, index, z, work):
    """Write the Haar rotation for (seed, index) into the n x n array k."""
    n = k.shape[0]
    attempt = 0
    while True:
        fill_normals(z, seed, index, attempt)
        for i in range(n):
            for j in range(n):
                k[i, j] = z[i * n + j]
        # column signs of the triangular factor are all +1 for Gram-Schmidt
        if _orthonormalize(k, n) > _PIVOT_FLOOR:
            break
        attempt += 1
    if _det(k, n, work) < 0.0:
        for r in range(n):
            k[r, 0] = -k[r, 0]


@njit(cache=True)
def _haar_batch(seed, start, count, n):
    out = np.empty((count, n, n))
    z = np.empty(n * n)
    work = np.empty((n, n))
    k = np.empty((n, n))
    for t in range(count):
        haar_into(k, seed, start + t, z, work)
        out[t] = k
    return out


def haar_batch(cfg: SamplerConfig, start: int, count: int) -> np.ndarray:
    """Rotations for sample ordinals start .. start+count-1, shape (count, n, n)."""
    return _haar_batch(np.uint64(cfg.seed), np.uint64(start), int(count), int(cfg.n))


def haar_rotation(cfg: SamplerConfig, index: int) -> Rotation:
    if cfg.n == 1:
        return Rotation(np.ones((1, 1)), seed_info=(cfg.seed, index))
    k = haar_batch(cfg, index, 1)[0]
    return Rotation(k, seed_info=(cfg.seed, index))


def iter_blocks(cfg: SamplerConfig, total: int, start: int = 0):
    """Yield (block_start, block_count) covering [start, start+total) in cfg.batch chunks."""
    done = 0
    while done < total:
        c = min(cfg.batch, total - done)
        yield start + done, c
        done += c


@njit(cache=True)
def _diag_sq_norms(seed, start, count, lam):
    """||pi(k.lam)||^2 for each sample; (k lam k^T)_ii = sum_j k_ij^2 lam_j."""
    n = lam.shape[0]
    out = np.empty(count)
    z = np.empty(n * n)
    work = np.empty((n, n))
    k = np.empty((n, n))
    for t in range(count):
        haar_into(k, seed, start + t, z, work)
        acc = 0.0
        for i in range(n):
            d = 0.0
            for j in range(n):
                d += k[i, j] * k[i, j] * lam[j]
            acc += d * d
        out[t] = acc
    return out


def diag_sq_norms(cfg: SamplerConfig, start: int, count: int, lam) -> np.ndarray:
    lam = np.ascontiguousarray(lam, dtype=float)
    if lam.shape != (cfg.n,):
        raise ValueError(f"expected a length-{cfg.n} spectrum")
    return _diag_sq_norms(np.uint64(cfg.seed), np.uint64(start), int(count), lam)


@njit(cache=True)
def _count_hits(seed, start, count, lam, r2):
    n = lam.shape[0]
    z = np.empty(n * n)
    work = np.empty((n, n))
    k = np.empty((n, n))
    hits = 0
    for t in range(count):
        haar_into(k, seed, start + t, z, work)
        acc = 0.0
        for i in range(n):
            d = 0.0
            for j in range(n):
                d += k[i, j] * k[i, j] * lam[j]
            acc += d * d
            if acc >= r2:
                break
        if acc < r2:
            hits += 1
    return hits


def count_hits(cfg: SamplerConfig, start: int, count: int, lam, radius: float) -> int:
    """Number of ordinals in [start, start+count) with ||pi(k.lam)|| < radius."""
    lam = np.ascontiguousarray(lam, dtype=float)
    if lam.shape != (cfg.n,):
        raise ValueError(f"expected a length-{cfg.n} spectrum")
    return int(_count_hits(np.uint64(cfg.seed), np.uint64(start), int(count), lam,
                           float(radius) ** 2))
