"""Small dense symmetric / orthogonal matrix kernels.

Everything here works on n x n arrays with n <= 8.  The symmetric
eigensolver is a cyclic Jacobi method, which is robust at this size and
keeps the package independent of LAPACK conventions for eigenvector signs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_DIM = 8
JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SymMatrix:
    """Real symmetric matrix; the constructor symmetrizes its input."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        a = 0.5 * (a + a.T)
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def diag(cls, values) -> "SymMatrix":
        return cls(np.diag(np.asarray(values, dtype=float)))

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


@dataclass(frozen=True)
class Rotation:
    """An element of SO(n), optionally tagged with the (seed, index) it came from."""

    entries: np.ndarray
    seed_info: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        k = np.array(self.entries, dtype=float)
        if k.ndim != 2 or k.shape[0] != k.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {k.shape}")
        k.setflags(write=False)
        object.__setattr__(self, "entries", k)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, n: int) -> "Rotation":
        return cls(np.eye(n))

    def orthogonality_error(self) -> float:
        k = self.entries
        return float(np.linalg.norm(k.T @ k - np.eye(self.n)))

    def det(self) -> float:
        return float(np.linalg.det(self.entries))

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __matmul__(self, other):
        if isinstance(other, Rotation):
            return Rotation(self.entries @ other.entries)
        return self.entries @ np.asarray(other)


def _as_matrix(m) -> np.ndarray:
    if isinstance(m, (SymMatrix, Rotation)):
        return m.entries
    return np.asarray(m, dtype=float)


def plane_rotation(n: int, i: int, j: int, theta: float) -> Rotation:
    """Rotation by ``theta`` in the (i, j) coordinate plane."""
    k = np.eye(n)
    c, s = np.cos(theta), np.sin(theta)
    k[i, i] = c
    k[j, j] = c
    k[i, j] = s
    k[j, i] = -s
    return Rotation(k)


def sym_eigen(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a small symmetric matrix by cyclic Jacobi sweeps.

    Returns ``(w, Q)`` with ``w`` ascending and ``m = Q diag(w) Q^T``.
    """
    a = np.array(_as_matrix(m), dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("sym_eigen needs a square matrix")
    if n > MAX_DIM:
        raise ValueError(f"sym_eigen supports n <= {MAX_DIM}, got {n}")
    a = 0.5 * (a + a.T)
    q = np.eye(n)
    scale = np.linalg.norm(a)
    if n == 1 or scale == 0.0:
        return np.diag(a).copy(), q

    thresh = JACOBI_TOL * scale
    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.linalg.norm(a[~np.eye(n, dtype=bool)])
        if off < thresh:
            break
        for p in range(n - 1):
            for r in range(p + 1, n):
                apr = a[p, r]
                if apr == 0.0:
                    continue
                # Golub & Van Loan sym.schur2
                tau = (a[r, r] - a[p, p]) / (2.0 * apr)
                if abs(tau) > 1e150:
                    # a_pr negligible against the diagonal gap; avoid tau^2 overflow
                    t = 0.5 / tau
                else:
                    t = np.copysign(1.0, tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                ap = a[:, p].copy()
                ar = a[:, r].copy()
                a[:, p] = c * ap - s * ar
                a[:, r] = s * ap + c * ar
                ap = a[p, :].copy()
                ar = a[r, :].copy()
                a[p, :] = c * ap - s * ar
                a[r, :] = s * ap + c * ar
                a[p, r] = a[r, p] = 0.0
                qp = q[:, p].copy()
                qr = q[:, r].copy()
                q[:, p] = c * qp - s * qr
                q[:, r] = s * qp + c * qr
    else:
        raise ConvergenceError(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")

    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], q[:, order]


def conjugate(k, m) -> SymMatrix:
    """The adjoint action k.m = k m k^T."""
    kk = _as_matrix(k)
    mm = _as_matrix(m)
    if kk.shape != mm.shape:
        raise ValueError(f"dimension mismatch: {kk.shape} vs {mm.shape}")
    return SymMatrix(kk @ mm @ kk.T)


def diag_part(m) -> np.ndarray:
    return np.diag(_as_matrix(m)).copy()


def diag_norm(m) -> float:
    return float(np.sqrt(np.sum(np.diag(_as_matrix(m)) ** 2)))


def upper_cholesky(s: np.ndarray) -> np.ndarray:
    """Upper-triangular U with positive diagonal and s = U U^T.

    Works on stacks of matrices (..., n, n) by reversing the index order,
    taking the usual lower Cholesky factor and reversing back.
    """
    s = np.asarray(s, dtype=float)
    flipped = s[..., ::-1, ::-1]
    low = np.linalg.cholesky(flipped)
    return low[..., ::-1, ::-1]


def iwasawa_H(g) -> np.ndarray:
    """Iwasawa projection for G = N A K: the h with g in N exp(diag h) K.

    Accepts a single matrix or a stack (..., n, n) of determinant-one matrices.
    """
    g = _as_matrix(g)
    if g.shape[-1] != g.shape[-2]:
        raise ValueError("iwasawa_H needs square matrices")
    det = np.linalg.det(g)
    if np.any(np.abs(det - 1.0) >= 1e-9):
        raise ValueError("iwasawa_H needs det g = 1")
    gg = g @ np.swapaxes(g, -1, -2)
    try:
        u = upper_cholesky(gg)
    except np.linalg.LinAlgError as exc:
        raise ValueError("g g^T is not numerically positive definite") from exc
    h = np.log(np.diagonal(u, axis1=-2, axis2=-1))
    # log det = 0 up to rounding; remove the residue so sum(h) is exact to ~1e-16
    return h - h.mean(axis=-1, keepdims=True)
