"""Spherical functions on SL(n, R) and their flat periods against a bump.

phi_lam(g) = E_k exp(<i lam + rho, H(k g)>) with H the Iwasawa projection of
G = N A K.  Everything is Monte Carlo over Haar k, so estimates come with
component-wise standard errors.  Period estimates share one stream of k
across all quadrature nodes and all spectral parameters, which makes the
conjugate symmetry in lam exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .haar import SamplerConfig, haar_batch
from .linalg import iwasawa_H, upper_cholesky
from .quadrature import gauss_legendre
from .spectra import L_n

SUM_TOL = 1e-12


def rho(n: int) -> np.ndarray:
    """Half sum of positive roots e_i - e_j (i < j): rho_i = (n - 2i + 1)/2."""
    if n < 2:
        raise ValueError("n must be >= 2")
    i = np.arange(1, n + 1)
    return (n - 2 * i + 1) / 2.0


@dataclass(frozen=True)
class SpectralParam:
    lam: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.lam, dtype=float).ravel()
        if v.size < 2:
            raise ValueError("need at least two components")
        if abs(math.fsum(v)) > SUM_TOL * (1.0 + np.linalg.norm(v)):
            raise ValueError("spectral parameter must have component sum zero")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "lam", v)

    @property
    def n(self) -> int:
        return self.lam.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.lam))

    def __neg__(self) -> "SpectralParam":
        return SpectralParam(-self.lam)


def as_param(lam) -> SpectralParam:
    return lam if isinstance(lam, SpectralParam) else SpectralParam(lam)


@dataclass(frozen=True)
class BumpFunction:
    """b(H) = exp(1 - 1/(1 - |(H - c)/s|^2)) inside the unit ball, else 0; b(c) = 1."""

    center: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).ravel()
        if abs(math.fsum(c)) > SUM_TOL * (1.0 + np.linalg.norm(c)):
            raise ValueError("bump center must be traceless")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        object.__setattr__(self, "center", c)

    @classmethod
    def centered(cls, n: int, scale: float = 1.0) -> "BumpFunction":
        return cls(np.zeros(n), scale)

    @property
    def n(self) -> int:
        return self.center.size

    def __call__(self, H) -> np.ndarray:
        H = np.asarray(H, dtype=float)
        r2 = np.sum(((H - self.center) / self.scale) ** 2, axis=-1)
        out = np.zeros(r2.shape)
        inside = r2 < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
        return out


@dataclass(frozen=True)
class PhiEstimate:
    value: complex
    stderr_re: float
    stderr_im: float
    n_samples: int

    def within(self, other: complex, sigmas: float = 3.0) -> bool:
        d = self.value - other
        return (abs(d.real) <= sigmas * self.stderr_re + 1e-15
                and abs(d.imag) <= sigmas * self.stderr_im + 1e-15)


def _kg_H(ks: np.ndarray, P: np.ndarray) -> np.ndarray:
    """H(k g) for a stack of k, given P = g g^T."""
    n = P.shape[0]
    if np.array_equal(P, np.eye(n)):
        # g in K: k g in K and H vanishes identically
        return np.zeros(ks.shape[:-1])
    return _kg_H_stack(ks @ P @ np.swapaxes(ks, -1, -2))


def _phase(theta: np.ndarray):
    """(cos, sin) with exact oddness in theta."""
    a = np.abs(theta)
    return np.cos(a), np.copysign(np.sin(a), theta)


def phi(lam, g, n_samples: int = 10**4, cfg: SamplerConfig | None = None) -> PhiEstimate:
    """Monte Carlo spherical function phi_lam(g)."""
    lam = as_param(lam)
    g = np.asarray(g, dtype=float)
    n = lam.n
    if g.shape != (n, n):
        raise ValueError(f"g must be {n} x {n}")
    if abs(np.linalg.det(g) - 1.0) >= 1e-9:
        raise ValueError("phi needs det g = 1")
    cfg = SamplerConfig(n=n) if cfg is None else cfg
    if cfg.n != n:
        raise ValueError("sampler dimension does not match lambda")
    P = g @ g.T
    r = rho(n)
    re_sum = im_sum = re_sq = im_sq = 0.0
    done = 0
    while done < n_samples:
        c = min(cfg.batch, n_samples - done)
        ks = haar_batch(cfg, done, c)
        H = _kg_H(ks, P)
        w = np.exp(H @ r)
        cs, sn = _phase(H @ lam.lam)
        re, im = w * cs, w * sn
        re_sum += float(np.sum(re))
        im_sum += float(np.sum(im))
        re_sq += float(np.sum(re * re))
        im_sq += float(np.sum(im * im))
        done += c
    N = n_samples
    mre, mim = re_sum / N, im_sum / N
    se = lambda sq, m: math.sqrt(max(sq / N - m * m, 0.0) / max(N - 1, 1))
    return PhiEstimate(complex(mre, mim), se(re_sq, mre), se(im_sq, mim), N)


def phi_sl2_quadrature(lam, g, m: int = 4096) -> complex:
    """phi_lam(g) on SL(2) as a periodic trapezoid rule over the rotation angle."""
    lam = as_param(lam)
    if lam.n != 2:
        raise ValueError("n = 2 only")
    g = np.asarray(g, dtype=float)
    th = 2.0 * np.pi * np.arange(m) / m
    c, s = np.cos(th), np.sin(th)
    ks = np.empty((m, 2, 2))
    ks[:, 0, 0], ks[:, 0, 1], ks[:, 1, 0], ks[:, 1, 1] = c, s, -s, c
    H = iwasawa_H(ks @ g)
    vals = np.exp(H @ (1j * lam.lam + rho(2)))
    return complex(np.mean(vals))


# ---------------------------------------------------------------------------
# flat periods


@dataclass(frozen=True)
class PeriodEstimate:
    lam: np.ndarray
    value: complex
    stderr_re: float
    stderr_im: float
    n_samples: int
    n_nodes: int
    note: str = ""

    @property
    def stderr(self) -> float:
        return math.hypot(self.stderr_re, self.stderr_im)

    def bound_value(self) -> float:
        n = self.lam.size
        return (1.0 + float(np.linalg.norm(self.lam))) ** (1 - n) * L_n(self.lam)

    def ratio(self) -> float:
        return abs(self.value) / self.bound_value()

    def row(self) -> dict:
        return {"lambda": " ".join(f"{v:.17g}" for v in self.lam),
                "period_re": self.value.real, "period_im": self.value.imag,
                "stderr": self.stderr, "bound_value": self.bound_value(),
                "ratio": self.ratio()}


@dataclass
class PeriodGrid:
    """Tensor Gauss-Legendre grid on the bump support, coordinates h_1..h_{n-1}."""

    H: np.ndarray        # (m, n) traceless nodes
    weights: np.ndarray  # (m,) quadrature weight times b(H)
    order: int = 64
    info: dict = field(default_factory=dict)


def period_grid(bump: BumpFunction, order: int = 64) -> PeriodGrid:
    n = bump.n
    if n not in (2, 3):
        raise ValueError("periods are supported for n in {2, 3}")
    d = n - 1
    # the support ellipse in (h_1..h_{n-1}) has half-widths scale * sqrt(1 - 1/n)
    half = bump.scale * math.sqrt(1.0 - 1.0 / n)
    g, gw = gauss_legendre(order)
    axes = [bump.center[i] - half + 2 * half * g for i in range(d)]
    ws = [2 * half * gw for _ in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    wmesh = np.meshgrid(*ws, indexing="ij")
    h = np.stack([m.ravel() for m in mesh], axis=-1)
    w = np.prod(np.stack([m.ravel() for m in wmesh], axis=-1), axis=-1)
    H = np.concatenate([h, -h.sum(axis=1, keepdims=True)], axis=1)
    bw = w * bump(H)
    keep = bw > 0
    return PeriodGrid(H[keep], bw[keep], order, {"nodes_total": h.shape[0]})


def flat_periods(lams, bump: BumpFunction, n_samples: int = 10**4,
                 cfg: SamplerConfig | None = None, order: int = 64,
                 budget: int | None = None) -> list[PeriodEstimate]:
    """int_A phi_lam(exp H) b(H) dH for several lam on one common stream of k.

    ``budget`` caps nodes x samples; when it binds the sample count is
    reduced and the estimates carry the note "budget-capped".
    """
    params = [as_param(v) for v in lams]
    n = bump.n
    if any(p.n != n for p in params):
        raise ValueError("lambda and bump dimensions differ")
    cfg = SamplerConfig(n=n) if cfg is None else cfg
    grid = period_grid(bump, order)
    m = grid.H.shape[0]
    note = ""
    N = int(n_samples)
    if budget is not None and m * N > budget:
        N = max(budget // m, 2)
        note = "budget-capped"
    L = np.stack([p.lam for p in params], axis=1)     # (n, P)
    r = rho(n)
    P = len(params)
    s_re = np.zeros(P)
    s_im = np.zeros(P)
    q_re = np.zeros(P)
    q_im = np.zeros(P)
    # k-chunk size keeps the (chunk, nodes, n, n) stack moderate
    chunk = max(1, min(cfg.batch, 2_000_000 // max(m * n * n, 1)))
    D = np.exp(2.0 * grid.H)                          # diag of a^2 per node
    done = 0
    while done < N:
        c = min(chunk, N - done)
        ks = haar_batch(cfg, done, c)
        # S = k a^2 k^T for each (sample, node)
        S = np.einsum("sij,mj,skj->smik", ks, D, ks, optimize=True)
        H = _kg_H_stack(S)
        w = np.exp(H @ r) * grid.weights              # (c, m)
        th = H @ L                                    # (c, m, P)
        cs, sn = _phase(th)
        y_re = np.einsum("sm,smp->sp", w, cs)
        y_im = np.einsum("sm,smp->sp", w, sn)
        s_re += y_re.sum(axis=0)
        s_im += y_im.sum(axis=0)
        q_re += (y_re * y_re).sum(axis=0)
        q_im += (y_im * y_im).sum(axis=0)
        done += c
    out = []
    for j, p in enumerate(params):
        mre, mim = s_re[j] / N, s_im[j] / N
        se_re = math.sqrt(max(q_re[j] / N - mre * mre, 0.0) / max(N - 1, 1))
        se_im = math.sqrt(max(q_im[j] / N - mim * mim, 0.0) / max(N - 1, 1))
        out.append(PeriodEstimate(p.lam, complex(mre, mim), se_re, se_im, N, m, note))
    return out


def _kg_H_stack(S: np.ndarray) -> np.ndarray:
    """H from stacked S = (k g)(k g)^T."""
    n = S.shape[-1]
    if n == 2:
        # S = U U^T with U upper triangular and det S = 1: U_22 = sqrt(S_22)
        h2 = 0.5 * np.log(S[..., 1, 1])
        return np.stack([-h2, h2], axis=-1)
    u = upper_cholesky(0.5 * (S + np.swapaxes(S, -1, -2)))
    h = np.log(np.diagonal(u, axis1=-2, axis2=-1))
    return h - h.mean(axis=-1, keepdims=True)


def flat_period(lam, bump: BumpFunction, n_samples: int = 10**4,
                cfg: SamplerConfig | None = None, order: int = 64,
                budget: int | None = None) -> PeriodEstimate:
    return flat_periods([lam], bump, n_samples, cfg, order, budget)[0]
