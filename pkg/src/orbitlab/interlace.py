"""Interlacing spectra, the bordered-matrix construction and the exact recursion.

For X = k.lambda the upper-left (n-1) block has eigenvalues mu interlacing
lambda, and averaging over k becomes an integral over the interlacing box M
with density c_n J(mu).  Applied to the indicator of the diagonal ball this
gives a recursion I_n -> I_{n-1} which we evaluate by quadrature.

All integrals over M are taken slice by slice: s = sum(mu) is the outer
variable (adaptive), and the slice {mu in M : sum(mu) = s} is covered by
nested fixed u^2 rules.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from .goldens import load_goldens
from .linalg import SymMatrix
from .quadrature import QuadResult, integrate, u2_rule
from .spectra import Spectrum, as_spectrum, log_prime, trace_reduce

log = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class InterlacingPair:
    lam: Spectrum
    mu: Spectrum

    def __post_init__(self):
        lam = as_spectrum(self.lam)
        mu = as_spectrum(self.mu)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)
        if mu.n != lam.n - 1:
            raise ValueError("mu must have exactly one fewer entry than lambda")
        l, m = lam.values, mu.values
        if not (np.all(l[:-1] < m) and np.all(m < l[1:])):
            raise ValueError("lambda and mu are not strictly interlacing")


@dataclass(frozen=True)
class BorderData:
    z: np.ndarray
    z_n: float


def fan_pall_border(p: InterlacingPair) -> BorderData:
    """Border entries z_i > 0 and corner z_n of the bordered matrix with spectrum lambda."""
    lam, mu = p.lam.values, p.mu.values
    m = mu.size
    z = np.empty(m)
    for i in range(m):
        num = np.sum(np.log(np.abs(lam - mu[i])))
        others = np.delete(mu, i)
        den = np.sum(np.log(np.abs(mu[i] - others))) if others.size else 0.0
        z[i] = math.exp(0.5 * (num - den))
    return BorderData(z, math.fsum(lam) - math.fsum(mu))


def build_bordered(mu, b: BorderData) -> SymMatrix:
    mu = as_spectrum(mu).values
    if mu.size != b.z.size:
        raise ValueError("border length does not match mu")
    n = mu.size + 1
    a = np.zeros((n, n))
    a[np.arange(n - 1), np.arange(n - 1)] = mu
    a[:-1, -1] = b.z
    a[-1, :-1] = b.z
    a[-1, -1] = b.z_n
    return SymMatrix(a)


def log_jacobian(lam: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """log J(mu) for lam (n,) and mu (..., n-1); broadcast over leading axes of mu."""
    mu = np.asarray(mu, dtype=float)
    m = mu.shape[-1]
    out = np.zeros(mu.shape[:-1])
    for i in range(m):
        for j in range(i + 1, m):
            out += np.log(np.abs(mu[..., j] - mu[..., i]))
    for li in lam:
        out -= 0.5 * np.sum(np.log(np.abs(li - mu)), axis=-1)
    return out


def jacobian_J(p: InterlacingPair) -> float:
    return float(np.exp(log_jacobian(p.lam.values, p.mu.values)))


def dixon_anderson_mass(n: int) -> float:
    """Closed form of the integral of J over M: pi^(n/2) / Gamma(n/2).

    This is the Dixon-Anderson integral with all exponents 1/2; it is used
    only as an independent cross-check of the quadrature.
    """
    return math.pi ** (n / 2) / math.gamma(n / 2)


# ---------------------------------------------------------------------------
# slice machinery


def _corner_sums(lam: np.ndarray) -> list[float]:
    """sum(mu) at the vertices of the box M; the slice shape changes only there."""
    m = lam.size - 1
    sums = set()
    for pick in itertools.product((0, 1), repeat=m):
        sums.add(float(sum(lam[i + pick[i]] for i in range(m))))
    return sorted(sums)


def _slice_points(lam: np.ndarray, s: np.ndarray, m_nodes: int):
    """Nodes covering {mu in M : sum(mu) = s} for each s.

    Returns (mu, w, owner): mu (P, n-1), weights w (P,) for Lebesgue measure
    in (mu_1, ..., mu_{n-2}), and owner (P,) indexing into s.  Each level is
    cut where the remaining sub-slice changes shape, i.e. where the leftover
    sum crosses a corner sum of the remaining sub-box.
    """
    n = lam.size
    m = n - 1
    s = np.asarray(s, dtype=float)
    owner = np.arange(s.size)
    rem = s.copy()
    w = np.ones(s.size)
    cols = []
    for i in range(m - 1):
        # remaining mu_{i+1..m-1} (0-based) must sum to rem - mu_i
        tail_lo = float(np.sum(lam[i + 1:m]))
        tail_hi = float(np.sum(lam[i + 2:m + 1]))
        lo = np.maximum(lam[i], rem - tail_hi)
        hi = np.maximum(np.minimum(lam[i + 1], rem - tail_lo), lo)
        if m - 1 - i >= 2:
            corners = np.array(_corner_sums(lam[i + 1:]))
            cuts = np.clip(rem[:, None] - corners[None, :], lo[:, None], hi[:, None])
            cuts = np.sort(np.concatenate([lo[:, None], cuts, hi[:, None]], axis=1), axis=1)
        else:
            cuts = np.stack([lo, hi], axis=1)
        pieces = [u2_rule(cuts[:, p], cuts[:, p + 1], m_nodes) for p in range(cuts.shape[1] - 1)]
        x = np.concatenate([pc[0] for pc in pieces], axis=1)
        wx = np.concatenate([pc[1] for pc in pieces], axis=1)
        k = x.shape[-1]
        keep = (wx > 0).ravel()
        owner = np.repeat(owner, k)[keep]
        w = (w[:, None] * wx).ravel()[keep]
        rem = (rem[:, None] - x).ravel()[keep]
        cols = [np.repeat(c, k)[keep] for c in cols]
        cols.append(x.ravel()[keep])
    cols.append(rem)
    mu = np.stack(cols, axis=-1)
    return mu, w, owner


def _slice_integral(lam, s, integrand, m_nodes: int) -> np.ndarray:
    """For each s: integral over the slice of integrand(mu, owner) * J(mu)."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if lam.size == 2:
        mu = s[:, None]
        inside = (s > lam[0]) & (s < lam[1])
        val = np.zeros(s.size)
        if np.any(inside):
            mm = mu[inside]
            val[inside] = np.exp(log_jacobian(lam, mm)) * integrand(mm, np.nonzero(inside)[0])
        return val
    mu, w, owner = _slice_points(lam, s, m_nodes)
    good = w > 0
    vals = np.zeros(w.size)
    if np.any(good):
        mg = mu[good]
        with np.errstate(divide="ignore"):
            dens = np.exp(log_jacobian(lam, mg))
        # a node can land on lambda_i exactly through rounding when a nested
        # interval is a few ulps wide; its weight is negligible
        dens[~np.isfinite(dens)] = 0.0
        vals[good] = w[good] * dens * integrand(mg, owner[good])
    return np.bincount(owner, weights=vals, minlength=s.size)


def _box_range(lam: np.ndarray) -> tuple[float, float]:
    return float(np.sum(lam[:-1])), float(np.sum(lam[1:]))


# ---------------------------------------------------------------------------
# normalization


def raw_mass(s, rtol: float = 1e-8, m_nodes: int = 24) -> QuadResult:
    """The integral of J over M; independent of lambda by the transfer identity."""
    lam = as_spectrum(s).values
    if lam.size < 2 or not np.all(np.diff(lam) > 0):
        raise ValueError("raw_mass needs a strictly regular spectrum with n >= 2")
    if lam.size == 2:
        def f(x):
            return (np.abs(x - lam[0]) * np.abs(lam[1] - x)) ** -0.5
        return integrate(f, lam[0], lam[1], rtol=rtol)
    a, b = _box_range(lam)
    ones = lambda mu, owner: np.ones(mu.shape[0])  # noqa: E731
    return integrate(lambda s_: _slice_integral(lam, s_, ones, m_nodes), a, b,
                     points=_corner_sums(lam), rtol=rtol)


def golden_mass(n: int) -> float:
    """Stored 1/c_n measured by raw_mass (see data/goldens.json)."""
    table = load_goldens()["normalization"]["inv_c"]
    if str(n) not in table:
        raise KeyError(f"no golden normalization for n={n}")
    return float(table[str(n)])


def normalization_c(s, rtol: float = 1e-8, m_nodes: int = 24) -> tuple[float, QuadResult]:
    """(c_n, raw) with c_n = 1 / raw.value, computed at this lambda."""
    raw = raw_mass(s, rtol=rtol, m_nodes=m_nodes)
    if not raw.converged:
        log.warning("normalization quadrature did not converge (err %.3g)", raw.error)
    return 1.0 / raw.value, raw


# ---------------------------------------------------------------------------
# closed forms used by the recursion


def I2_closed(a, radius=1.0):
    """I_2 for lambda = (-a, a): (2/pi) arcsin(min(1, radius / (a sqrt 2)))."""
    a = np.abs(np.asarray(a, dtype=float))
    radius = np.asarray(radius, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = np.where(a > 0, radius / (a * SQRT2), np.inf)
    out = (2.0 / math.pi) * np.arcsin(np.minimum(1.0, arg))
    out = np.where(radius > 0, out, 0.0)
    return float(out) if out.ndim == 0 else out


def _I2_general(mu: np.ndarray, rho2) -> np.ndarray:
    """I_2(mu; rho) for arbitrary (non-tracefree) mu of shape (..., 2), rho2 = rho^2."""
    tr = mu[..., 0] + mu[..., 1]
    q = rho2 - 0.5 * tr * tr
    a = 0.5 * np.abs(mu[..., 1] - mu[..., 0])
    qpos = np.maximum(q, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = np.where(a > 0, np.sqrt(0.5 * qpos) / a, np.inf)
    val = (2.0 / math.pi) * np.arcsin(np.minimum(1.0, arg))
    return np.where(q > 0, val, 0.0)


def _slice3(lam, s, rho2, m_nodes):
    """Batched n=3 slice integral of I_2(mu; rho) J(mu) at sum(mu) = s.

    lam (B, 3) ascending, s and rho2 (B, S).  The x = mu_1 range is split at
    the point where the arcsin saturates, so each piece is smooth in u.
    """
    l1, l2, l3 = (lam[:, i:i + 1] for i in range(3))
    q = rho2 - 0.5 * s * s
    qpos = np.maximum(q, 0.0)
    lo = np.maximum(l1, s - l3)
    hi = np.minimum(l2, s - l2)
    hi = np.maximum(hi, lo)
    kink = np.clip(0.5 * s - np.sqrt(0.5 * qpos), lo, hi)
    total = np.zeros(s.shape)
    for a, b in ((lo, kink), (kink, hi)):
        x, w = u2_rule(a, b, m_nodes)                  # (B, S, 2m)
        y = s[..., None] - x
        half = 0.5 * (y - x)
        with np.errstate(divide="ignore", invalid="ignore"):
            arg = np.where(half > 0, np.sqrt(0.5 * qpos)[..., None] / half, np.inf)
            g = (2.0 / math.pi) * np.arcsin(np.minimum(1.0, arg))
            logj = (np.log(np.abs(y - x))
                    - 0.5 * (np.log(np.abs(x - l1[..., None])) + np.log(np.abs(x - l2[..., None]))
                             + np.log(np.abs(x - l3[..., None])) + np.log(np.abs(y - l1[..., None]))
                             + np.log(np.abs(y - l2[..., None])) + np.log(np.abs(y - l3[..., None]))))
            val = np.where(w > 0, w * g * np.exp(logj), 0.0)
        # nodes rounded onto a pole (x = y = lambda_2 at s = 2 lambda_2) give
        # inf - inf; their weight is O(u du), so they are dropped
        total += np.sum(np.where(np.isfinite(val), val, 0.0), axis=-1)
    return np.where(q > 0, total, 0.0)


def _I3_unit(nu: np.ndarray, m_outer: int = 8, m_inner: int = 8) -> np.ndarray:
    """I_3(nu; 1) for a batch of tracefree ascending spectra nu (B, 3), fixed rules."""
    nu = np.asarray(nu, dtype=float)
    B = nu.shape[0]
    lo = np.maximum(nu[:, 0] + nu[:, 1], -1.0)
    hi = np.minimum(nu[:, 1] + nu[:, 2], 1.0)
    c = math.sqrt(2.0 / 3.0)
    # s where the arcsin saturation point x = s/2 - sqrt(q/2) meets a slice
    # end; squaring gives s^2 - a s + a^2 - 1/2 = 0 with a in nu
    disc = np.sqrt(np.maximum(2.0 - 3.0 * nu * nu, 0.0))
    sat = np.concatenate([0.5 * (nu - disc), 0.5 * (nu + disc)], axis=1)
    cand = np.concatenate([np.stack([lo, nu[:, 0] + nu[:, 2], 2.0 * nu[:, 1],
                                     np.full(B, -c), np.full(B, c), hi], axis=1), sat], axis=1)
    cand = np.clip(cand, lo[:, None], np.maximum(hi, lo)[:, None])
    cand.sort(axis=1)
    out = np.zeros(B)
    for p in range(cand.shape[1] - 1):
        s, w = u2_rule(cand[:, p], cand[:, p + 1], m_outer)   # (B, 2m)
        rho2 = 1.0 - s * s          # Tr nu = 0
        inner = _slice3(nu, s, rho2, m_inner)
        out += np.sum(np.where(w > 0, w * inner, 0.0), axis=1)
    return out * (1.0 / dixon_anderson_mass(3))


def _clip_cut_points(tr_lam: float, radius: float, n_inner: int) -> list[float]:
    """s where the inner admissible radius vanishes: r^2 - (T - s)^2 = s^2 / n_inner."""
    # (1 + 1/k) s^2 - 2 T s + T^2 - r^2 = 0
    k = n_inner
    a = 1.0 + 1.0 / k
    b = -2.0 * tr_lam
    c = tr_lam * tr_lam - radius * radius
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    r = math.sqrt(disc)
    return [(-b - r) / (2 * a), (-b + r) / (2 * a)]


@dataclass(frozen=True)
class RecursionResult:
    value: float
    error: float
    converged: bool
    n_evals: int = 0

    def __float__(self):
        return self.value


def recursive_I(s, radius: float = 1.0, rtol: float = 1e-6, m_nodes: int | None = None,
                mass: float | None = None) -> RecursionResult:
    """I_n(lambda; radius) by the interlacing recursion (n <= 4).

    ``mass`` is 1/c_n; by default the Dixon-Anderson value, which agrees with
    the stored quadrature golden to better than 1e-9.
    """
    sp = as_spectrum(s)
    n = sp.n
    if radius <= 0:
        raise ValueError("radius must be positive")
    if n == 1:
        return RecursionResult(1.0 if abs(sp.values[0]) < radius else 0.0, 0.0, True)
    red = trace_reduce(sp.scaled(1.0 / radius))
    if red is None:
        return RecursionResult(0.0, 0.0, True)
    lam = np.array(red.values)
    if n == 2:
        return RecursionResult(I2_closed(0.5 * (lam[1] - lam[0])), 0.0, True)
    if not np.all(np.diff(lam) > 0):
        # measure-zero coincidences: nudge apart, I_n is continuous in lambda
        lam = lam + np.linspace(-1, 1, n) * 1e-12 * (1.0 + np.linalg.norm(lam))
    if n > 4:
        raise ValueError("recursive_I supports n <= 4")
    mass = dixon_anderson_mass(n) if mass is None else mass
    a, b = _box_range(lam)
    a, b = max(a, -1.0), min(b, 1.0)   # |Tr lambda - Tr mu| < 1 with Tr lambda = 0
    pts = _corner_sums(lam) + _clip_cut_points(0.0, 1.0, n - 1)
    if n == 3:
        m = m_nodes or 16
        lam_b = lam[None, :]

        def outer(sv):
            sv = np.asarray(sv)[None, :]
            return _slice3(lam_b, sv, 1.0 - sv * sv, m)[0]
    else:
        m = m_nodes or 6

        def integrand(mu, owner, sv):
            ss = sv[owner]
            rho2 = 1.0 - ss * ss
            big_r2 = rho2 - ss * ss / 3.0
            res = np.zeros(mu.shape[0])
            ok = big_r2 > 0
            if np.any(ok):
                nu = (mu[ok] - ss[ok, None] / 3.0) / np.sqrt(big_r2[ok])[:, None]
                res[ok] = _chunked(_I3_unit, nu)
            return res

        def outer(sv):
            sv = np.asarray(sv, dtype=float)
            return _slice_integral(lam, sv, lambda mu, own: integrand(mu, own, sv), m)

    q = integrate(outer, a, b, points=pts, rtol=rtol, order=7 if n == 4 else 15)
    return RecursionResult(q.value / mass, q.error / mass, q.converged, q.n_evals)


def _chunked(fn, x, size=4096):
    if x.shape[0] <= size:
        return fn(x)
    return np.concatenate([fn(x[i:i + size]) for i in range(0, x.shape[0], size)])


# ---------------------------------------------------------------------------
# J_n


def _A_array(mu: np.ndarray) -> np.ndarray:
    """A_m(mu) for a batch of ascending spectra mu (P, m)."""
    m = mu.shape[-1]
    norm = np.linalg.norm(mu, axis=-1)
    if m == 2:
        L = np.ones(mu.shape[0])
    else:
        L = np.log(2.0 + norm / (1.0 + np.abs(mu[:, 1]) + np.abs(mu[:, m - 2]))) ** (m - 2)
        if m == 4:
            L = L * np.log(2.0 + norm / (1.0 + np.abs(mu[:, 0] - mu[:, 1]) + np.abs(mu[:, 2] - mu[:, 3])))
    return (1.0 + norm) ** (1 - m) * L


def J_n_integral(s, rtol: float = 1e-6, m_nodes: int | None = None) -> QuadResult:
    """Integral of A_{n-1}(mu) J(mu) over {mu in M : |sum mu| < 1}."""
    sp = as_spectrum(s)
    n = sp.n
    if n < 3 or n > 5:
        raise ValueError("J_n_integral supports 3 <= n <= 5")
    if not sp.is_regular():
        raise ValueError("J_n_integral needs a strictly regular spectrum")
    if not sp.is_tracefree():
        raise ValueError("J_n_integral needs a tracefree spectrum")
    lam = np.array(sp.values)
    a, b = _box_range(lam)
    a, b = max(a, -1.0), min(b, 1.0)
    if b <= a:
        return QuadResult(0.0, 0.0, True, 0)
    m = m_nodes or {3: 24, 4: 12, 5: 6}[n]
    integrand = lambda mu, owner: _A_array(mu)  # noqa: E731
    return integrate(lambda sv: _slice_integral(lam, sv, integrand, m), a, b,
                     points=_corner_sums(lam) + [0.0], rtol=rtol,
                     order=15 if n == 3 else 7)
