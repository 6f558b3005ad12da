"""Monte Carlo estimation of I_n(lambda; r) = Prob[ ||pi(k.lambda)|| < r ].

Hit counts are integers accumulated over disjoint ordinal ranges, so the
result does not depend on how the ranges are split.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import expm

from .haar import SamplerConfig, count_hits, diag_sq_norms, iter_blocks
from .linalg import Rotation, conjugate, diag_norm, plane_rotation
from .rng import derive_seed
from .spectra import Spectrum, as_spectrum, trace_reduce

log = logging.getLogger(__name__)

Z95 = 1.959963984540054
DEFAULT_MAX_SAMPLES = 10**8

# substream tags for distributional (independent-stream) comparisons
_WEYL_TAG = 0x5745594C
_TRACE_TAG = 0x54524345


@dataclass(frozen=True)
class MCEstimate:
    hits: int
    total: int
    p_hat: float
    ci_low: float
    ci_high: float
    seed: int
    lam: tuple = ()
    radius: float = 1.0
    note: str = ""

    @property
    def stderr(self) -> float:
        if self.total == 0:
            return 0.0
        p = self.p_hat
        return math.sqrt(max(p * (1.0 - p), 0.0) / self.total)

    def covers(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high

    def rel_ci_width(self) -> float:
        if self.p_hat == 0.0:
            return math.inf
        return (self.ci_high - self.ci_low) / self.p_hat

    def to_record(self) -> dict:
        rec = {
            "lambda": list(self.lam),
            "radius": self.radius,
            "N": self.total,
            "hits": self.hits,
            "p_hat": self.p_hat,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "seed": self.seed,
        }
        if self.note:
            rec["note"] = self.note
        return rec


def wilson_interval(hits: int, total: int, z: float = Z95) -> tuple[float, float]:
    if total <= 0:
        raise ValueError("total must be positive")
    p = hits / total
    z2n = z * z / total
    denom = 1.0 + z2n
    center = (p + 0.5 * z2n) / denom
    half = z * math.sqrt(p * (1.0 - p) / total + 0.25 * z2n / total) / denom
    # clamp so that lo <= p_hat <= hi survives rounding at p = 0 or 1
    return max(0.0, min(center - half, p)), min(1.0, max(center + half, p))


def make_estimate(hits, total, seed, lam=(), radius=1.0, note="", z=Z95) -> MCEstimate:
    lo, hi = wilson_interval(hits, total, z)
    return MCEstimate(int(hits), int(total), hits / total, lo, hi, int(seed),
                      tuple(float(x) for x in lam), float(radius), note)


def _count(lam_scaled: np.ndarray, n_samples: int, cfg: SamplerConfig, start: int = 0) -> int:
    hits = 0
    for b0, c in iter_blocks(cfg, n_samples, start):
        hits += count_hits(cfg, b0, c, lam_scaled, 1.0)
    return hits


def estimate_I(s, radius: float = 1.0, n_samples: int = 10**6, cfg: SamplerConfig | None = None,
               target_ci: float | None = None, max_samples: int = DEFAULT_MAX_SAMPLES,
               z: float = Z95) -> MCEstimate:
    """Monte Carlo estimate of I_n(lambda; radius).

    Samples are tested on lambda / radius against the unit ball, so the
    radius-rescaling identity holds sample by sample.  With ``target_ci``
    the sample count doubles (reusing earlier ordinals) until the relative
    Wilson width drops below the target or ``max_samples`` is reached.
    """
    sp = as_spectrum(s)
    if radius <= 0:
        raise ValueError("radius must be positive")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if cfg is None:
        cfg = SamplerConfig(n=sp.n)
    if cfg.n != sp.n:
        cfg = SamplerConfig(seed=cfg.seed, n=sp.n, batch=cfg.batch)
    lam = tuple(sp.values)

    reduced = trace_reduce(sp.scaled(1.0 / radius))
    if reduced is None:
        return MCEstimate(0, int(n_samples), 0.0, 0.0, 0.0, cfg.seed, lam, radius,
                          "trace-cutoff")
    note = "" if sp.is_tracefree() else "trace-reduced"
    scaled = np.ascontiguousarray(reduced.values)

    total = int(n_samples)
    hits = _count(scaled, total, cfg)
    est = make_estimate(hits, total, cfg.seed, lam, radius, note, z)
    if target_ci is None:
        return est
    while est.rel_ci_width() > target_ci and total < max_samples:
        extra = min(total, max_samples - total)
        hits += _count(scaled, extra, cfg, start=total)
        total += extra
        est = make_estimate(hits, total, cfg.seed, lam, radius, note, z)
    if est.rel_ci_width() > target_ci:
        log.warning("target relative CI %.3g not met at cap N=%d (got %.3g)",
                    target_ci, total, est.rel_ci_width())
        est = MCEstimate(**{**asdict(est), "note": (note + " ci-target-unmet").strip()})
    return est


@dataclass
class CheckReport:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.details}"


def scaling_monotonicity_check(s, t: float, n_samples: int, cfg: SamplerConfig | None = None,
                               radius: float = 1.0) -> CheckReport:
    """Common-random-number check that I(t lambda) <= I(lambda) for t >= 1.

    The indicator for t*lambda is evaluated as t^2 q < r^2 on the same
    per-sample q = ||pi(k.lambda)||^2, which makes the domination exact.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    sp = as_spectrum(s)
    cfg = cfg or SamplerConfig(n=sp.n)
    lam = np.ascontiguousarray(sp.values)
    r2 = radius * radius
    t2 = t * t
    h_base = h_scaled = violations = 0
    for b0, c in iter_blocks(cfg, n_samples):
        q = diag_sq_norms(cfg, b0, c, lam)
        base = q < r2
        scaled = t2 * q < r2
        h_base += int(base.sum())
        h_scaled += int(scaled.sum())
        violations += int(np.count_nonzero(scaled & ~base))
    return CheckReport("scaling_monotonicity", violations == 0 and h_scaled <= h_base,
                       {"t": t, "N": n_samples, "hits_lambda": h_base,
                        "hits_t_lambda": h_scaled, "pointwise_violations": violations})


def radius_rescale_check(s, radius: float, n_samples: int, cfg: SamplerConfig | None = None) -> CheckReport:
    sp = as_spectrum(s)
    cfg = cfg or SamplerConfig(n=sp.n)
    a = estimate_I(sp, radius, n_samples, cfg)
    b = estimate_I(sp.scaled(1.0 / radius), 1.0, n_samples, cfg)
    return CheckReport("radius_rescale", a.hits == b.hits,
                       {"radius": radius, "hits_r": a.hits, "hits_scaled": b.hits})


def _combined_sigma(a: MCEstimate, b: MCEstimate) -> float:
    # pooled p avoids a zero standard error when one side has no hits
    pool = (a.hits + b.hits) / (a.total + b.total)
    return math.sqrt(pool * (1 - pool) * (1 / a.total + 1 / b.total))


def weyl_invariance_check(s, perm, n_samples: int, cfg: SamplerConfig | None = None,
                          radius: float = 1.0) -> CheckReport:
    """Compare I(lambda) with I(perm . lambda) on independent substreams.

    The permuted spectrum is fed to the sampler unsorted, so the two runs
    really see different diagonal matrices.  The identity permutation reuses
    the stream and must give identical counts.
    """
    sp = as_spectrum(s)
    perm = np.asarray(perm, dtype=int)
    if sorted(perm.tolist()) != list(range(sp.n)):
        raise ValueError("perm must be a permutation of 0..n-1")
    cfg = cfg or SamplerConfig(n=sp.n)
    base = np.ascontiguousarray(sp.values / radius)
    permuted = np.ascontiguousarray(base[perm])
    identity = bool(np.all(perm == np.arange(sp.n)))
    other = cfg if identity else SamplerConfig(derive_seed(cfg.seed, _WEYL_TAG), sp.n, cfg.batch)
    a = make_estimate(_count(base, n_samples, cfg), n_samples, cfg.seed, sp.values, radius)
    b = make_estimate(_count(permuted, n_samples, other), n_samples, other.seed, sp.values[perm], radius)
    sigma = _combined_sigma(a, b)
    diff = abs(a.p_hat - b.p_hat)
    ok = (a.hits == b.hits) if identity else diff <= 3.0 * sigma
    return CheckReport("weyl_invariance", ok,
                       {"perm": perm.tolist(), "p": a.p_hat, "p_perm": b.p_hat,
                        "diff": diff, "sigma": sigma})


def trace_consistency_check(s, n_samples: int, cfg: SamplerConfig | None = None) -> CheckReport:
    """I(lambda) by direct sampling of the non-tracefree matrix vs I(trace_reduce(lambda))."""
    sp = as_spectrum(s)
    cfg = cfg or SamplerConfig(n=sp.n)
    direct = make_estimate(_count(np.ascontiguousarray(sp.values), n_samples, cfg),
                           n_samples, cfg.seed, sp.values)
    red = trace_reduce(sp)
    if red is None:
        return CheckReport("trace_consistency", direct.hits == 0,
                           {"p_direct": direct.p_hat, "reduced": None})
    other = SamplerConfig(derive_seed(cfg.seed, _TRACE_TAG), sp.n, cfg.batch)
    reduced = make_estimate(_count(np.ascontiguousarray(red.values), n_samples, other),
                            n_samples, other.seed, red.values)
    sigma = _combined_sigma(direct, reduced)
    diff = abs(direct.p_hat - reduced.p_hat)
    return CheckReport("trace_consistency", diff <= 3.0 * sigma,
                       {"p_direct": direct.p_hat, "p_reduced": reduced.p_hat,
                        "diff": diff, "sigma": sigma})


def _zeroing_angle(x: np.ndarray, i: int, j: int) -> float:
    """Angle of the (i, j)-plane rotation that zeroes the (i, i) entry of k x k^T.

    With R = plane_rotation(theta): (R x R^T)_ii = m + a cos 2t + b sin 2t,
    m = (x_ii + x_jj)/2, a = (x_ii - x_jj)/2, b = x_ij.
    """
    m = 0.5 * (x[i, i] + x[j, j])
    a = 0.5 * (x[i, i] - x[j, j])
    b = x[i, j]
    amp = math.hypot(a, b)
    phase = math.atan2(b, a)
    c = max(-1.0, min(1.0, -m / amp))
    return 0.5 * (phase + math.acos(c))


def soft_lower_bound_witness(s) -> Rotation:
    """A rotation k0 with pi(k0.lambda) = 0, built from planar rotations."""
    sp = as_spectrum(s)
    if not sp.is_tracefree():
        raise ValueError("soft_lower_bound_witness needs Tr lambda = 0")
    n = sp.n
    k = np.eye(n)
    x = np.diag(sp.values)
    tol = 1e-15 * (1.0 + sp.norm)
    for _ in range(4 * n):
        d = np.diag(x)
        if np.max(np.abs(d)) <= tol:
            break
        i = int(np.argmax(np.abs(d)))
        opp = [j for j in range(n) if j != i and d[j] * d[i] < 0]
        if not opp:
            break
        j = max(opp, key=lambda jj: abs(d[jj]))
        r = plane_rotation(n, i, j, _zeroing_angle(x, i, j)).entries
        x = r @ x @ r.T
        x = 0.5 * (x + x.T)
        k = r @ k
    return Rotation(k)


def soft_bound_constant(s, n_probe: int = 2000, seed: int = 0) -> float:
    """Empirical sup of ||pi(exp(X) k0.lambda)|| / (||X|| ||lambda||) over small skew X."""
    sp = as_spectrum(s)
    n = sp.n
    k0 = soft_lower_bound_witness(sp).entries
    base = k0 @ np.diag(sp.values) @ k0.T
    rng = np.random.default_rng(seed)
    worst = 0.0
    norm = sp.norm
    if norm == 0.0:
        return 0.0
    for _ in range(n_probe):
        a = rng.standard_normal((n, n))
        x = a - a.T
        x *= rng.uniform(1e-4, 1e-2) / np.linalg.norm(x)
        e = expm(x)
        val = diag_norm(e @ base @ e.T)
        worst = max(worst, val / (np.linalg.norm(x) * norm))
    return worst


def soft_bound_ball_check(s, c: float, n_probe: int = 2000, seed: int = 1) -> CheckReport:
    """All perturbations exp(X) k0 with ||X|| < c * min(1/100, 1/||lambda||) must hit."""
    sp = as_spectrum(s)
    n = sp.n
    k0 = soft_lower_bound_witness(sp).entries
    rad = c * min(0.01, 1.0 / sp.norm) if sp.norm > 0 else c * 0.01
    rng = np.random.default_rng(seed)
    misses = 0
    worst = 0.0
    for _ in range(n_probe):
        a = rng.standard_normal((n, n))
        x = a - a.T
        x *= rng.uniform(0.0, rad) / np.linalg.norm(x)
        k = expm(x) @ k0
        val = diag_norm(conjugate(k, np.diag(sp.values)))
        worst = max(worst, val)
        misses += val >= 1.0
    log.info("soft bound ball: c=%.4g radius=%.4g worst=%.4g", c, rad, worst)
    return CheckReport("soft_lower_bound_ball", misses == 0,
                       {"c": c, "radius": rad, "worst_diag_norm": worst, "misses": misses})
