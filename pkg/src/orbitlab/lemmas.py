"""Numerical verifiers for the one- and two-dimensional singular integral bounds.

Each check integrates the left-hand side with the u^2-substituted adaptive
rule and divides by the stated right-hand side.  An inequality of the form
``LHS << RHS`` cannot be confirmed symbolically, so the reports only record
the ratio; boundedness is judged over released parameter sweeps whose
maxima are frozen as regression baselines.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .quadrature import integrate
from .spectra import log_prime

TINY = np.finfo(float).tiny
SEMANTICS = "ratio bounded over released sweep (asymptotic constant not provable numerically)"


@dataclass
class LemmaReport:
    name: str
    params: dict
    lhs: float
    rhs: float
    status: str = "ok"          # ok | vacuous | divergent
    converged: bool = True
    note: str = SEMANTICS

    @property
    def ratio(self) -> float:
        if self.status != "ok":
            return float("nan")
        return self.lhs / self.rhs

    def row(self) -> dict:
        return {"lemma": self.name, "params": json.dumps(self.params, sort_keys=True),
                "lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio, "status": self.status}


def _logp(x):
    return np.log(2.0 + x)


def _log_product(L, shift_sign, T):
    """x -> prod_i log'(T / |L_i + s x|) with s = shift_sign."""
    L = np.asarray(L, dtype=float)

    def f(x):
        out = np.ones_like(x)
        for li in L:
            out *= _logp(T / np.maximum(np.abs(li + shift_sign * x), TINY))
        return out
    return f


def log_average_check(a: float, b: float, T: float, k: int, variant: str = "half",
                      rtol: float = 1e-9) -> LemmaReport:
    """Ratio for the two log-average inequalities.

    variant "half": int_a^b x^(-1/2) log'(T/x)^k  vs  b^(1/2) log'(T/b)^k  (a = 0 allowed)
    variant "inv":  int_a^b x^(-1)   log'(T/x)^k  vs  log(b/a) log'(T/a)^k
    """
    if not (0 <= a < b) or T <= 0 or not 0 <= k <= 6:
        raise ValueError("need 0 <= a < b, T > 0, 0 <= k <= 6")
    params = {"a": a, "b": b, "T": T, "k": k, "variant": variant}
    if variant == "half":
        # x = b exp(-2w) turns x^(-1/2) dx into 2 sqrt(b) exp(-w) dw; the tail past
        # w = 80 is below 1e-20 relative for k <= 6
        W = 80.0 if a == 0 else min(0.5 * math.log(b / a), 80.0)
        q = integrate(lambda w: 2.0 * math.sqrt(b) * np.exp(-w) * _logp(T / b * np.exp(2 * w)) ** k,
                      0.0, W, rtol=rtol)
        rhs = math.sqrt(b) * log_prime(T / b) ** k
    elif variant == "inv":
        if a <= 0:
            raise ValueError("the x^-1 variant needs a > 0")
        # integrate in log x to keep the 1/x scale uniform
        q = integrate(lambda v: _logp(T * np.exp(-v)) ** k, math.log(a), math.log(b), rtol=rtol)
        rhs = math.log(b / a) * log_prime(T / a) ** k
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return LemmaReport(f"log_average_{variant}_k{k}", params, q.value, rhs, converged=q.converged)


def one_d_small_integral(a: float, T: float) -> float:
    """Closed form of int_0^T x^(-1/2) (x+a)^(-1/2) dx."""
    return 2.0 * math.asinh(math.sqrt(T / a))


def lemma_1dsmall_check(a: float, T: float, rtol: float = 1e-10) -> LemmaReport:
    if not 0 < a <= T:
        raise ValueError("need 0 < a <= T")
    q = integrate(lambda x: (x * (x + a)) ** -0.5, 0.0, T, points=(a,), rtol=rtol)
    rep = LemmaReport("lemma_1dsmall", {"a": a, "T": T}, q.value, log_prime(T / a),
                      converged=q.converged)
    rep.params["closed_form"] = one_d_small_integral(a, T)
    return rep


def lemma_1d_check(a: float, b: float, T: float, L=(), rtol: float = 1e-8) -> LemmaReport:
    """int_0^T x^(-1/2)(x+a)^(-1/2)(x+b)^(1/2) prod log'(T/|L_i + x|) vs T^(1/2) log'(b/a)^(k+1)."""
    if not (0 < a < T and 0 < b < T):
        raise ValueError("need 0 < a, b < T")
    L = [float(v) for v in L]
    k = len(L)
    logs = _log_product(L, 1.0, T)
    pts = [a, b] + [-li for li in L]
    q = integrate(lambda x: x ** -0.5 * (x + a) ** -0.5 * (x + b) ** 0.5 * logs(x),
                  0.0, T, points=pts, rtol=rtol)
    rhs = math.sqrt(T) * log_prime(b / a) ** (k + 1)
    return LemmaReport("lemma_1d", {"a": a, "b": b, "T": T, "k": k, "L": L},
                       q.value, rhs, converged=q.converged)


def _touches(t, p, q, scale):
    return abs(t - (p + q)) <= 4 * np.finfo(float).eps * scale


def _segment_core(A, B, C, D, t, lo, hi):
    """(|x-A||x-B||y-C||y-D|)^(-1/2) on y = t - x, from the distances to lo and hi.

    On [lo, hi] = [max(A, t-D), min(B, t-C)] the four factors are offsets
    plus the exact end distances, so nothing rounds onto a pole.
    """
    oA, oD = lo - A, lo - (t - D)
    oB, oC = B - hi, (t - C) - hi

    def core(dlo, dhi):
        return ((oA + dlo) * (oD + dlo) * (oB + dhi) * (oC + dhi)) ** -0.5
    return core


def lemma_2d_check(A, B, C, D, E, T, t, L=(), rtol: float = 1e-8) -> LemmaReport:
    """Segment integral over x + y = t against the four-log bound."""
    if not (A <= B <= C <= D <= E):
        raise ValueError("need A <= B <= C <= D <= E")
    if abs(A - E) > T:
        raise ValueError("need |A - E| <= T")
    L = [float(v) for v in L]
    k = len(L)
    params = {"A": A, "B": B, "C": C, "D": D, "E": E, "T": T, "t": t, "k": k, "L": L}
    name = "lemma_2d"
    lo, hi = max(A, t - D), min(B, t - C)
    if not (A + C <= t <= B + D) or hi <= lo:
        return LemmaReport(name, params, 0.0, float("nan"), status="vacuous")
    scale = abs(A) + abs(B) + abs(C) + abs(D) + abs(t)
    if _touches(t, A, D, scale) or _touches(t, B, C, scale):
        return LemmaReport(name, params, float("inf"), float("inf"), status="divergent")
    logs = _log_product(L, -1.0, T)
    core = _segment_core(A, B, C, D, t, lo, hi)

    def f(x, dlo, dhi):
        y = t - x
        return core(dlo, dhi) * np.abs(x - y) ** 0.5 * np.abs(y - E) ** 0.5 * logs(y)

    q = integrate(f, lo, hi, points=[t - li for li in L], rtol=rtol, with_ends=True)
    fl = lambda v: max(abs(v), TINY)
    bracket = (log_prime(abs(B - C) / fl(B + C - t)) ** (k + 1)
               + log_prime(abs(D - E) / fl(A + D - t)) ** (k + 1)
               + log_prime(T / fl(A + C - t)) ** k
               + log_prime(T / fl(B + D - t)) ** k)
    rhs = T * abs(A - B) ** -0.5 * abs(C - D) ** -0.5 * bracket
    return LemmaReport(name, params, q.value, rhs, converged=q.converged)


def lemma_2dsmall_check(A, B, C, D, T, t, rtol: float = 1e-8) -> LemmaReport:
    """Segment integral without the growth factors against the two-log bound."""
    if not (A <= B <= C <= D):
        raise ValueError("need A <= B <= C <= D")
    if abs(A - D) > T:
        raise ValueError("need |A - D| <= T")
    params = {"A": A, "B": B, "C": C, "D": D, "T": T, "t": t}
    name = "lemma_2dsmall"
    lo, hi = max(A, t - D), min(B, t - C)
    if not (A + B <= t <= C + D) or hi <= lo:
        return LemmaReport(name, params, 0.0, float("nan"), status="vacuous")
    scale = abs(A) + abs(B) + abs(C) + abs(D) + abs(t)
    if _touches(t, A, D, scale) or _touches(t, B, C, scale):
        return LemmaReport(name, params, float("inf"), float("inf"), status="divergent")

    core = _segment_core(A, B, C, D, t, lo, hi)
    q = integrate(lambda x, dlo, dhi: core(dlo, dhi), lo, hi, rtol=rtol, with_ends=True)
    fl = lambda v: max(abs(v), TINY)
    rhs = (abs(A - B) ** -0.5 * abs(C - D) ** -0.5
           * (log_prime(T / fl(B + C - t)) + log_prime(T / fl(A + D - t))))
    return LemmaReport(name, params, q.value, rhs, converged=q.converged)


# ---------------------------------------------------------------------------
# released sweeps


def default_sweep_config() -> dict:
    with resources.files("orbitlab.data").joinpath("lemma_sweeps.json").open() as fh:
        return json.load(fh)


def _sorted_draw(rng, m, width):
    return np.sort(rng.uniform(-width, width, size=m)).tolist()


def sweep_cases(config: dict):
    """Yield (lemma, callable) pairs for every case of a sweep config."""
    la = config.get("log_average")
    if la:
        for variant in la["variants"]:
            for k in la["k"]:
                for T in la["T"]:
                    for a in la["a"]:
                        for b in la["b"]:
                            if a < b and not (variant == "inv" and a == 0):
                                yield lambda a=a, b=b, T=T, k=k, v=variant: \
                                    log_average_check(a, b, T, k, v)
    s1 = config.get("lemma_1dsmall")
    if s1:
        for T in s1["T"]:
            for e in s1["log10_T_over_a"]:
                yield lambda T=T, e=e: lemma_1dsmall_check(T * 10.0 ** -e, T)
    c1 = config.get("lemma_1d")
    if c1:
        rng = np.random.default_rng(c1["seed"])
        for T in c1["T"]:
            for fa in c1["fractions"]:
                for fb in c1["fractions"]:
                    for k in c1["k"]:
                        L = rng.uniform(-T, 0.5 * T, size=k).tolist()
                        yield lambda a=fa * T, b=fb * T, T=T, L=L: lemma_1d_check(a, b, T, L)
    c2 = config.get("lemma_2d")
    if c2:
        rng = np.random.default_rng(c2["seed"])
        for _ in range(c2["draws"]):
            A, B, C, D, E = _sorted_draw(rng, 5, c2["width"])
            T = abs(E - A) * float(rng.uniform(1.0, 4.0))
            k = int(rng.integers(0, c2["max_k"] + 1))
            L = rng.uniform(C, D + (D - C), size=k).tolist()
            for frac in c2["t_fractions"]:
                t = (A + C) + frac * ((B + D) - (A + C))
                yield lambda A=A, B=B, C=C, D=D, E=E, T=T, t=t, L=L: \
                    lemma_2d_check(A, B, C, D, E, T, t, L)
    c3 = config.get("lemma_2dsmall")
    if c3:
        rng = np.random.default_rng(c3["seed"])
        for _ in range(c3["draws"]):
            A, B, C, D = _sorted_draw(rng, 4, c3["width"])
            T = abs(D - A) * float(rng.uniform(1.0, 4.0))
            for frac in c3["t_fractions"]:
                t = (A + B) + frac * ((C + D) - (A + B))
                yield lambda A=A, B=B, C=C, D=D, T=T, t=t: lemma_2dsmall_check(A, B, C, D, T, t)
        for w in c3["point_mass_widths"]:
            # two narrow intervals around -1 and +1
            A, B, C, D = -1.0 - w, -1.0 + w, 1.0 - w, 1.0 + w
            for frac in c3["t_fractions"]:
                t = (A + B) + frac * ((C + D) - (A + B))
                yield lambda A=A, B=B, C=C, D=D, t=t: lemma_2dsmall_check(A, B, C, D, 10.0, t)


def run_sweep(config: dict | None = None) -> list[LemmaReport]:
    config = default_sweep_config() if config is None else config
    return [case() for case in sweep_cases(config)]


@dataclass
class SweepSummary:
    max_ratio: dict = field(default_factory=dict)
    min_ratio: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    unconverged: int = 0


def summarize(reports) -> SweepSummary:
    out = SweepSummary()
    for r in reports:
        out.counts[r.status] = out.counts.get(r.status, 0) + 1
        out.unconverged += (not r.converged)
        if r.status != "ok":
            continue
        ratio = r.ratio
        out.max_ratio[r.name] = max(out.max_ratio.get(r.name, -np.inf), ratio)
        out.min_ratio[r.name] = min(out.min_ratio.get(r.name, np.inf), ratio)
    return out


def compare_to_goldens(summary: SweepSummary, goldens: dict, rel: float = 0.10):
    """Return {name: (observed, golden, within)} for every golden maximum."""
    out = {}
    for name, g in goldens.items():
        obs = summary.max_ratio.get(name)
        within = obs is not None and math.isfinite(obs) and abs(obs - g) <= rel * abs(g)
        out[name] = (obs, g, within)
    return out


def hard_failures(reports) -> list[LemmaReport]:
    """Reports whose numbers are not usable: non-finite values on an ok case."""
    return [r for r in reports
            if r.status == "ok" and not (math.isfinite(r.lhs) and math.isfinite(r.rhs)
                                         and r.lhs >= 0 and r.rhs > 0)]
