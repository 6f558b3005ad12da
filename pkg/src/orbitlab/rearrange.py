"""Monotone rearrangement, Hardy-Littlewood and the indicator-convolution lemma.

Step functions make every quantity here exact: level sets are finite
unions of intervals, and products of step functions integrate cell by cell.
Iterated convolutions of centred indicators are carried out in rational
arithmetic, so "maximized at 0" is checked with exact comparisons.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .orbit_mc import CheckReport


@dataclass(frozen=True)
class StepFunction:
    """f = values[k] on [breakpoints[k], breakpoints[k+1]), zero elsewhere."""

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if b.ndim != 1 or v.ndim != 1 or b.size != v.size + 1:
            raise ValueError("need len(breakpoints) == len(values) + 1")
        if np.any(np.diff(b) < 0):
            raise ValueError("breakpoints must be ascending")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("values must be finite and nonnegative")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)

    @classmethod
    def indicator(cls, a: float, b: float, height: float = 1.0) -> "StepFunction":
        return cls(np.array([a, b]), np.array([height]))

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def support_measure(self) -> float:
        return float(np.sum(self.lengths[self.values > 0]))

    def level_measure(self, t: float) -> float:
        """Lebesgue measure of {f > t}."""
        return float(np.sum(self.lengths[self.values > t]))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        inside = (idx >= 0) & (idx < self.values.size)
        out = np.zeros(x.shape)
        out[inside] = self.values[idx[inside]]
        return out

    def scale(self, a: float) -> "StepFunction":
        return StepFunction(self.breakpoints, a * self.values)

    def integral(self) -> float:
        return float(np.sum(self.values * self.lengths))

    def reflect_shift(self, x: float) -> "StepFunction":
        """y -> f(x - y)."""
        return StepFunction((x - self.breakpoints)[::-1], self.values[::-1])


def monotone_rearrange(f: StepFunction) -> StepFunction:
    """Nonincreasing equimeasurable rearrangement f* on [0, |supp f|)."""
    keep = (f.values > 0) & (f.lengths > 0)
    vals = f.values[keep]
    lens = f.lengths[keep]
    if vals.size == 0:
        return StepFunction(np.array([0.0, 0.0]), np.array([0.0]))
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    lens = lens[order]
    # merge runs of equal values
    uniq, start = np.unique(-vals, return_index=True)
    merged_vals = -uniq
    merged_lens = np.add.reduceat(lens, start)
    bps = np.concatenate([[0.0], np.cumsum(merged_lens)])
    return StepFunction(bps, merged_vals)


def product_integral(fs) -> float:
    """Exact integral of prod_i f_i for step functions."""
    cuts = np.unique(np.concatenate([f.breakpoints for f in fs]))
    if cuts.size < 2:
        return 0.0
    mids = 0.5 * (cuts[:-1] + cuts[1:])
    prod = np.ones(mids.size)
    for f in fs:
        prod *= f(mids)
    return float(np.sum(prod * np.diff(cuts)))


def equimeasurable(f: StepFunction, g: StepFunction | None = None, rtol: float = 1e-12) -> bool:
    """|{f > t}| == |{f* > t}| at every level value of f (and just below)."""
    g = monotone_rearrange(f) if g is None else g
    levels = np.unique(np.concatenate([[0.0], f.values, g.values]))
    scale = max(f.support_measure(), 1.0)
    for t in levels:
        for tt in (t, np.nextafter(t, -np.inf) if t > 0 else t):
            if abs(f.level_measure(tt) - g.level_measure(tt)) > rtol * scale:
                return False
    return True


def hl_inequality_check(fs) -> CheckReport:
    """Hardy-Littlewood: integral of prod f_i <= integral of prod f_i*."""
    fs = list(fs)
    if len(fs) < 2:
        raise ValueError("need at least two functions")
    lhs = product_integral(fs)
    rhs = product_integral([monotone_rearrange(f) for f in fs])
    scale = max(abs(rhs), 1.0) * 1e-12
    return CheckReport("hardy_littlewood", lhs <= rhs + scale, {"lhs": lhs, "rhs": rhs})


def conv_sup(f: StepFunction, g: StepFunction) -> float:
    """max_x (f * g)(x).  f * g is piecewise linear with kinks at sums of breakpoints."""
    xs = np.unique(np.add.outer(f.breakpoints, g.breakpoints).ravel())
    best = 0.0
    for x in xs:
        best = max(best, product_integral([f, g.reflect_shift(x)]))
    return best


def random_step_function(rng: np.random.Generator, max_pieces: int = 8,
                         span: float = 10.0, zero_prob: float = 0.2) -> StepFunction:
    k = int(rng.integers(1, max_pieces + 1))
    bps = np.sort(rng.uniform(-span, span, size=k + 1))
    vals = rng.exponential(1.0, size=k)
    vals[rng.random(k) < zero_prob] = 0.0
    return StepFunction(bps, vals)


# ---------------------------------------------------------------------------
# exact piecewise polynomials


class PiecewisePoly:
    """Piecewise polynomial in global x with rational coefficients.

    ``cuts`` is an ascending list of Fractions; ``polys[k]`` (coefficients,
    lowest degree first) applies on [cuts[k], cuts[k+1]); zero outside.
    """

    def __init__(self, cuts, polys):
        self.cuts = list(cuts)
        self.polys = [list(p) for p in polys]

    @classmethod
    def indicator(cls, a: Fraction) -> "PiecewisePoly":
        return cls([-a, a], [[Fraction(1)]])

    @staticmethod
    def _eval(p, x):
        acc = Fraction(0)
        for c in reversed(p):
            acc = acc * x + c
        return acc

    def __call__(self, x) -> Fraction:
        x = Fraction(x)
        if x < self.cuts[0] or x >= self.cuts[-1]:
            return Fraction(0)
        lo, hi = 0, len(self.cuts) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.cuts[mid] <= x:
                lo = mid
            else:
                hi = mid
        return self._eval(self.polys[lo], x)

    def _antiderivative(self):
        """Continuous antiderivative P with P = 0 left of the support."""
        out = []
        const = Fraction(0)
        for k, p in enumerate(self.polys):
            q = [Fraction(0)] + [c / (i + 1) for i, c in enumerate(p)]
            q[0] = const - self._eval(q, self.cuts[k])
            out.append(q)
            const = self._eval(q, self.cuts[k + 1])
        return out, const

    def convolve_indicator(self, a: Fraction) -> "PiecewisePoly":
        """x -> integral_{x-a}^{x+a} f(y) dy."""
        anti, total = self._antiderivative()

        def P_at_piece(k, shift):
            # polynomial in x of P(x + shift) on the piece containing x + shift
            if k < 0:
                return [Fraction(0)]
            if k >= len(anti):
                return [total]
            return _shift_poly(anti[k], shift)

        cuts = sorted(set([c - a for c in self.cuts] + [c + a for c in self.cuts]))
        polys = []
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            mid = (lo + hi) / 2
            kp = _locate(self.cuts, mid + a)
            km = _locate(self.cuts, mid - a)
            up = P_at_piece(kp, a)
            dn = P_at_piece(km, -a)
            n = max(len(up), len(dn))
            up = up + [Fraction(0)] * (n - len(up))
            dn = dn + [Fraction(0)] * (n - len(dn))
            polys.append([u - d for u, d in zip(up, dn)])
        return PiecewisePoly(cuts, polys)


def _locate(cuts, x):
    """Index k with cuts[k] <= x < cuts[k+1]; -1 left of cuts, len-1 right of them."""
    if x < cuts[0]:
        return -1
    if x >= cuts[-1]:
        return len(cuts) - 1
    lo, hi = 0, len(cuts) - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if cuts[mid] <= x:
            lo = mid
        else:
            hi = mid
    return lo


def _shift_poly(p, shift):
    """Coefficients of q(x) = p(x + shift)."""
    out = [Fraction(0)] * len(p)
    # Horner in polynomial form
    for c in reversed(p):
        # out = out * (x + shift) + c
        nxt = [Fraction(0)] * len(p)
        for i, oc in enumerate(out):
            if oc == 0:
                continue
            if i + 1 < len(nxt):
                nxt[i + 1] += oc
            nxt[i] += oc * shift
        nxt[0] += c
        out = nxt
    return out


def iterated_indicator_convolution(half_widths) -> PiecewisePoly:
    """Exact 1_[-a1,a1] * ... * 1_[-ak,ak]."""
    ws = [Fraction(a) for a in half_widths]
    if not ws or any(a <= 0 for a in ws):
        raise ValueError("half-widths must be positive")
    f = PiecewisePoly.indicator(ws[0])
    for a in ws[1:]:
        f = f.convolve_indicator(a)
    return f


def conv_indicator_max_at_zero(half_widths, grid=None) -> CheckReport:
    """Check that the iterated convolution peaks at 0 and is nonincreasing on [0, inf).

    ``grid`` defaults to 101 evenly spaced points on [0, sum a_i] plus every
    breakpoint; evaluation is exact, so the comparisons carry no tolerance.
    """
    f = iterated_indicator_convolution(half_widths)
    reach = sum(Fraction(a) for a in half_widths)
    if grid is None:
        pts = {reach * Fraction(i, 100) for i in range(101)}
    else:
        pts = {abs(Fraction(float(x))) for x in grid}
    pts |= {c for c in f.cuts if c >= 0}
    pts.add(Fraction(0))
    xs = sorted(pts)
    vals = [f(x) for x in xs]
    # evenness on the mirrored grid, away from the half-open breakpoints
    cutset = set(f.cuts)
    even = all(f(-x) == v for x, v in zip(xs, vals) if x not in cutset and -x not in cutset)
    at0 = vals[0]
    peak = all(v <= at0 for v in vals)
    monotone = all(b <= a for a, b in zip(vals, vals[1:]))
    return CheckReport("conv_indicator_max_at_zero", peak and monotone and even,
                       {"k": len(half_widths), "f0": float(at0), "max": float(max(vals)),
                        "monotone": monotone, "even": even, "n_points": len(xs)})


def rearrangement_suite(seed: int = 0, n_equi: int = 1000, n_hl: int = 1000,
                        n_conv: int = 200, max_factors: int = 6) -> list[CheckReport]:
    """Hard invariants on random inputs: equimeasurability, Hardy-Littlewood, conv max at 0."""
    rng = np.random.default_rng(seed)
    bad_equi = sum(not equimeasurable(random_step_function(rng)) for _ in range(n_equi))
    worst = -np.inf
    bad_hl = 0
    for _ in range(n_hl):
        r = hl_inequality_check([random_step_function(rng) for _ in range(3)])
        bad_hl += not r.passed
        worst = max(worst, r.details["lhs"] - r.details["rhs"])
    bad_conv = 0
    for _ in range(n_conv):
        k = int(rng.integers(1, max_factors + 1))
        bad_conv += not conv_indicator_max_at_zero(rng.uniform(0.05, 3.0, size=k)).passed
    return [
        CheckReport("equimeasurability", bad_equi == 0, {"cases": n_equi, "violations": bad_equi}),
        CheckReport("hardy_littlewood", bad_hl == 0,
                    {"cases": n_hl, "violations": bad_hl, "max_lhs_minus_rhs": float(worst)}),
        CheckReport("conv_indicator_max_at_zero", bad_conv == 0,
                    {"cases": n_conv, "violations": bad_conv}),
    ]
