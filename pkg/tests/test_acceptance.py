"""Acceptance criteria, one PASS/FAIL line each.

Run under pytest (``pytest tests/test_acceptance.py -s``) or directly with
``python tests/test_acceptance.py``.  Every criterion is a function returning
``(passed, detail)``; the tolerances below are the published ones.
"""
import math
import sys
import time

import numpy as np
import pytest
from scipy import stats

from orbitlab.families import family_spectrum, validate
from orbitlab.goldens import load_goldens
from orbitlab.haar import SamplerConfig, haar_batch
from orbitlab.interlace import (InterlacingPair, build_bordered, fan_pall_border, raw_mass,
                                recursive_I)
from orbitlab.lemmas import (compare_to_goldens, default_sweep_config, hard_failures,
                             lemma_1dsmall_check, run_sweep, summarize)
from orbitlab.linalg import sym_eigen
from orbitlab.orbit_mc import Z95, estimate_I, radius_rescale_check, scaling_monotonicity_check
from orbitlab.rearrange import rearrangement_suite
from orbitlab.spectra import A_n, log_prime
from orbitlab.spherical import BumpFunction, _kg_H, _phase, flat_periods, phi, rho

Z99 = 2.5758293035489004


def closed_form_n2(a):
    return 2 / math.pi * math.asin(min(1.0, 1.0 / (a * math.sqrt(2))))


# -- 1 ---------------------------------------------------------------------

def criterion_1():
    rows, ok = [], True
    for i, a in enumerate((0.5, 1.0, 10.0, 100.0)):
        t0 = time.perf_counter()
        e = estimate_I([-a, a], 1.0, 10**6, SamplerConfig(seed=i, n=2))
        dt = time.perf_counter() - t0
        exact = closed_form_n2(a)
        good = e.covers(exact) and dt < 10.0
        ok &= good
        rows.append(f"a={a:g} exact={exact:.6g} ci=[{e.ci_low:.6g},{e.ci_high:.6g}] {dt:.2f}s")
    return ok, "; ".join(rows)


# -- 2 ---------------------------------------------------------------------

def criterion_2():
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst, cases = 0.0, 0
    for n in (3, 4, 5):
        done = 0
        while done < 1000:
            pts = np.sort(rng.uniform(-10.0, 10.0, size=2 * n - 1))
            if np.diff(pts).min() <= 0:
                continue   # strict interlacing only
            p = InterlacingPair(pts[0::2], pts[1::2])
            w, _ = sym_eigen(build_bordered(p.mu, fan_pall_border(p)))
            lam = p.lam.values
            worst = max(worst, np.max(np.abs(w - lam)) / (1e-9 * (1 + np.linalg.norm(lam))))
            done += 1
        cases += done
    dt = time.perf_counter() - t0
    return worst < 1.0 and dt < 5.0, \
        f"{cases} pairs, max error / (1e-9 (1+|lam|)) = {worst:.3g}, {dt:.2f}s"


# -- 3 ---------------------------------------------------------------------

def _random_shape(rng, n, norm):
    v = np.sort(rng.normal(size=n))
    v -= v.mean()
    return v * (norm / np.linalg.norm(v))


def criterion_3():
    # grid and seeds fixed before any run: shapes from rng(2024), MC seed = grid index
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    miss3, z3 = [], []
    for i, nrm in enumerate(np.logspace(0, math.log10(500), 12)):
        lam = _random_shape(rng, 3, nrm)
        r = recursive_I(lam)
        e = estimate_I(lam, 1.0, 10**7, SamplerConfig(seed=i, n=3))
        z3.append((e.p_hat - r.value) / math.sqrt(r.value * (1 - r.value) / e.total))
        if not e.covers(r.value):
            miss3.append(f"|lam|={nrm:.4g} I_rec={r.value:.6g} "
                         f"ci=[{e.ci_low:.6g},{e.ci_high:.6g}]")
    miss4 = []
    for i, nrm in enumerate((2.5, 5.0, 10.0, 20.0)):
        lam = _random_shape(rng, 4, nrm)
        r = recursive_I(lam, rtol=1e-4)
        e = estimate_I(lam, 1.0, 10**7, SamplerConfig(seed=100 + i, n=4), z=Z99)
        if not e.covers(r.value):
            miss4.append(f"|lam|={nrm:.4g} I_rec={r.value:.6g} "
                         f"ci=[{e.ci_low:.6g},{e.ci_high:.6g}]")
    dt = time.perf_counter() - t0
    chi2 = float(np.sum(np.square(z3)))
    detail = (f"n=3 covered {12 - len(miss3)}/12, n=4 covered {4 - len(miss4)}/4, {dt:.0f}s; "
              f"n=3 z={np.round(z3, 2).tolist()} chi2={chi2:.2f} "
              f"(p={stats.chi2.sf(chi2, 12):.2f}, df=12)")
    if miss3 or miss4:
        detail += "; misses: " + "; ".join(miss3 + miss4)
    return not miss3 and not miss4 and dt < 600.0, detail


# -- 4 ---------------------------------------------------------------------

def criterion_4():
    rng = np.random.default_rng(4)
    parts, ok = [], True
    for n in (2, 3, 4):
        vals = []
        while len(vals) < 5:
            lam = np.sort(rng.uniform(-3.0, 3.0, size=n))
            if np.diff(lam).min() < 1e-3:
                continue
            vals.append(raw_mass(lam).value)
        vals = np.array(vals)
        spread = np.ptp(vals) / vals.mean()
        ok &= spread < 1e-5
        parts.append(f"n={n} mass={vals.mean():.10g} spread={spread:.2e}")
        if n == 2:
            dev = np.max(np.abs(vals - math.pi))
            ok &= dev < 1e-8
            parts.append(f"n=2 |mass-pi|={dev:.1e}")
    return ok, "; ".join(parts)


# -- 5 ---------------------------------------------------------------------

TS5 = (10.0, 1e2, 1e3, 1e4)


def criterion_5():
    ratios = []
    for T in TS5:
        s = family_spectrum("two-gap-1-nm1", 3, T)
        validate("two-gap-1-nm1", s)
        ratios.append(recursive_I(s).value / A_n(s))
    band = max(ratios) / min(ratios)
    vals = []
    for T in TS5:
        s = family_spectrum("one-gap", 3, T)
        validate("one-gap", s)
        vals.append(recursive_I(s).value)
    slope = np.polyfit(np.log(TS5), np.log(vals), 1)[0]
    ok = band < 10.0 and abs(slope + 2.0) <= 0.1
    return ok, (f"two-gap-1-nm1 I/A max/min={band:.3f} ratios={np.round(ratios, 4).tolist()}; "
                f"one-gap slope={slope:.4f}")


# -- 6 ---------------------------------------------------------------------

MC_CAP6 = 10**8


def criterion_6():
    """Adaptive MC where the 10% target is reachable under the cap, else the recursion.

    The sample size needed for a relative CI half-width of 10% is predicted
    from the recursion value before any sampling.  Where MC runs, it must
    also cover the recursion value.
    """
    xs, ys, parts, ok = [], [], [], True
    for T in np.logspace(1, 3, 5):
        s = family_spectrum("one-gap-4-2", 4, T)
        validate("one-gap-4-2", s)
        lam = s.values
        rec = recursive_I(lam, rtol=1e-4)
        p = rec.value
        need = (2 * Z95) ** 2 * (1 - p) / (0.1 ** 2 * p)
        if need <= MC_CAP6:
            e = estimate_I(lam, 1.0, 10**6, SamplerConfig(seed=0, n=4), target_ci=0.1,
                           max_samples=MC_CAP6)
            val, src = e.p_hat, f"mc N={e.total}"
            ok &= e.covers(p) and "ci-target-unmet" not in e.note
        else:
            val, src = p, "recursion"
        nrm = np.linalg.norm(lam)
        xs.append(log_prime(nrm / (1 + abs(lam[0] - lam[1]) + abs(lam[2] - lam[3]))))
        ys.append(val * (1 + nrm) ** 3)
        parts.append(f"T={T:.4g} I={val:.4g} ({src})")
    corr = float(np.corrcoef(xs, ys)[0, 1])
    ok &= corr > 0.99
    return ok, f"corr={corr:.5f}; " + "; ".join(parts)


# -- 7 ---------------------------------------------------------------------

def criterion_7():
    parts, ok = [], True
    for lam, t in (([-1.0, 0.0, 1.0], 3.0), ([-2.0, -0.5, 0.5, 2.0], 1.7), ([-0.4, 0.4], 10.0)):
        r = scaling_monotonicity_check(lam, t, 10**5, SamplerConfig(seed=7, n=len(lam)))
        ok &= r.passed and r.details["pointwise_violations"] == 0
        parts.append(f"scaling viol={r.details['pointwise_violations']}")
    for rad in (0.25, 1.0, 4.0):
        r = radius_rescale_check([-3.0, 1.0, 2.0], rad, 10**5, SamplerConfig(seed=8, n=3))
        ok &= r.passed
    parts.append("radius_rescale hits equal" if ok else "radius_rescale differs")
    defects = []
    for n, lam in ((2, [7.0, -7.0]), (3, [4.0, 1.0, -5.0])):
        p, m = flat_periods([lam, [-v for v in lam]], BumpFunction.centered(n), 2000,
                            SamplerConfig(seed=9, n=n), order=24)
        defects.append(abs(m.value - p.value.conjugate()))
    ok &= max(defects) == 0.0
    parts.append(f"conj defect={max(defects)}")
    for n in (2, 3, 4):
        e = phi(np.linspace(-2, 2, n), np.eye(n), 1000, SamplerConfig(seed=10, n=n))
        ok &= e.value == 1.0 + 0.0j
    parts.append("phi(lam,e)=1 exact")
    # per-sample |e^{(i lam + rho) H}| <= e^{rho H}: both components bounded by the weight
    viol = 0
    for n, g in ((2, np.diag([2.0, 0.5])), (3, np.diag([3.0, 1.0, 1.0 / 3.0]))):
        ks = haar_batch(SamplerConfig(seed=11, n=n), 0, 20000)
        H = _kg_H(ks, g @ g.T)
        w = np.exp(H @ rho(n))
        for lam in (np.linspace(-5, 5, n), np.linspace(-40, 40, n)):
            cs, sn = _phase(H @ lam)
            viol += int(np.count_nonzero((np.abs(w * cs) > w) | (np.abs(w * sn) > w)))
    ok &= viol == 0
    parts.append(f"phi domination viol={viol}")
    return ok, "; ".join(parts)


# -- 8 ---------------------------------------------------------------------

def criterion_8():
    t0 = time.perf_counter()
    reports = rearrangement_suite(seed=0, n_equi=1000, n_hl=1000, n_conv=200)
    dt = time.perf_counter() - t0
    ok = all(r.passed for r in reports) and dt < 60.0
    return ok, "; ".join(f"{r.name} viol={r.details['violations']}" for r in reports) + \
        f"; {dt:.1f}s"


# -- 9 ---------------------------------------------------------------------

def _one_d_small_ratio(x):
    # 2 asinh(sqrt(x)) over log'(x), x = T / a
    return 2 * math.asinh(math.sqrt(x)) / math.log(2 + x)


def criterion_9():
    goldens = load_goldens()["lemmas"]
    cfg = default_sweep_config()["lemma_1dsmall"]
    xs = [10.0 ** e for e in cfg["log10_T_over_a"]]
    band = (min(map(_one_d_small_ratio, xs)), max(map(_one_d_small_ratio, xs)))
    ok = np.allclose(band, goldens["lemma_1dsmall_band"], rtol=1e-9)
    worst = 0.0
    for T in cfg["T"]:
        for e in cfg["log10_T_over_a"]:
            r = lemma_1dsmall_check(T * 10.0 ** -e, T)
            worst = max(worst, abs(r.ratio - _one_d_small_ratio(10.0 ** e)))
            ok &= band[0] - 1e-9 <= r.ratio <= band[1] + 1e-9
    reports = run_sweep()
    s = summarize(reports)
    cmp = compare_to_goldens(s, {k: goldens["max_ratio"][k]
                                 for k in ("lemma_1d", "lemma_2d", "lemma_2dsmall")})
    ok &= all(w for _, _, w in cmp.values()) and not hard_failures(reports)
    parts = [f"1dsmall band=[{band[0]:.6f},{band[1]:.6f}] max dev from closed form={worst:.1e}"]
    parts += [f"{k} max={o:.6g} golden={g:.6g}" for k, (o, g, _) in cmp.items()]
    return ok, "; ".join(parts)


# -- 10 --------------------------------------------------------------------

def criterion_10():
    t0 = time.perf_counter()
    ps = flat_periods([[a, -a] for a in (5.0, 10.0, 20.0, 40.0)], BumpFunction.centered(2),
                      10**5, SamplerConfig(seed=0, n=2))
    dt = time.perf_counter() - t0
    margins = [(abs(p.value) - abs(q.value)) / math.hypot(p.stderr, q.stderr)
               for p, q in zip(ps, ps[1:])]
    ratios = [p.ratio() for p in ps]
    spread = max(ratios) / min(ratios)
    ok = min(margins) > 2.0 and spread < 10.0 and dt < 900.0
    return ok, (f"|P|={[f'{abs(p.value):.4g}' for p in ps]} drop/sigma="
                f"{np.round(margins, 1).tolist()} ratio max/min={spread:.3f} {dt:.1f}s")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def report(k):
    passed, detail = CRITERIA[k - 1]()
    print(f"{'PASS' if passed else 'FAIL'} criterion {k}: {detail}", flush=True)
    return passed


@pytest.mark.parametrize("k", [pytest.param(k, marks=pytest.mark.slow) if k in (3, 6) else k
                               for k in range(1, 11)])
def test_acceptance(k, capsys):
    with capsys.disabled():
        passed = report(k)
    assert passed


if __name__ == "__main__":
    results = [report(k) for k in range(1, 11)]
    sys.exit(0 if all(results) else 1)
