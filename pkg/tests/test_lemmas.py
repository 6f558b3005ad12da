import math

import numpy as np
import pytest
from scipy.special import spence

from orbitlab.goldens import load_goldens
from orbitlab.lemmas import (compare_to_goldens, hard_failures, lemma_1d_check,
                             lemma_1dsmall_check, lemma_2d_check, lemma_2dsmall_check,
                             log_average_check, one_d_small_integral, run_sweep, summarize)


def dilog(x):
    return spence(1.0 - x)


def test_log_average_k0_ratio_two():
    r = log_average_check(0.0, 9.0, 100.0, 0)
    assert r.converged
    assert r.lhs == pytest.approx(6.0, rel=1e-12)
    assert r.ratio == pytest.approx(2.0, rel=1e-12)


def test_log_average_half_example():
    r = log_average_check(1.0, 1e4, 1e6, 2)
    assert r.converged and 0 < r.ratio < 10


def test_log_average_inv_closed_form():
    a, b, T = 0.5, 40.0, 1e3
    r = log_average_check(a, b, T, 1, variant="inv")
    c = T / 2
    exact = math.log(2) * math.log(b / a) + dilog(-c / b) - dilog(-c / a)
    assert r.lhs == pytest.approx(exact, rel=1e-9)
    assert 0 < r.ratio <= 1.0 + 1e-12   # log'(T/x) <= log'(T/a) on [a, b]
    with pytest.raises(ValueError):
        log_average_check(0.0, 1.0, 1.0, 1, variant="inv")
    with pytest.raises(ValueError):
        log_average_check(1.0, 2.0, 1.0, 7)


def test_1dsmall_closed_form_and_a_equals_T():
    r = lemma_1dsmall_check(3.0, 3.0)
    assert r.lhs == pytest.approx(2 * math.log(1 + math.sqrt(2)), rel=1e-10)
    assert r.lhs == pytest.approx(1.76275, abs=1e-5)
    assert r.rhs == pytest.approx(math.log(3), rel=1e-15)
    assert r.ratio == pytest.approx(1.60452, abs=1e-5)
    for ta in (1e2, 1e4, 1e8):
        r = lemma_1dsmall_check(1.0, ta)
        assert r.lhs == pytest.approx(one_d_small_integral(1.0, ta), rel=1e-9)


def test_1dsmall_asymptotics():
    band = load_goldens()["lemmas"]["lemma_1dsmall_band"]
    r4 = lemma_1dsmall_check(1.0, 1e4)
    assert band[0] * 0.9 <= r4.ratio <= band[1] * 1.1
    # 2 asinh(sqrt(x)) = ln(4x) + o(1) while log'(x) = ln(x) + o(1), so the
    # ratio tends to 1 with excess ln 4 / ln x
    x = 1e12
    r = lemma_1dsmall_check(1.0, x)
    assert abs(r.ratio - 1.0) <= math.log(4) / math.log(x) + 1e-3
    assert r.ratio == pytest.approx(1 + math.log(4) / math.log(x), abs=1e-3)


def test_1d_examples():
    for T in (10.0, 1e3, 1e5):
        r = lemma_1d_check(0.3 * T, 0.3 * T, T)
        assert r.ratio <= 2 / math.log(2) + 1e-9
        assert r.lhs <= 2 * math.sqrt(T) * (1 + 1e-9)
        r = lemma_1d_check(0.5 * T, 0.1 * T, T)   # b < a
        assert r.ratio <= 2 / math.log(2) + 1e-9
    r = lemma_1d_check(0.01, 5.0, 100.0, L=[-20.0, 3.0])
    assert r.converged and math.isfinite(r.ratio)


def test_2d_vacuous_and_edge_approach():
    A, B, C, D, E, T = -3.0, -1.0, 0.5, 2.0, 4.0, 10.0
    assert lemma_2d_check(A, B, C, D, E, T, A + C - 1.0).status == "vacuous"
    ratios = []
    for e in range(1, 7):
        r = lemma_2d_check(A, B, C, D, E, T, A + C + 10.0 ** -e)
        assert r.status == "ok" and r.converged
        ratios.append(r.ratio)
    assert all(math.isfinite(x) for x in ratios)
    assert max(ratios) < 10 * ratios[0]
    with pytest.raises(ValueError):
        lemma_2d_check(0.0, -1.0, 1.0, 2.0, 3.0, 10.0, 0.5)


def test_2dsmall_symmetric_example_is_divergent():
    # t = 0 = B + C: both inverse-root singularities sit at the same point
    r = lemma_2dsmall_check(-2.0, -1.0, 1.0, 2.0, 10.0, 0.0)
    assert r.status == "divergent"
    assert math.isnan(r.ratio)
    ratios = [lemma_2dsmall_check(-2.0, -1.0, 1.0, 2.0, 10.0, 10.0 ** -e).ratio
              for e in range(1, 7)]
    assert all(math.isfinite(x) and x > 0 for x in ratios)
    assert max(ratios) / min(ratios) < 3


def test_2dsmall_point_mass_limit():
    ratios, lhs = [], []
    for w in (1e-1, 1e-2, 1e-3, 1e-4):
        r = lemma_2dsmall_check(-1 - w, -1 + w, 1 - w, 1 + w, 10.0, 0.3 * w)
        assert r.status == "ok" and r.converged
        ratios.append(r.ratio)
        lhs.append(r.lhs)
    assert lhs[-1] > lhs[0]          # the integral blows up as widths shrink
    assert max(ratios) < 2.0         # while the ratio stays bounded


def test_released_sweep_matches_goldens():
    reports = run_sweep()
    s = summarize(reports)
    assert s.unconverged == 0
    assert not hard_failures(reports)
    cmp = compare_to_goldens(s, load_goldens()["lemmas"]["max_ratio"])
    assert all(within for _, _, within in cmp.values())


def test_report_row():
    r = lemma_1dsmall_check(1.0, 10.0)
    row = r.row()
    assert set(row) == {"lemma", "params", "lhs", "rhs", "ratio", "status"}
    assert np.isclose(row["ratio"], r.lhs / r.rhs)
