import csv
import io
import json

import pytest

from orbitlab import cli
from orbitlab.orbit_mc import CheckReport


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_estimate_examples(capsys):
    code, out, _ = run(capsys, "estimate", "--lambda", "0,0", "--samples", "1000")
    assert code == 0 and json.loads(out)["p_hat"] == 1.0
    code, out, _ = run(capsys, "estimate", "--lambda", "-10,10", "--samples", "1000000")
    rec = json.loads(out)
    assert code == 0 and rec["ci_low"] <= 0.0450534 <= rec["ci_high"]
    assert set(rec) >= {"lambda", "radius", "N", "hits", "p_hat", "ci_low", "ci_high", "seed"}
    code, out, _ = run(capsys, "estimate", "--lambda", "2,2,2", "--samples", "100")
    rec = json.loads(out)
    assert rec["p_hat"] == 0.0 and rec["reason"] == "trace-cutoff"


def test_estimate_multiple_lambdas(capsys):
    code, out, _ = run(capsys, "estimate", "--lambda", "-1,1", "--lambda", "-2,0,2",
                       "--samples", "500")
    assert code == 0 and len(out.strip().splitlines()) == 2


@pytest.mark.parametrize("argv", [
    ["estimate"],
    ["estimate", "--lambda", "1,x"],
    ["estimate", "--lambda", "nan,1"],
    ["compare", "--family", "generic"],
    ["period", "--n", "4"],
])
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "error" in err


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["estimate", "--samples", "many"])
    assert exc.value.code == 2


def test_deterministic_output_apart_from_header(tmp_path, capsys):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        code, _, _ = run(capsys, "compare", "--family", "two-gap-1-nm1", "--n", "3",
                         "--grid", "10,100", "--samples", "20000", "--out", str(p))
        assert code == 0
    a, b = (p.read_text().splitlines() for p in paths)
    assert a[0].startswith("# orbitlab") and b[0].startswith("# orbitlab")
    assert a[1:] == b[1:]
    rows = list(csv.DictReader(io.StringIO("\n".join(a[1:]))))
    assert rows[0].keys() == set(cli.COMPARE_COLUMNS)
    assert [float(r["T"]) for r in rows] == [10.0, 100.0]
    for r in rows:
        assert float(r["I_mc_lo"]) <= float(r["I_mc"]) <= float(r["I_mc_hi"])
        assert r["I_rec"] and r["J_n"]


def test_compare_config_and_workers(tmp_path, capsys):
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps({"family": "one-gap", "n": 3, "grid": [10, 100],
                               "n_samples": 0}))
    code, out1, _ = run(capsys, "compare", "--config", str(cfg))
    assert code == 0
    code, out2, _ = run(capsys, "compare", "--config", str(cfg), "--workers", "2")
    assert out1 == out2
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run(capsys, "compare", "--config", str(bad))[0] == 2


def test_compare_refuses_mislabeled_family(monkeypatch, capsys):
    from orbitlab import families
    from orbitlab.spectra import Spectrum
    monkeypatch.setattr(families, "family_spectrum",
                        lambda *a, **k: Spectrum([-1.0, 0.0, 1.0]))
    code, _, _ = run(capsys, "compare", "--family", "one-gap", "--n", "3", "--grid", "10",
                     "--samples", "0")
    assert code == 3


SMALL_LEMMAS = {"sweeps": {"lemma_1dsmall": {"T": [1.0], "log10_T_over_a": [0, 2, 4]}},
                "hard": {"n_equi": 20, "n_hl": 20, "n_conv": 5}}


def test_lemmas_pass_soft_and_hard(tmp_path, capsys, monkeypatch):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(SMALL_LEMMAS))
    code, out, err = run(capsys, "lemmas", "--config", str(p))
    assert code == 0
    assert out.splitlines()[0].split(",") == cli.LEMMA_COLUMNS
    assert "PASS lemma_1dsmall" in err
    p.write_text(json.dumps({**SMALL_LEMMAS, "goldens": {"lemma_1dsmall": 0.5}}))
    assert run(capsys, "lemmas", "--config", str(p))[0] == 1
    monkeypatch.setattr(cli, "rearrangement_suite",
                        lambda **k: [CheckReport("hardy_littlewood", False, {})])
    assert run(capsys, "lemmas", "--config", str(p))[0] == 3
    p.write_text("[1, 2]")
    assert run(capsys, "lemmas", "--config", str(p))[0] == 2


def test_lemmas_default_release_gate(capsys):
    code, out, err = run(capsys, "lemmas")
    assert code == 0
    assert "FAIL" not in err and "SOFT" not in err


def test_period_command(capsys):
    code, out, _ = run(capsys, "period", "--grid", "0,5,10", "--samples", "2000", "--order", "24")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [float(r["conj_defect"]) for r in rows] == [0.0, 0.0, 0.0]
    assert float(rows[0]["period_re"]) > 0 and float(rows[0]["ratio"]) < float("inf")
    code, out, _ = run(capsys, "period", "--n", "3", "--grid", "4", "--samples", "200",
                       "--order", "12")
    assert code == 0
