"""Frozen measured constants and how to regenerate them.

``load_goldens`` reads the packaged fixture.  ``measure_goldens`` recomputes
every entry from the current code; the fixture was produced by
``python -m orbitlab.goldens --write``.
"""
from __future__ import annotations

import argparse
import json
import math
from functools import lru_cache
from importlib import resources
from pathlib import Path

NORMALIZATION_LAMBDAS = {
    "2": [-1.0, 1.0],
    "3": [-1.0, 0.2, 0.8],
    "4": [-1.5, -0.5, 0.25, 1.75],
    "5": [-2.0, -1.0, 0.0, 1.25, 1.75],
}
NORMALIZATION_NODES = {"2": None, "3": 24, "4": 24, "5": 10}
NORMALIZATION_RTOL = 1e-8
REGIME_T = [10.0, 100.0, 1000.0, 10000.0]


@lru_cache(maxsize=None)
def load_goldens() -> dict:
    text = resources.files("orbitlab.data").joinpath("goldens.json").read_text()
    return json.loads(text)


def measure_goldens() -> dict:
    from .families import family_spectrum
    from .interlace import raw_mass, recursive_I
    from .lemmas import default_sweep_config, one_d_small_integral, run_sweep, summarize
    from .spectra import A_n, log_prime

    inv_c, err = {}, {}
    for n, lam in NORMALIZATION_LAMBDAS.items():
        m = NORMALIZATION_NODES[n]
        q = raw_mass(lam, rtol=NORMALIZATION_RTOL) if m is None else \
            raw_mass(lam, rtol=NORMALIZATION_RTOL, m_nodes=m)
        inv_c[n], err[n] = q.value, q.error

    cfg = default_sweep_config()
    summary = summarize(run_sweep(cfg))
    s1 = cfg["lemma_1dsmall"]
    closed = [one_d_small_integral(T * 10.0 ** -e, T) / log_prime(10.0 ** e)
              for T in s1["T"] for e in s1["log10_T_over_a"]]

    ratios = []
    for T in REGIME_T:
        lam = family_spectrum("two-gap-1-nm1", 3, T).values
        ratios.append(recursive_I(lam).value / A_n(lam))

    return {
        "normalization": {
            "inv_c": inv_c, "quadrature_error": err, "rtol": NORMALIZATION_RTOL,
            "m_nodes": NORMALIZATION_NODES, "lambda": NORMALIZATION_LAMBDAS,
        },
        "lemmas": {
            "max_ratio": summary.max_ratio,
            "lemma_1dsmall_band": [min(closed), max(closed)],
        },
        "regimes": {
            "two_gap_1_nm1_n3": {"T": REGIME_T, "ratio_I_A": ratios,
                                 "max_over_min": max(ratios) / min(ratios)},
        },
    }


def main(argv=None):
    p = argparse.ArgumentParser(description="recompute the golden fixture")
    p.add_argument("--write", action="store_true", help="overwrite the packaged fixture")
    args = p.parse_args(argv)
    data = measure_goldens()
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    if args.write:
        path = Path(__file__).parent / "data" / "goldens.json"
        path.write_text(text)
        print(f"wrote {path}")
    else:
        print(text)
    return 0 if all(math.isfinite(v) for v in data["normalization"]["inv_c"].values()) else 1


if __name__ == "__main__":
    raise SystemExit(main())
