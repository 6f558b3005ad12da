"""Command-line front end: orbitlab {estimate, compare, lemmas, period}.

Single estimates are JSON lines; sweeps are CSV.  Files written with --out
start with one "# ..." header line carrying the timestamp; everything after
it is a deterministic function of the flags and the seed.

Exit codes: 0 all pass, 1 soft-band regression, 2 usage error,
3 hard invariant failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .families import FAMILIES, FamilyMismatch, SweepSpec
from .haar import SamplerConfig
from .interlace import J_n_integral, recursive_I
from .lemmas import (compare_to_goldens, default_sweep_config, hard_failures,
                     run_sweep, summarize)
from .orbit_mc import DEFAULT_MAX_SAMPLES, estimate_I
from .rearrange import rearrangement_suite
from .spectra import A_n, Spectrum, tilde_beta
from .spherical import BumpFunction, flat_periods
from .goldens import load_goldens

log = logging.getLogger("orbitlab")

EXIT_OK, EXIT_SOFT, EXIT_USAGE, EXIT_HARD = 0, 1, 2, 3

COMPARE_COLUMNS = [
    "family", "n", "T", "lambda", "regime", "I", "J",
    "N", "hits", "I_mc", "I_mc_lo", "I_mc_hi",
    "I_rec", "I_rec_err", "J_n", "A_n", "tilde_beta",
    "ratio_I_A", "ratio_I_A_lo", "ratio_I_A_hi", "ratio_rec_A", "ratio_J_A", "flag",
]
LEMMA_COLUMNS = ["lemma", "params", "lhs", "rhs", "ratio", "status"]
PERIOD_COLUMNS = ["lambda", "period_re", "period_im", "stderr", "bound_value", "ratio",
                  "conj_defect", "N", "nodes", "flag"]


class UsageError(Exception):
    pass


def _floats(text: str, what: str) -> list[float]:
    try:
        vals = [float(t) for t in text.replace(" ", "").split(",") if t != ""]
    except ValueError as exc:
        raise UsageError(f"malformed {what}: {text!r}") from exc
    if not vals or not all(math.isfinite(v) for v in vals):
        raise UsageError(f"malformed {what}: {text!r}")
    return vals


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _header(command: str) -> str:
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return f"# orbitlab {__version__} {command} generated {stamp}\n"


def _emit(text: str, out: str | None, command: str):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(_header(command))
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# estimate


def cmd_estimate(args) -> int:
    if not args.lam:
        raise UsageError("--lambda is required")
    lines = []
    for text in args.lam:
        vals = _floats(text, "--lambda")
        try:
            sp = Spectrum(vals)
            cfg = SamplerConfig(seed=args.seed, n=len(vals))
        except ValueError as exc:
            raise UsageError(f"--lambda {text!r}: {exc}") from exc
        est = estimate_I(sp, radius=args.radius, n_samples=args.samples, cfg=cfg,
                         target_ci=args.target_ci, max_samples=args.budget)
        rec = est.to_record()
        rec["lambda"] = vals
        if est.note == "trace-cutoff":
            rec["reason"] = "trace-cutoff"
        lines.append(json.dumps(rec))
    _emit("\n".join(lines) + "\n", args.out, "estimate")
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare


def _compare_row(job) -> dict:
    spec, T, lam, tag = job
    n = len(lam)
    row = {"family": spec.family, "n": n, "T": T, "lambda": " ".join(repr(float(v)) for v in lam),
           "regime": str(tag.kind), "I": tag.I, "J": tag.J}
    flags = []
    A = A_n(lam)
    row["A_n"] = A
    row["tilde_beta"] = tilde_beta(lam)
    if spec.n_samples > 0:
        cfg = SamplerConfig(seed=spec.seed, n=n)
        est = estimate_I(lam, 1.0, spec.n_samples, cfg, spec.target_ci, spec.budget)
        row.update({"N": est.total, "hits": est.hits, "I_mc": est.p_hat,
                    "I_mc_lo": est.ci_low, "I_mc_hi": est.ci_high,
                    "ratio_I_A": est.p_hat / A, "ratio_I_A_lo": est.ci_low / A,
                    "ratio_I_A_hi": est.ci_high / A})
        if "ci-target-unmet" in est.note:
            flags.append("budget-exhausted")
    rtol = spec.extra.get("rtol", 1e-6)
    if n <= 4:
        m = spec.extra.get("m_nodes")
        rec = recursive_I(lam, rtol=rtol if n == 3 else max(rtol, 1e-4), m_nodes=m)
        row.update({"I_rec": rec.value, "I_rec_err": rec.error, "ratio_rec_A": rec.value / A})
        if not rec.converged:
            flags.append("recursion-unconverged")
    if 3 <= n <= 5:
        jq = J_n_integral(lam, rtol=rtol)
        row.update({"J_n": jq.value, "ratio_J_A": jq.value / A})
        if not jq.converged:
            flags.append("J-unconverged")
    row["flag"] = ";".join(flags)
    return row


def cmd_compare(args) -> int:
    if args.config:
        try:
            with open(args.config) as fh:
                spec = SweepSpec.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError, TypeError, ValueError) as exc:
            raise UsageError(f"bad sweep config: {exc}") from exc
    else:
        if not (args.family and args.n and args.grid):
            raise UsageError("compare needs --family, --n and --grid (or --config)")
        try:
            spec = SweepSpec(args.family, args.n, _floats(args.grid, "--grid"), seed=args.seed,
                             n_samples=args.samples, target_ci=args.target_ci, budget=args.budget)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    try:
        members = spec.spectra()
    except FamilyMismatch as exc:
        log.error("%s", exc)
        return EXIT_HARD
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    for T, s, tag in members:
        log.info("family %s T=%g regime %s", spec.family, T, tag.to_dict())
    jobs = [(spec, T, np.array(s.values), tag) for T, s, tag in members]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            rows = list(pool.map(_compare_row, jobs))
    else:
        rows = [_compare_row(j) for j in jobs]
    _emit(_csv(COMPARE_COLUMNS, rows), args.out, "compare")
    return EXIT_OK


# ---------------------------------------------------------------------------
# lemmas


def cmd_lemmas(args) -> int:
    config = {}
    if args.config:
        try:
            with open(args.config) as fh:
                config = json.load(fh)
            if not isinstance(config, dict):
                raise ValueError("top level must be an object")
        except (OSError, json.JSONDecodeError, ValueError) as exc:
            raise UsageError(f"bad lemma config: {exc}") from exc
    sweeps = config.get("sweeps", default_sweep_config())
    hard_cfg = {"seed": 0, "n_equi": 1000, "n_hl": 1000, "n_conv": 200}
    hard_cfg.update(config.get("hard", {}))
    try:
        reports = run_sweep(sweeps)
        hard = rearrangement_suite(**hard_cfg)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad lemma config: {exc}") from exc
    _emit(_csv(LEMMA_COLUMNS, [r.row() for r in reports]), args.out, "lemmas")

    code = EXIT_OK
    for h in hard:
        print(h.line(), file=sys.stderr)
    broken = hard_failures(reports)
    if broken or not all(h.passed for h in hard):
        for r in broken:
            print(f"FAIL non-finite lemma values: {r.row()}", file=sys.stderr)
        return EXIT_HARD
    summary = summarize(reports)
    goldens = config.get("goldens", load_goldens()["lemmas"]["max_ratio"])
    for name, (obs, g, ok) in compare_to_goldens(summary, goldens).items():
        if name not in summary.max_ratio:
            continue
        status = "PASS" if ok else "SOFT"
        print(f"{status} {name}: max ratio {obs} vs golden {g}", file=sys.stderr)
        if not ok:
            code = EXIT_SOFT
    return code


# ---------------------------------------------------------------------------
# period


def _period_lambda(n: int, a: float) -> list[float]:
    return [a, -a] if n == 2 else [a, 0.0, -a]


def cmd_period(args) -> int:
    if args.n not in (2, 3):
        raise UsageError("period needs --n 2 or --n 3")
    grid = _floats(args.grid, "--grid") if args.grid else [5.0, 10.0, 20.0, 40.0]
    lams = [_period_lambda(args.n, a) for a in grid]
    negs = [[-v for v in lam] for lam in lams]
    bump = BumpFunction.centered(args.n, args.scale)
    cfg = SamplerConfig(seed=args.seed, n=args.n)
    ests = flat_periods(lams + negs, bump, args.samples, cfg, args.order, args.budget)
    k = len(lams)
    rows = []
    for est, neg in zip(ests[:k], ests[k:]):
        row = est.row()
        row["conj_defect"] = abs(neg.value - est.value.conjugate())
        row["N"] = est.n_samples
        row["nodes"] = est.n_nodes
        row["flag"] = est.note
        rows.append(row)
    _emit(_csv(PERIOD_COLUMNS, rows), args.out, "period")
    if any(r["conj_defect"] != 0.0 for r in rows):
        return EXIT_HARD
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orbitlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("estimate", help="Monte Carlo I_n(lambda; r), one JSON line per --lambda")
    e.add_argument("--lambda", dest="lam", action="append", metavar="a,b,...")
    e.add_argument("--radius", type=float, default=1.0)
    e.add_argument("--samples", type=int, default=10**6)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--target-ci", type=float, default=None)
    e.add_argument("--budget", type=int, default=DEFAULT_MAX_SAMPLES,
                   help="hard cap on samples when --target-ci is set")
    e.add_argument("--out")
    e.set_defaults(func=cmd_estimate)

    c = sub.add_parser("compare", help="MC vs recursion vs density side over a family sweep")
    c.add_argument("--family", choices=FAMILIES)
    c.add_argument("--n", type=int)
    c.add_argument("--grid", help="comma-separated scales T")
    c.add_argument("--samples", type=int, default=10**6, help="0 skips Monte Carlo")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--target-ci", type=float, default=None)
    c.add_argument("--budget", type=int, default=DEFAULT_MAX_SAMPLES)
    c.add_argument("--config", help="JSON sweep spec instead of the flags above")
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare)

    lm = sub.add_parser("lemmas", help="lemma ratio sweeps and rearrangement invariants")
    lm.add_argument("--config", help="JSON with optional keys sweeps, hard, goldens")
    lm.add_argument("--out")
    lm.set_defaults(func=cmd_lemmas)

    pr = sub.add_parser("period", help="flat periods of spherical functions against a bump")
    pr.add_argument("--n", type=int, default=2)
    pr.add_argument("--grid", help="comma-separated a; lambda = (a, -a) or (a, 0, -a)")
    pr.add_argument("--samples", type=int, default=10**4, help="Haar samples per grid node")
    pr.add_argument("--seed", type=int, default=0)
    pr.add_argument("--order", type=int, default=64)
    pr.add_argument("--scale", type=float, default=1.0)
    pr.add_argument("--budget", type=int, default=None, help="cap on nodes x samples")
    pr.add_argument("--out")
    pr.set_defaults(func=cmd_period)
    return p


def _join_value_flags(argv):
    """Allow '--lambda -10,10' and '--grid -1,1' where the value starts with '-'."""
    out = []
    it = iter(argv)
    for tok in it:
        if tok in ("--lambda", "--grid"):
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(_join_value_flags(argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"orbitlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
