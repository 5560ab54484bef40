"""Batch command line: compute bounds, verify them, run application reports.

Subcommands
    bound   evaluate a bound formula over parameter grids
    verify  run the matching exact-oracle or Monte-Carlo check (exit 3 on fail)
    app     application reports: gc, slln, cramer, sanov, lil, segments, sde
    export  simulate an event family and dump the sample as JSONL

Exit codes: 0 success, 1 I/O error, 2 domain/precondition error,
3 verification failure, 64 usage error.  Flags override values from a JSON
config file (--config); every output embeds the fully resolved
configuration, so a run can be reproduced from its own header.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from typing import Sequence

import numpy as np

from . import bounds as bd
from . import engine
from .applications import glivenko, lil, mdf, rates, segments, slln
from . import sde as sde_mod
from .errors import DomainError, DivergenceError, InputError, OverlapBoundsError, TruncationError
from .series import (
    DecayModel,
    Explicit,
    Geometric,
    PowerLaw,
    TailFunction,
    WeightSequence,
    tail_sum,
)

EXIT_OK = 0
EXIT_IO = 1
EXIT_DOMAIN = 2
EXIT_VERIFY = 3
EXIT_USAGE = 64

DEFAULTS = {
    "seed": 20240801,
    "reps": 100_000,
    "threads": 1,
    "format": "csv",
    "tail_tolerance": 1e-6,
    "out": None,
    "deterministic": False,
}

BOUND_FORMULAS = (
    "prop2.1",
    "thm2.2",
    "cor2.3.poly",
    "cor2.3.exp",
    "lem2.6",
    "thm2.7",
    "freedman.tail",
    "thm2.9",
    "cor2.10",
    "ex2.12.tail",
    "ex2.13.tail",
    "cor3.2",
    "cor3.4",
    "cor3.5",
    "thm3.16",
    "vc.bound",
    "sde.mdf",
)

VERIFY_FORMULAS = ("prop2.1", "thm2.2", "cor2.3.poly", "cor2.3.exp", "lem2.6", "thm2.7", "thm2.9")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def parse_decay(text: str) -> DecayModel:
    kind, _, rest = text.partition(":")
    try:
        values = [float(v) for v in rest.split(",") if v != ""]
    except ValueError as exc:
        raise UsageError(f"bad decay parameters {rest!r}") from exc
    if kind == "powerlaw" and len(values) == 2:
        return PowerLaw(values[0], values[1])
    if kind == "geometric" and len(values) == 2:
        return Geometric(values[0], values[1])
    if kind == "explicit":
        return Explicit(values)
    raise UsageError(f"unknown decay spec {text!r} (powerlaw:c,q | geometric:c,b | explicit:p1,...)")


def parse_weights(text: str) -> WeightSequence:
    kind, _, rest = text.partition(":")
    try:
        p = float(rest)
    except ValueError as exc:
        raise UsageError(f"bad weight parameter {rest!r}") from exc
    if kind == "monomial":
        return WeightSequence.monomial(p)
    if kind == "exponential":
        return WeightSequence.exponential(p)
    raise UsageError(f"unknown weights spec {text!r} (monomial:p | exponential:p)")


def parse_tail(text: str) -> TailFunction:
    kind, _, rest = text.partition(":")
    values = [float(v) for v in rest.split(",") if v != ""]
    if kind == "power" and len(values) == 2:
        return TailFunction.power(values[0], values[1])
    if kind == "geometric" and len(values) == 2:
        return TailFunction.geometric(values[0], values[1])
    raise UsageError(f"unknown tail spec {text!r} (power:c,p | geometric:c,b)")


def _float_list(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v != ""]


def _int_list(text: str) -> list[int]:
    return [int(v) for v in str(text).split(",") if v != ""]


def build_parser() -> _Parser:
    parser = _Parser(prog="overlapbounds", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: _Parser) -> None:
        p.add_argument("--config", default=None, help="JSON config file; flags override it")
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("csv", "json", "jsonl"), default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--reps", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--tail-tolerance", dest="tail_tolerance", type=float, default=None)
        p.add_argument("--deterministic", action="store_true", default=None)

    pb = sub.add_parser("bound", help="evaluate a bound formula over parameter grids")
    common(pb)
    pb.add_argument("--formula", required=True)
    pb.add_argument("--decay", default=None)
    pb.add_argument("--weights", default=None)
    pb.add_argument("--tail", default=None, help="tail majorant for cor2.10 (power:c,p | geometric:c,b)")
    for flag in ("--r", "--p", "--k", "--c1", "--c", "--b", "--rate", "--bigc", "--eps"):
        pb.add_argument(flag, default=None)
    pb.add_argument("--ell", default=None)
    pb.add_argument("--growth-p", dest="growth_p", type=float, default=1.0)
    pb.add_argument("--kt", type=float, default=None)
    pb.add_argument("--ct", type=float, default=None)
    pb.add_argument("--t", type=float, default=None)

    pv = sub.add_parser("verify", help="check a bound against its oracle or Monte Carlo")
    common(pv)
    pv.add_argument("--formula", required=True)
    pv.add_argument("--decay", default=None)
    pv.add_argument("--weights", default=None)
    pv.add_argument("--p", type=float, default=None)
    pv.add_argument("--r-points", dest="r_points", type=int, default=10)

    pa = sub.add_parser("app", help="run an application report")
    common(pa)
    pa.add_argument("application", choices=("gc", "slln", "cramer", "sanov", "lil", "segments", "sde"))
    pa.add_argument("--eps", type=float, default=0.2)
    pa.add_argument("--eta", type=float, default=None)
    pa.add_argument("--nmax", type=int, default=None)
    pa.add_argument("--q", type=int, default=2)
    pa.add_argument("--p", type=float, default=None)
    pa.add_argument("--dist", default="gaussian", help="gaussian | rademacher (cramer/slln)")
    pa.add_argument("--mu", default="0.5", help="sanov base distribution (comma probabilities or one Bernoulli p)")
    pa.add_argument("--symbol", type=int, default=0)
    pa.add_argument("--t", type=float, default=None)
    pa.add_argument("--alpha", type=float, default=2.0)
    pa.add_argument("--p-head", dest="p_head", type=float, default=0.5)
    pa.add_argument("--threshold", type=float, default=1.0)
    pa.add_argument("--sweep", default="dyadic:4..9", help="dyadic:a..b step-size sweep (sde)")
    pa.add_argument("--sde-mu", dest="sde_mu", type=float, default=0.5)
    pa.add_argument("--sde-sigma", dest="sde_sigma", type=float, default=0.1)
    pa.add_argument("--x0", type=float, default=1.0)
    pa.add_argument("--horizon", type=float, default=1.0)

    pe = sub.add_parser("export", help="simulate an event family, write JSONL sample")
    common(pe)
    pe.add_argument("--family", choices=engine.FAMILIES, required=True)
    pe.add_argument("--decay", required=True)

    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge precedence: command-line flag > config file > default."""
    merged = dict(DEFAULTS)
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            merged.update(json.load(fh))
    for key, value in vars(args).items():
        if key == "config" or value is None:
            continue
        merged[key] = value
    for key, value in merged.items():
        setattr(args, key, value)
    return merged


def _emit(rows: list[dict], config: dict, args: argparse.Namespace) -> None:
    fmt = config.get("format") or "csv"
    header = {k: v for k, v in config.items() if v is not None and k != "out"}
    if not config.get("deterministic"):
        header["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    if fmt == "json":
        text = json.dumps({"config": header, "rows": rows}, indent=2, default=str) + "\n"
    else:
        buf = io.StringIO()
        buf.write("# " + json.dumps(header, default=str, sort_keys=True) + "\n")
        if rows:
            cols: list[str] = []
            for row in rows:
                for key in row:
                    if key not in cols:
                        cols.append(key)
            writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow(row)
        text = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _result_row(res: bd.BoundResult, params: dict) -> dict:
    row = dict(params)
    row.update({"formula": res.formula_id, "value": res.value, "validity": res.validity})
    if res.minimizer is not None:
        row["minimizer"] = res.minimizer
    if res.closed_form is not None:
        row["closed_form"] = res.closed_form
    return row


def cmd_bound(args: argparse.Namespace, config: dict) -> int:
    formula = args.formula
    if formula not in BOUND_FORMULAS:
        raise UsageError(f"unknown formula {formula!r}; choose from {', '.join(BOUND_FORMULAS)}")
    rows: list[dict] = []

    def need(flag: str) -> str:
        val = getattr(args, flag.replace("-", "_"), None)
        if val is None:
            raise UsageError(f"formula {formula} needs --{flag}")
        return val

    if formula in ("prop2.1", "thm2.2"):
        model = parse_decay(need("decay"))
        weights = parse_weights(need("weights"))
        fn = bd.nested_moment_identity if formula == "prop2.1" else bd.general_moment_bound
        rows.append(_result_row(fn(weights, model), {"decay": model.describe(), "weights": weights.describe()}))
    elif formula in ("cor2.3.poly", "cor2.3.exp", "cor3.4", "cor3.5"):
        model = parse_decay(need("decay"))
        fns = {
            "cor2.3.poly": bd.poly_moment_bound,
            "cor2.3.exp": bd.exp_moment_bound,
            "cor3.4": mdf.mdf_polynomial,
            "cor3.5": mdf.mdf_exponential,
        }
        for p in _float_list(need("p")):
            rows.append(_result_row(fns[formula](p, model), {"decay": model.describe(), "p": p}))
    elif formula == "lem2.6":
        for c1 in _float_list(need("c1")):
            rows.append({"formula": formula, "c1": c1, "value": bd.second_moment_bound(c1)})
    elif formula == "thm2.7":
        for c1 in _float_list(need("c1")):
            for r in _float_list(need("r")):
                rows.append(_result_row(bd.freedman_exp_bound(r, c1), {"r": r, "c1": c1}))
    elif formula == "freedman.tail":
        for c1 in _float_list(need("c1")):
            for k in _int_list(need("k")):
                rows.append({"formula": formula, "k": k, "c1": c1, "value": bd.freedman_tail_bound(k, c1)})
    elif formula == "thm2.9":
        for c1 in _float_list(need("c1")):
            for r in _float_list(need("r")):
                rows.append(_result_row(bd.improved_exp_bound(r, c1), {"r": r, "c1": c1}))
    elif formula == "cor2.10":
        tail = parse_tail(need("tail"))
        for r in _float_list(need("r")):
            rows.append(_result_row(bd.rate_aware_exp_bound(r, tail), {"r": r, "tail": tail.label}))
    elif formula == "ex2.12.tail":
        c, p = float(need("c")), float(need("p"))
        for k in _int_list(need("k")):
            rows.append({"formula": formula, "k": k, "c": c, "p": p, "value": bd.powerlaw_tail_asymptotic(k, c, p), "minimizer": bd.powerlaw_tail_minimizer(k, c, p)})
    elif formula == "ex2.13.tail":
        c, b = float(need("c")), float(need("b"))
        for k in _int_list(need("k")):
            rows.append({"formula": formula, "k": k, "c": c, "b": b, "value": bd.geometric_tail_bound(k, c, b), "minimizer": bd.geometric_tail_minimizer(k, c, b)})
    elif formula == "cor3.2":
        model = parse_decay(need("decay"))
        rows.append(_result_row(mdf.mdf_first_order(model), {"decay": model.describe()}))
    elif formula == "thm3.16":
        rate = float(need("rate"))
        bigc = float(need("bigc"))
        for p in _float_list(need("p")):
            rows.append(_result_row(mdf.ldp_mdf_bound(rate, p, bigc), {"rate": rate, "p": p, "C": bigc}))
    elif formula == "vc.bound":
        eps = float(need("eps"))
        growth = lambda x: float(x) ** args.growth_p + 1.0
        for ell in _int_list(need("ell")):
            rows.append({"formula": formula, "ell": ell, "eps": eps, "growth_p": args.growth_p, "value": mdf.vc_bound(ell, eps, growth)})
    elif formula == "sde.mdf":
        if args.kt is None or args.ct is None or args.t is None or args.eps is None:
            raise UsageError("sde.mdf needs --kt --ct --t --eps")
        res = sde_mod.sde_mdf_bound(args.kt, args.ct, args.t, float(args.eps))
        rows.append(_result_row(res, {"kt": args.kt, "ct": args.ct, "t": args.t, "eps": float(args.eps)}))

    _emit(rows, config, args)
    return EXIT_OK


def _verify_mc_rows(args, model, weights=None, p=None, formula="") -> tuple[list[dict], bool]:
    reps, seed, threads = int(args.reps), int(args.seed), int(args.threads)
    if reps < 1:
        raise UsageError("reps must be >= 1")
    tol = float(args.tail_tolerance)
    rows, all_ok = [], True

    def record(label: str, theoretical: float, emp: engine.EmpiricalMoment, equality=False) -> None:
        nonlocal all_ok
        slack = 4.0 * emp.stderr
        ok = abs(emp.estimate - theoretical) <= slack if equality else emp.estimate <= theoretical + slack
        all_ok &= ok
        rows.append(
            {
                "formula": formula,
                "check": label,
                "theoretical": theoretical,
                "empirical": emp.estimate,
                "stderr": emp.stderr,
                "pass": ok,
            }
        )

    if formula == "prop2.1":
        spec = engine.EventFamilySpec.from_model("nested", model, tol)
        sample = engine.simulate_overlap(spec, reps, seed, threads)
        emp = engine.empirical_moment(sample, partial_sum_of=weights)
        record("nested equality E[S(O)]", bd.nested_moment_identity(weights, model).value, emp, equality=True)
    elif formula == "thm2.2":
        bound = bd.general_moment_bound(weights, model).value
        for family in ("independent", "nested"):
            spec = engine.EventFamilySpec.from_model(family, model, tol)
            sample = engine.simulate_overlap(spec, reps, seed, threads)
            emp = engine.empirical_moment(sample, partial_sum_of=weights)
            record(f"E[S(O)] <= bound ({family})", bound, emp)
    elif formula == "cor2.3.poly":
        bound = bd.poly_moment_bound(p, model).value
        for family in ("independent", "nested"):
            spec = engine.EventFamilySpec.from_model(family, model, tol)
            sample = engine.simulate_overlap(spec, reps, seed, threads)
            emp = engine.empirical_moment(sample, power=p + 1.0)
            record(f"E[O**(p+1)] <= bound ({family})", bound, emp)
    elif formula == "cor2.3.exp":
        bound = bd.exp_moment_bound(p, model).value
        for family in ("independent", "nested"):
            spec = engine.EventFamilySpec.from_model(family, model, tol, exp_rate=p)
            sample = engine.simulate_overlap(spec, reps, seed, threads)
            emp = engine.empirical_moment(sample, exp_rate=p)
            record(f"E[e**(pO)] <= bound ({family})", bound, emp)
    elif formula == "lem2.6":
        c1 = tail_sum(model, 1).value
        bound = bd.second_moment_bound(c1)
        spec = engine.EventFamilySpec.from_model("independent", model, tol)
        sample = engine.simulate_overlap(spec, reps, seed, threads)
        record("E[O**2] <= C1(1+C1)", bound, engine.empirical_moment(sample, power=2.0))
    return rows, all_ok


def cmd_verify(args: argparse.Namespace, config: dict) -> int:
    formula = args.formula
    if formula not in VERIFY_FORMULAS:
        raise UsageError(f"unknown verification {formula!r}; choose from {', '.join(VERIFY_FORMULAS)}")
    if int(args.reps) < 1:
        raise UsageError("reps must be >= 1")
    rows: list[dict] = []
    all_ok = True
    if formula in ("thm2.7", "thm2.9"):
        model = parse_decay(args.decay or "")
        if not isinstance(model, Explicit):
            raise UsageError(f"{formula} verification needs an explicit decay (exact oracle)")
        dist = bd.sn_exact_distribution(model.probabilities)
        c1 = float(sum(model.probabilities))
        if formula == "thm2.9" and c1 >= 1.0:
            raise DomainError(f"thm2.9 requires C1 < 1 (got C1={c1})")
        top = abs(math.log(c1)) if c1 < 1 else 1.0
        r_grid = np.linspace(top / (args.r_points + 1), top * args.r_points / (args.r_points + 1), args.r_points)
        for r in r_grid:
            exact = dist.exp_moment(float(r))
            bound = (
                bd.improved_exp_bound(float(r), c1) if formula == "thm2.9" else bd.freedman_exp_bound(float(r), c1)
            ).value
            ok = exact <= bound * (1.0 + 1e-12)
            all_ok &= ok
            rows.append({"formula": formula, "r": float(r), "theoretical": bound, "empirical": exact, "stderr": 0.0, "pass": ok})
    else:
        model = parse_decay(args.decay or "")
        weights = parse_weights(args.weights) if args.weights else WeightSequence.monomial(1.0)
        rows, all_ok = _verify_mc_rows(args, model, weights=weights, p=args.p or 1.0, formula=formula)
    _emit(rows, config, args)
    return EXIT_OK if all_ok else EXIT_VERIFY


def _parse_sweep(text: str) -> list[float]:
    kind, _, rest = text.partition(":")
    if kind != "dyadic" or ".." not in rest:
        raise UsageError(f"unknown sweep spec {text!r} (expected dyadic:a..b)")
    a, b = rest.split("..")
    return [2.0 ** (-k) for k in range(int(a), int(b) + 1)]


def cmd_app(args: argparse.Namespace, config: dict) -> int:
    app = args.application
    reps, seed, threads = int(args.reps), int(args.seed), int(args.threads)
    if app == "gc":
        eta = args.eta if args.eta is not None else args.eps / 2.0
        n_max = args.nmax or 2000
        report = glivenko.gc_simulate(glivenko.uniform01, args.eps, n_max, reps, seed, eta, threads)
    elif app == "slln":
        sampler = slln.rademacher if args.dist == "rademacher" else (lambda rng, shape: rng.normal(0.0, 1.0, shape))
        p = args.p if args.p is not None else (args.q - 1) / 2.0
        report = slln.slln_mdf_report(sampler, args.q, p, args.eps, args.nmax or 10_000, reps, seed, threads)
    elif app == "cramer":
        fn = (lambda lam: 0.5 * lam * lam) if args.dist == "gaussian" else (lambda lam: math.log(math.cosh(lam)))
        res = rates.cramer_rate(fn, 0.0, args.eps)
        _emit([{"application": "cramer", "dist": args.dist, "eps": args.eps, "rate": res.rate, "argmin": res.argmin, "method": res.method}], config, args)
        return EXIT_OK
    elif app == "sanov":
        probs = _float_list(args.mu)
        if len(probs) == 1:
            probs = [probs[0], 1.0 - probs[0]]
        if args.t is None:
            raise UsageError("sanov needs --t")
        res = rates.sanov_rate(np.array(probs), args.symbol, args.t)
        _emit([{"application": "sanov", "mu": args.mu, "symbol": args.symbol, "t": args.t, "rate": res.rate, "minimizer": json.dumps(res.argmin, default=float), "method": res.method}], config, args)
        return EXIT_OK
    elif app == "lil":
        report = lil.lil_simulate(args.alpha, args.nmax or 40, reps, seed, threads)
    elif app == "segments":
        report = segments.rare_segments(args.p_head, args.threshold, args.nmax or 2000, reps, seed, threads=threads)
    else:
        problem = sde_mod.SdeProblem.geometric_brownian(args.sde_mu, args.sde_sigma, args.x0, args.horizon)
        sweep = _parse_sweep(args.sweep)
        result = sde_mod.strong_error_estimate(problem, sweep, reps, seed, threads)
        rows = [
            {"application": "sde", "delta": d, "mean_abs_error": e, "stderr": s, "reps": reps, "slope": result.slope, "slope_stderr": result.slope_stderr}
            for d, e, s in zip(result.deltas, result.mean_errors, result.stderrs)
        ]
        _emit(rows, config, args)
        return EXIT_OK

    fmt = config.get("format") or "csv"
    if args.out:
        if fmt == "json":
            report.to_json(args.out)
        else:
            report.to_csv(args.out)
    else:
        rows = [
            {"application": report.application, "epsilon": r.epsilon, "order": r.order, "theoretical": r.theoretical, "empirical": r.empirical, "stderr": r.stderr, "reps": report.reps, "seed": report.seed}
            for r in report.rows
        ]
        _emit(rows, config, args)
    return EXIT_OK


def cmd_export(args: argparse.Namespace, config: dict) -> int:
    model = parse_decay(args.decay)
    spec = engine.EventFamilySpec.from_model(args.family, model, float(args.tail_tolerance))
    sample = engine.simulate_overlap(spec, int(args.reps), int(args.seed), int(args.threads))
    if not args.out:
        raise UsageError("export needs --out")
    engine.write_sample_jsonl(sample, args.out)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = resolve_config(args)
        if args.command == "bound":
            return cmd_bound(args, config)
        if args.command == "verify":
            return cmd_verify(args, config)
        if args.command == "app":
            return cmd_app(args, config)
        return cmd_export(args, config)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, DivergenceError, TruncationError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except InputError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
