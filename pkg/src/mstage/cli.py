"""Command-line interface: ``mstage design | evaluate | run``.

Exit codes: 0 success, 2 invalid input, 3 tuning failure, 4 exact method
unavailable, 5 insufficient data.  Errors are written to stderr as one JSON
object ``{"error": ..., "message": ..., "exit_code": ...}``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import List, Optional, Sequence

import numpy as np

from .boundaries import NonTerminationError
from .io import PlanFormatError, load_plan, save_plan
from .models import BoundaryKind, Family, ModelSpec
from .oc import DEFAULT_EPSILON, ExactUnavailableError, oc_exact
from .plans import InsufficientDataError, PlanInvariantError, TestShape, build_plan, run_plan
from .rng import DEFAULT_SEED
from .simulate import oc_simulate
from .tuner import TuningError, tune

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_TUNING = 3
EXIT_NO_EXACT = 4
EXIT_NO_DATA = 5


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code = code
        self.kind = kind


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route usage errors through the JSON channel
        raise CliError(EXIT_INVALID, "usage", message)


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


# ------------------------------------------------------------------ design


def _model(args) -> ModelSpec:
    fam = Family(args.model)
    if fam is Family.FINITE_POPULATION:
        if args.population is None:
            raise ValueError("--population is required for finite-population")
        return ModelSpec.finite_population(args.population)
    if fam is Family.NORMAL_MEAN:
        if args.sigma is None:
            raise ValueError("--sigma is required for normal-mean")
        return ModelSpec.normal_mean(args.sigma)
    if fam is Family.NORMAL_STD_KNOWN_MEAN:
        return ModelSpec.normal_std(0.0 if args.mu is None else args.mu)
    if fam is Family.NORMAL_STD_UNKNOWN_MEAN:
        return ModelSpec.normal_std()
    if fam is Family.GAMMA_SCALE:
        if args.gamma_shape is None:
            raise ValueError("--gamma-shape is required for gamma-scale")
        return ModelSpec.gamma_scale(args.gamma_shape)
    if fam is Family.NORMAL_MEAN_OVER_STD:
        return ModelSpec.normal_mean_over_std(0.0 if args.mu is None else args.mu)
    if fam is Family.VARIANCE_RATIO:
        return ModelSpec.variance_ratio(not args.means_unknown, args.mu, args.mu_y)
    return {
        Family.BERNOULLI: ModelSpec.bernoulli,
        Family.POISSON: ModelSpec.poisson,
        Family.EXPONENTIAL: ModelSpec.exponential,
        Family.LIFE_TEST_POISSON: ModelSpec.life_test,
    }[fam]()


def _shape(args) -> TestShape:
    d = args.delta
    k = args.shape
    thetas = [t for t in (args.theta0, args.theta1, args.theta2) if t is not None]
    pts = args.points or thetas
    if k == "one-sided":
        _need(pts, 2, d, 2, k)
        return TestShape.one_sided(pts[0], pts[1], d[0], d[1])
    if k == "two-sided":
        _need(pts, 3, d, 2, k)
        return TestShape.two_sided(*pts, d[0], d[1])
    if k == "triple":
        _need(pts, 3, d, 3, k)
        return TestShape.triple(*pts, d)
    if k == "interval":
        _need(pts, 6, d, 2, k)
        return TestShape.interval(*pts, d[0], d[1])
    if k == "multiple-simple":
        return TestShape.multiple_simple(pts, d)
    if not (args.cuts and args.lo and args.hi):
        raise ValueError("m-hypotheses needs --cuts, --lo and --hi")
    return TestShape.m_hypotheses(args.cuts, args.lo, args.hi, d)


def _need(pts, n_pts, d, n_d, kind):
    if len(pts) != n_pts or len(d) != n_d:
        raise ValueError(f"{kind} needs {n_pts} points and {n_d} risk levels")


def cmd_design(args) -> int:
    try:
        model = _model(args)
        shape = _shape(args)
    except ValueError as exc:
        raise CliError(EXIT_INVALID, "validation", str(exc)) from None
    digest = None
    try:
        if args.tune:
            res = tune(
                model, shape, args.kind, stages=args.stages, ratio=args.ratio, epsilon=args.epsilon,
                sim_reps=args.reps, seed=args.seed,
            )
            plan = res.plan
            digest = res.certificate_digest()
            cert_path = args.certificate or f"{args.out}.cert.json"
            with open(cert_path, "w", encoding="utf-8") as fh:
                fh.write(res.certificate_json() + "\n")
        else:
            plan = build_plan(model, shape, args.kind, zeta=args.zeta, stages=args.stages, ratio=args.ratio)
    except TuningError as exc:
        raise CliError(EXIT_TUNING, "tuning", str(exc)) from None
    except (ValueError, NonTerminationError, PlanInvariantError) as exc:
        raise CliError(EXIT_INVALID, "validation", str(exc)) from None
    save_plan(plan, args.out, digest)
    return EXIT_OK


# ---------------------------------------------------------------- evaluate


def _grid(args) -> List[float]:
    if args.theta:
        return list(args.theta)
    if args.grid:
        try:
            lo, hi, count = args.grid.split(":")
            return [float(t) for t in np.linspace(float(lo), float(hi), int(count))]
        except ValueError:
            raise CliError(EXIT_INVALID, "validation", "--grid must look like LO:HI:COUNT") from None
    raise CliError(EXIT_INVALID, "validation", "give --theta or --grid")


def cmd_evaluate(args) -> int:
    plan = _load(args.plan)
    rows = []
    for theta in _grid(args):
        try:
            if args.method == "exact":
                r = oc_exact(plan, theta, args.epsilon)
                err = r.trunc_error
            else:
                r = oc_simulate(plan, theta, args.reps, args.seed)
                err = max(r.se)
        except ExactUnavailableError as exc:
            raise CliError(EXIT_NO_EXACT, "exact-unavailable", str(exc)) from None
        except ValueError as exc:
            raise CliError(EXIT_INVALID, "validation", str(exc)) from None
        rows.append((theta, r.accept_prob, r.asn, err))
    header = ["theta"] + [f"accept_{i}" for i in range(plan.m)] + ["asn", "err"]
    if args.format == "json":
        text = json.dumps([dict(zip(header, [t, *a, n, e])) for t, a, n, e in rows], indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for t, a, n, e in rows:
            w.writerow([repr(float(v)) for v in (t, *a, n, e)])
        text = buf.getvalue()
    _emit(text, args.out)
    return EXIT_OK


# --------------------------------------------------------------------- run


def _read_data(path: str, two_columns: bool):
    x: List[float] = []
    y: List[float] = []
    try:
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                parts = line.replace(",", " ").split()
                if not parts:
                    continue
                if parts[0] != "-":
                    x.append(float(parts[0]))
                if two_columns and len(parts) > 1:
                    y.append(float(parts[1]))
    except ValueError as exc:
        raise CliError(EXIT_INVALID, "validation", f"bad data file: {exc}") from None
    except OSError as exc:
        raise CliError(EXIT_INVALID, "io", str(exc)) from None
    return x, (y if two_columns else None)


def cmd_run(args) -> int:
    plan = _load(args.plan)
    x, y = _read_data(args.data, plan.model.family is Family.VARIANCE_RATIO)
    try:
        out = run_plan(plan, x, y)
    except InsufficientDataError as exc:
        raise CliError(EXIT_NO_DATA, "insufficient-data", str(exc)) from None
    except ValueError as exc:
        raise CliError(EXIT_INVALID, "validation", str(exc)) from None
    doc = {
        "accepted": out.accepted,
        "stage": out.stage,
        "samples_used": out.samples_used,
        "estimate": out.estimate,
    }
    _emit(json.dumps(doc, sort_keys=True) + "\n", args.out)
    return EXIT_OK


# ----------------------------------------------------------------- plumbing


def _load(path: str):
    try:
        return load_plan(path)
    except PlanFormatError as exc:
        raise CliError(EXIT_INVALID, "plan-format", str(exc)) from None
    except OSError as exc:
        raise CliError(EXIT_INVALID, "io", str(exc)) from None


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"simulation seed (default {DEFAULT_SEED})")
    common.add_argument("--reps", type=int, default=100_000, help="simulation replications")
    common.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON, help="truncation budget of exact evaluations")

    p = _Parser(prog="mstage", description="Multistage tests for multiple composite hypotheses.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("design", parents=[common], help="build or tune a plan")
    d.add_argument("--model", required=True, choices=[f.value for f in Family])
    d.add_argument("--population", type=int)
    d.add_argument("--sigma", type=float)
    d.add_argument("--mu", type=float, help="known mean, reference value or first-sample mean")
    d.add_argument("--mu-y", type=float, help="second-sample known mean (variance ratio)")
    d.add_argument("--means-unknown", action="store_true", help="variance ratio with unknown means")
    d.add_argument("--gamma-shape", type=float)
    d.add_argument(
        "--shape", required=True,
        choices=["one-sided", "two-sided", "triple", "interval", "multiple-simple", "m-hypotheses"],
    )
    d.add_argument("--theta0", type=float)
    d.add_argument("--theta1", type=float)
    d.add_argument("--theta2", type=float)
    d.add_argument("--points", type=_floats, help="comma-separated shape points")
    d.add_argument("--cuts", type=_floats)
    d.add_argument("--lo", type=_floats, help="lower indifference-zone ends")
    d.add_argument("--hi", type=_floats, help="upper indifference-zone ends")
    d.add_argument("--delta", type=_floats, required=True, help="comma-separated risk levels")
    d.add_argument("--kind", choices=[k.value for k in BoundaryKind], default="exact")
    d.add_argument("--stages", type=int)
    d.add_argument("--ratio", type=float, default=0.5)
    g = d.add_mutually_exclusive_group(required=True)
    g.add_argument("--tune", action="store_true", help="search for the largest passing zeta")
    g.add_argument("--zeta", type=float)
    d.add_argument("--out", required=True)
    d.add_argument("--certificate", help="certificate path (default OUT.cert.json)")
    d.set_defaults(func=cmd_design)

    e = sub.add_parser("evaluate", parents=[common], help="tabulate OC and ASN")
    e.add_argument("plan")
    e.add_argument("--theta", type=_floats, help="comma-separated parameter values")
    e.add_argument("--grid", help="LO:HI:COUNT evenly spaced values")
    e.add_argument("--method", choices=["exact", "simulate"], default="exact")
    e.add_argument("--format", choices=["csv", "json"], default="csv")
    e.add_argument("--out")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("run", parents=[common], help="execute a plan on a data file")
    r.add_argument("plan")
    r.add_argument("data", help="one observation per line; two columns for variance ratio")
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "delta", None) is not None and any(not 0 < v < 1 for v in args.delta):
            raise CliError(EXIT_INVALID, "validation", "risk levels must lie in (0, 1)")
        return args.func(args)
    except CliError as exc:
        sys.stderr.write(json.dumps({"error": exc.kind, "message": str(exc), "exit_code": exc.code}) + "\n")
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
