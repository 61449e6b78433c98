"""Command-line front end: ``nonlocal-ivp check|solve|study CONFIG``.

Exit codes: 0 success, 1 hypothesis failure, 2 numerical failure,
3 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings

import numpy as np

from .config import build_problem, load_config
from .core import SeminormConfig, evaluate_seminorms
from .errors import (BandViolation, ConfigError, DslNameError, DslSyntaxError, EvaluationError,
                     HypothesisViolation, NonConvergenceError)
from .hypotheses import check_hypotheses, compute_constants, validate_envelope_by_sampling
from .operator import PicardSettings, solve_picard
from .shooting import solve_shooting
from .truncation import convergence_study

__all__ = ["main", "build_parser", "trajectory_csv", "EXIT_OK", "EXIT_HYPOTHESIS", "EXIT_NUMERICAL",
           "EXIT_CONFIG"]

EXIT_OK, EXIT_HYPOTHESIS, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2, 3

DEFAULT_MAX_ITER = {"picard": 1000, "shoot": 50}


def _fmt(v):
    return format(float(v), ".17g")


def _json_value(v):
    if isinstance(v, dict):
        return {k: _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_json_value(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v) if np.isfinite(v) else None
    return v


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_json_value(payload), fh, indent=2)
        fh.write("\n")


def trajectory_csv(trajectory):
    """CSV text: header ``t,x_1,...,x_N`` and one row per grid node, 17 significant digits."""
    N = trajectory.values.shape[1]
    lines = [",".join(["t"] + [f"x_{i}" for i in range(1, N + 1)])]
    for t, row in zip(trajectory.grid.nodes, trajectory.values):
        lines.append(",".join([_fmt(t)] + [_fmt(v) for v in row]))
    return "\n".join(lines) + "\n"


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _opt(v, spec=".6g"):
    return "-" if v is None or (isinstance(v, float) and not np.isfinite(v)) else format(v, spec)


def cmd_check(args):
    spec = build_problem(load_config(args.config), P=args.p_max)
    report = check_hypotheses(spec)
    header = ("p", "n_p", "t_p", "G_p", "|A_p|", "C_p", "theta_p", "M_p", "K_p", "rho_p", "lhs", "pass")
    print(" ".join(f"{h:>12}" for h in header))
    for r in report.records:
        cells = (str(r.p), str(r.n_p), _opt(r.t_p), _opt(r.G_p), _opt(r.normA_p), _opt(r.C_p),
                 _opt(r.theta_p), _opt(r.M_p), _opt(r.K_p), _opt(r.rho_p), _opt(r.lhs, ".10g"),
                 "yes" if r.passed else "NO")
        print(" ".join(f"{c:>12}" for c in cells))
        if r.error:
            print(f"  p={r.p}: {r.error}")
    if report.violation:
        print(f"hypothesis violated: {report.violation}", file=sys.stderr)
    payload = report.to_dict()
    if args.samples > 0 and report.hyp_2_5_pass:
        sampling = validate_envelope_by_sampling(spec, samples=args.samples, seed=args.seed)
        print(f"envelope sampling: {sampling.checked} checks, {sampling.n_violations} violations (seed {args.seed})")
        payload["sampling"] = sampling.to_dict()
    if args.json:
        _write_json(args.json, payload)
    if not report.overall:
        if report.hyp_2_5_pass:
            print("hypothesis check failed: the growth inequality does not hold for every p", file=sys.stderr)
        return EXIT_HYPOTHESIS
    return EXIT_OK


def _seminorm_rows(spec, result):
    cfg = spec.seminorm_config
    x = result.trajectory
    rows = []
    for p, n_p in enumerate(cfg.n_seq, start=1):
        if n_p > spec.N:
            continue
        one = SeminormConfig((n_p,), (cfg.t_seq[p - 1],), (cfg.theta[p - 1],))
        vals = evaluate_seminorms(x, one, spec.t0)[0]
        rho = None
        if spec.envelopes is not None:
            try:
                rho = compute_constants(spec, p)[2]
            except (HypothesisViolation, ConfigError, EvaluationError, AssertionError):
                rho = None
        rows.append({"p": p, "P": vals.P, "Q": vals.Q, "R": vals.R, "rho": rho})
    return rows


def _solve(spec, method, tol, max_iter):
    if method == "picard":
        return solve_picard(spec, PicardSettings(tol=tol, max_iter=max_iter))
    return solve_shooting(spec, tol=tol, max_iter=max_iter)


def cmd_solve(args):
    spec = build_problem(load_config(args.config))
    max_iter = args.max_iter if args.max_iter is not None else DEFAULT_MAX_ITER[args.method]
    result = _solve(spec, args.method, args.tol, max_iter)
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    report = {
        "method": result.method,
        "iterations": result.iterations,
        "final_residual": result.final_residual,
        "nonlocal_residuals": list(result.nonlocal_residuals),
        "seminorms": _seminorm_rows(spec, result),
    }
    print(f"{result.method}: converged in {result.iterations} iterations, "
          f"residual {result.final_residual:.3e}, max nonlocal residual "
          f"{float(np.max(result.nonlocal_residuals)):.3e}")
    if args.out:
        _write_text(args.out, trajectory_csv(result.trajectory))
    if args.report:
        _write_json(args.report, report)
    return EXIT_OK


def cmd_study(args):
    spec = build_problem(load_config(args.config))
    if spec.rhs.generator is None:
        raise ConfigError("a truncation study needs an index generator in the rhs", "problem.rhs.source")
    try:
        levels = [int(s) for s in args.truncations.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"--truncations must be comma-separated integers, got {args.truncations!r}",
                          "truncations") from None
    if not levels:
        raise ConfigError("--truncations is empty", "truncations")
    max_iter = args.max_iter if args.max_iter is not None else DEFAULT_MAX_ITER[args.method]
    table = convergence_study(spec, levels, solver=args.method, tol=args.tol, max_iter=max_iter)
    print(f"{'N':>6} {'d(N)':>24} {'iterations':>10}  status")
    for r in table.rows:
        d = "" if r.d is None else _fmt(r.d)
        it = "" if r.iterations is None else str(r.iterations)
        print(f"{r.N:>6} {d:>24} {it:>10}  {r.status}" + ("  (d increased)" if r.non_monotone else ""))
        if r.message:
            print(f"        {r.message}", file=sys.stderr)
    if args.out:
        _write_text(args.out, table.to_csv())
    if table.all_converged:
        return EXIT_OK
    if any(r.status == "hypothesis-violation" for r in table.rows):
        return EXIT_HYPOTHESIS
    return EXIT_NUMERICAL


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 3), not argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="nonlocal-ivp",
                                     description="Nonlocal initial value problems for countable ODE systems.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    check = sub.add_parser("check", help="evaluate the existence-theorem hypotheses")
    check.add_argument("config")
    check.add_argument("--p-max", type=int, default=None, help="number of seminorm indices to check")
    check.add_argument("--json", metavar="OUT", help="write the report as JSON")
    check.add_argument("--seed", type=int, default=42, help="RNG seed for envelope sampling")
    check.add_argument("--samples", type=int, default=1000,
                       help="random envelope probes per p (0 disables)")
    check.set_defaults(run=cmd_check)

    solve = sub.add_parser("solve", help="solve the truncated problem")
    solve.add_argument("config")
    solve.add_argument("--method", choices=("picard", "shoot"), default="picard")
    solve.add_argument("--tol", type=float, default=1e-12)
    solve.add_argument("--max-iter", type=int, default=None)
    solve.add_argument("--out", metavar="CSV", help="trajectory CSV")
    solve.add_argument("--report", metavar="JSON", help="diagnostics JSON")
    solve.set_defaults(run=cmd_solve)

    study = sub.add_parser("study", help="compare solutions across truncation levels")
    study.add_argument("config")
    study.add_argument("--truncations", default="4,8,16,32")
    study.add_argument("--method", choices=("picard", "shoot"), default="picard")
    study.add_argument("--tol", type=float, default=1e-12)
    study.add_argument("--max-iter", type=int, default=None)
    study.add_argument("--out", metavar="CSV", help="study CSV")
    study.set_defaults(run=cmd_study)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "p_max", None) is not None and args.p_max < 1:
        print("error [--p-max]: must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.run(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BandViolation, DslSyntaxError, DslNameError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HypothesisViolation as exc:
        print(f"hypothesis violated: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except EvaluationError as exc:
        print(f"evaluation error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except NonConvergenceError as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
