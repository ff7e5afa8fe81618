"""Command-line entry point.

One binary, subcommand style:

    gapbound eval         --instance FILE --x 1,1
    gapbound exponent     --instance FILE
    gapbound verify-bound --instance FILE [cloud] [zero set] --alpha A
    gapbound verify-loja  --instance FILE --xbar P --epsilon E [cloud] --alpha A
    gapbound solve        --instance FILE --x0 P [--method M]
    gapbound fit          --instance FILE [cloud] [zero set]
    gapbound zeroset      --instance FILE --box LO HI --seed S

Clouds come either from deterministic sampling (--box/--count/--seed;
the seed is mandatory whenever sampling happens) or from an explicit
--points-file.  Every numeric parameter can also live in a JSON config
file (--config); explicit flags win over file values, unknown config
keys are rejected.

Exit codes: 0 done (verdicts are data, not errors), 2 parse/usage,
3 precondition violated, 4 inconclusive verdict, 5 sampling budget
exhausted.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, fields
from fractions import Fraction

import numpy as np

from . import boundlab
from .boundlab import (
    cloud_from_points,
    estimate_zero_set,
    fit_exponent,
    sample_cloud,
    verify_error_bound,
    verify_lojasiewicz,
    BoundRow,
    SampleCloud,
    ZeroSetEstimate,
)
from .errors import (
    BudgetExhaustedError,
    GapboundError,
    InstanceParseError,
)
from .exponents import alpha_for_instance, resolve_alpha
from .gap import ViInstance, evaluate_gap
from .instances import load_instance, write_atomic
from .solver import SOLVE_TOL, SolverTrace, extragradient, gap_descent

__all__ = ["main", "ExperimentConfig"]

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_PRECONDITION = 3
EXIT_INCONCLUSIVE = 4
EXIT_BUDGET = 5


class CliError(Exception):
    """Invalid usage detected after argparse (bad config, bad values)."""

    def __init__(self, message: str, code: int = EXIT_PARSE):
        super().__init__(message)
        self.code = code


@dataclass
class ExperimentConfig:
    """Merged view of command-line flags and the optional config file.

    Field names double as the config file's allowed keys; an unknown key
    in the file is an error, as is a nonpositive tolerance.  ``seed`` is
    mandatory for any command that actually samples.
    """

    instance: str | None = None
    x: str | None = None
    x0: str | None = None
    xbar: str | None = None
    box: list | None = None
    count: int | None = None
    seed: int | None = None
    points_file: str | None = None
    zeroset_box: list | None = None
    zeroset_count: int | None = None
    zeroset_seed: int | None = None
    zeroset_points: str | None = None
    alpha: str | None = None
    rho: float | None = None
    epsilon: float | None = None
    method: str | None = None
    step: float | None = None
    max_iter: int | None = None
    solve_tol: float | None = None
    psi_threshold: float | None = None
    dedup_tol: float | None = None
    c_floor: float | None = None
    out_csv: str | None = None
    out_json: str | None = None

    _TOLERANCES = ("epsilon", "step", "solve_tol", "psi_threshold",
                   "dedup_tol", "c_floor", "rho")

    @classmethod
    def merge(cls, args: argparse.Namespace) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        values: dict = {}
        config_path = getattr(args, "config", None)
        if config_path:
            try:
                with open(config_path, "r", encoding="utf-8") as fh:
                    raw = json.load(fh)
            except OSError as exc:
                raise CliError(f"cannot read config {config_path}: {exc.strerror}")
            except json.JSONDecodeError as exc:
                raise CliError(
                    f"config {config_path}: {exc.msg} "
                    f"(line {exc.lineno}, column {exc.colno})")
            if not isinstance(raw, dict):
                raise CliError(f"config {config_path}: expected a JSON object")
            unknown = set(raw) - known
            if unknown:
                raise CliError(
                    f"config {config_path}: unknown keys {sorted(unknown)}")
            values.update(raw)
        for name in known:
            flag_value = getattr(args, name, None)
            if flag_value is not None:  # flags win over the file
                values[name] = flag_value
        cfg = cls(**values)
        cfg._validate()
        return cfg

    def _validate(self) -> None:
        for name in self._TOLERANCES:
            value = getattr(self, name)
            if value is not None:
                if not isinstance(value, (int, float)) or isinstance(value, bool):
                    raise CliError(f"--{name.replace('_', '-')} must be a number")
                if value <= 0:
                    raise CliError(
                        f"--{name.replace('_', '-')} must be strictly positive, "
                        f"got {value}")
        for name in ("count", "seed", "zeroset_count", "zeroset_seed", "max_iter"):
            value = getattr(self, name)
            if value is not None and (isinstance(value, bool)
                                      or not isinstance(value, int)):
                raise CliError(f"--{name.replace('_', '-')} must be an integer")
        if self.count is not None and self.count < 1:
            raise CliError("--count must be >= 1")


def _parse_vector(text: str, what: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError:
        raise CliError(f"{what}: expected comma-separated reals, got {text!r}")


def _parse_box(pair, n: int, what: str) -> tuple[np.ndarray, np.ndarray]:
    lo = _parse_vector(pair[0], f"{what} low corner")
    hi = _parse_vector(pair[1], f"{what} high corner")
    if lo.size != n or hi.size != n:
        raise CliError(f"{what}: expected {n}-dimensional corners")
    if np.any(lo > hi):
        raise CliError(f"{what}: low corner exceeds high corner")
    return lo, hi


def _parse_alpha(text: str, inst: ViInstance) -> Fraction:
    # UnsupportedSetError (convex alpha on a non-convex-declared set)
    # propagates to main() and exits 3 like other preconditions.
    try:
        return resolve_alpha(text, inst)
    except ValueError as exc:
        raise CliError(f"--alpha: {exc}")


def _load_points_file(path: str) -> list[np.ndarray]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read points file {path}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise CliError(f"points file {path}: {exc.msg} "
                       f"(line {exc.lineno}, column {exc.colno})")
    if isinstance(raw, dict) and "points" in raw:
        raw = raw["points"]
    if not isinstance(raw, list) or not raw:
        raise CliError(f"points file {path}: expected a nonempty array of points")
    try:
        return [np.array([float(v) for v in p], dtype=float) for p in raw]
    except (TypeError, ValueError):
        raise CliError(f"points file {path}: points must be arrays of reals")


def _instance(cfg: ExperimentConfig) -> ViInstance:
    if not cfg.instance:
        raise CliError("--instance is required")
    inst = load_instance(cfg.instance)
    if cfg.rho is not None:
        inst = ViInstance(inst.F, inst.omega, float(cfg.rho))
    return inst


def _cloud(cfg: ExperimentConfig, inst: ViInstance) -> SampleCloud:
    if cfg.points_file:
        return cloud_from_points(inst, _load_points_file(cfg.points_file))
    if cfg.box is None:
        raise CliError("need either --points-file or --box to define the cloud")
    if cfg.seed is None:
        raise CliError("--seed is mandatory when sampling a cloud")
    box = _parse_box(cfg.box, inst.n, "--box")
    return sample_cloud(inst, box, cfg.count if cfg.count is not None else 100,
                        cfg.seed)


def _loja_cloud(cfg: ExperimentConfig, inst: ViInstance,
                xbar: np.ndarray, epsilon: float) -> SampleCloud:
    if cfg.points_file:
        return cloud_from_points(inst, _load_points_file(cfg.points_file))
    if cfg.seed is None:
        raise CliError("--seed is mandatory when sampling a cloud")
    # inscribed box: corners of xbar +- eps/sqrt(n) stay inside the ball
    half = epsilon / np.sqrt(inst.n)
    box = (xbar - half, xbar + half)
    return sample_cloud(inst, box, cfg.count if cfg.count is not None else 100,
                        cfg.seed)


def _zero_set(cfg: ExperimentConfig, inst: ViInstance) -> ZeroSetEstimate:
    threshold = cfg.psi_threshold if cfg.psi_threshold is not None \
        else boundlab.PSI_THRESHOLD
    if cfg.zeroset_points:
        pts = _load_points_file(cfg.zeroset_points)
        return ZeroSetEstimate(tuple(pts), threshold)
    if cfg.zeroset_box is None:
        raise CliError("need either --zeroset-points or --zeroset-box "
                       "to define the zero set")
    box = _parse_box(cfg.zeroset_box, inst.n, "--zeroset-box")
    return estimate_zero_set(
        inst, box,
        count=cfg.zeroset_count if cfg.zeroset_count is not None else 24,
        seed=cfg.zeroset_seed if cfg.zeroset_seed is not None else 0,
        psi_threshold=threshold,
        dedup_tol=cfg.dedup_tol if cfg.dedup_tol is not None
        else boundlab.DEDUP_TOL)


def _echo(obj: dict) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _report_csv(rows: tuple[BoundRow, ...], n: int) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"x{i}" for i in range(n)]
                    + ["psi", "dist", "residual", "log_ratio"])
    for r in rows:
        writer.writerow([float(v) for v in r.x]
                        + [float(r.psi), float(r.dist), float(r.residual),
                           float(r.log_ratio)])
    return buf.getvalue()


def _trace_csv(trace: SolverTrace, n: int) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["k"] + [f"x{i}" for i in range(n)]
                    + ["psi", "natural_residual"])
    for rec in trace.iterates:
        writer.writerow([rec.k] + [float(v) for v in rec.x]
                        + [float(rec.psi), float(rec.natural_residual)])
    return buf.getvalue()


def _emit_report(report, inst: ViInstance, cfg: ExperimentConfig) -> int:
    summary = report.summary()
    summary["warnings"] = list(report.warnings)
    if cfg.out_csv:
        write_atomic(cfg.out_csv, _report_csv(report.rows, inst.n))
    if cfg.out_json:
        write_atomic(cfg.out_json, json.dumps(summary, indent=2) + "\n")
    _echo(summary)
    return EXIT_INCONCLUSIVE if report.verdict == "inconclusive" else EXIT_OK


def cmd_eval(cfg: ExperimentConfig) -> int:
    inst = _instance(cfg)
    if not cfg.x:
        raise CliError("--x is required")
    x = _parse_vector(cfg.x, "--x")
    ev = evaluate_gap(inst, x)
    _echo({
        "psi": ev.psi,
        "argmax": [[float(v) for v in p] for p in ev.argmax_points],
        "generators": [[float(v) for v in g] for g in ev.clarke_generators],
        "residual": ev.residual,
    })
    return EXIT_OK


def cmd_exponent(cfg: ExperimentConfig) -> int:
    inst = _instance(cfg)
    cert = alpha_for_instance(inst)
    _echo(cert.to_wire())
    return EXIT_OK


def cmd_verify_bound(cfg: ExperimentConfig) -> int:
    inst = _instance(cfg)
    if not cfg.alpha:
        raise CliError("--alpha is required")
    alpha = _parse_alpha(cfg.alpha, inst)
    cloud = _cloud(cfg, inst)
    zero_set = _zero_set(cfg, inst)
    kwargs = {}
    if cfg.c_floor is not None:
        kwargs["c_floor"] = cfg.c_floor
    if cfg.psi_threshold is not None:
        kwargs["psi_threshold"] = cfg.psi_threshold
    report = verify_error_bound(inst, cloud, zero_set, alpha, **kwargs)
    return _emit_report(report, inst, cfg)


def cmd_verify_loja(cfg: ExperimentConfig) -> int:
    inst = _instance(cfg)
    if not cfg.alpha:
        raise CliError("--alpha is required")
    if not cfg.xbar:
        raise CliError("--xbar is required")
    if cfg.epsilon is None:
        raise CliError("--epsilon is required")
    alpha = _parse_alpha(cfg.alpha, inst)
    xbar = _parse_vector(cfg.xbar, "--xbar")
    cloud = _loja_cloud(cfg, inst, xbar, float(cfg.epsilon))
    kwargs = {}
    if cfg.c_floor is not None:
        kwargs["c_floor"] = cfg.c_floor
    if cfg.psi_threshold is not None:
        kwargs["psi_threshold"] = cfg.psi_threshold
    report = verify_lojasiewicz(inst, xbar, float(cfg.epsilon), cloud, alpha,
                                **kwargs)
    return _emit_report(report, inst, cfg)


def cmd_solve(cfg: ExperimentConfig) -> int:
    inst = _instance(cfg)
    if not cfg.x0:
        raise CliError("--x0 is required")
    x0 = _parse_vector(cfg.x0, "--x0")
    method = cfg.method or "extragradient"
    common = {}
    if cfg.max_iter is not None:
        common["max_iter"] = cfg.max_iter
    if cfg.solve_tol is not None:
        common["solve_tol"] = cfg.solve_tol
    if method == "extragradient":
        trace = extragradient(inst, x0, step=cfg.step, **common)
    elif method == "gap-descent":
        if cfg.step is not None:
            common["step0"] = cfg.step
        trace = gap_descent(inst, x0, **common)
    else:
        raise CliError(f"--method must be extragradient or gap-descent, "
                       f"got {method!r}")
    if cfg.out_csv:
        write_atomic(cfg.out_csv, _trace_csv(trace, inst.n))
    summary = {
        "method": method,
        "status": trace.terminal_status,
        "iterations": trace.n_iterations,
        "solution": None if trace.solution is None
        else [float(v) for v in trace.solution],
        "final_psi": trace.final.psi,
        "final_natural_residual": trace.final.natural_residual,
    }
    if cfg.out_json:
        write_atomic(cfg.out_json, json.dumps(summary, indent=2) + "\n")
    _echo(summary)
    return EXIT_OK


def cmd_fit(cfg: ExperimentConfig) -> int:
    inst = _instance(cfg)
    cloud = _cloud(cfg, inst)
    zero_set = _zero_set(cfg, inst)
    report = verify_error_bound(
        inst, cloud, zero_set,
        alpha=Fraction(1, 2),  # fit ignores the check exponent
        psi_threshold=cfg.psi_threshold if cfg.psi_threshold is not None
        else boundlab.PSI_THRESHOLD)
    fitted_alpha, fitted_c = fit_exponent(
        report.rows,
        psi_threshold=cfg.psi_threshold if cfg.psi_threshold is not None
        else boundlab.PSI_THRESHOLD)
    summary = {"fitted_alpha": fitted_alpha, "fitted_c": fitted_c,
               "points_used": len(report.rows)}
    if cfg.out_json:
        write_atomic(cfg.out_json, json.dumps(summary, indent=2) + "\n")
    if cfg.out_csv:
        write_atomic(cfg.out_csv, _report_csv(report.rows, inst.n))
    _echo(summary)
    return EXIT_OK


def cmd_zeroset(cfg: ExperimentConfig) -> int:
    inst = _instance(cfg)
    if cfg.box is None:
        raise CliError("--box is required")
    if cfg.seed is None:
        raise CliError("--seed is mandatory when sampling starts")
    box = _parse_box(cfg.box, inst.n, "--box")
    est = estimate_zero_set(
        inst, box,
        count=cfg.count if cfg.count is not None else 24,
        seed=cfg.seed,
        psi_threshold=cfg.psi_threshold if cfg.psi_threshold is not None
        else boundlab.PSI_THRESHOLD,
        dedup_tol=cfg.dedup_tol if cfg.dedup_tol is not None
        else boundlab.DEDUP_TOL)
    summary = {
        "points": [[float(v) for v in p] for p in est.points],
        "psi_threshold": est.psi_threshold,
        "empty": est.is_empty,
    }
    if cfg.out_json:
        write_atomic(cfg.out_json, json.dumps(summary, indent=2) + "\n")
    _echo(summary)
    return EXIT_OK


_COMMANDS = {
    "eval": cmd_eval,
    "exponent": cmd_exponent,
    "verify-bound": cmd_verify_bound,
    "verify-loja": cmd_verify_loja,
    "solve": cmd_solve,
    "fit": cmd_fit,
    "zeroset": cmd_zeroset,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gapbound",
        description="Gap-function evaluation, error-bound verification, "
                    "and VI solving for polynomial instances.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--instance", help="instance JSON file")
        p.add_argument("--config", help="JSON config file (flags win)")
        p.add_argument("--rho", type=float, help="override the instance's rho")
        return p

    p = add("eval", "evaluate the gap, argmax, generators, residual at a point")
    p.add_argument("--x", help="evaluation point, comma-separated")

    add("exponent", "print the exact exponent certificate")

    for name in ("verify-bound", "fit"):
        p = add(name, "check the distance bound on a cloud" if name == "verify-bound"
                else "fit an empirical exponent on a cloud")
        p.add_argument("--box", nargs=2, metavar=("LO", "HI"),
                       help="sampling box corners, comma-separated")
        p.add_argument("--count", type=int, help="cloud size (default 100)")
        p.add_argument("--seed", type=int, help="sampling seed (mandatory)")
        p.add_argument("--points-file", help="explicit cloud (JSON array)")
        p.add_argument("--zeroset-box", nargs=2, metavar=("LO", "HI"),
                       help="box for zero-set estimation")
        p.add_argument("--zeroset-count", type=int, help="multistart count")
        p.add_argument("--zeroset-seed", type=int, help="multistart seed")
        p.add_argument("--zeroset-points", help="explicit zero set (JSON)")
        p.add_argument("--psi-threshold", type=float)
        p.add_argument("--dedup-tol", type=float)
        p.add_argument("--out-csv", help="per-point table output path")
        p.add_argument("--out-json", help="summary output path")
        if name == "verify-bound":
            p.add_argument("--alpha", help="exponent: rational, decimal, "
                           "'general', or 'convex'")
            p.add_argument("--c-floor", type=float)

    p = add("verify-loja", "check the gradient-side bound near a point")
    p.add_argument("--xbar", help="center point, comma-separated")
    p.add_argument("--epsilon", type=float, help="ball radius")
    p.add_argument("--alpha", help="exponent: rational, decimal, "
                   "'general', or 'convex'")
    p.add_argument("--count", type=int, help="cloud size (default 100)")
    p.add_argument("--seed", type=int, help="sampling seed (mandatory)")
    p.add_argument("--points-file", help="explicit cloud (JSON array)")
    p.add_argument("--psi-threshold", type=float)
    p.add_argument("--c-floor", type=float)
    p.add_argument("--out-csv", help="per-point table output path")
    p.add_argument("--out-json", help="summary output path")

    p = add("solve", "run a solver and record the trace")
    p.add_argument("--x0", help="start point, comma-separated")
    p.add_argument("--method", choices=["extragradient", "gap-descent"])
    p.add_argument("--step", type=float, help="step size (default: estimated)")
    p.add_argument("--max-iter", type=int)
    p.add_argument("--solve-tol", type=float)
    p.add_argument("--out-csv", help="trace output path")
    p.add_argument("--out-json", help="summary output path")

    p = add("zeroset", "estimate the zero set inside a box")
    p.add_argument("--box", nargs=2, metavar=("LO", "HI"))
    p.add_argument("--count", type=int, help="multistart count (default 24)")
    p.add_argument("--seed", type=int, help="sampling seed (mandatory)")
    p.add_argument("--psi-threshold", type=float)
    p.add_argument("--dedup-tol", type=float)
    p.add_argument("--out-json", help="estimate output path")

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code not in (0, None) else 0
    try:
        cfg = ExperimentConfig.merge(args)
        return _COMMANDS[args.command](cfg)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except InstanceParseError as exc:
        where = ""
        if exc.line is not None:
            where = f" (line {exc.line}" + (
                f", column {exc.column})" if exc.column is not None else ")")
        print(f"parse error: {exc}{where}", file=sys.stderr)
        return EXIT_PARSE
    except BudgetExhaustedError as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except GapboundError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
