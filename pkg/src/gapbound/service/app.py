"""HTTP facade over the core package.

One POST endpoint per CLI subcommand, same wire vocabulary.  Domain
errors surface as 400 with a machine-readable ``kind``; request-shape
problems are pydantic's usual 422.  Run with e.g.

    uvicorn gapbound.service.app:app
"""

from __future__ import annotations

from fractions import Fraction
from importlib.metadata import PackageNotFoundError, version

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from .. import boundlab
from ..boundlab import (
    SampleCloud,
    ZeroSetEstimate,
    cloud_from_points,
    estimate_zero_set,
    fit_exponent,
    sample_cloud,
    verify_error_bound,
    verify_lojasiewicz,
)
from ..errors import (
    BudgetExhaustedError,
    DegenerateFitError,
    DimensionMismatchError,
    EmptySetError,
    GapboundError,
    InfeasiblePointError,
    InstanceParseError,
    SolverConvergenceError,
    UnsupportedSetError,
)
from ..exponents import alpha_for_instance, resolve_alpha
from ..gap import ViInstance, evaluate_gap
from ..instances import instance_from_json
from ..solver import extragradient, gap_descent
from .schemas import (
    BoundReportResponse,
    EvalRequest,
    EvalResponse,
    ExponentRequest,
    ExponentResponse,
    FitRequest,
    FitResponse,
    HealthResponse,
    InstanceDoc,
    ReportRowDoc,
    SolveRequest,
    SolveResponse,
    TraceRowDoc,
    VerifyBoundRequest,
    VerifyLojaRequest,
    ZerosetRequest,
    ZerosetResponse,
    finite_or_none,
)

_ERROR_KINDS = {
    InstanceParseError: "instance-parse",
    DimensionMismatchError: "dimension-mismatch",
    InfeasiblePointError: "infeasible-point",
    UnsupportedSetError: "unsupported-set",
    EmptySetError: "empty-set",
    BudgetExhaustedError: "budget-exhausted",
    DegenerateFitError: "degenerate-fit",
    SolverConvergenceError: "solver-convergence",
}


def _package_version() -> str:
    try:
        return version("gapbound")
    except PackageNotFoundError:
        return "0"


def _instance(doc: InstanceDoc) -> ViInstance:
    return instance_from_json(doc.as_wire())


def _alpha(text: str, inst: ViInstance) -> Fraction:
    try:
        return resolve_alpha(text, inst)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc))


def _np_box(box, n: int, what: str) -> tuple[np.ndarray, np.ndarray]:
    lo = np.asarray(box[0], dtype=float)
    hi = np.asarray(box[1], dtype=float)
    if lo.shape != (n,) or hi.shape != (n,):
        raise HTTPException(
            status_code=400,
            detail=f"{what} corners must have length {n}")
    if np.any(lo > hi):
        raise HTTPException(
            status_code=400, detail=f"{what} has lo > hi in some coordinate")
    return lo, hi


def _points(raw: list[list[float]]) -> list[np.ndarray]:
    return [np.asarray(p, dtype=float) for p in raw]


def _cloud(inst: ViInstance, points, box, count: int, seed,
           what: str = "cloud") -> SampleCloud:
    if points is not None:
        return cloud_from_points(inst, _points(points))
    if box is None:
        raise HTTPException(
            status_code=400,
            detail=f"need either points or box to define the {what}")
    if seed is None:
        raise HTTPException(
            status_code=400, detail="seed is mandatory when sampling")
    return sample_cloud(inst, _np_box(box, inst.n, "box"), count, seed)


def _zero_set(inst: ViInstance, req, threshold: float) -> ZeroSetEstimate:
    if req.zero_points is not None:
        return ZeroSetEstimate(tuple(_points(req.zero_points)), threshold)
    if req.zeroset_box is None:
        raise HTTPException(
            status_code=400,
            detail="need either zero_points or zeroset_box to define "
                   "the zero set")
    return estimate_zero_set(
        inst, _np_box(req.zeroset_box, inst.n, "zeroset_box"),
        count=req.zeroset_count, seed=req.zeroset_seed,
        psi_threshold=threshold,
        dedup_tol=req.dedup_tol if req.dedup_tol is not None
        else boundlab.DEDUP_TOL)


def _report_response(report, include_rows: bool) -> BoundReportResponse:
    rows = None
    if include_rows:
        rows = [ReportRowDoc(
            x=[float(v) for v in r.x],
            psi=r.psi, dist=r.dist, residual=r.residual,
            log_ratio=finite_or_none(r.log_ratio),
            mfcq_ok=r.mfcq_ok) for r in report.rows]
    return BoundReportResponse(
        alpha=str(report.alpha_used),
        c_star=finite_or_none(report.c_star),
        fitted_alpha=None if report.fitted_alpha is None
        else finite_or_none(report.fitted_alpha),
        fitted_c=None if report.fitted_c is None
        else finite_or_none(report.fitted_c),
        verdict=report.verdict,
        warnings=list(report.warnings),
        zero_set_empty=report.zero_set_empty,
        rows=rows)


def create_app() -> FastAPI:
    app = FastAPI(title="gapbound", version=_package_version())

    @app.exception_handler(GapboundError)
    async def _domain_error(request: Request, exc: GapboundError):
        payload: dict[str, object] = {
            "detail": str(exc),
            "kind": _ERROR_KINDS.get(type(exc), "domain-error"),
        }
        if isinstance(exc, InstanceParseError):
            payload["line"] = exc.line
            payload["column"] = exc.column
        return JSONResponse(status_code=400, content=payload)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=_package_version())

    @app.post("/eval", response_model=EvalResponse)
    def eval_gap(req: EvalRequest) -> EvalResponse:
        inst = _instance(req.instance)
        ev = evaluate_gap(inst, np.asarray(req.x, dtype=float))
        return EvalResponse(
            psi=ev.psi,
            argmax=[[float(v) for v in p] for p in ev.argmax_points],
            generators=[[float(v) for v in g] for g in ev.clarke_generators],
            residual=ev.residual)

    @app.post("/exponent", response_model=ExponentResponse)
    def exponent(req: ExponentRequest) -> ExponentResponse:
        cert = alpha_for_instance(_instance(req.instance))
        return ExponentResponse(**cert.to_wire())

    @app.post("/verify-bound", response_model=BoundReportResponse,
              response_model_exclude_none=False)
    def verify_bound(req: VerifyBoundRequest) -> BoundReportResponse:
        inst = _instance(req.instance)
        alpha = _alpha(req.alpha, inst)
        threshold = req.psi_threshold if req.psi_threshold is not None \
            else boundlab.PSI_THRESHOLD
        cloud = _cloud(inst, req.points, req.box, req.count, req.seed)
        zero_set = _zero_set(inst, req, threshold)
        kwargs = {"psi_threshold": threshold}
        if req.c_floor is not None:
            kwargs["c_floor"] = req.c_floor
        report = verify_error_bound(inst, cloud, zero_set, alpha, **kwargs)
        return _report_response(report, req.include_rows)

    @app.post("/verify-loja", response_model=BoundReportResponse)
    def verify_loja(req: VerifyLojaRequest) -> BoundReportResponse:
        inst = _instance(req.instance)
        alpha = _alpha(req.alpha, inst)
        xbar = np.asarray(req.xbar, dtype=float)
        if req.points is not None:
            cloud = cloud_from_points(inst, _points(req.points))
        else:
            if req.seed is None:
                raise HTTPException(
                    status_code=400, detail="seed is mandatory when sampling")
            half = req.epsilon / np.sqrt(inst.n)
            cloud = sample_cloud(inst, (xbar - half, xbar + half),
                                 req.count, req.seed)
        kwargs = {}
        if req.psi_threshold is not None:
            kwargs["psi_threshold"] = req.psi_threshold
        if req.c_floor is not None:
            kwargs["c_floor"] = req.c_floor
        try:
            report = verify_lojasiewicz(
                inst, xbar, req.epsilon, cloud, alpha, **kwargs)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return _report_response(report, req.include_rows)

    @app.post("/solve", response_model=SolveResponse)
    def solve(req: SolveRequest) -> SolveResponse:
        inst = _instance(req.instance)
        x0 = np.asarray(req.x0, dtype=float)
        common = {}
        if req.max_iter is not None:
            common["max_iter"] = req.max_iter
        if req.solve_tol is not None:
            common["solve_tol"] = req.solve_tol
        if req.method == "extragradient":
            trace = extragradient(inst, x0, step=req.step, **common)
        else:
            if req.step is not None:
                common["step0"] = req.step
            trace = gap_descent(inst, x0, **common)
        rows = None
        if req.include_trace:
            rows = [TraceRowDoc(
                k=rec.k, x=[float(v) for v in rec.x],
                psi=rec.psi, natural_residual=rec.natural_residual)
                for rec in trace.iterates]
        return SolveResponse(
            method=req.method,
            status=trace.terminal_status,
            iterations=trace.n_iterations,
            solution=None if trace.solution is None
            else [float(v) for v in trace.solution],
            final_psi=trace.final.psi,
            final_natural_residual=trace.final.natural_residual,
            trace=rows)

    @app.post("/fit", response_model=FitResponse)
    def fit(req: FitRequest) -> FitResponse:
        inst = _instance(req.instance)
        threshold = req.psi_threshold if req.psi_threshold is not None \
            else boundlab.PSI_THRESHOLD
        cloud = _cloud(inst, req.points, req.box, req.count, req.seed)
        zero_set = _zero_set(inst, req, threshold)
        report = verify_error_bound(
            inst, cloud, zero_set,
            alpha=Fraction(1, 2),  # fit ignores the check exponent
            psi_threshold=threshold)
        fitted_alpha, fitted_c = fit_exponent(
            report.rows, psi_threshold=threshold)
        return FitResponse(fitted_alpha=fitted_alpha, fitted_c=fitted_c,
                           points_used=len(report.rows))

    @app.post("/zeroset", response_model=ZerosetResponse)
    def zeroset(req: ZerosetRequest) -> ZerosetResponse:
        inst = _instance(req.instance)
        est = estimate_zero_set(
            inst, _np_box(req.box, inst.n, "box"),
            count=req.count, seed=req.seed,
            psi_threshold=req.psi_threshold if req.psi_threshold is not None
            else boundlab.PSI_THRESHOLD,
            dedup_tol=req.dedup_tol if req.dedup_tol is not None
            else boundlab.DEDUP_TOL)
        return ZerosetResponse(
            points=[[float(v) for v in p] for p in est.points],
            psi_threshold=est.psi_threshold,
            empty=est.is_empty)

    return app


app = create_app()
