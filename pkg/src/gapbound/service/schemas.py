"""Pydantic request/response models for the HTTP service.

Request documents reuse the instance wire format; shape checking
happens here (unknown keys are rejected) while semantic validation is
delegated to :mod:`gapbound.instances` so both frontends agree.

Non-finite ratios (excluded rows, exact zeros) are transported as
``null`` because the JSON wire has no NaN/inf.
"""

from __future__ import annotations

import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TermDoc(StrictModel):
    c: float
    e: list[int]


class PolynomialDoc(StrictModel):
    n_vars: int
    terms: list[TermDoc]


class BoxDoc(StrictModel):
    lo: list[float]
    hi: list[float]


class FeasibleSetDoc(StrictModel):
    ineqs: list[PolynomialDoc] | None = None
    eqs: list[PolynomialDoc] | None = None
    convex: bool | None = None
    box: BoxDoc | None = None


class InstanceDoc(StrictModel):
    F: list[PolynomialDoc]
    omega: FeasibleSetDoc
    rho: float | None = None

    def as_wire(self) -> dict:
        # exclude_unset keeps the document exactly as the client sent
        # it; gapbound.instances applies the semantic checks.
        return self.model_dump(exclude_unset=True)


class EvalRequest(StrictModel):
    instance: InstanceDoc
    x: list[float]


class EvalResponse(StrictModel):
    psi: float
    argmax: list[list[float]]
    generators: list[list[float]]
    residual: float


class ExponentRequest(StrictModel):
    instance: InstanceDoc


class ExponentResponse(StrictModel):
    n: int
    r: int
    s: int
    d: int
    R_general: str
    R_convex: str
    alpha_general: str
    alpha_convex: str
    convex_applicable: bool
    context: dict[str, str]


class VerifyBoundRequest(StrictModel):
    instance: InstanceDoc
    alpha: str
    points: list[list[float]] | None = None
    box: tuple[list[float], list[float]] | None = None
    count: int = Field(100, ge=1)
    seed: int | None = None
    zero_points: list[list[float]] | None = None
    zeroset_box: tuple[list[float], list[float]] | None = None
    zeroset_count: int = Field(24, ge=1)
    zeroset_seed: int = 0
    psi_threshold: float | None = Field(None, gt=0)
    dedup_tol: float | None = Field(None, gt=0)
    c_floor: float | None = Field(None, gt=0)
    include_rows: bool = False


class VerifyLojaRequest(StrictModel):
    instance: InstanceDoc
    alpha: str
    xbar: list[float]
    epsilon: float = Field(gt=0)
    points: list[list[float]] | None = None
    count: int = Field(100, ge=1)
    seed: int | None = None
    psi_threshold: float | None = Field(None, gt=0)
    c_floor: float | None = Field(None, gt=0)
    include_rows: bool = False


class ReportRowDoc(StrictModel):
    x: list[float]
    psi: float
    dist: float
    residual: float
    log_ratio: float | None
    mfcq_ok: bool


class BoundReportResponse(StrictModel):
    alpha: str
    c_star: float | None
    fitted_alpha: float | None
    fitted_c: float | None
    verdict: str
    warnings: list[str]
    zero_set_empty: bool
    rows: list[ReportRowDoc] | None = None


class SolveRequest(StrictModel):
    instance: InstanceDoc
    x0: list[float]
    method: Literal["extragradient", "gap-descent"] = "extragradient"
    step: float | None = Field(None, gt=0)
    max_iter: int | None = Field(None, ge=1)
    solve_tol: float | None = Field(None, gt=0)
    include_trace: bool = False


class TraceRowDoc(StrictModel):
    k: int
    x: list[float]
    psi: float
    natural_residual: float


class SolveResponse(StrictModel):
    method: str
    status: str
    iterations: int
    solution: list[float] | None
    final_psi: float
    final_natural_residual: float
    trace: list[TraceRowDoc] | None = None


class FitRequest(StrictModel):
    instance: InstanceDoc
    points: list[list[float]] | None = None
    box: tuple[list[float], list[float]] | None = None
    count: int = Field(100, ge=1)
    seed: int | None = None
    zero_points: list[list[float]] | None = None
    zeroset_box: tuple[list[float], list[float]] | None = None
    zeroset_count: int = Field(24, ge=1)
    zeroset_seed: int = 0
    psi_threshold: float | None = Field(None, gt=0)
    dedup_tol: float | None = Field(None, gt=0)


class FitResponse(StrictModel):
    fitted_alpha: float
    fitted_c: float
    points_used: int


class ZerosetRequest(StrictModel):
    instance: InstanceDoc
    box: tuple[list[float], list[float]]
    count: int = Field(24, ge=1)
    seed: int = 0
    psi_threshold: float | None = Field(None, gt=0)
    dedup_tol: float | None = Field(None, gt=0)


class ZerosetResponse(StrictModel):
    points: list[list[float]]
    psi_threshold: float
    empty: bool


class HealthResponse(StrictModel):
    status: str
    version: str


def finite_or_none(v: float) -> float | None:
    return v if math.isfinite(v) else None
