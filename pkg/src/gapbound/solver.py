"""Desk-scale VI solvers that expose convergence traces.

Two iterations are provided: a fixed-step extragradient loop and
projected gradient descent on the regularized gap.  Both record the gap
value and the natural residual ``||x - proj(x - F(x))||`` at every
iterate so a run can be correlated against an error-bound prediction
afterwards (``correlate_rate``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import InfeasiblePointError, UnsupportedSetError
from .exponents import pow_alpha
from .gap import ViInstance, clarke_generators, regularized_gap

__all__ = [
    "SOLVE_TOL",
    "IterateRecord",
    "SolverTrace",
    "RateRow",
    "RateTable",
    "natural_residual",
    "default_extragradient_step",
    "extragradient",
    "gap_descent",
    "correlate_rate",
]

SOLVE_TOL = 1e-10
DIVERGENCE_NORM = 1e8
ARMIJO_C1 = 1e-4
ARMIJO_MAX_HALVINGS = 60
STEP_ESTIMATE_SAMPLES = 16

CONVERGED = "converged"
MAX_ITER = "max-iter"
DIVERGED = "diverged"
STALLED = "stalled"


@dataclass(frozen=True)
class IterateRecord:
    k: int
    x: np.ndarray
    psi: float
    natural_residual: float
    step: float | None = None  # step accepted to reach this iterate


@dataclass(frozen=True)
class SolverTrace:
    iterates: tuple[IterateRecord, ...]
    terminal_status: str
    solution: np.ndarray | None

    @property
    def final(self) -> IterateRecord:
        return self.iterates[-1]

    @property
    def n_iterations(self) -> int:
        return self.iterates[-1].k if self.iterates else 0


def natural_residual(inst: ViInstance, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(x - inst.omega.project(x - inst.F.eval(x))))


def default_extragradient_step(inst: ViInstance, x0: Sequence[float]) -> float:
    """0.3 / (1 + L) with L the largest Jacobian spectral norm over a
    fixed fan of 16 seeded sample points around x0."""
    x0 = np.asarray(x0, dtype=float)
    rng = np.random.default_rng(2718)
    scale = 0.5 * max(1.0, float(np.linalg.norm(x0)))
    pts = x0 + scale * rng.standard_normal((STEP_ESTIMATE_SAMPLES, x0.size))
    L = float(np.linalg.norm(inst.F.jacobian(x0), 2))
    for p in pts:
        L = max(L, float(np.linalg.norm(inst.F.jacobian(p), 2)))
    return 0.3 / (1.0 + L)


def _require_projectable_start(inst: ViInstance, x0) -> np.ndarray:
    if not inst.omega.has_projection:
        raise UnsupportedSetError(
            "solver needs a feasible set with a projection "
            "(free space or convex polyhedral)")
    x0 = np.asarray(x0, dtype=float)
    if not inst.omega.contains(x0):
        raise InfeasiblePointError(f"start point {x0!r} is outside the feasible set")
    return x0


def extragradient(
    inst: ViInstance,
    x0: Sequence[float],
    step: float | None = None,
    max_iter: int = 10_000,
    solve_tol: float = SOLVE_TOL,
) -> SolverTrace:
    """Fixed-step extragradient: probe y = proj(x - t F(x)), then move
    x <- proj(x - t F(y)).  Stops on natural residual <= solve_tol."""
    x = _require_projectable_start(inst, x0)
    if step is None:
        step = default_extragradient_step(inst, x)
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")

    records: list[IterateRecord] = []
    status = MAX_ITER
    solution = None
    for k in range(max_iter + 1):
        res = natural_residual(inst, x)
        psi = regularized_gap(inst, x)
        records.append(IterateRecord(k, x.copy(), psi, res, None if k == 0 else step))
        if res <= solve_tol:
            status, solution = CONVERGED, x.copy()
            break
        if np.linalg.norm(x) > DIVERGENCE_NORM or not math.isfinite(psi):
            status = DIVERGED
            break
        if k == max_iter:
            break
        y = inst.omega.project(x - step * inst.F.eval(x))
        x = inst.omega.project(x - step * inst.F.eval(y))
    return SolverTrace(tuple(records), status, solution)


def gap_descent(
    inst: ViInstance,
    x0: Sequence[float],
    step0: float = 1.0,
    max_iter: int = 10_000,
    solve_tol: float = SOLVE_TOL,
    armijo_max_halvings: int = ARMIJO_MAX_HALVINGS,
) -> SolverTrace:
    """Projected gradient descent on the regularized gap with Armijo
    backtracking.  The recorded gap values are monotone nonincreasing;
    failure to find decrease after the halving budget ends the run with
    status "stalled"."""
    x = _require_projectable_start(inst, x0)
    records: list[IterateRecord] = []
    status = MAX_ITER
    solution = None
    psi = regularized_gap(inst, x)
    last_step: float | None = None
    for k in range(max_iter + 1):
        res = natural_residual(inst, x)
        records.append(IterateRecord(k, x.copy(), psi, res, last_step))
        if res <= solve_tol:
            status, solution = CONVERGED, x.copy()
            break
        if np.linalg.norm(x) > DIVERGENCE_NORM or not math.isfinite(psi):
            status = DIVERGED
            break
        if k == max_iter:
            break

        g = clarke_generators(inst, x)[0]
        t = step0
        accepted = None
        for _ in range(armijo_max_halvings + 1):
            trial = inst.omega.project(x - t * g)
            trial_psi = regularized_gap(inst, trial)
            if trial_psi <= psi + ARMIJO_C1 * float(g @ (trial - x)):
                accepted = (trial, trial_psi, t)
                break
            t *= 0.5
        if accepted is None:
            status = STALLED
            break
        x, psi, last_step = accepted
    return SolverTrace(tuple(records), status, solution)


@dataclass(frozen=True)
class RateRow:
    k: int
    psi: float
    dist: float
    psi_pow_alpha: float
    ratio: float


@dataclass(frozen=True)
class RateTable:
    rows: tuple[RateRow, ...]
    alpha: Fraction
    empty_zero_set: bool


def correlate_rate(
    trace: SolverTrace,
    zero_set: Sequence[Sequence[float]],
    alpha: Fraction,
) -> RateTable:
    """Per-iterate comparison of distance-to-solutions against the
    predicted power of the gap.  ratio = dist / psi**alpha, so a bound
    "dist <= (1/c) * psi**alpha" shows up as a bounded ratio column.

    An empty zero set uses the distance-to-empty-set convention
    dist = 1 and flags the table.
    """
    pts = np.asarray(list(zero_set), dtype=float)
    empty = pts.size == 0
    rows = []
    for rec in trace.iterates:
        if empty:
            dist = 1.0
        else:
            dist = float(np.min(np.linalg.norm(pts - rec.x, axis=1)))
        value = pow_alpha(max(rec.psi, 0.0), alpha)
        ratio = dist / value if value > 0 else math.nan
        rows.append(RateRow(rec.k, rec.psi, dist, value, ratio))
    return RateTable(tuple(rows), alpha, empty)
