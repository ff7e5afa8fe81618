"""Empirical verification lab for gap-based error bounds.

Workflows:

* sample a deterministic feasible point cloud inside a compact box,
* estimate the zero set of the regularized gap by multistart solving,
* check the two bound shapes on the cloud —
  ``dist(x, Z) <= (1/c) * psi(x)**alpha``         (distance bound)
  ``residual(x) >= c * |psi(x) - psi(xbar)|**(1-alpha)``  (gradient bound)
  — reporting the worst-case constant ``c_star`` actually achieved,
* fit an empirical exponent to compare with the certified one.

All ratio arithmetic happens in the log domain: certified exponents can
be on the order of 1e-10, where ``psi**alpha`` collapses to 1.0 in
doubles but ``alpha * ln(psi)`` is still perfectly informative.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import (
    BudgetExhaustedError,
    DegenerateFitError,
    InfeasiblePointError,
)
from .gap import (
    ViInstance,
    regularized_gap,
    clarke_generators,
    stationarity_residual,
)
from .solver import extragradient, gap_descent

__all__ = [
    "PSI_THRESHOLD",
    "DEDUP_TOL",
    "C_FLOOR_DISTANCE",
    "C_FLOOR_GRADIENT",
    "SAMPLE_BUDGET_FACTOR",
    "SampleCloud",
    "ZeroSetEstimate",
    "BoundRow",
    "BoundReport",
    "sample_cloud",
    "cloud_from_points",
    "estimate_zero_set",
    "verify_error_bound",
    "verify_lojasiewicz",
    "fit_exponent",
]

PSI_THRESHOLD = 1e-12
DEDUP_TOL = 1e-6
SAMPLE_BUDGET_FACTOR = 100

# The existential "some c > 0" reading would put the floor at 1e-12, but a
# refutation harness needs a floor that an actually-degenerating ratio falls
# under at desk scale.  0.1 separates every closed-form holding case checked
# here (c_star >= 0.70) from the degenerating ones (c_star <= 0.03).
C_FLOOR_DISTANCE = 0.1
# The gradient-side check keeps the existential reading.
C_FLOOR_GRADIENT = 1e-12

HOLDS = "holds"
FAILS = "fails"
INCONCLUSIVE = "inconclusive"


def _thread_count() -> int:
    raw = os.environ.get("GAPBOUND_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _ordered_map(fn: Callable, items: Sequence) -> list:
    """Map preserving input order; parallel only when GAPBOUND_THREADS > 1.

    Results are reduced by input index either way, so the output is
    identical for any thread count."""
    n = _thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _as_box(box) -> tuple[np.ndarray, np.ndarray]:
    lo = np.asarray(box[0], dtype=float)
    hi = np.asarray(box[1], dtype=float)
    if lo.shape != hi.shape or lo.ndim != 1:
        raise ValueError("box must be a (lo, hi) pair of equal-length vectors")
    if np.any(lo > hi):
        raise ValueError("box has lo > hi in some coordinate")
    return lo, hi


@dataclass(frozen=True)
class SampleCloud:
    """Feasible points inside a compact axis-aligned box."""

    box: tuple[np.ndarray, np.ndarray]
    points: tuple[np.ndarray, ...]
    seed: int

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class ZeroSetEstimate:
    """Finite stand-in for {x feasible : gap(x) = 0}.

    A finite estimate can only overestimate true distances, which makes
    the distance bound harder to satisfy, never easier.
    """

    points: tuple[np.ndarray, ...]
    psi_threshold: float

    @property
    def is_empty(self) -> bool:
        return len(self.points) == 0

    def distance(self, x) -> float:
        """Distance to the estimate; 1.0 for an empty estimate (the
        distance-to-nothing convention used throughout)."""
        if self.is_empty:
            return 1.0
        x = np.asarray(x, dtype=float)
        return float(min(np.linalg.norm(x - z) for z in self.points))


def sample_cloud(inst: ViInstance, box, count: int, seed: int) -> SampleCloud:
    """Exactly ``count`` deterministic feasible points in box.

    Uniform draws are kept when feasible; when the set supports
    projection, an infeasible draw is projected and kept if the
    projection stays inside the box.  Exhausting 100 * count draws
    raises: the feasible region appears not to meet the box.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    lo, hi = _as_box(box)
    if lo.size != inst.n:
        raise ValueError(f"box dimension {lo.size} != instance dimension {inst.n}")
    rng = np.random.default_rng(seed)
    budget = SAMPLE_BUDGET_FACTOR * count
    kept: list[np.ndarray] = []
    projectable = inst.omega.has_projection and not inst.omega.is_free
    for _ in range(budget):
        u = lo + rng.random(inst.n) * (hi - lo)
        if inst.omega.contains(u):
            kept.append(u)
        elif projectable:
            p = inst.omega.project(u)
            if np.all(p >= lo - 1e-12) and np.all(p <= hi + 1e-12):
                kept.append(p)
        if len(kept) == count:
            return SampleCloud((lo, hi), tuple(kept), seed)
    raise BudgetExhaustedError(
        f"found {len(kept)}/{count} feasible points after {budget} draws; "
        "the feasible set appears not to intersect the box")


def cloud_from_points(inst: ViInstance, points, box=None) -> SampleCloud:
    """Wrap an explicit list of points (every one must be feasible)."""
    pts = tuple(np.asarray(p, dtype=float) for p in points)
    if not pts:
        raise ValueError("need at least one point")
    for p in pts:
        if not inst.omega.contains(p):
            raise InfeasiblePointError(f"explicit cloud point {p!r} is infeasible")
    if box is None:
        arr = np.stack(pts)
        box = (arr.min(axis=0), arr.max(axis=0))
    lo, hi = _as_box(box)
    return SampleCloud((lo, hi), pts, seed=-1)


def estimate_zero_set(
    inst: ViInstance,
    box,
    count: int = 24,
    seed: int = 0,
    psi_threshold: float = PSI_THRESHOLD,
    dedup_tol: float = DEDUP_TOL,
) -> ZeroSetEstimate:
    """Best-effort zero set of the regularized gap inside a box.

    Multistart: solver runs from ``count`` sampled feasible starts, each
    polished by gap descent; survivors need gap <= psi_threshold and get
    deduplicated at dedup_tol.  Sets without a projection fall back to a
    coarse grid screen plus constrained local polish.  Finding nothing
    is a valid outcome (empty estimate), not an error.
    """
    lo, hi = _as_box(box)
    if inst.omega.has_projection:
        candidates = _zero_candidates_by_solving(inst, (lo, hi), count, seed)
    else:
        candidates = _zero_candidates_by_screening(inst, (lo, hi))
    kept: list[np.ndarray] = []
    scored = [(regularized_gap(inst, c), tuple(c)) for c in candidates]
    for psi, c in sorted(scored):
        if psi > psi_threshold:
            continue
        x = np.array(c)
        if all(np.linalg.norm(x - z) >= dedup_tol for z in kept):
            kept.append(x)
    kept.sort(key=tuple)
    return ZeroSetEstimate(tuple(kept), psi_threshold)


def _zero_candidates_by_solving(inst, box, count, seed) -> list[np.ndarray]:
    starts = sample_cloud(inst, box, count, seed).points
    out = []
    for s in starts:
        probe = extragradient(inst, s, max_iter=2_000)
        x = probe.final.x
        # a wandering probe on a nonmonotone problem is worse than the start
        if probe.final.psi > regularized_gap(inst, s):
            x = s
        polish = gap_descent(inst, x, max_iter=2_000)
        out.append(polish.final.x)
    return out


def _zero_candidates_by_screening(inst, box, per_dim: int | None = None) -> list[np.ndarray]:
    lo, hi = box
    n = inst.n
    if per_dim is None:
        per_dim = 32 if n <= 2 else 12
    axes = [np.linspace(lo[i], hi[i], per_dim) for i in range(n)]
    grid = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
    mask = np.ones(len(grid), dtype=bool)
    for g in inst.omega.ineqs:
        mask &= g.eval_many(grid) <= 1e-9
    for h in inst.omega.eqs:
        mask &= np.abs(h.eval_many(grid)) <= 1e-9
    feas = grid[mask]
    if len(feas) == 0:
        return []
    # coarse gap value: best objective over the feasible grid itself
    coarse = np.empty(len(feas))
    for i, x in enumerate(feas):
        Fx = inst.F.eval(x)
        diff = x - feas
        coarse[i] = float(np.max(diff @ Fx - 0.5 * inst.rho * np.sum(diff**2, axis=1)))
    order = np.argsort(coarse)
    out = []
    for idx in order[:3]:
        out.append(_polish_zero_constrained(inst, feas[idx], box))
    return out


def _polish_zero_constrained(inst, x0, box) -> np.ndarray:
    lo, hi = box
    cons = []
    for g in inst.omega.ineqs:
        cons.append({"type": "ineq",
                     "fun": (lambda p, g=g: -g.eval(p)),
                     "jac": (lambda p, g=g: -g.grad(p))})
    for h in inst.omega.eqs:
        cons.append({"type": "eq",
                     "fun": (lambda p, h=h: h.eval(p)),
                     "jac": (lambda p, h=h: h.grad(p))})
    res = minimize(
        lambda p: regularized_gap(inst, p),
        x0,
        jac=lambda p: clarke_generators(inst, p)[0],
        bounds=list(zip(lo, hi)),
        constraints=cons,
        method="SLSQP",
        options={"maxiter": 120, "ftol": 1e-16},
    )
    x = np.asarray(res.x, dtype=float)
    if inst.omega.contains(x) and regularized_gap(inst, x) <= regularized_gap(inst, x0):
        return x
    return np.asarray(x0, dtype=float)


@dataclass(frozen=True)
class BoundRow:
    """One cloud point's contribution to a bound check.

    For the distance bound, ``dist`` is the distance to the zero-set
    estimate and ``log_ratio = alpha*ln(psi) - ln(dist)``.  For the
    gradient bound, ``dist`` holds |psi(x) - psi(xbar)| and
    ``log_ratio = ln(residual) - (1-alpha)*ln(dist)``.  NaN log_ratio
    marks a row excluded from c_star (gap at or under the threshold).
    """

    x: np.ndarray
    psi: float
    dist: float
    residual: float
    log_ratio: float
    mfcq_ok: bool = True


@dataclass(frozen=True)
class BoundReport:
    alpha_used: Fraction
    c_star: float
    fitted_alpha: float | None
    fitted_c: float | None
    verdict: str
    rows: tuple[BoundRow, ...]
    warnings: tuple[str, ...] = ()
    zero_set_empty: bool = False

    def summary(self) -> dict[str, object]:
        return {
            "alpha": str(self.alpha_used),
            "c_star": self.c_star,
            "fitted_alpha": self.fitted_alpha,
            "verdict": self.verdict,
        }


def _finish_report(alpha, rows, c_floor, warnings, zero_set_empty, fit_fn) -> BoundReport:
    rows = tuple(sorted(rows, key=lambda r: r.psi))
    ratios = [r.log_ratio for r in rows if not math.isnan(r.log_ratio)]
    if not ratios:
        c_star = math.nan
        verdict = INCONCLUSIVE
        warnings = warnings + ("no point with gap above the threshold",)
    else:
        c_star = math.exp(min(ratios))
        verdict = HOLDS if c_star >= c_floor else FAILS
    try:
        fitted_alpha, fitted_c = fit_fn(rows)
    except DegenerateFitError as exc:
        fitted_alpha, fitted_c = None, None
        warnings = warnings + (f"exponent fit skipped: {exc}",)
    return BoundReport(alpha, c_star, fitted_alpha, fitted_c, verdict,
                       rows, warnings, zero_set_empty)


def verify_error_bound(
    inst: ViInstance,
    cloud: SampleCloud,
    zero_set: ZeroSetEstimate,
    alpha: Fraction,
    c_floor: float = C_FLOOR_DISTANCE,
    psi_threshold: float = PSI_THRESHOLD,
) -> BoundReport:
    """Check dist(x, Z) <= (1/c) * psi(x)**alpha over the cloud.

    c_star is the largest c the cloud allows, i.e. the min over points
    (with gap above threshold) of psi**alpha / dist, computed in logs.
    Verdict: holds if c_star >= c_floor, fails otherwise, inconclusive
    when no point has gap above the threshold.
    """
    warnings: tuple[str, ...] = ()
    if zero_set.is_empty:
        warnings = ("zero-set estimate is empty; distances use the "
                    "convention dist = 1",)
    a = float(alpha)

    def build(x: np.ndarray) -> BoundRow:
        psi = regularized_gap(inst, x)
        dist = zero_set.distance(x)
        residual, _ = stationarity_residual(inst, x)
        if psi <= psi_threshold:
            lr = math.nan
        elif dist == 0.0:
            lr = math.inf
        else:
            lr = a * math.log(psi) - math.log(dist)
        return BoundRow(x, psi, dist, residual, lr)

    rows = _ordered_map(build, cloud.points)
    return _finish_report(alpha, rows, c_floor, warnings, zero_set.is_empty,
                          fit_exponent)


def verify_lojasiewicz(
    inst: ViInstance,
    xbar,
    epsilon: float,
    cloud: SampleCloud,
    alpha: Fraction,
    c_floor: float = C_FLOOR_GRADIENT,
    psi_threshold: float = PSI_THRESHOLD,
) -> BoundReport:
    """Check residual(x) >= c * |psi(x) - psi(xbar)|**(1-alpha) on a
    cloud inside the epsilon-ball around xbar.

    Points where constraint qualification fails are kept but flagged
    (the inequality's hypothesis is violated there).  Points with gap
    difference at or under the threshold carry no information and are
    excluded from c_star; a cloud with none is inconclusive.
    """
    xbar = np.asarray(xbar, dtype=float)
    if not inst.omega.contains(xbar):
        raise InfeasiblePointError(f"xbar {xbar!r} is outside the feasible set")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    for p in cloud.points:
        if np.linalg.norm(p - xbar) > epsilon + 1e-12:
            raise ValueError(
                f"cloud point {p!r} lies outside the {epsilon}-ball around xbar")
    psibar = regularized_gap(inst, xbar)
    one_minus_a = 1.0 - float(alpha)
    warnings: list[str] = []

    def build(x: np.ndarray) -> BoundRow:
        psi = regularized_gap(inst, x)
        diff = abs(psi - psibar)
        residual, _ = stationarity_residual(inst, x)
        mfcq = inst.omega.check_mfcq(x)
        if diff <= psi_threshold:
            lr = math.nan
        elif residual == 0.0:
            lr = -math.inf
        else:
            lr = math.log(residual) - one_minus_a * math.log(diff)
        return BoundRow(x, psi, diff, residual, lr, mfcq_ok=mfcq.holds)

    rows = _ordered_map(build, cloud.points)
    for r in rows:
        if not r.mfcq_ok:
            warnings.append(
                f"constraint qualification fails at {np.array2string(r.x)}; "
                "point kept but flagged")
    return _finish_report(alpha, rows, c_floor, tuple(warnings), False,
                          _fit_gradient_side)


def fit_exponent(
    rows: Iterable[BoundRow],
    psi_threshold: float = PSI_THRESHOLD,
) -> tuple[float, float]:
    """Least-squares exponent from a report table.

    Fits ln(dist) = ln(1/c) + alpha * ln(psi) over rows with gap above
    the threshold and positive dist; returns (fitted_alpha, fitted_c).
    """
    ln_psi, ln_dist = [], []
    for r in rows:
        if r.psi > psi_threshold and r.dist > 0:
            ln_psi.append(math.log(r.psi))
            ln_dist.append(math.log(r.dist))
    if len(ln_psi) < 2:
        raise DegenerateFitError(
            f"need >= 2 usable points, have {len(ln_psi)}")
    ln_psi = np.array(ln_psi)
    ln_dist = np.array(ln_dist)
    if float(np.ptp(ln_psi)) < 1e-12:
        raise DegenerateFitError("all gap values coincide; slope is undetermined")
    slope, intercept = np.polyfit(ln_psi, ln_dist, 1)
    return float(slope), float(math.exp(-intercept))


def _fit_gradient_side(rows: Iterable[BoundRow]) -> tuple[float, float]:
    """Exponent fit for the gradient-side table, where ``dist`` holds the
    gap difference: ln(residual) = ln(c) + (1-alpha) * ln(diff)."""
    ln_diff, ln_res = [], []
    for r in rows:
        if r.dist > PSI_THRESHOLD and r.residual > 0:
            ln_diff.append(math.log(r.dist))
            ln_res.append(math.log(r.residual))
    if len(ln_diff) < 2:
        raise DegenerateFitError(f"need >= 2 usable points, have {len(ln_diff)}")
    ln_diff = np.array(ln_diff)
    if float(np.ptp(ln_diff)) < 1e-12:
        raise DegenerateFitError("all gap differences coincide; slope is undetermined")
    slope, intercept = np.polyfit(ln_diff, np.array(ln_res), 1)
    return float(1.0 - slope), float(math.exp(intercept))
