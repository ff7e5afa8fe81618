"""Regularized gap function for polynomial variational inequalities.

For an instance (F, Omega, rho) the gap at x is the supremum over y in
Omega of the objective <F(x), x - y> - (rho/2)||x - y||^2. The objective is
strictly concave in y with unconstrained peak x - F(x)/rho, so on sets with
an exact projection the argmax is that point projected. On other sets the
argmax is searched over the declared bounding box (dense seed grid plus
local-ascent polish); the returned maximizer sample is then best-effort and
downstream residuals are upper bounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .errors import (
    DimensionMismatchError,
    InfeasiblePointError,
    SolverConvergenceError,
    UnsupportedSetError,
)
from .feasible import ACTIVE_TOL, QP_TOL, FeasibleSet
from .poly import PolynomialMap

GRID_PER_DIM = 32
MULTISTART_MAX_DIM = 3
POLISH_STARTS = 24
CLUSTER_VALUE_TOL = 1e-6
CLUSTER_POS_TOL = 1e-4
RESIDUAL_MAX_ITER = 100_000


@dataclass(frozen=True)
class ViInstance:
    """A polynomial variational inequality with gap regularization weight rho."""

    F: PolynomialMap
    omega: FeasibleSet
    rho: float = 1.0

    def __post_init__(self):
        if self.F.n_in != self.omega.n:
            raise DimensionMismatchError(
                f"map acts on R^{self.F.n_in} but the set lives in R^{self.omega.n}")
        if self.F.n_out != self.omega.n:
            raise DimensionMismatchError(
                f"map must return vectors in R^{self.omega.n}, got R^{self.F.n_out}")
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")

    @property
    def n(self) -> int:
        return self.omega.n


@dataclass(frozen=True)
class ResidualCertificate:
    """Attaining multipliers for the stationarity residual.

    weights: simplex coefficients over the Clarke generators; mu: one
    nonnegative multiplier per inequality (zero off the active set);
    kappa: free equality multipliers; w: the attained vector whose norm is
    the residual.
    """

    weights: np.ndarray
    mu: np.ndarray
    kappa: np.ndarray
    w: np.ndarray
    norm: float


@dataclass(frozen=True)
class GapEvaluation:
    x: np.ndarray
    psi: float
    argmax_points: tuple[np.ndarray, ...]
    clarke_generators: tuple[np.ndarray, ...]
    residual: Optional[float] = None
    certificate: Optional[ResidualCertificate] = None


def _check_point(inst: ViInstance, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (inst.n,):
        raise DimensionMismatchError(f"point has shape {x.shape}, expected ({inst.n},)")
    return x


def gap_objective(inst: ViInstance, x, y) -> float:
    """<F(x), x - y> - (rho/2)||x - y||^2."""
    x = _check_point(inst, x)
    y = _check_point(inst, y)
    diff = x - y
    return float(inst.F.eval(x) @ diff - 0.5 * inst.rho * diff @ diff)


def gap_objective_grad_x(inst: ViInstance, x, y) -> np.ndarray:
    """Gradient of the gap objective in its first argument:
    F(x) + J_F(x)^T (x - y) - rho (x - y)."""
    x = _check_point(inst, x)
    y = _check_point(inst, y)
    diff = x - y
    return inst.F.eval(x) + inst.F.jacobian(x).T @ diff - inst.rho * diff


def argmax_set(inst: ViInstance, x, active_tol: float = ACTIVE_TOL) -> list[np.ndarray]:
    """Representatives of the set of maximizers of the gap objective over Omega.

    Singleton (the projected unconstrained peak) whenever Omega carries an
    exact projection; otherwise a deterministic grid-plus-polish search over
    the bounding box, clustered at CLUSTER_VALUE_TOL in value and
    CLUSTER_POS_TOL in position.
    """
    x = _check_point(inst, x)
    peak = x - inst.F.eval(x) / inst.rho
    if inst.omega.has_projection:
        return [inst.omega.project(peak)]
    return _multistart_argmax(inst, x, peak, active_tol)


def regularized_gap(inst: ViInstance, x, active_tol: float = ACTIVE_TOL) -> float:
    """The gap value: max of the gap objective over the argmax representatives."""
    x = _check_point(inst, x)
    pts = argmax_set(inst, x, active_tol)
    return max(gap_objective(inst, x, y) for y in pts)


def clarke_generators(inst: ViInstance, x, active_tol: float = ACTIVE_TOL) -> list[np.ndarray]:
    """One gradient per argmax representative; their convex hull is the
    generalized differential of the gap at x."""
    x = _check_point(inst, x)
    return [gap_objective_grad_x(inst, x, y) for y in argmax_set(inst, x, active_tol)]


def stationarity_residual(inst: ViInstance, x, active_tol: float = ACTIVE_TOL,
                          qp_tol: float = QP_TOL):
    """min || sum_k w_k v_k + sum_i mu_i grad g_i + sum_j kappa_j grad h_j ||
    over simplex weights, mu >= 0 on the active set, kappa free.

    Solved by accelerated projected gradient with restart; returns
    (norm, ResidualCertificate).
    """
    x = _check_point(inst, x)
    if not inst.omega.contains(x, active_tol):
        raise InfeasiblePointError("stationarity residual needs a feasible point")
    gens = clarke_generators(inst, x, active_tol)
    act, G, H = inst.omega.active_gradients(x, active_tol)
    K, m, s = len(gens), len(act), inst.omega.s
    M = np.hstack([np.column_stack(gens),
                   G.T.reshape(inst.n, m),
                   H.T.reshape(inst.n, s)])
    u = _solve_residual_qp(M, K, m, qp_tol)
    w = M @ u
    mu = np.zeros(inst.omega.r)
    for idx, val in zip(act, u[K:K + m]):
        mu[idx] = val
    cert = ResidualCertificate(weights=u[:K], mu=mu, kappa=u[K + m:],
                               w=w, norm=float(np.linalg.norm(w)))
    return cert.norm, cert


def evaluate_gap(inst: ViInstance, x, include_residual: bool = True,
                 active_tol: float = ACTIVE_TOL) -> GapEvaluation:
    """Bundle gap value, argmax representatives, generators, and (for
    feasible x) the stationarity residual."""
    x = _check_point(inst, x)
    pts = argmax_set(inst, x, active_tol)
    psi = max(gap_objective(inst, x, y) for y in pts)
    gens = [gap_objective_grad_x(inst, x, y) for y in pts]
    residual = None
    cert = None
    if include_residual:
        residual, cert = stationarity_residual(inst, x, active_tol)
    return GapEvaluation(x=x, psi=psi, argmax_points=tuple(pts),
                         clarke_generators=tuple(gens), residual=residual,
                         certificate=cert)


# -- nonconvex search ---------------------------------------------------------

def _multistart_argmax(inst, x, peak, active_tol) -> list[np.ndarray]:
    omega = inst.omega
    if omega.bounding_box is None:
        raise UnsupportedSetError(
            "argmax over a set without projection needs a bounding box")
    if omega.n > MULTISTART_MAX_DIM:
        raise UnsupportedSetError(
            f"multistart search supports n <= {MULTISTART_MAX_DIM}")
    lo, hi = omega.bounding_box
    axes = [np.linspace(lo[i], hi[i], GRID_PER_DIM) for i in range(omega.n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    grid = np.stack([m.ravel() for m in mesh], axis=1)

    feas = np.ones(len(grid), dtype=bool)
    for g in omega.ineqs:
        feas &= g.eval_many(grid) <= active_tol
    for h in omega.eqs:
        feas &= np.abs(h.eval_many(grid)) <= active_tol

    # the objective is a concave paraboloid around the peak, so value order
    # is (reverse) distance order
    dist2 = np.sum((grid - peak) ** 2, axis=1)
    starts: list[np.ndarray] = []
    feasible_idx = np.nonzero(feas)[0]
    for idx in feasible_idx[np.argsort(dist2[feasible_idx], kind="stable")][:POLISH_STARTS // 2]:
        starts.append(grid[idx])
    for idx in np.argsort(dist2, kind="stable")[:POLISH_STARTS // 2]:
        starts.append(grid[idx])
    if omega.contains(x, active_tol) and np.all(x >= lo) and np.all(x <= hi):
        starts.append(x.copy())

    candidates: list[np.ndarray] = [grid[i] for i in feasible_idx]
    for y0 in starts:
        y = _polish(inst, x, y0, lo, hi)
        if y is not None and omega.contains(y, active_tol):
            candidates.append(y)
    if not candidates:
        raise SolverConvergenceError(
            "no feasible maximizer found in the search box (set may be empty there)")

    vals = np.array([gap_objective(inst, x, y) for y in candidates])
    order = np.argsort(-vals, kind="stable")
    best = vals[order[0]]
    reps: list[np.ndarray] = []
    for i in order:
        if vals[i] < best - CLUSTER_VALUE_TOL:
            break
        if all(np.linalg.norm(candidates[i] - r) >= CLUSTER_POS_TOL for r in reps):
            reps.append(candidates[i])
    return reps


def _polish(inst, x, y0, lo, hi):
    omega = inst.omega
    Fx = inst.F.eval(x)
    rho = inst.rho

    def neg_phi(y):
        diff = x - y
        return -(Fx @ diff - 0.5 * rho * diff @ diff)

    def neg_phi_grad(y):
        return -(rho * (x - y) - Fx)

    cons = []
    for g in omega.ineqs:
        cons.append({"type": "ineq", "fun": lambda y, g=g: -g.eval(y),
                     "jac": lambda y, g=g: -g.grad(y)})
    for h in omega.eqs:
        cons.append({"type": "eq", "fun": lambda y, h=h: h.eval(y),
                     "jac": lambda y, h=h: h.grad(y)})
    res = minimize(neg_phi, y0, jac=neg_phi_grad, method="SLSQP",
                   bounds=list(zip(lo, hi)), constraints=cons,
                   options={"ftol": 1e-12, "maxiter": 200})
    return res.x if res.x is not None else None


# -- residual QP --------------------------------------------------------------

def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the standard simplex (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, v.size + 1)
    cond = u - css / ks > 0
    k = ks[cond][-1]
    tau = css[k - 1] / k
    return np.maximum(v - tau, 0.0)


def _solve_residual_qp(M: np.ndarray, K: int, m: int, qp_tol: float) -> np.ndarray:
    """min 0.5||M u||^2 with u = (weights in simplex, mu >= 0, kappa free),
    by FISTA with adaptive restart; fixed step 1/L, L = ||M||_2^2."""

    def proj(u):
        out = u.copy()
        out[:K] = _project_simplex(u[:K])
        out[K:K + m] = np.maximum(u[K:K + m], 0.0)
        return out

    dim = M.shape[1]
    u = proj(np.concatenate([np.full(K, 1.0 / K), np.zeros(dim - K)]))
    L = float(np.linalg.norm(M, 2)) ** 2
    if L == 0.0:
        return u
    step = 1.0 / L
    y = u.copy()
    t = 1.0
    MtM = M.T @ M
    for _ in range(RESIDUAL_MAX_ITER):
        grad_y = MtM @ y
        u_new = proj(y - step * grad_y)
        # fixed-point residual at unit step certifies the KKT system
        fp = u_new - proj(u_new - MtM @ u_new)
        if np.max(np.abs(fp)) <= qp_tol:
            return u_new
        if (y - u_new) @ (u_new - u) > 0:
            # momentum points uphill: restart
            t = 1.0
            y = u_new.copy()
        else:
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            y = u_new + ((t - 1.0) / t_new) * (u_new - u)
            t = t_new
        u = u_new
    raise SolverConvergenceError("stationarity residual QP hit its iteration cap")
