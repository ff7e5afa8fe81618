"""Feasible sets cut out by polynomial inequalities and equalities.

Omega = {x : g_i(x) <= 0 for i < r, h_j(x) = 0 for j < s}. Projection is
supported exactly where it can be computed reliably: the whole space,
axis-aligned boxes, and affine-polyhedral sets declared convex (active-set
least-distance QP). Anything else is rejected rather than approximated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog, nnls

from .errors import (
    DimensionMismatchError,
    EmptySetError,
    InfeasiblePointError,
    SolverConvergenceError,
    UnsupportedSetError,
)
from .poly import Polynomial

ACTIVE_TOL = 1e-8
PROJ_TOL = 1e-9
QP_TOL = 1e-9
STRICT_TOL = 1e-8
RANK_TOL_FACTOR = 1e-10


@dataclass(frozen=True)
class MfcqReport:
    """Outcome of the constraint-qualification check at one point.

    margin is the optimal strict-decrease margin t from the direction LP
    (inf when no inequality is active at the point).
    """

    point: np.ndarray
    eq_gradients_rank: int
    active_indices: tuple[int, ...]
    direction: Optional[np.ndarray]
    holds: bool
    margin: float


@dataclass(frozen=True)
class NormalConeElement:
    """A point of the normal cone: sum(mu_i grad g_i) + sum(kappa_j grad h_j).

    mu has one entry per inequality; entries for constraints inactive at the
    base point are identically zero (complementarity via the active set).
    """

    mu: np.ndarray
    kappa: np.ndarray
    vector_value: np.ndarray


@dataclass(frozen=True)
class FeasibleSet:
    n: int
    ineqs: tuple[Polynomial, ...] = ()
    eqs: tuple[Polynomial, ...] = ()
    declared_convex: bool = False
    bounding_box: Optional[tuple[np.ndarray, np.ndarray]] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"dimension must be positive, got {self.n}")
        object.__setattr__(self, "ineqs", tuple(self.ineqs))
        object.__setattr__(self, "eqs", tuple(self.eqs))
        for p in self.ineqs + self.eqs:
            if p.n_vars != self.n:
                raise DimensionMismatchError(
                    f"constraint in {p.n_vars} variables on a set of dimension {self.n}")
        if self.bounding_box is not None:
            lo = np.asarray(self.bounding_box[0], dtype=float)
            hi = np.asarray(self.bounding_box[1], dtype=float)
            if lo.shape != (self.n,) or hi.shape != (self.n,):
                raise DimensionMismatchError("bounding box arity mismatch")
            if np.any(lo > hi):
                raise ValueError("bounding box has lo > hi")
            object.__setattr__(self, "bounding_box", (lo, hi))
        if self.declared_convex and not self.is_polyhedral and not self.is_free:
            # the convex flag is a promise that exact projection exists
            raise UnsupportedSetError(
                "declared_convex requires affine constraints (degree <= 1); "
                "drop the flag and supply a bounding box instead")

    # -- structure ----------------------------------------------------------

    @property
    def r(self) -> int:
        return len(self.ineqs)

    @property
    def s(self) -> int:
        return len(self.eqs)

    @property
    def is_free(self) -> bool:
        """No constraints at all: Omega is the whole space."""
        return self.r == 0 and self.s == 0

    @property
    def is_polyhedral(self) -> bool:
        return all(p.degree <= 1 for p in self.ineqs + self.eqs)

    @property
    def has_projection(self) -> bool:
        return self.is_free or self._box_bounds() is not None or (
            self.declared_convex and self.is_polyhedral)

    def _affine_rows(self):
        """Constraints as A x <= b, C x = d (valid only when polyhedral)."""
        zero = np.zeros(self.n)
        A = np.array([p.grad(zero) for p in self.ineqs]).reshape(self.r, self.n)
        b = np.array([-p.eval(zero) for p in self.ineqs])
        C = np.array([p.grad(zero) for p in self.eqs]).reshape(self.s, self.n)
        d = np.array([-p.eval(zero) for p in self.eqs])
        return A, b, C, d

    def _box_bounds(self):
        """(lo, hi) when the constraints are exactly an axis-aligned box."""
        if self.s > 0 or self.r == 0 or not self.is_polyhedral:
            return None
        lo = np.full(self.n, -np.inf)
        hi = np.full(self.n, np.inf)
        A, b, _, _ = self._affine_rows()
        for row, bnd in zip(A, b):
            nz = np.nonzero(row)[0]
            if nz.size != 1:
                return None
            i = nz[0]
            if row[i] > 0:
                hi[i] = min(hi[i], bnd / row[i])
            else:
                lo[i] = max(lo[i], bnd / row[i])
        return lo, hi

    # -- membership ---------------------------------------------------------

    def _check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise DimensionMismatchError(
                f"point has shape {x.shape}, expected ({self.n},)")
        return x

    def contains(self, x, tol: float = 0.0) -> bool:
        if tol < 0:
            raise ValueError("tol must be nonnegative")
        x = self._check_point(x)
        return all(p.eval(x) <= tol for p in self.ineqs) and \
            all(abs(p.eval(x)) <= tol for p in self.eqs)

    def active_set(self, x, active_tol: float = ACTIVE_TOL) -> tuple[int, ...]:
        """Indices of inequality constraints tight at x (|g_i(x)| <= active_tol)."""
        x = self._check_point(x)
        if not self.contains(x, active_tol):
            raise InfeasiblePointError(f"point {x.tolist()} is not in the set")
        return tuple(i for i, p in enumerate(self.ineqs)
                     if abs(p.eval(x)) <= active_tol)

    def active_gradients(self, x, active_tol: float = ACTIVE_TOL):
        """(active indices, active inequality gradients, equality gradients);
        gradient arrays have one row per constraint."""
        x = self._check_point(x)
        act = self.active_set(x, active_tol)
        G = np.array([self.ineqs[i].grad(x) for i in act]).reshape(len(act), self.n)
        H = np.array([p.grad(x) for p in self.eqs]).reshape(self.s, self.n)
        return act, G, H

    # -- constraint qualification -------------------------------------------

    def check_mfcq(self, x, active_tol: float = ACTIVE_TOL,
                   strict_tol: float = STRICT_TOL) -> MfcqReport:
        """Rank test on equality gradients plus an LP certifying a direction
        that strictly decreases every active inequality while staying tangent
        to the equalities."""
        x = self._check_point(x)
        act, G, H = self.active_gradients(x, active_tol)
        if self.s == 0:
            rank = 0
        else:
            sv = np.linalg.svd(H, compute_uv=False)
            rank = int(np.sum(sv > RANK_TOL_FACTOR * sv[0])) if sv[0] > 0 else 0
        rank_ok = rank == self.s

        if not act:
            # vacuous inequality condition; v = 0 is tangent to the equalities
            return MfcqReport(point=x, eq_gradients_rank=rank, active_indices=act,
                              direction=np.zeros(self.n), holds=rank_ok,
                              margin=math.inf)

        # maximize t s.t. G v + t <= 0, H v = 0, |v_i| <= 1
        m = len(act)
        c = np.zeros(self.n + 1)
        c[-1] = -1.0
        A_ub = np.hstack([G, np.ones((m, 1))])
        b_ub = np.zeros(m)
        A_eq = np.hstack([H, np.zeros((self.s, 1))]) if self.s else None
        b_eq = np.zeros(self.s) if self.s else None
        bounds = [(-1.0, 1.0)] * self.n + [(None, None)]
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                      bounds=bounds, method="highs")
        if res.status != 0:
            raise SolverConvergenceError(
                f"direction LP did not solve (status {res.status}: {res.message})")
        margin = float(res.x[-1])
        direction = res.x[:-1] if margin > strict_tol else None
        return MfcqReport(point=x, eq_gradients_rank=rank, active_indices=act,
                          direction=direction, holds=rank_ok and margin > strict_tol,
                          margin=margin)

    # -- projection ----------------------------------------------------------

    def project(self, z, proj_tol: float = PROJ_TOL) -> np.ndarray:
        z = self._check_point(z)
        if self.is_free:
            return z.copy()
        box = self._box_bounds()
        if box is not None:
            lo, hi = box
            if np.any(lo > hi):
                raise EmptySetError("box constraints are contradictory")
            return np.clip(z, lo, hi)
        if not (self.declared_convex and self.is_polyhedral):
            raise UnsupportedSetError(
                "projection needs an affine-polyhedral set declared convex, or a box")
        A, b, C, d = self._affine_rows()
        if self.contains(z, tol=1e-12):
            return z.copy()
        return _project_polyhedron(A, b, C, d, z, self._feasible_point(), proj_tol)

    def _feasible_point(self) -> np.ndarray:
        """Some point of a polyhedral set, via a phase-1 LP (cached)."""
        cached = getattr(self, "_feasible_cache", None)
        if cached is None:
            A, b, C, d = self._affine_rows()
            cached = _feasible_start(A, b, C, d, self.n)
            object.__setattr__(self, "_feasible_cache", cached)
        return cached.copy()

    # -- normal cone ---------------------------------------------------------

    def min_norm_in_cone_shift(self, x, v0, active_tol: float = ACTIVE_TOL,
                               qp_tol: float = QP_TOL):
        """min over the normal cone at x of ||v0 + w||, with the attaining
        element. Inactive inequality multipliers are pinned at zero."""
        x = self._check_point(x)
        v0 = np.asarray(v0, dtype=float)
        if v0.shape != (self.n,):
            raise DimensionMismatchError("v0 arity mismatch")
        act, G, H = self.active_gradients(x, active_tol)
        m = len(act)
        mu = np.zeros(self.r)
        kappa = np.zeros(self.s)
        if m == 0 and self.s == 0:
            return float(np.linalg.norm(v0)), NormalConeElement(
                mu=mu, kappa=kappa, vector_value=np.zeros(self.n))
        # kappa is free: split into positive and negative parts for NNLS
        M = np.hstack([G.T, H.T, -H.T]) if self.s else G.T
        w, _ = nnls(M, -v0)
        mu_act = w[:m]
        if self.s:
            kappa = w[m:m + self.s] - w[m + self.s:]
        vec = M @ w
        resid = v0 + vec
        grad = M.T @ resid
        scale = max(1.0, float(np.linalg.norm(v0)))
        ok_active = np.all(np.abs(grad[w > 1e-14]) <= qp_tol * scale * 1e3)
        ok_bound = np.all(grad >= -qp_tol * scale * 1e3)
        if not (ok_active and ok_bound):
            raise SolverConvergenceError("cone least-squares failed its KKT check")
        for idx, val in zip(act, mu_act):
            mu[idx] = val
        return float(np.linalg.norm(resid)), NormalConeElement(
            mu=mu, kappa=kappa, vector_value=vec)


def _project_polyhedron(A, b, C, d, z, x0, proj_tol) -> np.ndarray:
    """Least-distance active-set QP: min ||x - z||^2 / 2 s.t. Ax <= b, Cx = d."""
    m, n = A.shape
    x = x0
    work = [i for i in range(m) if b[i] - A[i] @ x <= 1e-9]
    for _ in range(20 * (m + n + 2)):
        E = np.vstack([A[work], C]) if work or C.size else np.zeros((0, n))
        rhs = np.concatenate([b[work], d])
        if E.shape[0]:
            gram = E @ E.T
            w, *_ = np.linalg.lstsq(gram, E @ z - rhs, rcond=None)
            x_hat = z - E.T @ w
        else:
            w = np.zeros(0)
            x_hat = z.copy()
        p = x_hat - x
        if np.linalg.norm(p) <= 1e-12 * max(1.0, np.linalg.norm(z)):
            mu = w[:len(work)]
            if mu.size == 0 or np.min(mu) >= -1e-10:
                _verify_projection_kkt(A, b, C, d, z, x_hat, proj_tol)
                return x_hat
            work.pop(int(np.argmin(mu)))  # drop the most negative multiplier
            continue
        # longest step along p that keeps the inactive rows feasible
        t = 1.0
        blocker = None
        for j in range(m):
            if j in work:
                continue
            aj_p = A[j] @ p
            if aj_p > 1e-13:
                tj = (b[j] - A[j] @ x) / aj_p
                if tj < t - 1e-15:
                    t = max(tj, 0.0)
                    blocker = j
        x = x + t * p
        if blocker is not None:
            work.append(blocker)
            work.sort()
    raise SolverConvergenceError("projection active-set loop hit its iteration cap")


def _verify_projection_kkt(A, b, C, d, z, x, proj_tol) -> None:
    scale = max(1.0, float(np.linalg.norm(z)))
    feas_in = float(np.max(A @ x - b)) if A.size else 0.0
    feas_eq = float(np.max(np.abs(C @ x - d))) if C.size else 0.0
    # stationarity: z - x must lie in the cone of active rows; measure the
    # least-squares misfit of that cone representation
    act = [i for i in range(A.shape[0]) if b[i] - A[i] @ x <= 1e-8 * scale]
    target = z - x
    cols = [A[act].T] if act else []
    if C.size:
        cols += [C.T, -C.T]
    if cols:
        M = np.hstack(cols)
        w, stat = nnls(M, target)
    else:
        stat = float(np.linalg.norm(target))
    if max(feas_in, feas_eq, stat) > proj_tol * scale * 10:
        raise SolverConvergenceError("projection failed its KKT verification")


def _feasible_start(A, b, C, d, n) -> np.ndarray:
    res = linprog(np.zeros(n), A_ub=A if A.size else None, b_ub=b if A.size else None,
                  A_eq=C if C.size else None, b_eq=d if C.size else None,
                  bounds=[(None, None)] * n, method="highs")
    if res.status == 2:
        raise EmptySetError("feasible set is empty (phase-1 LP infeasible)")
    if res.status != 0:
        raise SolverConvergenceError(
            f"phase-1 LP did not solve (status {res.status}: {res.message})")
    return res.x
