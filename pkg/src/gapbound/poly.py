"""Sparse multivariate polynomials and polynomial maps.

Terms are kept normalized: duplicate exponent vectors merged, exactly-zero
coefficients dropped, and the term list sorted in graded lexicographic
order. Evaluation accumulates in that fixed order, so results are
deterministic for a given build of the polynomial.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatchError

Term = tuple[float, tuple[int, ...]]


def _normalize(n_vars: int, terms: Iterable[tuple[float, Sequence[int]]]) -> tuple[Term, ...]:
    if n_vars < 1:
        raise ValueError(f"n_vars must be a positive integer, got {n_vars}")
    merged: dict[tuple[int, ...], float] = {}
    for coeff, exps in terms:
        e = tuple(int(v) for v in exps)
        if len(e) != n_vars:
            raise DimensionMismatchError(
                f"exponent vector {e} has length {len(e)}, expected {n_vars}")
        if any(v < 0 for v in e):
            raise ValueError(f"exponents must be nonnegative, got {e}")
        merged[e] = merged.get(e, 0.0) + float(coeff)
    # graded lexicographic, leading term first
    ordered = sorted(merged.items(), key=lambda kv: (sum(kv[0]), kv[0]), reverse=True)
    return tuple((c, e) for e, c in ordered if c != 0.0)


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial in n_vars variables with double coefficients."""

    n_vars: int
    terms: tuple[Term, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "terms", _normalize(self.n_vars, self.terms))

    @property
    def degree(self) -> int:
        """Total degree of the normalized form; 0 for the zero polynomial."""
        if not self.terms:
            return 0
        return max(sum(e) for _, e in self.terms)

    def _check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_vars,):
            raise DimensionMismatchError(
                f"point has shape {x.shape}, expected ({self.n_vars},)")
        return x

    def eval(self, x) -> float:
        x = self._check_point(x)
        acc = 0.0
        for c, e in self.terms:
            m = c
            for xi, ei in zip(x, e):
                if ei:
                    m *= xi ** ei
            acc += m
        return acc

    def eval_many(self, pts) -> np.ndarray:
        """Evaluate at each row of pts, accumulating terms in the same order
        as eval."""
        pts = np.asarray(pts, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.n_vars:
            raise DimensionMismatchError(
                f"points have shape {pts.shape}, expected (N, {self.n_vars})")
        acc = np.zeros(pts.shape[0])
        for c, e in self.terms:
            m = np.full(pts.shape[0], c)
            for i, ei in enumerate(e):
                if ei:
                    m *= pts[:, i] ** ei
            acc += m
        return acc

    def grad(self, x) -> np.ndarray:
        x = self._check_point(x)
        g = np.zeros(self.n_vars)
        for c, e in self.terms:
            for i, ei in enumerate(e):
                if ei == 0:
                    continue
                m = c * ei
                for j, ej in enumerate(e):
                    p = ej - 1 if j == i else ej
                    if p:
                        m *= x[j] ** p
                g[i] += m
        return g

    def __add__(self, other) -> "Polynomial":
        other = _coerce(other, self.n_vars)
        return Polynomial(self.n_vars, self.terms + other.terms)

    def __radd__(self, other) -> "Polynomial":
        return self.__add__(other)

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.n_vars, tuple((-c, e) for c, e in self.terms))

    def __sub__(self, other) -> "Polynomial":
        return self.__add__(-_coerce(other, self.n_vars))

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, (int, float)):
            return Polynomial(self.n_vars, tuple((c * other, e) for c, e in self.terms))
        other = _coerce(other, self.n_vars)
        prod = [
            (ca * cb, tuple(a + b for a, b in zip(ea, eb)))
            for ca, ea in self.terms
            for cb, eb in other.terms
        ]
        return Polynomial(self.n_vars, tuple(prod))

    def __rmul__(self, other) -> "Polynomial":
        return self.__mul__(other)


def _coerce(value, n_vars: int) -> Polynomial:
    if isinstance(value, Polynomial):
        if value.n_vars != n_vars:
            raise DimensionMismatchError(
                f"cannot combine polynomials in {value.n_vars} and {n_vars} variables")
        return value
    if isinstance(value, (int, float)):
        return constant(n_vars, float(value))
    raise TypeError(f"cannot coerce {type(value).__name__} to Polynomial")


def constant(n_vars: int, value: float) -> Polynomial:
    return Polynomial(n_vars, ((float(value), (0,) * n_vars),))


def variable(n_vars: int, index: int) -> Polynomial:
    """The coordinate monomial x[index]."""
    if not 0 <= index < n_vars:
        raise ValueError(f"variable index {index} out of range for n_vars={n_vars}")
    e = tuple(1 if i == index else 0 for i in range(n_vars))
    return Polynomial(n_vars, ((1.0, e),))


def affine(coeffs: Sequence[float], offset: float = 0.0) -> Polynomial:
    """sum(coeffs[i] * x[i]) + offset."""
    n = len(coeffs)
    terms = [(float(c), tuple(1 if j == i else 0 for j in range(n)))
             for i, c in enumerate(coeffs)]
    terms.append((float(offset), (0,) * n))
    return Polynomial(n, tuple(terms))


@dataclass(frozen=True)
class PolynomialMap:
    """Map from R^n_in to R^n_out with polynomial components."""

    components: tuple[Polynomial, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("a polynomial map needs at least one component")
        n = comps[0].n_vars
        if any(p.n_vars != n for p in comps):
            raise DimensionMismatchError("all components must share n_vars")
        object.__setattr__(self, "components", comps)

    @property
    def n_in(self) -> int:
        return self.components[0].n_vars

    @property
    def n_out(self) -> int:
        return len(self.components)

    @property
    def degree(self) -> int:
        """max(1, max component degree); the floor keeps exponent bookkeeping
        well-defined for constant maps."""
        return max(1, max(p.degree for p in self.components))

    def eval(self, x) -> np.ndarray:
        return np.array([p.eval(x) for p in self.components])

    def jacobian(self, x) -> np.ndarray:
        return np.vstack([p.grad(x) for p in self.components])
