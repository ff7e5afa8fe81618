import math
from fractions import Fraction

import numpy as np
import pytest

from gapbound.errors import InfeasiblePointError, UnsupportedSetError
from gapbound.feasible import FeasibleSet
from gapbound.gap import ViInstance, regularized_gap, stationarity_residual
from gapbound.poly import Polynomial, PolynomialMap, affine
from gapbound.solver import (
    SOLVE_TOL,
    correlate_rate,
    default_extragradient_step,
    extragradient,
    gap_descent,
    natural_residual,
)

from _common import halfline_instance, orthant_shift_instance, planar_instance, quadratic_box_set


def affine_instance(A, b, omega=None):
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    comps = tuple(affine(A[i], float(b[i])) for i in range(n))
    return ViInstance(PolynomialMap(comps), omega if omega is not None else FeasibleSet(n))


class TestNaturalResidual:
    def test_halfline_values(self):
        inst = halfline_instance()
        # proj(x - x) = 0, so the residual is x itself on the halfline
        for x in (0.0, 0.3, 1.0):
            assert natural_residual(inst, [x]) == pytest.approx(x, abs=1e-15)

    def test_zero_exactly_at_solution(self):
        inst = orthant_shift_instance(a=(1.0, -1.0))
        assert natural_residual(inst, [1.0, 0.0]) == 0.0


class TestDefaultStep:
    def test_identity_map_gives_constant(self):
        # Jacobian is the identity everywhere, so L = 1 and the step is 0.15
        assert default_extragradient_step(halfline_instance(), [1.0]) == pytest.approx(0.15)

    def test_deterministic(self):
        inst = planar_instance()
        a = default_extragradient_step(inst, [1.2, 0.9])
        b = default_extragradient_step(inst, [1.2, 0.9])
        assert a == b


class TestExtragradient:
    def test_halfline_contracts_to_zero(self):
        trace = extragradient(halfline_instance(), [1.0], step=0.5)
        assert trace.terminal_status == "converged"
        assert abs(trace.solution[0]) <= SOLVE_TOL
        assert trace.final.psi <= 1e-12
        psis = [rec.psi for rec in trace.iterates]
        assert psis[0] == pytest.approx(0.5)
        assert all(b <= a for a, b in zip(psis, psis[1:]))

    def test_orthant_ncp_closed_form(self):
        # F(x) = x - (1, -1) on the nonnegative orthant solves at max(a, 0)
        trace = extragradient(orthant_shift_instance(a=(1.0, -1.0)), [0.0, 0.0])
        assert trace.terminal_status == "converged"
        np.testing.assert_allclose(trace.solution, [1.0, 0.0], atol=1e-9)

    def test_zero_iterations_at_solution(self):
        trace = extragradient(halfline_instance(), [0.0])
        assert trace.terminal_status == "converged"
        assert trace.n_iterations == 0
        assert len(trace.iterates) == 1

    def test_divergence_status(self):
        # F(x) = -x pushes away from the origin; iterates blow up
        minus_x = PolynomialMap((Polynomial(1, ((-1.0, (1,)),)),))
        inst = ViInstance(minus_x, FeasibleSet(1))
        trace = extragradient(inst, [1.0], step=1.0, max_iter=2000)
        assert trace.terminal_status == "diverged"
        assert trace.solution is None

    def test_max_iter_status(self):
        trace = extragradient(halfline_instance(), [1.0], step=1e-4, max_iter=5)
        assert trace.terminal_status == "max-iter"
        assert len(trace.iterates) == 6

    def test_rejects_nonconvex_set(self):
        inst = ViInstance(planar_instance().F, quadratic_box_set([0, 0], [2, 2]))
        with pytest.raises(UnsupportedSetError):
            extragradient(inst, [1.0, 1.0])

    def test_rejects_infeasible_start(self):
        with pytest.raises(InfeasiblePointError):
            extragradient(halfline_instance(), [-1.0])

    def test_converged_point_is_stationary(self):
        for inst, x0 in ((halfline_instance(), [1.0]),
                         (orthant_shift_instance(a=(1.0, -1.0)), [0.5, 0.5])):
            trace = extragradient(inst, x0)
            assert trace.terminal_status == "converged"
            res, _ = stationarity_residual(inst, trace.solution)
            assert res <= 10 * SOLVE_TOL
            assert regularized_gap(inst, trace.solution) <= 1e-10

    @pytest.mark.parametrize("seed", range(3))
    def test_linear_rate_on_strongly_monotone_affine(self, seed):
        rng = np.random.default_rng(400 + seed)
        M = rng.normal(size=(2, 2))
        A = M @ M.T + 2.0 * np.eye(2)
        b = rng.normal(size=2)
        inst = affine_instance(A, b)
        trace = extragradient(inst, rng.normal(size=2), max_iter=50_000)
        assert trace.terminal_status == "converged"
        psis = [r.psi for r in trace.iterates]
        tail = [(p1, p0) for p0, p1 in zip(psis, psis[1:]) if p0 > 1e-13]
        ratios = [p1 / p0 for p1, p0 in tail[-20:]]
        assert ratios and max(ratios) <= 1 - 1e-4


class TestGapDescent:
    def test_halfline_descends_to_solution(self):
        trace = gap_descent(halfline_instance(), [1.0])
        assert trace.terminal_status == "converged"
        assert trace.final.psi <= 1e-12
        psis = [rec.psi for rec in trace.iterates]
        assert all(b <= a + 1e-15 for a, b in zip(psis, psis[1:]))

    def test_zero_iterations_at_solution(self):
        trace = gap_descent(halfline_instance(), [0.0])
        assert trace.terminal_status == "converged"
        assert trace.n_iterations == 0

    def test_planar_local_basin(self):
        trace = gap_descent(planar_instance(), [1.2, 0.9], max_iter=20_000)
        assert trace.terminal_status == "converged"
        np.testing.assert_allclose(trace.solution, [1.0, 1.0], atol=1e-8)
        assert trace.final.psi <= 1e-12

    def test_monotone_gap_on_orthant(self):
        trace = gap_descent(orthant_shift_instance(a=(1.0, -1.0)), [2.0, 2.0])
        psis = [rec.psi for rec in trace.iterates]
        assert all(b <= a + 1e-15 for a, b in zip(psis, psis[1:]))
        assert trace.terminal_status == "converged"

    def test_stalled_when_halvings_exhausted(self):
        # from x0 = 1 with F(x) = x on free space, decrease needs t < 2;
        # starting at 2**70 with 60 halvings the smallest trial is 2**10
        F = PolynomialMap((Polynomial(1, ((1.0, (1,)),)),))
        inst = ViInstance(F, FeasibleSet(1))
        trace = gap_descent(inst, [1.0], step0=float(2 ** 70))
        assert trace.terminal_status == "stalled"
        assert trace.solution is None

    def test_records_accepted_steps(self):
        trace = gap_descent(halfline_instance(), [1.0])
        assert trace.iterates[0].step is None
        assert all(rec.step > 0 for rec in trace.iterates[1:])


class TestCorrelateRate:
    def test_sqrt_two_ratio_for_identity_map(self):
        trace = extragradient(halfline_instance(), [1.0], step=0.5)
        table = correlate_rate(trace, [[0.0]], Fraction(1, 2))
        live = [row for row in table.rows if row.psi > 1e-20]
        assert len(live) >= 10
        for row in live:
            assert row.ratio == pytest.approx(math.sqrt(2), rel=1e-9)
        assert not table.empty_zero_set

    def test_final_row_of_converged_trace(self):
        trace = extragradient(halfline_instance(), [1.0], step=0.5)
        table = correlate_rate(trace, [[0.0]], Fraction(1, 2))
        assert table.rows[-1].dist <= 10 * SOLVE_TOL
        assert table.rows[-1].psi <= 1e-12

    def test_empty_zero_set_convention(self):
        trace = extragradient(halfline_instance(), [1.0], step=0.5)
        table = correlate_rate(trace, [], Fraction(1, 2))
        assert table.empty_zero_set
        assert all(row.dist == 1.0 for row in table.rows)

    def test_row_count_matches_trace(self):
        trace = extragradient(halfline_instance(), [1.0], step=0.5, max_iter=7)
        table = correlate_rate(trace, [[0.0]], Fraction(1, 648))
        assert len(table.rows) == len(trace.iterates)
        assert [row.k for row in table.rows] == [rec.k for rec in trace.iterates]
