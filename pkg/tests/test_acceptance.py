"""End-to-end acceptance checks for the package's headline guarantees.

Every test prints exactly one machine-greppable line

    [acceptance N] <label>: PASS|FAIL -- <measured numbers>

(run ``pytest tests/test_acceptance.py -v -s`` to see the lines on
success; pytest shows them automatically on failure).  Stated runtime
budgets are asserted, not advisory.
"""

import math
import time
from fractions import Fraction

import numpy as np

from gapbound import (
    FeasibleSet,
    PolynomialMap,
    ViInstance,
    ZeroSetEstimate,
    affine,
    clarke_generators,
    cloud_from_points,
    constant,
    correlate_rate,
    exponent_denominator,
    extragradient,
    gap_descent,
    natural_residual,
    regularized_gap,
    stationarity_residual,
    variable,
    verify_error_bound,
    verify_lojasiewicz,
)

from _common import (
    fd_gradient,
    halfline_instance,
    orthant_shift_instance,
    planar_instance,
    quadratic_box_set,
    random_map,
)


def _report(criterion: int, label: str, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"[acceptance {criterion}] {label}: {status} -- {detail}")
    assert ok, f"[acceptance {criterion}] {label}: {detail}"


def test_1_counterexample_ray_defeats_every_exponent():
    t0 = time.perf_counter()
    inst = planar_instance()
    ks = range(1, 41)
    points = [np.array([float(k), 1.0 / k]) for k in ks]

    worst = max(abs(regularized_gap(inst, p) - 0.5 * (1.0 / k - 1.0) ** 2)
                for k, p in zip(ks, points))
    dists = [float(np.linalg.norm(p - np.array([1.0, 1.0]))) for p in points]
    unbounded = (all(b > a for a, b in zip(dists, dists[1:]))
                 and all(d >= k - 1 for k, d in zip(ks, dists)))

    cloud = cloud_from_points(inst, points)
    zero = ZeroSetEstimate((np.array([1.0, 1.0]),), 1e-12)
    verdicts = [verify_error_bound(inst, cloud, zero, a).verdict
                for a in (Fraction(1, 2), Fraction(1, 6), Fraction(1, 648))]
    elapsed = time.perf_counter() - t0

    ok = (worst <= 1e-12 and unbounded
          and all(v == "fails" for v in verdicts) and elapsed < 1.0)
    _report(1, "counterexample ray defeats every exponent", ok,
            f"max|psi-closed form|={worst:.2e}, dist 0->{dists[-1]:.1f} "
            f"monotone={unbounded}, verdicts={verdicts}, {elapsed:.3f}s<1s")


def test_2_exponent_denominator_table():
    t0 = time.perf_counter()
    linear_ok = all(exponent_denominator(n, 1) == 1 for n in range(1, 21))
    table_ok = (exponent_denominator(2, 2) == 6
                and exponent_denominator(4, 3) == 648
                and exponent_denominator(14, 3) == 39182082048)
    elapsed = time.perf_counter() - t0
    ok = linear_ok and table_ok and elapsed < 0.1
    _report(2, "exponent denominator table", ok,
            f"R(n,1)=1 for n<=20: {linear_ok}, R(2,2)=6, R(4,3)=648, "
            f"R(14,3)={exponent_denominator(14, 3)}, {elapsed:.4f}s<0.1s")


def test_3_strongly_monotone_halfline_distance_bound():
    t0 = time.perf_counter()
    inst = halfline_instance()
    grid = np.linspace(0.0, 1.0, 100)
    worst = max(abs(regularized_gap(inst, [x]) - x * x / 2) for x in grid)

    cloud = cloud_from_points(inst, [np.array([x]) for x in grid])
    zero = ZeroSetEstimate((np.zeros(1),), 1e-12)
    half = verify_error_bound(inst, cloud, zero, Fraction(1, 2))
    tiny = verify_error_bound(inst, cloud, zero, Fraction(1, 648))
    elapsed = time.perf_counter() - t0

    ok = (worst <= 1e-12
          and half.fitted_alpha is not None
          and abs(half.fitted_alpha - 0.5) <= 0.01
          and 0.70 <= half.c_star <= 0.7072
          and half.verdict == "holds"
          and tiny.verdict == "holds"
          and elapsed < 1.0)
    _report(3, "strongly monotone halfline distance bound", ok,
            f"max|psi-x^2/2|={worst:.2e}, fitted_alpha={half.fitted_alpha}, "
            f"c_star(1/2)={half.c_star:.10f}, verdict(1/648)={tiny.verdict}, "
            f"{elapsed:.3f}s<1s")


def test_4_halfline_gradient_bound_near_origin():
    t0 = time.perf_counter()
    inst = halfline_instance()
    grid = np.linspace(0.01, 1.0, 100)  # (0, 1]
    worst = max(abs(stationarity_residual(inst, [x])[0] - x) for x in grid)

    cloud = cloud_from_points(inst, [np.array([x]) for x in grid])
    report = verify_lojasiewicz(inst, np.zeros(1), 1.0, cloud,
                                Fraction(1, 648))
    elapsed = time.perf_counter() - t0

    ok = (worst <= 1e-8 and report.verdict == "holds"
          and report.c_star >= 1.9 and elapsed < 1.0)
    _report(4, "halfline gradient bound near origin", ok,
            f"max|residual-x|={worst:.2e}, verdict={report.verdict}, "
            f"c_star={report.c_star:.6f}>=1.9, {elapsed:.3f}s<1s")


def test_5_convex_generator_matches_finite_differences():
    t0 = time.perf_counter()
    total = 0
    worst = 0.0
    per_instance = 40  # 5 instances x 40 points = 200 seeded points
    for seed in range(5):
        rng = np.random.default_rng(8000 + seed)
        n = int(rng.integers(1, 4))
        F = random_map(rng, n, max_degree=2)
        k = int(rng.integers(1, 4))
        A = rng.normal(size=(k, n))
        b = rng.uniform(0.5, 1.5, size=k)
        omega = FeasibleSet(
            n, ineqs=tuple(affine(A[i], -b[i]) for i in range(k)),
            declared_convex=True)
        inst = ViInstance(F, omega)
        checked = 0
        for _ in range(4000):
            if checked == per_instance:
                break
            x = rng.uniform(-1.5, 1.5, size=n)
            if not _stencil_keeps_active_set(inst, x, h=1e-6):
                continue
            gens = clarke_generators(inst, x)
            if len(gens) != 1:
                worst = math.inf  # convex sets must yield one generator
                break
            fd = fd_gradient(lambda p: regularized_gap(inst, p), x, h=1e-6)
            rel = float(np.linalg.norm(fd - gens[0])
                        / max(1.0, np.linalg.norm(gens[0])))
            worst = max(worst, rel)
            checked += 1
        total += checked
    elapsed = time.perf_counter() - t0

    ok = total == 200 and worst <= 1e-5
    _report(5, "convex generator matches finite differences", ok,
            f"points={total}/200, worst rel err={worst:.2e}<=1e-5, "
            f"{elapsed:.2f}s")


def _stencil_keeps_active_set(inst, x, h):
    # identical active set across the stencil keeps the FD error clean
    def act(p):
        y = inst.omega.project(p - inst.F.eval(p) / inst.rho)
        return tuple(i for i, g in enumerate(inst.omega.ineqs)
                     if abs(g.eval(y)) <= 1e-7)

    base = act(x)
    for i in range(x.size):
        for sign in (-1.0, 1.0):
            xp = x.copy()
            xp[i] += sign * h
            if act(xp) != base:
                return False
    return True


def test_6_gap_value_matches_dense_grid_oracle():
    t0 = time.perf_counter()
    h = 1e-3
    worst_proj = 0.0
    worst_multi = 0.0
    all_ok = True
    for seed in range(10):
        rng = np.random.default_rng(4200 + seed)
        lo = rng.uniform(-0.6, -0.1, size=2)
        hi = rng.uniform(0.1, 0.6, size=2)
        F = random_map(rng, 2, max_degree=2)
        axis_ineqs = []
        for i in range(2):
            e = np.zeros(2)
            e[i] = 1.0
            axis_ineqs.append(affine(e, -hi[i]))    # x_i <= hi_i
            axis_ineqs.append(affine(-e, lo[i]))    # x_i >= lo_i
        box_set = FeasibleSet(2, ineqs=tuple(axis_ineqs),
                              declared_convex=True)
        inst_proj = ViInstance(F, box_set)
        inst_multi = ViInstance(F, quadratic_box_set(lo, hi))
        x = rng.uniform(lo, hi)

        fx = F.eval(x)
        axes = [np.linspace(lo[i], hi[i],
                            int(np.ceil((hi[i] - lo[i]) / h)) + 1)
                for i in range(2)]
        Y1, Y2 = np.meshgrid(axes[0], axes[1], indexing="ij")
        d1, d2 = x[0] - Y1, x[1] - Y2
        grid_max = float(np.max(fx[0] * d1 + fx[1] * d2
                                - 0.5 * (d1 ** 2 + d2 ** 2)))

        corners = [np.array([a, c]) for a in (lo[0], hi[0])
                   for c in (lo[1], hi[1])]
        lip = float(np.linalg.norm(fx)
                    + max(np.linalg.norm(x - c) for c in corners))
        err_proj = abs(regularized_gap(inst_proj, x) - grid_max)
        err_multi = abs(regularized_gap(inst_multi, x) - grid_max)
        worst_proj = max(worst_proj, err_proj / (lip * h))
        worst_multi = max(worst_multi, err_multi / (lip * h))
        all_ok = all_ok and err_proj <= lip * h and err_multi <= lip * h
    elapsed = time.perf_counter() - t0

    _report(6, "gap value matches dense-grid oracle", all_ok,
            f"10 box instances, worst err/(Lip*h): projection="
            f"{worst_proj:.3f}, multistart={worst_multi:.3f} (<=1), "
            f"{elapsed:.2f}s")


def _spd_affine_instance(n, seed, omega):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(n, n))
    A = M @ M.T + 2.0 * np.eye(n)
    b = rng.normal(size=n)
    rows = []
    for i in range(n):
        p = constant(n, float(b[i]))
        for j in range(n):
            p = p + constant(n, float(A[i, j])) * variable(n, j)
        rows.append(p)
    return ViInstance(PolynomialMap(tuple(rows)), omega)


def test_7_solver_contract_on_strongly_monotone_instances():
    t0 = time.perf_counter()
    orthant3 = FeasibleSet(
        3, ineqs=tuple(affine(-np.eye(3)[i], 0.0) for i in range(3)),
        declared_convex=True)
    box2 = FeasibleSet(
        2, ineqs=(affine([1.0, 0.0], -1.0), affine([-1.0, 0.0], 0.0),
                  affine([0.0, 1.0], -1.0), affine([0.0, -1.0], 0.0)),
        declared_convex=True)
    cases = [
        (halfline_instance(), np.array([1.0])),
        (orthant_shift_instance(a=(1.0, -1.0)), np.zeros(2)),
        (_spd_affine_instance(2, 71, FeasibleSet(2)), np.zeros(2)),
        (_spd_affine_instance(3, 72, orthant3), np.ones(3)),
        (_spd_affine_instance(2, 73, box2), np.full(2, 0.5)),
    ]
    failures = []
    for idx, (inst, x0) in enumerate(cases):
        for name, solve in (("extragradient",
                             lambda: extragradient(inst, x0)),
                            ("gap_descent",
                             lambda: gap_descent(inst, x0))):
            trace = solve()
            res = natural_residual(inst, trace.final.x)
            psi = regularized_gap(inst, trace.final.x)
            stat = stationarity_residual(inst, trace.final.x)[0]
            if not (trace.terminal_status == "converged"
                    and res <= 1e-10 and psi <= 1e-10 and stat <= 1e-9):
                failures.append(
                    f"{name}[{idx}]: {trace.terminal_status} "
                    f"res={res:.1e} psi={psi:.1e} stat={stat:.1e}")

    trace = extragradient(halfline_instance(), np.array([1.0]))
    table = correlate_rate(trace, [[0.0]], Fraction(1, 2))
    ratios = [r.ratio for r in table.rows if math.isfinite(r.ratio)]
    ratio_dev = max(abs(r - math.sqrt(2.0)) for r in ratios)
    ratio_ok = len(ratios) >= 5 and ratio_dev <= 1e-6
    elapsed = time.perf_counter() - t0

    ok = not failures and ratio_ok
    _report(7, "solver contract on strongly monotone instances", ok,
            f"10/10 solver runs clean ({failures or 'no failures'}), "
            f"{len(ratios)} rate rows, max|ratio-sqrt2|={ratio_dev:.2e}, "
            f"{elapsed:.2f}s")


def test_8_mfcq_verdicts_and_scale_invariance():
    t0 = time.perf_counter()
    x1 = variable(1, 0)
    orthant = FeasibleSet(
        2, ineqs=(affine([-1.0, 0.0], 0.0), affine([0.0, -1.0], 0.0)),
        declared_convex=True)
    cusp = FeasibleSet(1, ineqs=(x1 * x1,),
                       bounding_box=(np.array([-1.0]), np.array([1.0])))
    dup_eq = FeasibleSet(2, eqs=(affine([1.0, 1.0], 0.0),
                                 affine([2.0, 2.0], 0.0)))

    def scaled(omega):
        return FeasibleSet(
            omega.n,
            ineqs=tuple(constant(omega.n, 2.0) * g for g in omega.ineqs),
            eqs=tuple(constant(omega.n, 2.0) * h for h in omega.eqs),
            declared_convex=omega.declared_convex,
            bounding_box=omega.bounding_box)

    verdicts = {}
    for name, omega, point, expected in (
            ("orthant", orthant, np.zeros(2), True),
            ("cusp", cusp, np.zeros(1), False),
            ("dup-eq", dup_eq, np.zeros(2), False)):
        got = omega.check_mfcq(point).holds
        got_scaled = scaled(omega).check_mfcq(point).holds
        verdicts[name] = (got, got_scaled, expected)
    elapsed = time.perf_counter() - t0

    ok = all(g == e and s == e for g, s, e in verdicts.values())
    _report(8, "constraint qualification verdicts and scale invariance", ok,
            ", ".join(f"{k}: {g}/{s} (want {e})"
                      for k, (g, s, e) in verdicts.items())
            + f", {elapsed:.3f}s")
