"""Acceptance criteria, each run at its stated size and tolerance.

Every test appends one PASS/FAIL line to ``RESULTS``; conftest prints them
in the terminal summary.  ``python tests/test_acceptance.py`` runs the same
checks outside pytest.
"""
import time
from math import factorial

import numpy as np
import pytest

from qhessian import exterior as ext
from qhessian import quatlinalg as ql
from qhessian import verify
from qhessian.capacity import CompactMask, capacity_estimate
from qhessian.hessop import GridFunction, GridSpec, bridge_factor, geometry
from qhessian.oracles import ball_capacity_n1
from qhessian.radial import radial_solve, radial_w_exact
from qhessian.solver import (
    Continuation, DirichletProblem, comparison_check, manufactured_problem, maximality_check, solve_dirichlet,
)

RESULTS = []
SEED = 20240611


def record(number, title, passed, detail, elapsed, budget):
    ok = bool(passed and elapsed <= budget)
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {title}: {detail} ({elapsed:.1f}s / {budget:.0f}s)"
    RESULTS.append(line)
    print(line)
    return ok


def _failed(report):
    return [f"{c['name']} ({c['failures']}/{c['checked']}, worst {c['worst']:.2e})" for c in report["checks"] if not c["passed"]]


def _summary(report):
    return ", ".join(f"{c['name']} {c['checked']}x worst {c['worst']:.1e}" for c in report["checks"])


def test_01_moore_fixtures():
    t0 = time.perf_counter()
    exact = []
    for name, A, expect in verify.moore_fixtures():
        exact.append(ql.moore_det_permutation(A) == expect)
        exact.append(abs(ql.moore_det(A) - expect) <= 1e-12)
    rep = verify.suite_algebra(SEED, count=1000)
    sq = next(c for c in rep["checks"] if c["name"] == "moore_squared_vs_adjoint_det")
    ok = all(exact) and rep["passed"] and sq["checked"] == 1000 and sq["worst"] <= 1e-8
    dt = time.perf_counter() - t0
    assert record(1, "Moore determinant fixtures", ok,
                  f"fixtures exact={all(exact)}, 1000 random det^2 vs LU worst rel {sq['worst']:.2e}", dt, 10), _failed(rep)


def test_02_exterior_identities():
    t0 = time.perf_counter()
    rep = verify.suite_forms(SEED, count=200, nmax=3)
    dt = time.perf_counter() - t0
    assert record(2, "exterior identities (exact rationals)", rep["passed"], _summary(rep)[:160] + "...", dt, 60), _failed(rep)


def test_03_matrix_forms_bridge():
    t0 = time.perf_counter()
    rep = verify.suite_crosscheck(SEED, n_values=(1, 2, 3), quadratics=50, cubics=20)
    br = rep["checks"][0]
    dt = time.perf_counter() - t0
    ok = rep["passed"] and br["worst"] <= 1e-8
    assert record(3, "matrix/forms bridge", ok,
                  f"{br['checked']} polynomials over (n<=3, m<=n), max rel error {br['worst']:.2e}", dt, 120), _failed(rep)


def test_04_garding():
    t0 = time.perf_counter()
    rep = verify.suite_garding(SEED, count=1000, nmax=4, slack=1e-10)
    dt = time.perf_counter() - t0
    byname = {c["name"]: c for c in rep["checks"]}
    detail = (f"M {byname['garding_M']['checked']} pairs worst {byname['garding_M']['worst']:.1e}, "
              f"trace worst {byname['garding_trace']['worst']:.1e}, Euler worst {byname['euler_identity']['worst']:.1e}")
    assert record(4, "Garding inequalities and Euler identity", rep["passed"], detail, dt, 30), _failed(rep)


def test_05_cones():
    t0 = time.perf_counter()
    rep = verify.suite_cones(SEED, count=1000, nmax=4, slack=1e-10)
    dt = time.perf_counter() - t0
    assert record(5, "cone nesting, Maclaurin, concavity", rep["passed"], _summary(rep), dt, 10), _failed(rep)


def _quartic():
    x = [ext.PolyScalar.coord(4, k, 1.0) for k in range(4)]
    return (ext.PolyScalar.norm2(4, 1.0) + x[0] * x[1] * 0.5 + x[0] * x[0] * x[0] * x[0] * 0.3
            + x[0] * x[0] * x[2] * x[2] * 0.2)


def _manufactured_error(P, u):
    spec = GridSpec(1, P)
    g = geometry(spec)
    w, rep = solve_dirichlet(manufactured_problem(spec, 1, u))
    err = float(np.max(np.abs(w.values[g.interior_idx] - u(spec.coords(g.interior_idx)))))
    return err, err / spec.h**2, rep.success


@pytest.mark.slow
def test_06_solver_exactness():
    t0 = time.perf_counter()
    spec = GridSpec(1, 17)
    g = geometry(spec)
    lin_err = []
    for fn in (lambda X: X[:, 0], lambda X: np.ones(len(X))):
        b = GridFunction.from_function(spec, fn, "boundary")
        u, rep = solve_dirichlet(DirichletProblem(spec, 1, b, continuation=Continuation(1.0, 0.25, 1e-8)))
        lin_err.append(float(np.max(np.abs(u.values[g.interior_idx] - fn(spec.coords(g.interior_idx))))))
    quad = ext.PolyScalar.norm2(4, 1.0) + ext.PolyScalar.coord(4, 0, 1.0) * ext.PolyScalar.coord(4, 3, 0.4)
    quad_C = [_manufactured_error(P, quad)[1] for P in (9, 17, 33)]
    quart = [_manufactured_error(P, _quartic()) for P in (9, 17, 33)]
    errs = [q[0] for q in quart]
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    Cs = [q[1] for q in quart]
    ok = (max(lin_err) <= 1e-8 and max(quad_C) <= 1.0 and all(q[2] for q in quart)
          and all(3.5 <= r <= 4.5 for r in ratios))
    dt = time.perf_counter() - t0
    detail = (f"linear/const sup {max(lin_err):.1e}; quadratic C {max(quad_C):.1e}; "
              f"quartic C={', '.join(f'{c:.4f}' for c in Cs)}, ratios {ratios[0]:.3f}, {ratios[1]:.3f}")
    assert record(6, "solver exactness and h^2 convergence", ok, detail, dt, 900)


@pytest.mark.slow
def test_07_uniqueness_and_comparison():
    t0 = time.perf_counter()
    spec = GridSpec(1, 17)
    g = geometry(spec)
    b = GridFunction.from_function(spec, lambda X: X[:, 0] ** 2 - 0.5 * X[:, 1] * X[:, 2] + 0.3 * X[:, 3], "boundary")
    prob = DirichletProblem(spec, 1, b)
    u1, r1 = solve_dirichlet(prob, c_start=1.0)
    u2, r2 = solve_dirichlet(prob, c_start=4.0 * r1.barrier_C)
    gap = float(np.max(np.abs(u1.values[g.interior_idx] - u2.values[g.interior_idx])))
    rng = verify.make_rng(SEED)
    worst, passes = -np.inf, 0
    for _ in range(100):
        res = comparison_check(u1, verify.random_subsolution(rng, spec, u1), 1, C=1.0)
        worst = max(worst, res["worst_violation"])
        passes += res["passed"]
    ok = gap <= 1e-6 and passes == 100 and r1.barrier_C != r2.barrier_C
    dt = time.perf_counter() - t0
    detail = (f"barriers C={r1.barrier_C:g} vs {r2.barrier_C:g} agree to {gap:.1e}; "
              f"100 subsolutions, max(v - u) {worst:.2e} <= h^2 {spec.h**2:.4f}")
    assert record(7, "uniqueness and comparison", ok, detail, dt, 600)


@pytest.mark.slow
def test_08_maximality():
    t0 = time.perf_counter()
    cases = [
        (GridSpec(1, 17), 1, lambda X: X[:, 0] ** 4 - X[:, 1] ** 2 * X[:, 2]),
        (GridSpec(2, 7), 1, lambda X: X[:, 0] ** 2 - X[:, 5] ** 2 + X[:, 1] * X[:, 6]),
        (GridSpec(2, 7), 2, lambda X: X[:, 0] ** 2 - X[:, 5] ** 2 + X[:, 1] * X[:, 6]),
    ]
    parts, ok = [], True
    for spec, m, fn in cases:
        cont = Continuation(1.0, 0.25, 1e-6)
        u, rep = solve_dirichlet(DirichletProblem(spec, m, GridFunction.from_function(spec, fn, "boundary"),
                                                  continuation=cont))
        res = maximality_check(u, m, tol=1e-5, C=1.0)
        ok &= res["passed"] and rep.success
        parts.append(f"n={spec.n} m={m}: S {res['max_sigma']:.1e}, re-solve {res['resolve_error']:.1e}")
    dt = time.perf_counter() - t0
    assert record(8, "maximality of homogeneous limits", ok, "; ".join(parts), dt, 600)


def _cap(K):
    return capacity_estimate(K, 1, tol=1e-8)


@pytest.mark.slow
def test_09_capacity_axioms():
    t0 = time.perf_counter()
    slack = 0.05
    spec = GridSpec(1, 33)
    radii = (0.15, 0.25, 0.35, 0.45)
    balls = [_cap(CompactMask.ball(spec, r)) for r in radii]
    mono = all(a <= b * (1 + 1e-9) for a, b in zip(balls, balls[1:]))
    # antitone in Omega: same K in nested balls on one lattice
    K = CompactMask.ball(spec, 0.2)
    omegas = [_cap(K.on(spec.sub_ball(R))) for R in (1.0, 0.8, 0.6)]
    anti = all(b >= a * (1 - slack) for a, b in zip(omegas, omegas[1:]))
    # subadditivity on two disjoint balls and on two overlapping balls
    sub_ok = []
    for off in (0.4, 0.12):
        c = np.zeros(4)
        c[0] = off
        K1, K2 = CompactMask.ball(spec, 0.2, c), CompactMask.ball(spec, 0.2, -c)
        c1, c2, c12 = _cap(K1), _cap(K2), _cap(CompactMask.union(K1, K2))
        sub_ok.append(c12 <= (c1 + c2) * (1 + slack))
    # exhaustion: slabs E_j = K cap {x_0 <= t_j} increase to K
    K = CompactMask.ball(spec, 0.3)
    X = spec.coords()
    full = _cap(K)
    seq = []
    for t in (-0.1, 0.0, 0.1, 0.2, 0.3):
        seq.append(_cap(CompactMask(spec, K.K & (X[:, 0] <= t + 1e-12))))
    exh = all(a <= b * (1 + 1e-9) for a, b in zip(seq, seq[1:])) and abs(seq[-1] - full) <= slack * full
    ok = mono and anti and all(sub_ok) and exh
    dt = time.perf_counter() - t0
    detail = (f"balls {', '.join(f'{c:.3f}' for c in balls)} (closed form at 0.25: {ball_capacity_n1(0.25, 1.0):.3f}); "
              f"Omega-shrink {', '.join(f'{c:.3f}' for c in omegas)}; subadditive {sub_ok}; "
              f"exhaustion {', '.join(f'{c:.3f}' for c in seq)} -> {full:.3f}")
    assert record(9, "capacity axioms at n = 1", ok, detail, dt, 600)


@pytest.mark.slow
def test_10_radial_crossvalidation():
    t0 = time.perf_counter()
    n = 2
    r = np.linspace(0.0, 1.0, 41)
    prof_err = []
    for m in (1, 2):
        for T in (0.5, 3.0):
            prof = radial_solve(0.7, m, n, r, T=T)
            exact = 0.7 + 0.5 * radial_w_exact(n, m, T) * (r**2 - 1.0)
            prof_err.append(float(np.max(np.abs(prof.u - exact))))
    # coarse full-grid run with a radial density and the radial profile on the boundary layer
    spec = GridSpec(2, 7)
    g = geometry(spec)
    Tf = lambda s: 1.0 + s**2
    rad = np.linalg.norm(spec.coords(), axis=1)
    prof = radial_solve(0.0, 1, n, rad[g.domain], T=Tf)
    ref = np.zeros(spec.size)
    ref[g.domain] = prof.u
    a = 1e-6
    dens = np.zeros(spec.size)
    dens[g.interior_idx] = bridge_factor(n, 1) * Tf(rad[g.interior_idx]) - a * factorial(n)
    prob = DirichletProblem(spec, 1, GridFunction(spec, ref, "boundary"), GridFunction(spec, dens, "density"),
                            Continuation(1.0, 0.25, a))
    u, rep = solve_dirichlet(prob)
    grid_err = float(np.max(np.abs(u.values[g.interior_idx] - ref[g.interior_idx])))
    ok = max(prof_err) <= 1e-8 and grid_err <= 5e-2 and rep.success
    dt = time.perf_counter() - t0
    detail = f"radial vs exact quadratic {max(prof_err):.1e}; full grid n=2 P=7 vs radial {grid_err:.1e}"
    assert record(10, "radial cross-validation", ok, detail, dt, 600)


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
            except AssertionError:
                failed += 1
    print("\n".join(RESULTS))
    sys.exit(1 if failed else 0)
