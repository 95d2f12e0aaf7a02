import numpy as np
import pytest

from qhessian import exterior as ext
from qhessian.errors import ShapeMismatch
from qhessian.hessop import GridFunction, GridSpec, geometry
from qhessian.oracles import poisson_oracle
from qhessian.solver import (
    Continuation, DirichletProblem, barrier_psi, comparison_check, initial_guess, local_homogeneous_value,
    manufactured_problem, maximality_check, solve_dirichlet,
)
from qhessian.verify import make_rng, random_subsolution


def _problem(spec, fn, m=1, cont=None):
    return DirichletProblem(spec, m, GridFunction.from_function(spec, fn, "boundary"),
                            continuation=cont or Continuation())


def test_continuation_levels():
    assert Continuation(1.0, 0.25, 1e-2).levels() == [1.0, 0.25, 0.0625, 0.015625, 1e-2]
    with pytest.raises(ValueError):
        Continuation(1e-3, 0.5, 1.0)


def test_m_out_of_range():
    spec = GridSpec(1, 5)
    with pytest.raises(ShapeMismatch):
        _problem(spec, lambda X: X[:, 0], m=2)


def test_initial_guess_is_subsolution():
    spec = GridSpec(1, 9)
    prob = _problem(spec, lambda X: X[:, 1])
    u, C = initial_guess(prob)
    g = geometry(spec)
    assert C >= 1.0
    np.testing.assert_allclose(u.values[g.boundary_idx], prob.boundary.values[g.boundary_idx])
    assert np.all(barrier_psi(spec)[g.interior_idx] <= 0)


@pytest.mark.parametrize("fn", [lambda X: X[:, 0], lambda X: np.full(len(X), 2.5)])
def test_linear_and_constant_data(fn):
    spec = GridSpec(1, 9)
    g = geometry(spec)
    u, rep = solve_dirichlet(_problem(spec, fn, cont=Continuation(1.0, 0.25, 1e-8)))
    assert rep.success
    np.testing.assert_allclose(u.values[g.interior_idx], fn(spec.coords(g.interior_idx)), atol=1e-8)


def test_matches_linear_oracle_at_every_level():
    spec = GridSpec(1, 9)
    g = geometry(spec)
    prob = _problem(spec, lambda X: X[:, 0] ** 2 - X[:, 2] ** 2 / 2, cont=Continuation(1.0, 0.1, 1e-3))
    u, rep = solve_dirichlet(prob)
    ref = poisson_oracle(prob, 1e-3)
    np.testing.assert_allclose(u.values[g.interior_idx], ref[g.interior_idx], atol=1e-9)
    assert rep.monotonicity_violation <= 1e-10


def test_manufactured_quadratic_is_exact():
    spec = GridSpec(2, 5)
    u = ext.PolyScalar.norm2(8, 1.0) + ext.PolyScalar.coord(8, 0, 1.0) * ext.PolyScalar.coord(8, 5, 0.3)
    g = geometry(spec)
    for m in (1, 2):
        w, rep = solve_dirichlet(manufactured_problem(spec, m, u))
        assert rep.success
        np.testing.assert_allclose(w.values[g.interior_idx], u(spec.coords(g.interior_idx)), atol=1e-9)


def test_comparison_with_random_subsolutions():
    spec = GridSpec(1, 9)
    u, _ = solve_dirichlet(_problem(spec, lambda X: X[:, 0] * X[:, 1]))
    r = make_rng(0)
    for _ in range(10):
        assert comparison_check(u, random_subsolution(r, spec, u), 1)["passed"]


def test_maximality_of_homogeneous_solution():
    spec = GridSpec(1, 9)
    u, _ = solve_dirichlet(_problem(spec, lambda X: X[:, 0] ** 2 - X[:, 3] ** 2))
    res = maximality_check(u, 1)
    assert res["residual_test"] and res["resolve_test"]


def test_local_value_inverts_the_stencil():
    # H_rest = t I (n = 1); the node value c with S_1(H_rest - 16 c / h^2) = 0 is h^2 t / 16
    h = 0.25
    Hrest = np.zeros((1, 1, 1, 4))
    Hrest[0, 0, 0, 0] = 3.0
    assert local_homogeneous_value(Hrest, 1, h)[0] == pytest.approx(h**2 * 3.0 / 16)


def test_harmonic_extension_examples():
    from qhessian.solver import harmonic_extension

    spec = GridSpec(1, 9)
    g = geometry(spec)
    one = harmonic_extension(GridFunction.from_function(spec, lambda X: np.ones(len(X)), "boundary"))
    np.testing.assert_allclose(one.on("interior"), 1.0, atol=1e-10)
    x0 = harmonic_extension(GridFunction.from_function(spec, lambda X: X[:, 0], "boundary"))
    np.testing.assert_allclose(x0.on("interior"), spec.coords(g.interior_idx)[:, 0], atol=1e-9)
    rnd = GridFunction(spec, make_rng(1).normal(size=spec.size), "boundary")
    h = harmonic_extension(rnd)
    b = rnd.values[g.boundary_idx]
    assert b.min() - 1e-12 <= h.on("interior").min() and h.on("interior").max() <= b.max() + 1e-12


def test_initial_guess_below_harmonic_extension():
    from qhessian.solver import harmonic_extension

    spec = GridSpec(1, 9)
    prob = _problem(spec, lambda X: np.sin(2 * X[:, 0]) + X[:, 3] ** 3)
    u, _ = initial_guess(prob)
    assert np.all(u.on("interior") <= harmonic_extension(prob.boundary).on("interior") + 1e-12)


def test_boundary_fidelity_and_refinement_echo():
    reps = []
    for P in (9, 17):
        spec = GridSpec(1, P)
        _, rep = solve_dirichlet(_problem(spec, lambda X: X[:, 0] ** 2 - 0.5 * X[:, 1] * X[:, 2] + 0.3 * X[:, 3]))
        assert rep.boundary_sup_error == 0.0
        reps.append(rep)
    assert reps[1].lipschitz_sup <= 1.5 * reps[0].lipschitz_sup
    # near the staircase the second differences grow like 1/h; away from it they stay bounded
    assert reps[1].second_diff_sup_deep <= 1.5 * reps[0].second_diff_sup_deep


def test_maximality_examples():
    spec = GridSpec(1, 9)
    lin = GridFunction.from_function(spec, lambda X: X[:, 0] - 2 * X[:, 2])
    assert maximality_check(lin, 1)["passed"]
    sq = GridFunction.from_function(spec, lambda X: np.sum(X**2, axis=1))
    assert not maximality_check(sq, 1)["residual_test"]


def test_comparison_examples():
    spec = GridSpec(1, 9)
    fn = lambda X: X[:, 0] * X[:, 1] + X[:, 2]
    u, _ = solve_dirichlet(_problem(spec, fn))
    shifted = GridFunction(spec, u.values - 0.1)
    assert comparison_check(u, shifted, 1)["passed"]
    # denser right-hand side gives a smaller solution
    dense = GridFunction(spec, np.where(geometry(spec).interior, 5.0, 0.0), "density")
    prob = DirichletProblem(spec, 1, GridFunction.from_function(spec, fn, "boundary"), dense)
    v, _ = solve_dirichlet(prob)
    assert comparison_check(u, v, 1)["passed"]
