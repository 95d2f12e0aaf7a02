import numpy as np
import pytest

from qhessian.capacity import (
    CompactMask, candidate_mass, capacity_estimate, local_check, quadratic_candidate, radial_capacity,
    radial_quadratic_mass,
)
from qhessian.errors import ShapeMismatch
from qhessian.hessop import GridSpec, geometry
from qhessian.oracles import ball_capacity_n1, radial_capacity_quadrature


@pytest.fixture(scope="module")
def spec():
    return GridSpec(1, 13)


def test_radial_capacity_matches_frozen_values(derived):
    for case in derived["ball_capacity"]["balls"]:
        n, m, rho, R = case["n"], case["m"], case["rho"], case["R"]
        assert radial_capacity(n, m, rho, R) == pytest.approx(case["capacity"], rel=1e-12)
        assert radial_capacity_quadrature(n, m, rho, R) == pytest.approx(case["capacity"], rel=1e-10)
    assert ball_capacity_n1(0.3, 1.0) == pytest.approx(derived["ball_capacity"]["n1_closed_form"], rel=1e-14)


def test_capacity_increases_with_K(spec):
    caps = [capacity_estimate(CompactMask.ball(spec, r)) for r in (0.2, 0.35, 0.5)]
    assert caps[0] <= caps[1] <= caps[2]


def test_extremal_is_locally_maximal(spec):
    K = CompactMask.ball(spec, 0.3)
    _, u = capacity_estimate(K, return_extremal=True, tol=1e-12)
    g = geometry(spec)
    free = np.flatnonzero(g.interior & ~K.K)
    assert local_check(u, 1, free) < 1e-8
    assert np.all(u.values <= 1e-12) and np.all(u.values[K.K] == -1.0)


def test_quadratic_candidates_bound_capacity_from_below():
    # radial route: admissible candidates with -1 <= u <= 0 never beat the extremal
    for n, m in ((1, 1), (2, 1), (2, 2)):
        cap = radial_capacity(n, m, 0.3, 1.0)
        for t in (0.2, 0.5, 1.0):
            assert radial_quadratic_mass(n, m, 0.3, t, 1.0) <= cap


def test_grid_candidate_mass_below_estimate(spec):
    K = CompactMask.ball(spec, 0.3)
    cand = quadratic_candidate(spec, 1.0, np.zeros(4), 1.0)
    assert candidate_mass(K, cand) <= capacity_estimate(K) * 1.05


def test_mask_validation(spec):
    with pytest.raises(ShapeMismatch):
        CompactMask(spec, np.zeros(spec.size, dtype=bool))
    with pytest.raises(ShapeMismatch):
        CompactMask(spec, np.ones(spec.size, dtype=bool))
    with pytest.raises(ShapeMismatch):
        capacity_estimate(CompactMask.ball(GridSpec(2, 5), 0.3))


def test_random_candidates_stay_below_extremal_mass(spec):
    rng = np.random.Generator(np.random.Philox(5))
    K = CompactMask.ball(spec, 0.3)
    cap = capacity_estimate(K)
    g = geometry(spec)
    X = spec.coords()
    for _ in range(50):
        Q = rng.normal(size=(4, 4))
        Q = Q @ Q.T + 0.05 * np.eye(4)
        x0 = rng.uniform(-0.2, 0.2, size=4)
        q = np.einsum("ia,ab,ib->i", X - x0, Q, X - x0)
        q = q - q[g.domain].max()
        v = np.zeros(spec.size)
        v[g.domain] = q[g.domain] / abs(q[g.domain].min())
        from qhessian.hessop import GridFunction

        mass = candidate_mass(K, GridFunction(spec, v))
        assert mass <= cap * 1.05


def test_extremal_is_radially_monotone(spec):
    K = CompactMask.ball(spec, 0.3)
    _, u = capacity_estimate(K, return_extremal=True, tol=1e-10)
    g = geometry(spec)
    idx = np.flatnonzero(g.domain)
    r = np.round(np.linalg.norm(spec.coords(idx), axis=1), 12)
    order = np.argsort(r, kind="stable")
    vals = u.values[idx][order]
    rs = r[order]
    # average over each shell, then require non-decreasing shell means
    shells = np.unique(rs)
    means = np.array([vals[rs == s].mean() for s in shells])
    assert np.all(np.diff(means) >= -1e-6)


def test_mask_roundtrip(tmp_path, spec):
    K = CompactMask.ball(spec, 0.3)
    import json

    p = tmp_path / "k.json"
    p.write_text(json.dumps(K.to_json()))
    assert np.array_equal(CompactMask.load(str(p)).K, K.K)
