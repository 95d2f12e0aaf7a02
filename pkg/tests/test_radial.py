import numpy as np
import pytest

from qhessian.errors import OracleMismatch
from qhessian.radial import fit_radial_functionals, radial_solve, radial_w_exact


@pytest.mark.parametrize("n", [1, 2, 3])
def test_fitted_functionals_pass_holdout(n):
    fun = fit_radial_functionals(n)
    assert fun.holdout_error < 1e-10
    # Hessian of r^2 is 16 I: alpha = beta = 16 when u'' = u'/r = 2
    alpha, beta = fun.spectrum(2.0, 2.0)
    assert beta == pytest.approx(16.0)
    if n > 1:
        assert alpha == pytest.approx(16.0)


@pytest.mark.parametrize("n,m", [(1, 1), (2, 1), (2, 2), (3, 2)])
def test_constant_target_gives_quadratic(n, m):
    T = 3.0
    r = np.linspace(0, 1, 21)
    prof = radial_solve(0.5, m, n, r, T=T)
    w = radial_w_exact(n, m, T)
    np.testing.assert_allclose(prof.u, 0.5 + 0.5 * w * (r**2 - 1.0), atol=1e-9)


def test_zero_target_is_constant():
    prof = radial_solve(2.0, 1, 2, np.linspace(0, 1, 5), T=0.0)
    np.testing.assert_array_equal(prof.u, 2.0)


def test_variable_target_is_monotone():
    prof = radial_solve(0.0, 1, 2, np.linspace(0, 1, 11), T=lambda r: 1.0 + r**2)
    assert np.all(np.diff(prof.u) > 0) and abs(prof.u[-1]) < 1e-10
