from fractions import Fraction
from math import factorial

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qhessian import exterior as ext
from qhessian.errors import DegreeOverflow
from qhessian.verify import make_rng, random_form

seeds = st.integers(0, 2**32)


def test_wedge_of_basis_forms_anticommutes():
    a = ext.PolyForm.basis(2, (0,))
    b = ext.PolyForm.basis(2, (1,))
    assert (ext.wedge(a, b) + ext.wedge(b, a)).is_zero()
    assert ext.wedge(a, a).is_zero()


@given(seeds, st.integers(1, 3))
def test_d_squares_and_anticommutator_vanish(seed, n):
    r = make_rng(seed)
    F = random_form(r, n, int(r.integers(0, 2 * n - 1)))
    assert ext.d0(ext.d0(F)).is_zero()
    assert ext.d1(ext.d1(F)).is_zero()
    assert (ext.d0(ext.d1(F)) + ext.d1(ext.d0(F))).is_zero()


@given(seeds, st.integers(1, 3))
def test_leibniz_rule(seed, n):
    r = make_rng(seed)
    p = int(r.integers(0, 2 * n - 1))
    q = int(r.integers(0, 2 * n - p))
    F = random_form(r, n, p)
    G = random_form(r, n, q, degree=2, nterms=2)
    sign = -1 if p % 2 else 1
    for d in (ext.d0, ext.d1):
        lhs = d(ext.wedge(F, G))
        rhs = ext.wedge(d(F), G) + ext.wedge(F, d(G)).scale(sign)
        assert (lhs - rhs).is_zero()


@pytest.mark.parametrize("n", [1, 2, 3])
def test_baston_of_norm2_is_beta(n):
    u = ext.PolyScalar.norm2(4 * n, Fraction(1, 8))
    assert ext.baston(u, n) == ext.beta(n)
    top = ext.wedge_power(ext.beta(n), n).top_coefficient()
    assert top[0] == factorial(n) and top[1].is_zero()


@given(seeds, st.integers(1, 3))
def test_baston_is_real_closed_and_equals_d0d1(seed, n):
    r = make_rng(seed)
    u = ext.random_poly(r, 4 * n, 4, 4)
    D = ext.baston(u, n)
    assert D == ext.d0(ext.d1(ext.as_form(u, n)))
    assert ext.is_real_form(D)
    if n >= 2:
        assert ext.d0(D).is_zero() and ext.d1(D).is_zero()


def test_involution_fixes_beta_and_squares_to_sign():
    for n in (1, 2):
        assert ext.is_real_form(ext.beta(n))
        a = ext.PolyForm.basis(n, (0,))
        assert ext.reality_involution(ext.reality_involution(a)) == a.scale(-1)


def test_mixed_product_degree_overflow():
    u = ext.PolyScalar.norm2(4, 1)
    with pytest.raises(DegreeOverflow):
        ext.mixed_ma([u, u], 1)


def test_positivity_of_beta_and_gamma_hat():
    for n in (1, 2, 3):
        b = ext.beta(n, exact=False)
        assert ext.positivity_sample_check(b, trials=16)
        assert ext.in_gamma_hat(b, n)
        assert not ext.in_gamma_hat(b.scale(-1.0), 1)


def test_polynomial_json_roundtrip():
    r = make_rng(7)
    u = ext.random_poly(r, 8, 3, 5)
    assert ext.PolyScalar.from_json(8, u.to_json()) == u
    F = random_form(r, 2, 2)
    assert ext.PolyForm.from_json(F.to_json()) == F


def test_polynomial_evaluation_matches_diff():
    r = make_rng(8)
    u = ext.random_poly(r, 4, 3, 6, exact=False)
    x = r.uniform(-1, 1, size=4)
    eps = 1e-6
    e0 = np.zeros(4)
    e0[2] = eps
    fd = (u(x + e0) - u(x - e0)) / (2 * eps)
    assert u.diff(2)(x) == pytest.approx(fd, rel=1e-6, abs=1e-8)
