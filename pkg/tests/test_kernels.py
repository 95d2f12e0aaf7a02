"""The numba kernels and their numpy fallbacks must agree."""
import numpy as np
import pytest

from qhessian import _accel, kernels
from qhessian import quatlinalg as ql
from qhessian.hessop import GridSpec, geometry
from qhessian.verify import make_rng


@pytest.fixture
def backends():
    yield ("numba", "numpy") if _accel.HAVE_NUMBA else ("numpy",)
    _accel.set_backend("numba" if _accel.HAVE_NUMBA else "numpy")


def _run(backend, fn):
    _accel.set_backend(backend)
    return fn()


def test_eigvals_backends_agree(backends):
    r = make_rng(0)
    A = np.stack([ql.complex_adjoint(ql.random_hyperhermitian(r, 3)) for _ in range(20)])
    out = [np.sort(_run(b, lambda: kernels.hermitian_eigvals(A.copy())[0]), axis=-1) for b in backends]
    ref = np.linalg.eigvalsh(A)
    for o in out:
        np.testing.assert_allclose(o, ref, atol=1e-11)


def test_laplace_sor_backends_agree(backends):
    spec = GridSpec(1, 9)
    g = geometry(spec)
    X = spec.coords()
    res = []
    for b in backends:
        v = np.zeros(spec.size)
        v[g.boundary_idx] = X[g.boundary_idx, 0] ** 2 - X[g.boundary_idx, 1] ** 2
        _run(b, lambda: kernels.laplace_sor(v, g.red, g.black, spec.strides, 1.5, 1e-12, 10_000))
        res.append(v)
    # the harmonic polynomial is reproduced exactly by the 5-point stencil
    exact = X[:, 0] ** 2 - X[:, 1] ** 2
    for v in res:
        np.testing.assert_allclose(v[g.interior_idx], exact[g.interior_idx], atol=1e-9)


def test_psor_backends_agree(backends):
    spec = GridSpec(1, 9)
    g = geometry(spec)
    outs = []
    for b in backends:
        v = np.zeros(spec.size)
        K = np.flatnonzero(np.sum(spec.coords() ** 2, axis=1) <= 0.1)
        v[K] = -1.0
        free = g.interior.copy()
        free[K] = False
        red, black = g.red[free[g.red]], g.black[free[g.black]]
        for _ in range(50):
            _run(b, lambda: kernels.psor_sweep(v, red, black, spec.strides, 1.2, 0.0))
        outs.append(v)
    for o in outs[1:]:
        np.testing.assert_allclose(o, outs[0], atol=1e-12)


def test_apply_operator_backends_agree(backends):
    r = make_rng(2)
    spec = GridSpec(1, 7)
    g = geometry(spec)
    idx = g.interior_idx
    offa = np.array(spec.strides, dtype=np.int64)
    offb = offa.copy()
    K = r.uniform(0.5, 1.5, size=(idx.size, offa.size))
    v = r.normal(size=spec.size)
    outs = [_run(b, lambda: kernels.apply_operator(v, idx, offa, offb, K, spec.h)) for b in backends]
    for o in outs[1:]:
        np.testing.assert_allclose(o, outs[0], rtol=1e-12, atol=1e-10)


def test_backend_switch_validation():
    with pytest.raises(ValueError):
        _accel.set_backend("fortran")
