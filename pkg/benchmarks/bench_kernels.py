"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 3] [--grid 17]

Each kernel runs once per backend to warm up (numba compiles on first call),
then ``repeat`` timed runs; the best time is reported with the max difference
between the two backends' outputs.
"""
import argparse
import time

import numpy as np

from qhessian import _accel, kernels
from qhessian import quatlinalg as ql
from qhessian.capacity import CompactMask
from qhessian.hessop import GridFunction, GridSpec, geometry
from qhessian.solver import DirichletProblem, solve_dirichlet


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def case_eigvals(P):
    rng = np.random.default_rng(0)
    A = np.stack([ql.complex_adjoint(ql.random_hyperhermitian(rng, 2)) for _ in range(P**3)])
    return lambda: np.sort(kernels.hermitian_eigvals(A.copy())[0], axis=-1)


def case_laplace(P):
    spec = GridSpec(1, P)
    g = geometry(spec)
    X = spec.coords()

    def run():
        v = np.zeros(spec.size)
        v[g.boundary_idx] = X[g.boundary_idx, 0] * X[g.boundary_idx, 1]
        kernels.laplace_sor(v, g.red, g.black, spec.strides, 1.7, 1e-10, 100_000)
        return v

    return run


def case_psor(P):
    spec = GridSpec(1, P)
    g = geometry(spec)
    K = CompactMask.ball(spec, 0.3)
    free = g.interior & ~K.K
    red, black = g.red[free[g.red]], g.black[free[g.black]]

    def run():
        v = np.zeros(spec.size)
        v[K.K] = -1.0
        for _ in range(200):
            kernels.psor_sweep(v, red, black, spec.strides, 1.7, 0.0)
        return v

    return run


def case_solve(P):
    spec = GridSpec(1, P)
    b = GridFunction.from_function(spec, lambda X: X[:, 0] ** 2 - X[:, 1] * X[:, 2], "boundary")

    def run():
        u, _ = solve_dirichlet(DirichletProblem(spec, 1, b))
        return u.values

    return run


CASES = {"eigvals": case_eigvals, "laplace_sor": case_laplace, "psor": case_psor, "solve": case_solve}


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--grid", type=int, default=13)
    p.add_argument("--cases", nargs="+", default=list(CASES), choices=list(CASES))
    args = p.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':<12} {'numba [s]':>10} {'numpy [s]':>10} {'speedup':>8} {'max diff':>10}")
    for name in args.cases:
        res = {}
        for backend in ("numba", "numpy"):
            _accel.set_backend(backend)
            res[backend] = best_of(CASES[name](args.grid), args.repeat)
        (tn, on), (tp, op) = res["numba"], res["numpy"]
        print(f"{name:<12} {tn:10.4f} {tp:10.4f} {tp / tn:8.1f} {np.max(np.abs(on - op)):10.2e}")
    _accel.set_backend("numba")


if __name__ == "__main__":
    main()
