"""Independent reference routes used to cross-check the main code paths."""
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .hessop import bridge_factor, geometry
from math import factorial


def poisson_oracle(problem, a):
    """Direct sparse solve of the m = 1 stage equation.

    For m = 1, S~_1(H u) = tr H = 2 (discrete Laplacian of u), so the stage
    equation is the linear problem 2 Lap_h u = T_a with the boundary layer fixed.
    """
    if problem.m != 1:
        raise ValueError("the linear oracle only covers m = 1")
    spec = problem.spec
    g = geometry(spec)
    idx = g.interior_idx
    N = idx.size
    pos = -np.ones(spec.size, dtype=np.int64)
    pos[idx] = np.arange(N)
    h2 = spec.h**2
    rows, cols, vals = [], [], []
    rhs = problem.target(a) / 2.0
    bvals = problem.boundary.values
    rows.append(np.arange(N))
    cols.append(np.arange(N))
    vals.append(np.full(N, -2.0 * spec.dim / h2))
    for s in spec.strides:
        for nb in (idx + s, idx - s):
            inner = pos[nb] >= 0
            rows.append(np.flatnonzero(inner))
            cols.append(pos[nb[inner]])
            vals.append(np.full(inner.sum(), 1.0 / h2))
            rhs[~inner] -= bvals[nb[~inner]] / h2
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))
    if N <= 5_000:
        x = spla.spsolve(A.tocsc(), rhs)
    else:
        # symmetric negative definite: conjugate gradients on -A
        x, info = spla.cg(-A, -rhs, rtol=1e-14, atol=0.0, maxiter=50_000)
        if info != 0:
            raise RuntimeError(f"oracle CG did not converge (info={info})")
    out = np.zeros(spec.size)
    out[g.boundary_idx] = bvals[g.boundary_idx]
    out[idx] = x
    return out


def radial_capacity_quadrature(n, m, rho, R):
    """C_m(B(rho), B(R)) by direct quadrature of the Hessian density.

    The extremal u = (r^g - R^g)/(R^g - rho^g), g = 2 - 4n/m, is continued
    inside B(rho) by the quadratic with matching u'(rho); the Hessian mass on
    the closed ball is then the volume integral of S_m over B(rho), evaluated
    with the fitted radial spectrum and adaptive quadrature.
    """
    from math import gamma, pi
    from scipy.integrate import quad
    from .radial import fit_radial_functionals

    fun = fit_radial_functionals(n)
    g = 2.0 - 4.0 * n / m
    w = g * rho ** (g - 2.0) / (R**g - rho**g)
    d = 4 * n
    sigma = 2.0 * pi ** (d / 2) / gamma(d / 2)
    # inside: u'' = u'/r = w
    val, _ = quad(lambda r: r ** (d - 1) * fun.sigma(m, w, w), 0.0, rho, epsabs=0.0, epsrel=1e-13)
    return bridge_factor(n, m) * sigma * val


def ball_capacity_n1(rho, R):
    """4 pi^2 / (rho^-2 - R^-2): the n = 1 closed form."""
    return 4.0 * np.pi**2 / (rho**-2 - R**-2)
