"""Radial reduction of S~_m(H u) = T on a ball.

For u = u(r), r = |x|, the Hessian spectrum is (beta, alpha, ..., alpha) with
alpha of multiplicity n - 1, both linear in (u'', u'/r).  The coefficients of
these two functionals are not typed in: they are fitted once against the
exact polynomial Hessian of radial monomials and validated on a holdout.
"""
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np
from scipy.integrate import solve_ivp

from . import exterior as ext
from .errors import NonConvergence, OracleMismatch
from .hessop import poly_hessian
from .quatlinalg import eigenvalues


def radial_poly(n, k):
    """|x|^{2k} as a polynomial in 4n variables."""
    r2 = ext.PolyScalar.norm2(4 * n, 1.0)
    out = ext.PolyScalar.const(4 * n, 1.0)
    for _ in range(k):
        out = out * r2
    return out


@dataclass(frozen=True)
class RadialFunctionals:
    """alpha = a[0] u'' + a[1] u'/r,  beta = b[0] u'' + b[1] u'/r."""

    n: int
    a: tuple
    b: tuple
    holdout_error: float

    def spectrum(self, d2u, du_r):
        alpha = self.a[0] * d2u + self.a[1] * du_r
        beta = self.b[0] * d2u + self.b[1] * du_r
        return alpha, beta

    def sigma(self, m, d2u, du_r):
        alpha, beta = self.spectrum(d2u, du_r)
        n = self.n
        return comb(n - 1, m) * alpha**m + comb(n - 1, m - 1) * alpha ** (m - 1) * beta


def _axis_points(rng, n, radii):
    """Points whose only nonzero quaternion coordinate is q_0 (Hessian diagonal there)."""
    X = np.zeros((radii.size, 4 * n))
    dirs = rng.normal(size=(radii.size, 4))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    X[:, :4] = dirs * radii[:, None]
    return X


def _radial_derivs(k, r):
    """(u'', u'/r) for u = r^{2k}."""
    return 2 * k * (2 * k - 1) * r ** (2 * k - 2), 2 * k * r ** (2 * k - 2)


@lru_cache(maxsize=8)
def fit_radial_functionals(n, seed=0, tol=1e-6):
    rng = np.random.default_rng(seed)
    radii = rng.uniform(0.2, 1.0, size=12)
    rows, alpha_obs, beta_obs = [], [], []
    for k in (1, 2, 3):
        u = radial_poly(n, k)
        H = poly_hessian(u, n, _axis_points(rng, n, radii))
        d2, dr = _radial_derivs(k, radii)
        rows.append(np.stack([d2, dr], axis=1))
        beta_obs.append(H[:, 0, 0, 0])
        alpha_obs.append(H[:, 1, 1, 0] if n > 1 else np.zeros(radii.size))
    A = np.concatenate(rows)
    b = np.linalg.lstsq(A, np.concatenate(beta_obs), rcond=None)[0]
    a = np.linalg.lstsq(A, np.concatenate(alpha_obs), rcond=None)[0] if n > 1 else np.zeros(2)
    fun = RadialFunctionals(n, tuple(float(v) for v in a), tuple(float(v) for v in b), 0.0)
    # holdout: u = r^8 - 3 r^4 at generic points, full spectrum comparison
    pts = rng.normal(size=(10, 4 * n))
    pts *= rng.uniform(0.2, 1.0, size=(10, 1)) / np.linalg.norm(pts, axis=1, keepdims=True)
    r = np.linalg.norm(pts, axis=1)
    u = radial_poly(n, 4) + radial_poly(n, 2) * (-3.0)
    lam = eigenvalues(poly_hessian(u, n, pts))
    d2 = 56 * r**6 - 36 * r**2
    dr = 8 * r**6 - 12 * r**2
    alpha, beta = fun.spectrum(d2, dr)
    pred = np.sort(np.concatenate([np.repeat(alpha[:, None], n - 1, axis=1), beta[:, None]], axis=1), axis=1)[:, ::-1]
    err = float(np.max(np.abs(pred - lam) / (1.0 + np.abs(lam))))
    if err > tol or abs(fun.a[0]) > tol:
        raise OracleMismatch(f"radial functionals failed validation (error {err:.2e}, a={fun.a})")
    return RadialFunctionals(n, fun.a, fun.b, err)


@dataclass
class RadialProfile:
    r: np.ndarray
    u: np.ndarray
    du: np.ndarray
    u0: float
    shooting_iters: int

    def __call__(self, r):
        return np.interp(r, self.r, self.u)


def _center_slope(fun, m, T0):
    """w0 = u''(0) = u'/r at the center from S_m = T0 for u ~ u0 + w0 r^2 / 2."""
    n = fun.n
    alpha = fun.a[0] + fun.a[1]
    beta = fun.b[0] + fun.b[1]
    coef = comb(n - 1, m) * alpha**m + comb(n - 1, m - 1) * alpha ** (m - 1) * beta
    return (T0 / coef) ** (1.0 / m)


def radial_solve(g, m, n, r_eval, T=0.0, R=1.0, fun=None, tol=1e-13, max_iter=200):
    """Radial solution with u(R) = g of S~_m(H u) = T (T constant or callable of r).

    The ODE for (u, u') is integrated outward from a small r0 with the regular
    center expansion, and u(0) is found by bisection on the mismatch at R.
    """
    fun = fun or fit_radial_functionals(n)
    r_eval = np.asarray(r_eval, dtype=float)
    Tf = T if callable(T) else (lambda r, T=float(T): T + 0.0 * r)
    r_top = max(float(r_eval.max(initial=0.0)), R)
    if np.all(Tf(np.linspace(0.0, r_top, 33)) == 0.0):
        return RadialProfile(r_eval, np.full(r_eval.shape, float(g)), np.zeros(r_eval.shape), float(g), 0)
    n1, n2 = comb(n - 1, m), comb(n - 1, m - 1)

    def rhs(r, y):
        p = y[1]
        w = p / r
        alpha = fun.a[1] * w
        beta = (Tf(r) - n1 * alpha**m) / (n2 * alpha ** (m - 1)) if m > 1 else Tf(r) - n1 * alpha
        return [p, (beta - fun.b[1] * w) / fun.b[0]]

    w0 = _center_slope(fun, m, float(Tf(0.0)))
    r0 = 1e-6 * r_top
    grid = np.unique(np.concatenate([[r0, R], r_eval[r_eval > r0]]))
    sol = solve_ivp(rhs, (r0, r_top), [0.5 * w0 * r0**2, w0 * r0], method="DOP853",
                    t_eval=grid, rtol=1e-12, atol=1e-14, dense_output=True)
    if not sol.success:
        raise NonConvergence(f"radial ODE failed: {sol.message}")
    rise_R = float(sol.sol(R)[0])

    def mismatch(u0):
        return u0 + rise_R - g

    lo, hi = g - abs(rise_R) - 1.0, g + abs(rise_R) + 1.0
    it = 0
    while it < max_iter:
        mid = 0.5 * (lo + hi)
        fm = mismatch(mid)
        if abs(fm) <= tol * (1.0 + abs(g)) or hi - lo <= 4 * np.finfo(float).eps * (1.0 + abs(mid)):
            break
        if fm > 0:
            hi = mid
        else:
            lo = mid
        it += 1
    u0 = mid
    Y = np.empty((2, r_eval.size))
    small = r_eval <= r0
    Y[:, ~small] = sol.sol(r_eval[~small])
    Y[0, small] = 0.5 * w0 * r_eval[small] ** 2
    Y[1, small] = w0 * r_eval[small]
    return RadialProfile(r_eval, u0 + Y[0], Y[1], u0, it)


def radial_w_exact(n, m, T):
    """u'/r for constant T from the divergence identity: (T / C(n,m))^{1/m} / 8."""
    return (T / comb(n, m)) ** (1.0 / m) / 8.0
