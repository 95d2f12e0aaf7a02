"""Dirichlet problem S~_m(H u) = target on a ball, by continuation and damped Newton.

Stage equation, for a level a > 0 and a density f >= 0 (coefficient of Omega_{2n}):

    (Delta u)^m ^ beta^{n-m} = (f + a n!) Omega_{2n}
    <=>  S~_m(H u) = T_a := 2^m / (m! (n-m)!) * (f + a n!)

Newton acts on the concave residual log S~_m(H u) - log T_a; the linearized
operator is sum_{ab} K_ab d_a d_b with K built from F_m(H u) / S~_m(H u).
"""
from dataclasses import dataclass, field
from math import comb, factorial
import logging

import numpy as np

from . import kernels
from .errors import AdmissibilityLoss, BarrierFailure, NonConvergence, ShapeMismatch
from .hessop import (
    UNIT_PROD, GridFunction, GridSpec, bridge_factor, fd_hessian, geometry,
    hessian_from_second, second_differences,
)
from .quatlinalg import eigenvalues
from .symmfunc import all_elementary_symmetric, grad_F

log = logging.getLogger(__name__)

RE_SIGN = np.array([1.0, -1.0, -1.0, -1.0])


@dataclass
class Continuation:
    a_init: float = 1.0
    a_factor: float = 0.25
    a_final: float = 1e-6

    def __post_init__(self):
        if not (self.a_init >= self.a_final > 0):
            raise ValueError("need a_init >= a_final > 0")
        if not 0 < self.a_factor < 1:
            raise ValueError("a_factor must lie in (0, 1)")

    def levels(self):
        out = [self.a_init]
        while out[-1] > self.a_final * (1 + 1e-12):
            out.append(max(out[-1] * self.a_factor, self.a_final))
        return out


@dataclass
class NewtonOptions:
    tol_residual: float = 1e-10
    max_iters: int = 60
    damping: float = 1.0
    inner_omega: float = 0.8
    inner_max_sweeps: int = 10_000
    inner_rtol: float = 1e-3
    min_step: float = 2.0**-30


@dataclass
class DirichletProblem:
    spec: GridSpec
    m: int
    boundary: GridFunction
    density: GridFunction = None
    continuation: Continuation = field(default_factory=Continuation)
    newton: NewtonOptions = field(default_factory=NewtonOptions)

    def __post_init__(self):
        if not 1 <= self.m <= self.spec.n:
            raise ShapeMismatch(f"m={self.m} outside [1, {self.spec.n}]")
        if self.boundary.spec is not self.spec and self.boundary.values.size != self.spec.size:
            raise ShapeMismatch("boundary data lives on another grid")
        if self.density is not None and np.any(self.density.on("interior") < 0):
            raise ValueError("density must be non-negative")

    @property
    def geom(self):
        return geometry(self.spec)

    def target(self, a):
        """T_a at the interior nodes (matrix-route level of (f + a n!) Omega)."""
        n = self.spec.n
        f = self.density.on("interior") if self.density is not None else 0.0
        T = (f + a * factorial(n)) / bridge_factor(n, self.m)
        return np.broadcast_to(np.asarray(T, dtype=float), (self.geom.n_interior,)).copy()


@dataclass
class StageRecord:
    a: float
    iterations: int = 0
    residuals: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    inner_sweeps: list = field(default_factory=list)
    rejected_steps: int = 0
    roundoff_floor: float = 0.0
    converged: bool = False

    def as_dict(self):
        return {
            "a": self.a, "iterations": self.iterations, "residuals": self.residuals,
            "steps": self.steps, "inner_sweeps": self.inner_sweeps,
            "rejected_steps": self.rejected_steps, "roundoff_floor": self.roundoff_floor,
            "converged": self.converged,
        }


@dataclass
class SolverReport:
    stages: list = field(default_factory=list)
    admissibility_violations: int = 0
    boundary_sup_error: float = 0.0
    lipschitz_sup: float = 0.0
    second_diff_sup: float = 0.0
    second_diff_sup_deep: float = 0.0
    monotonicity_violation: float = 0.0
    fallbacks: list = field(default_factory=list)
    barrier_C: float = 0.0
    final_residual: float = float("inf")
    success: bool = False

    def as_dict(self):
        return {
            "stages": [s.as_dict() for s in self.stages],
            "admissibility_violations": self.admissibility_violations,
            "boundary_sup_error": self.boundary_sup_error,
            "lipschitz_sup": self.lipschitz_sup,
            "second_diff_sup": self.second_diff_sup,
            "second_diff_sup_deep": self.second_diff_sup_deep,
            "monotonicity_violation": self.monotonicity_violation,
            "fallbacks": self.fallbacks,
            "barrier_C": self.barrier_C,
            "final_residual": self.final_residual,
            "success": self.success,
        }


# -- harmonic extension and barrier ----------------------------------------


def harmonic_extension(boundary, tol=1e-10, max_sweeps=200_000):
    """Discrete harmonic function with the given boundary-layer values."""
    spec = boundary.spec
    g = geometry(spec)
    v = np.zeros(spec.size)
    v[g.boundary_idx] = boundary.values[g.boundary_idx]
    if not np.all(np.isfinite(v)):
        raise ValueError("boundary values must be finite")
    bvals = v[g.boundary_idx]
    v[g.interior_idx] = bvals.mean() if bvals.size else 0.0
    omega = 2.0 / (1.0 + np.sin(np.pi * spec.h / (2.0 * spec.radius)))
    sweeps, res = kernels.laplace_sor(v, g.red, g.black, spec.strides, omega, tol, max_sweeps)
    if res > tol:
        raise NonConvergence(f"harmonic extension stalled at residual {res:.2e} after {sweeps} sweeps")
    return GridFunction(spec, v, "solution")


def barrier_psi(spec):
    """psi = (|x - c|^2 - r_out^2) / 2 on the domain, r_out the outermost domain node."""
    g = geometry(spec)
    r_out = float(g.dist[g.domain].max())
    psi = np.zeros(spec.size)
    idx = g.interior_idx
    psi[idx] = 0.5 * (g.dist[idx] ** 2 - r_out**2)
    return psi


# -- per-node algebra ------------------------------------------------------


def node_spectrum(H):
    """Real spectra (N, n) of a stack of hyperhermitian matrices."""
    if H.shape[-2] == 1:
        return H[:, 0, 0, 0:1].copy()
    return eigenvalues(H)


def node_gradient(H, m):
    if H.shape[-2] == 1:
        return np.broadcast_to(np.array([[[1.0, 0, 0, 0]]]), H.shape).copy()
    return grad_F(H, m)


def stencil_coefficients(F, n):
    """K for the operator Re tr(H(v) F) = sum_{a<=b} K_ab v_ab (one row per node)."""
    G = 2.0 * np.einsum("Nklq,stq,q->Nlskt", F, UNIT_PROD, RE_SIGN).reshape(F.shape[0], 4 * n, 4 * n)
    d = 4 * n
    pairs, cols = [], []
    for a in range(d):
        pairs.append((a, a))
        cols.append(G[:, a, a])
    for a in range(d):
        for b in range(a + 1, d):
            pairs.append((a, b))
            cols.append(G[:, a, b] + G[:, b, a])
    K = np.stack(cols, axis=1)
    return pairs, K


class _Stencil:
    def __init__(self, spec):
        s = spec.strides
        d = spec.dim
        self.pairs_all = [(a, a) for a in range(d)] + [(a, b) for a in range(d) for b in range(a + 1, d)]
        self.s = s

    def offsets(self, keep):
        pa = np.array([self.s[self.pairs_all[c][0]] for c in keep], dtype=np.int64)
        pb = np.array([self.s[self.pairs_all[c][1]] for c in keep], dtype=np.int64)
        return pa, pb


def evaluate(values, spec, m, idx):
    """(H, spectrum, S_0..S_n) at the nodes idx."""
    H = hessian_from_second(second_differences(values, idx, spec), spec.n)
    lam = node_spectrum(H)
    return H, lam, all_elementary_symmetric(lam)


def admissible(E, m, strict=True):
    """Spectrum in Gamma_m (strictly inside when ``strict``) from S_0..S_n."""
    ok = np.ones(E.shape[0], dtype=bool)
    for p in range(1, m + 1):
        ok &= E[:, p] > 0 if strict else E[:, p] >= 0
    return ok


# -- solver ----------------------------------------------------------------


def initial_guess(problem, c_start=1.0, cap=2.0**20):
    """harmonic extension + C psi, C doubled until a strict subsolution of the first stage."""
    spec = problem.spec
    g = problem.geom
    base = harmonic_extension(problem.boundary)
    psi = barrier_psi(spec)
    T = problem.target(problem.continuation.a_init)
    C = float(c_start)
    while C <= cap:
        v = base.values + C * psi
        _, _, E = evaluate(v, spec, problem.m, g.interior_idx)
        if np.all(admissible(E, problem.m)) and np.all(E[:, problem.m] >= T):
            return GridFunction(spec, v, "solution"), C
        C *= 2.0
    raise BarrierFailure(f"no admissible barrier with C <= {cap:g}")


def solve_stage(problem, u_init, a, record=None):
    """Damped Newton on log S~_m(H u) = log T_a, starting from an admissible u_init."""
    spec, m, opts = problem.spec, problem.m, problem.newton
    g = problem.geom
    idx = g.interior_idx
    rec = StageRecord(a) if record is None else record
    logT = np.log(problem.target(a))
    v = u_init.values.copy()
    stencil = _Stencil(spec)
    H, lam, E = evaluate(v, spec, m, idx)
    if not np.all(admissible(E, m)):
        raise AdmissibilityLoss(f"initial iterate not admissible at a={a:g}")
    r = np.log(E[:, m]) - logT
    res = float(np.max(np.abs(r)))
    rec.residuals.append(res)
    stall = 0
    while True:
        F = node_gradient(H, m)
        _, K = stencil_coefficients(F, spec.n)
        K /= E[:, m][:, None]
        # rounding in second differences limits how far the log residual can drop
        floor = 64.0 * np.finfo(float).eps * float(np.max(np.abs(v))) / spec.h**2
        floor *= float(np.max(np.sum(np.abs(K), axis=1)))
        rec.roundoff_floor = floor
        if res <= max(opts.tol_residual, floor):
            break
        if rec.iterations >= opts.max_iters:
            raise NonConvergence(f"Newton did not converge at a={a:g}: residual {res:.2e}")
        scale = np.max(np.abs(K), axis=0)
        keep = np.flatnonzero(scale > 1e-14 * scale.max())
        offa, offb = stencil.offsets(keep)
        Kk = np.ascontiguousarray(K[:, keep])
        diag = np.zeros(idx.size)
        for j, c in enumerate(keep):
            a_, b_ = stencil.pairs_all[c]
            if a_ == b_:
                diag += Kk[:, j] * (-2.0 / spec.h**2)
        delta = np.zeros(spec.size)
        rhs = -r
        inner_tol = max(opts.inner_rtol * res, 0.1 * opts.tol_residual)
        sweeps, _ = kernels.weighted_jacobi(delta, rhs, idx, offa, offb, Kk, diag, spec.h,
                                            opts.inner_omega, inner_tol, opts.inner_max_sweeps)
        rec.inner_sweeps.append(sweeps)
        t = opts.damping
        accepted = False
        best = None
        while t >= opts.min_step:
            w = v + t * delta
            H2, lam2, E2 = evaluate(w, spec, m, idx)
            if np.all(admissible(E2, m)):
                r2 = np.log(E2[:, m]) - logT
                res2 = float(np.max(np.abs(r2)))
                if best is None:
                    best = (t, w, H2, E2, r2, res2)
                if res2 <= (1.0 - 1e-4 * t) * res:
                    best = (t, w, H2, E2, r2, res2)
                    accepted = True
                    break
            else:
                rec.rejected_steps += 1
            t *= 0.5
        if best is None:
            raise AdmissibilityLoss(f"no admissible Newton step at a={a:g}")
        t, v, H, E, r, res_new = best
        stall = 0 if accepted else stall + 1
        if stall >= 3:
            raise NonConvergence(f"line search stalled at a={a:g}: residual {res:.2e}")
        res = res_new
        rec.iterations += 1
        rec.steps.append(t)
        rec.residuals.append(res)
    rec.converged = True
    return GridFunction(spec, v, "solution"), rec


def deep_interior_idx(spec):
    """Interior nodes whose whole second-difference stencil is interior."""
    from .hessop import _neighbor_offsets

    g = geometry(spec)
    idx = g.interior_idx
    keep = np.ones(idx.size, dtype=bool)
    for off in _neighbor_offsets(spec):
        keep &= g.interior[idx + off]
    return idx[keep]


def difference_norms(u, idx=None):
    """Sup norms of first differences / h and second differences over idx (default: interior)."""
    spec = u.spec
    g = geometry(spec)
    idx = g.interior_idx if idx is None else idx
    if idx.size == 0:
        return 0.0, 0.0
    v = u.values
    lip = 0.0
    for s in spec.strides:
        lip = max(lip, float(np.max(np.abs(v[idx + s] - v[idx]))), float(np.max(np.abs(v[idx] - v[idx - s]))))
    D = second_differences(v, idx, spec)
    return lip / spec.h, float(np.max(np.abs(D)))


def solve_dirichlet(problem, c_start=1.0, u_init=None):
    """Continuation a_init -> a_final with warm starts; returns (u, report)."""
    report = SolverReport()
    g = problem.geom
    if u_init is None:
        u, report.barrier_C = initial_guess(problem, c_start)
    else:
        u = u_init
    schedule = list(problem.continuation.levels())
    a_final = schedule[-1]
    retried = set()
    prev = None
    k = 0
    while k < len(schedule):
        a = schedule[k]
        rec = StageRecord(a)
        try:
            u_new, rec = solve_stage(problem, u, a, rec)
        except (AdmissibilityLoss, NonConvergence) as exc:
            report.stages.append(rec)
            report.admissibility_violations += rec.rejected_steps
            if a in retried or k == 0:
                exc.args = (f"stage {k} (a={a:g}): {exc}",)
                raise
            retried.add(a)
            report.fallbacks.append({"stage": k, "a": a, "fallback_a": 10 * a, "reason": str(exc)})
            log.info("stage a=%g failed (%s); falling back to %g", a, exc, 10 * a)
            schedule[k] = 10 * a
            schedule.append(a)
            if a != a_final:
                schedule.append(a_final)
            continue
        report.stages.append(rec)
        report.admissibility_violations += rec.rejected_steps
        if prev is not None and a < prev[0]:
            viol = float(np.max(prev[1].on("interior") - u_new.on("interior")))
            report.monotonicity_violation = max(report.monotonicity_violation, viol, 0.0)
        prev = (a, u_new)
        u = u_new
        k += 1
    report.final_residual = report.stages[-1].residuals[-1]
    last = report.stages[-1]
    report.success = report.final_residual <= max(problem.newton.tol_residual, last.roundoff_floor)
    report.boundary_sup_error = float(np.max(np.abs(u.values[g.boundary_idx] - problem.boundary.values[g.boundary_idx]), initial=0.0))
    report.lipschitz_sup, report.second_diff_sup = difference_norms(u)
    report.second_diff_sup_deep = difference_norms(u, deep_interior_idx(problem.spec))[1]
    return u, report


# -- verification helpers --------------------------------------------------


def comparison_check(u, v, m, C=1.0, tol=1e-9):
    """u >= v - C h^2 on the interior, given u >= v - tol on the boundary layer."""
    spec = u.spec
    g = geometry(spec)
    bd = float(np.max(v.values[g.boundary_idx] - u.values[g.boundary_idx], initial=-np.inf))
    worst = float(np.max(v.on("interior") - u.on("interior")))
    eps = C * spec.h**2
    return {
        "boundary_ok": bd <= tol,
        "boundary_excess": bd,
        "worst_violation": worst,
        "allowance": eps,
        "passed": bool(bd <= tol and worst <= eps),
    }


def maximality_check(u, m, tol=1e-5, sub_fraction=0.5, C=1.0, continuation=None, newton=None):
    """Residual test S~_m(H u) <= tol and interior re-solve on a sub-ball."""
    spec = u.spec
    sigma = _sigma_interior(u, m)
    res_ok = bool(np.max(sigma) <= tol)
    sub = spec.sub_ball(spec.radius * sub_fraction)
    gs = geometry(sub)
    bnd = GridFunction(sub, u.values.copy(), "boundary")
    cont = continuation or Continuation()
    prob = DirichletProblem(sub, m, bnd, None, cont, newton or NewtonOptions())
    w, rep = solve_dirichlet(prob)
    err = float(np.max(np.abs(w.values[gs.interior_idx] - u.values[gs.interior_idx])))
    allowance = C * spec.h**2
    return {
        "max_sigma": float(np.max(sigma)),
        "residual_test": res_ok,
        "resolve_error": err,
        "resolve_allowance": allowance,
        "resolve_test": bool(err <= allowance),
        "passed": bool(res_ok and err <= allowance),
        "resolve_report": rep.as_dict(),
    }


def _sigma_interior(u, m):
    H = fd_hessian(u)
    return all_elementary_symmetric(node_spectrum(H.entries))[:, m]


def local_homogeneous_value(Hrest, m, h):
    """Largest node value c keeping H_rest - (16 c / h^2) I in Gamma_m.

    ``Hrest`` (N, n, n, 4) is the node Hessian computed with the node value set
    to zero; raising the node value by c shifts every diagonal second
    difference by -2c/h^2, i.e. the Hessian by -16 c/h^2 times the identity.
    The admissible shifts s are those below the smallest root of S_m(lam - s).
    """
    lam = node_spectrum(np.asarray(Hrest, dtype=float))
    n = lam.shape[1]
    e = all_elementary_symmetric(lam)
    # S_m(lam - s) = sum_j S_{m-j}(lam) C(n-m+j, j) (-s)^j
    coeffs = np.array([e[:, m - j] * comb(n - m + j, j) * (-1.0) ** j for j in range(m, -1, -1)]).T
    out = np.empty(lam.shape[0])
    for t in range(lam.shape[0]):
        out[t] = np.min(np.roots(coeffs[t]).real)
    return out * h**2 / 16.0


def manufactured_problem(spec, m, u, continuation=None, newton=None):
    """Dirichlet problem whose a_final solution is the polynomial ``u`` (up to O(h^2)).

    The density is f = bridge * S~_m(H u) - a_final n!, evaluated with the exact
    polynomial Hessian, and the boundary layer carries u itself.
    """
    from .hessop import poly_hessian

    cont = continuation or Continuation()
    n = spec.n
    g = geometry(spec)
    boundary = GridFunction.from_function(spec, u, "boundary")
    E = all_elementary_symmetric(eigenvalues(poly_hessian(u, n, spec.coords(g.interior_idx))))
    f = bridge_factor(n, m) * E[:, m] - cont.a_final * factorial(n)
    if np.any(f < 0):
        raise ShapeMismatch("manufactured solution is not strictly admissible on the grid")
    dens = np.zeros(spec.size)
    dens[g.interior_idx] = f
    return DirichletProblem(spec, m, boundary, GridFunction(spec, dens, "density"), cont, newton or NewtonOptions())
