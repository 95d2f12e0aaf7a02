"""Seeded invariant corpora driven by ``qhessian verify``.

Each suite returns a dict ``{"suite": name, "checks": [...], "passed": bool}``
where every check carries counts and the worst observed slack.
"""
from fractions import Fraction
from itertools import combinations
from math import comb, prod

import numpy as np
import scipy.linalg

from . import exterior as ext
from . import quatlinalg as ql
from . import symmfunc as sf
from .hessop import (
    GridFunction, GridSpec, evaluate_quaternion_field, fd_hessian, forms_matrix_crosscheck, geometry,
    hessian_from_delta,
)


def make_rng(seed):
    """Counter-based generator: one 64-bit seed fixes every corpus."""
    return np.random.Generator(np.random.Philox(int(seed)))


class Check:
    def __init__(self, name, tol=None):
        self.name = name
        self.tol = tol
        self.checked = 0
        self.failures = 0
        self.worst = 0.0
        self.notes = []

    def record(self, ok, err=0.0, note=None):
        self.checked += 1
        self.worst = max(self.worst, float(err))
        if not ok:
            self.failures += 1
            if note and len(self.notes) < 5:
                self.notes.append(note)
        return ok

    def close(self, err, tol=None, note=None):
        tol = self.tol if tol is None else tol
        return self.record(bool(err <= tol), err, note)

    @property
    def passed(self):
        return self.checked > 0 and self.failures == 0

    def as_dict(self):
        return {"name": self.name, "checked": self.checked, "failures": self.failures,
                "worst": self.worst, "tol": self.tol, "passed": self.passed, "notes": self.notes}


def _report(name, checks, **extra):
    out = {"suite": name, "checks": [c.as_dict() for c in checks],
           "passed": all(c.passed for c in checks)}
    out.update(extra)
    return out


# -- algebra ---------------------------------------------------------------


def quaternion_matrix(rows):
    """Build an (n, n, 4) array from nested lists of Quaternion or numbers."""
    n = len(rows)
    E = np.zeros((n, n, 4))
    for i, row in enumerate(rows):
        for j, q in enumerate(row):
            E[i, j] = q.as_array() if isinstance(q, ql.Quaternion) else (float(q), 0, 0, 0)
    return E


def moore_fixtures():
    """(name, matrix, expected determinant) for the textbook cases."""
    return [
        ("diag(2,3)", ql.HyperhermitianMatrix.diag([2.0, 3.0]), 6.0),
        ("a=1,b=2,q=i", ql.HyperhermitianMatrix(quaternion_matrix([[1, ql.I], [-ql.I, 2]])), 1.0),
        ("identity4", ql.HyperhermitianMatrix.identity(4), 1.0),
    ]


def lu_det(M):
    """Determinant from an LU factorization (product of U's diagonal, permutation sign)."""
    P, L, U = scipy.linalg.lu(M)
    return np.linalg.det(P) * np.prod(np.diag(U))


def suite_algebra(seed=0, count=1000, nmax=4):
    rng = make_rng(seed)
    fix = Check("moore_fixtures", 1e-12)
    for name, A, expect in moore_fixtures():
        fix.close(abs(ql.moore_det(A) - expect), note=name)
        fix.close(abs(ql.moore_det_permutation(A) - expect), note=name + " (permutation)")
    spec = Check("eigen_fixtures", 1e-12)
    Aj = ql.HyperhermitianMatrix(quaternion_matrix([[0, ql.J], [-ql.J, 0]]))
    brute = np.linalg.eigvalsh(ql.complex_adjoint(Aj))
    spec.close(np.max(np.abs(ql.eigenvalues(Aj) - np.array([1.0, -1.0]))), note="[[0,j],[-j,0]]")
    spec.close(np.max(np.abs(np.sort(brute)[::2][::-1] - ql.eigenvalues(Aj))), note="brute eigvalsh")
    spec.close(np.max(np.abs(ql.eigenvalues(ql.HyperhermitianMatrix.diag([5.0, -2.0])) - [5.0, -2.0])))

    sq = Check("moore_squared_vs_adjoint_det", 1e-8)
    prod_ = Check("moore_vs_eigen_product", 1e-8)
    perm = Check("permutation_vs_eigen", 1e-10)
    psd = Check("CstarC_psd", 1e-10)
    herm = Check("congruence_hyperhermitian", 1e-12)
    for t in range(count):
        n = 1 + t % nmax
        A = ql.random_hyperhermitian(rng, n)
        d = ql.moore_det(A)
        cd = lu_det(ql.complex_adjoint(A)).real
        sq.close(abs(d * d - cd) / (1.0 + abs(cd)))
        lam = ql.eigenvalues(A)
        prod_.close(abs(d - np.prod(lam)) / (1.0 + abs(d)))
        if n <= 3:
            perm.close(abs(ql.moore_det_permutation(A) - d))
        C = ql.random_quaternion_matrix(rng, n)
        CC = ql.congruence(ql.HyperhermitianMatrix.identity(n), C)
        psd.record(ql.is_positive_semidefinite(CC, tol=1e-10), max(0.0, -ql.eigenvalues(CC)[-1]))
        herm.close(ql.hyperhermitian_defect(ql.qmatmul(ql.qmatmul(ql.conj_transpose(C), A.entries), C)))
    return _report("algebra", [fix, spec, sq, prod_, perm, psd, herm])


# -- cones -----------------------------------------------------------------


def brute_symmetric(lam, m):
    return sum((prod(c) for c in combinations(lam, m)), Fraction(0))


def suite_cones(seed=0, count=1000, nmax=4, slack=1e-10):
    rng = make_rng(seed)
    exact = Check("newton_vs_subsets_exact", 0.0)
    for t in range(200):
        n = 1 + t % 6
        lam = [Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 5))) for _ in range(n)]
        for m in range(n + 1):
            exact.record(sf.elementary_symmetric(lam, m) == (brute_symmetric(lam, m) if m else 1))
    nest = Check("cone_nesting", 0.0)
    mac = Check("maclaurin", slack)
    conc = Check("concavity", slack)
    for t in range(count):
        n = 2 + t % (nmax - 1)
        m = 1 + int(rng.integers(0, n))
        lam = sf.random_gamma_point(rng, n, m)
        flags = [sf.in_gamma_cone(lam, p, tol=0.0) for p in range(1, n + 1)]
        ok = all(flags[p] <= flags[p - 1] for p in range(1, n))
        nest.record(ok and flags[m - 1])
        e = sf.all_elementary_symmetric(lam)
        for p in range(1, m + 1):
            lhs = (max(e[m], 0.0) / comb(n, m)) ** (1.0 / m)
            rhs = (max(e[p], 0.0) / comb(n, p)) ** (1.0 / p)
            mac.close((lhs - rhs) / (1.0 + lhs + rhs))
        mu = sf.random_gamma_point(rng, n, m)
        s = float(rng.uniform())
        f = lambda x: max(sf.elementary_symmetric(x, m), 0.0) ** (1.0 / m)
        lhs = f(s * lam + (1 - s) * mu)
        rhs = s * f(lam) + (1 - s) * f(mu)
        conc.close((rhs - lhs) / (1.0 + abs(lhs) + abs(rhs)))
    # random points off the cone are still nested
    for t in range(count):
        n = 2 + t % (nmax - 1)
        lam = rng.normal(size=n)
        flags = [sf.in_gamma_cone(lam, p, tol=0.0) for p in range(1, n + 1)]
        nest.record(all(flags[p] <= flags[p - 1] for p in range(1, n)))
    return _report("cones", [exact, nest, mac, conc])


def suite_garding(seed=0, count=1000, nmax=4, slack=1e-10):
    rng = make_rng(seed)
    gM = Check("garding_M", slack)
    gT = Check("garding_trace", slack)
    eq = Check("equality_at_A_eq_B", 1e-10)
    euler = Check("euler_identity", 1e-10)
    psd = Check("gradient_psd", 1e-9)
    diag = Check("gradient_diag_example", 1e-12)
    F = sf.grad_F(ql.HyperhermitianMatrix.diag([1.0, 2.0, 3.0]), 2)
    diag.close(float(np.max(np.abs(F.entries - ql.HyperhermitianMatrix.diag([5.0, 4.0, 3.0]).entries))))
    for t in range(count):
        n = 1 + t % nmax
        m = 1 + int(rng.integers(0, n))
        A, _ = sf.random_cone_matrix(rng, n, m)
        B, _ = sf.random_cone_matrix(rng, n, m)
        rep = sf.check_garding(A, B, m, tol=slack)
        gM.record(rep["garding_M"].passed, max(0.0, -rep["garding_M"].worst_slack))
        gT.record(rep["garding_trace"].passed, max(0.0, -rep["garding_trace"].worst_slack))
        sA = sf.hyper_S(A, m)
        eq.close(abs(sf.polarized_M([A] * m, m) - sA) / (1.0 + abs(sA)))
        FB = sf.grad_F(B, m)
        sB = sf.hyper_S(B, m)
        euler.close(abs(float(sf.real_trace(B, FB)) - m * sB) / (1.0 + abs(m * sB)))
        lamF = ql.eigenvalues(FB)
        psd.close(max(0.0, -lamF[-1]) / (1.0 + abs(lamF[0])))
    return _report("garding", [gM, gT, eq, euler, psd, diag])


# -- exterior identities ----------------------------------------------------


def random_form(rng, n, p, degree=3, nterms=3, max_components=3):
    nv = 4 * n
    F = ext.PolyForm(n, p)
    idx = list(combinations(range(2 * n), p))
    for k in rng.choice(len(idx), size=min(max_components, len(idx)), replace=False):
        re = ext.random_poly(rng, nv, degree, nterms)
        im = ext.random_poly(rng, nv, degree, nterms)
        F._add_term(idx[k], (re, im))
    return F


def suite_forms(seed=0, count=200, nmax=3):
    rng = make_rng(seed)
    d00 = Check("d0_squared_zero", 0)
    d11 = Check("d1_squared_zero", 0)
    anti = Check("d0d1_anticommute", 0)
    leib = Check("leibniz", 0)
    beta = Check("baston_norm2_is_beta", 0)
    bas = Check("baston_equals_d0d1", 0)
    dD = Check("d_annihilates_baston", 0)
    closed = Check("mixed_product_closed", 0)
    real = Check("baston_real", 0)
    sym = Check("mixed_symmetric", 0)
    for n in range(1, nmax + 1):
        u = ext.PolyScalar.norm2(4 * n, Fraction(1, 8))
        beta.record(ext.baston(u, n) == ext.beta(n))
        _, top = ext.mixed_ma([u] * n, n)
        beta.record(top[0] == Fraction(prod(range(1, n + 1))) and top[1].is_zero())
    for t in range(count):
        n = 1 + t % nmax
        p = int(rng.integers(0, 2 * n - 1))
        F = random_form(rng, n, p)
        d00.record(ext.d0(ext.d0(F)).is_zero() if p + 2 <= 2 * n else True)
        d11.record(ext.d1(ext.d1(F)).is_zero() if p + 2 <= 2 * n else True)
        if p + 2 <= 2 * n:
            anti.record((ext.d0(ext.d1(F)) + ext.d1(ext.d0(F))).is_zero())
        q = int(rng.integers(0, 2 * n - p))
        G = random_form(rng, n, q, degree=2, nterms=2, max_components=2)
        if p + q + 1 <= 2 * n:
            FG = ext.wedge(F, G)
            sign = -1 if p % 2 else 1
            for d in (ext.d0, ext.d1):
                lhs = d(FG)
                rhs = ext.wedge(d(F), G) + ext.wedge(F, d(G)).scale(sign)
                leib.record((lhs - rhs).is_zero())
        u = ext.random_poly(rng, 4 * n, 4, 4)
        Du = ext.baston(u, n)
        bas.record(Du == ext.d0(ext.d1(ext.as_form(u, n))))
        if 3 <= 2 * n:
            dD.record(ext.d0(Du).is_zero() and ext.d1(Du).is_zero())
        real.record(ext.is_real_form(Du))
        if n >= 2:
            v = ext.random_poly(rng, 4 * n, 3, 3)
            W = ext.wedge(Du, ext.baston(v, n))
            if 5 <= 2 * n:
                closed.record(ext.d0(W).is_zero() and ext.d1(W).is_zero())
            sym.record(W == ext.wedge(ext.baston(v, n), Du))
    return _report("forms", [d00, d11, anti, leib, beta, bas, dD, closed, real, sym])


# -- matrix / forms bridge ---------------------------------------------------


def suite_crosscheck(seed=0, n_values=(1, 2, 3), quadratics=50, cubics=20, npoints=3, tol=1e-8):
    rng = make_rng(seed)
    bridge = Check("forms_vs_matrix", tol)
    routes = Check("delta_vs_direct_hessian", 1e-10)
    special = Check("norm2_over_8", 1e-10)
    for n in n_values:
        nv = 4 * n
        for m in range(1, n + 1):
            special.close(forms_matrix_crosscheck(ext.PolyScalar.norm2(nv, 0.125), m, n, rng.uniform(-1, 1, (2, nv))))
            for k in range(quadratics + cubics):
                deg = 2 if k < quadratics else 3
                u = ext.random_poly(rng, nv, deg, 10 if deg == 2 else 8, exact=False, low=-1.0, high=1.0)
                pts = rng.uniform(-1, 1, size=(npoints, nv))
                bridge.close(forms_matrix_crosscheck(u, m, n, pts), note=f"n={n} m={m} deg={deg}")
                if m == 1:
                    from .hessop import poly_hessian

                    direct = poly_hessian(u, n, pts)
                    via = evaluate_quaternion_field(hessian_from_delta(u, n), pts)
                    routes.close(float(np.max(np.abs(direct - via))))
    return _report("crosscheck", [bridge, routes, special])


def suite_fd(seed=0):
    """Finite-difference Hessian: exact on quadratics, hyperhermitian everywhere."""
    rng = make_rng(seed)
    quad = Check("fd_exact_on_quadratics", 1e-10)
    for n, P in ((1, 9), (2, 5)):
        spec = GridSpec(n, P)
        u = ext.random_poly(rng, 4 * n, 2, 12, exact=False)
        f = GridFunction.from_function(spec, u)
        H = fd_hessian(f)
        from .hessop import poly_hessian

        exact = poly_hessian(u, n, spec.coords(H.idx))
        quad.close(float(np.max(np.abs(H.entries - exact))))
    return _report("fd", [quad])


# -- solver and capacity ------------------------------------------------------


def suite_solver(seed=0, P=9, subsolutions=20):
    from .oracles import poisson_oracle
    from .solver import Continuation, DirichletProblem, comparison_check, solve_dirichlet

    rng = make_rng(seed)
    spec = GridSpec(1, P)
    g = geometry(spec)
    exact = Check("linear_and_constant_data", 1e-8)
    for fn in (lambda X: X[:, 0], lambda X: np.ones(len(X))):
        b = GridFunction.from_function(spec, fn, "boundary")
        u, _ = solve_dirichlet(DirichletProblem(spec, 1, b, continuation=Continuation(1.0, 0.25, 1e-8)))
        exact.close(float(np.max(np.abs(u.values[g.domain] - fn(spec.coords(np.flatnonzero(g.domain)))))))
    oracle = Check("linear_oracle", 1e-8)
    b = GridFunction.from_function(spec, lambda X: X[:, 0] ** 2 - (X[:, 1:] ** 2).sum(1) / 3.0, "boundary")
    prob = DirichletProblem(spec, 1, b)
    u, rep = solve_dirichlet(prob)
    ref = poisson_oracle(prob, prob.continuation.a_final)
    oracle.close(float(np.max(np.abs(u.values[g.interior_idx] - ref[g.interior_idx]))))
    mono = Check("monotone_continuation", 1e-8)
    mono.close(rep.monotonicity_violation)
    comp = Check("comparison_subsolutions", 0.0)
    X = spec.coords(np.flatnonzero(g.domain))
    for _ in range(subsolutions):
        v = random_subsolution(rng, spec, u)
        res = comparison_check(u, v, 1)
        comp.record(res["passed"], max(0.0, res["worst_violation"]))
    return _report("solver", [exact, oracle, mono, comp])


def random_subsolution(rng, spec, u):
    """Admissible quadratic v with v <= u on the boundary layer."""
    g = geometry(spec)
    d = spec.dim
    Q = rng.normal(size=(d, d))
    Q = Q @ Q.T / d + 0.1 * np.eye(d)
    lin = rng.normal(size=d)
    X = spec.coords()
    vals = 0.5 * np.einsum("ia,ab,ib->i", X, Q, X) + X @ lin
    shift = np.max(vals[g.boundary_idx] - u.values[g.boundary_idx])
    v = np.zeros(spec.size)
    v[g.domain] = vals[g.domain] - shift
    return GridFunction(spec, v)


def suite_capacity(seed=0, P=17, slack=0.05):
    from .capacity import CompactMask, capacity_estimate

    spec = GridSpec(1, P)
    mono = Check("monotone_in_K", 0.0)
    caps = [capacity_estimate(CompactMask.ball(spec, r)) for r in (0.2, 0.3, 0.4)]
    for a, b in zip(caps, caps[1:]):
        mono.record(a <= b * (1 + 1e-6), max(0.0, a - b))
    anti = Check("antitone_in_Omega", 0.0)
    K = CompactMask.ball(spec, 0.25)
    c_big = capacity_estimate(K)
    c_small = capacity_estimate(K.on(spec.sub_ball(0.75)))
    anti.record(c_small >= c_big * (1 - slack), max(0.0, c_big - c_small))
    sub = Check("subadditive", 0.0)
    x1 = np.zeros(4)
    x1[0] = 0.4
    K1 = CompactMask.ball(spec, 0.2, x1)
    K2 = CompactMask.ball(spec, 0.2, -x1)
    c1, c2, c12 = (capacity_estimate(k) for k in (K1, K2, CompactMask.union(K1, K2)))
    sub.record(c12 <= (c1 + c2) * (1 + slack), max(0.0, c12 - c1 - c2))
    return _report("capacity", [mono, anti, sub], capacities={"balls": caps, "union": [c1, c2, c12]})


SUITES = {
    "algebra": suite_algebra,
    "cones": lambda seed=0, **kw: _merge("cones", suite_cones(seed, **kw), suite_garding(seed, **kw)),
    "forms": suite_forms,
    "crosscheck": suite_crosscheck,
    "solver": lambda seed=0, **kw: _merge("solver", suite_fd(seed), suite_solver(seed, **kw)),
    "capacity": suite_capacity,
}


def _merge(name, *reports):
    checks = [c for r in reports for c in r["checks"]]
    return {"suite": name, "checks": checks, "passed": all(r["passed"] for r in reports)}


def run_suite(name, seed=0, **kw):
    if name == "all":
        reports = [SUITES[k](seed) for k in SUITES]
        return {"suite": "all", "reports": reports, "passed": all(r["passed"] for r in reports)}
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name](seed, **kw)
