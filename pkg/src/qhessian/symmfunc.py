"""Elementary symmetric functions, Garding cones and the polarized form."""
from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np

from .errors import ConeViolation, IndexOutOfRange, ShapeMismatch
from .quatlinalg import HyperhermitianMatrix, _entries, eigenvalues

SLACK = 1e-10


def elementary_symmetric(lam, m):
    """S_m(lam) via the product recurrence of (1 + lam_j t).

    Works with any numeric type (Fractions stay exact) when ``lam`` is a
    sequence; numpy arrays of shape (..., n) are evaluated along the last axis.
    """
    if isinstance(lam, np.ndarray):
        n = lam.shape[-1]
        if not 0 <= m <= n:
            raise IndexOutOfRange(f"m={m} outside [0, {n}]")
        return all_elementary_symmetric(lam)[..., m]
    lam = list(lam)
    n = len(lam)
    if not 0 <= m <= n:
        raise IndexOutOfRange(f"m={m} outside [0, {n}]")
    e = [1] + [0] * m
    for x in lam:
        for k in range(m, 0, -1):
            e[k] = e[k] + x * e[k - 1]
    return e[m]


def all_elementary_symmetric(lam):
    """(..., n) -> (..., n + 1) array of S_0 .. S_n."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    e = np.zeros(lam.shape[:-1] + (n + 1,))
    e[..., 0] = 1.0
    for j in range(n):
        x = lam[..., j]
        for k in range(j + 1, 0, -1):
            e[..., k] = e[..., k] + x * e[..., k - 1]
    return e


def in_gamma_cone(lam, m, tol=SLACK):
    """lam in Gamma_m, i.e. S_p(lam) >= -tol * (1 + |lam|^p) for p = 1..m."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if not 1 <= m <= n:
        raise IndexOutOfRange(f"m={m} outside [1, {n}]")
    e = all_elementary_symmetric(lam)
    scale = 1.0 + np.max(np.abs(lam), axis=-1, initial=0.0)
    ok = np.ones(lam.shape[:-1], dtype=bool)
    for p in range(1, m + 1):
        ok &= e[..., p] >= -tol * scale**p
    return bool(ok) if ok.ndim == 0 else ok


def hyper_S(A, m):
    """S~_m(A) = S_m(lambda(A)); accepts stacks (..., n, n, 4)."""
    lam = eigenvalues(A)
    return elementary_symmetric(lam, m) if lam.ndim > 1 else float(elementary_symmetric(lam, m))


def _group_args(mats):
    reps, counts = [], []
    for A in mats:
        E = _entries(A)
        for t, R in enumerate(reps):
            if R is E or (R.shape == E.shape and np.array_equal(R, E)):
                counts[t] += 1
                break
        else:
            reps.append(E)
            counts.append(1)
    return reps, counts


def polarized_M(mats, m=None):
    """Symmetric multilinear form with M(A, ..., A) = S~_m(A).

    Polarization: M = (1/m!) sum_{S nonempty} (-1)^{m-|S|} S~_m(sum_{i in S} A_i).
    Repeated arguments are grouped so that each distinct partial sum is
    evaluated once (with its binomial multiplicity).
    """
    mats = list(mats)
    if m is None:
        m = len(mats)
    if len(mats) != m:
        raise ShapeMismatch(f"need {m} arguments, got {len(mats)}")
    reps, counts = _group_args(mats)
    shapes = {R.shape[-3:] for R in reps}
    if len(shapes) != 1:
        raise ShapeMismatch(f"mixed shapes {shapes}")
    n = reps[0].shape[-2]
    if m > n:
        raise ShapeMismatch(f"m={m} exceeds n={n}")
    lead = np.broadcast_shapes(*(R.shape[:-3] for R in reps))
    # enumerate count vectors (k_1..k_r), 0 <= k_t <= counts[t]
    vecs = [()]
    for c in counts:
        vecs = [v + (k,) for v in vecs for k in range(c + 1)]
    sums, weights = [], []
    for v in vecs:
        size = sum(v)
        if size == 0:
            continue
        w = (-1) ** (m - size)
        for k, c in zip(v, counts):
            w *= comb(c, k)
        S = sum(k * R for k, R in zip(v, reps) if k)
        sums.append(np.broadcast_to(S, lead + S.shape[-3:]))
        weights.append(w)
    stack = np.stack(sums, axis=0)
    vals = elementary_symmetric(eigenvalues(stack), m)
    out = np.tensordot(np.asarray(weights, dtype=float), vals, axes=(0, 0)) / factorial(m)
    return float(out) if np.ndim(out) == 0 else out


def hyperhermitian_basis(n):
    """Real basis of the hyperhermitian n x n matrices.

    Returns ``(basis, tags)`` with basis shaped (dim, n, n, 4) and tags
    ``(p, q, unit)`` (unit 0..3 for 1, i, j, k; p == q only with unit 0).
    """
    basis, tags = [], []
    for p in range(n):
        E = np.zeros((n, n, 4))
        E[p, p, 0] = 1.0
        basis.append(E)
        tags.append((p, p, 0))
    for p in range(n):
        for q in range(p + 1, n):
            for u in range(4):
                E = np.zeros((n, n, 4))
                E[p, q, u] = 1.0
                E[q, p, u] = 1.0 if u == 0 else -1.0
                basis.append(E)
                tags.append((p, q, u))
    return np.array(basis), tags


def real_trace(A, B):
    """Re tr(A B) for quaternion matrices (..., n, n, 4)."""
    A = _entries(A)
    B = _entries(B)
    # Re(a b) = a_w b_w - a_x b_x - a_y b_y - a_z b_z
    sgn = np.array([1.0, -1.0, -1.0, -1.0])
    return np.einsum("...pqt,...qpt,t->...", A, B, sgn)


def grad_F(B, m):
    """F_m(B) = (dS~_m / db_{pq}), reconstructed from A -> m M(A, B, ..., B).

    The result F is hyperhermitian with Re tr(A F) = m M(A, B, ..., B).
    Accepts a single matrix or a stack (..., n, n, 4); returns the same kind.
    """
    Bm = _entries(B)
    single = Bm.ndim == 3
    if single:
        Bm = Bm[None]
    lead = Bm.shape[:-3]
    n = Bm.shape[-2]
    if not 1 <= m <= n:
        raise IndexOutOfRange(f"m={m} outside [1, {n}]")
    basis, tags = hyperhermitian_basis(n)
    # m M(E, B, ..., B) = (m/m!) sum_k C(m-1,k) [(-1)^{m-1-k} S(E + kB) + (-1)^{m-k} S(kB)]
    # (the k = 0 term of the second group vanishes)
    ks = np.arange(m)
    cw = np.array([comb(m - 1, k) for k in ks], dtype=float)
    Bx = Bm[..., None, :, :, :]
    with_E = basis[(None,) * len(lead) + (slice(None), None)] + ks[:, None, None, None] * Bx[..., None, :, :, :]
    # with_E: lead + (dim, m, n, n, 4)
    SE = elementary_symmetric(eigenvalues(with_E), m)
    kB = ks[1:, None, None, None] * Bx
    SB = elementary_symmetric(eigenvalues(kB), m) if m > 1 else np.zeros(lead + (0,))
    sign_E = (-1.0) ** (m - 1 - ks)
    sign_B = (-1.0) ** (m - ks[1:])
    LE = np.einsum("...dk,k->...d", SE, cw * sign_E)
    LB = np.einsum("...k,k->...", SB, cw[1:] * sign_B) if m > 1 else 0.0
    L = (LE + np.asarray(LB)[..., None]) * (m / factorial(m))
    F = np.zeros(lead + (n, n, 4))
    for d, (p, q, u) in enumerate(tags):
        if p == q:
            F[..., p, p, 0] = L[..., d]
        else:
            # Re tr(E_pq^u F) = 2 Re(u f_qp)
            F[..., q, p, u] = L[..., d] / 2.0 if u == 0 else -L[..., d] / 2.0
    for p in range(n):
        for q in range(p + 1, n):
            F[..., p, q, :] = F[..., q, p, :] * np.array([1.0, -1.0, -1.0, -1.0])
    if single:
        return HyperhermitianMatrix(F[0], symmetrize=True)
    return F


@dataclass
class InequalityReport:
    name: str
    checked: int = 0
    violations: int = 0
    worst_slack: float = float("inf")
    details: list = field(default_factory=list)

    @property
    def passed(self):
        return self.checked > 0 and self.violations == 0

    def record(self, lhs, rhs, tol=SLACK, info=None):
        slack = lhs - rhs
        self.checked += 1
        self.worst_slack = min(self.worst_slack, slack / (1.0 + abs(lhs) + abs(rhs)))
        if slack < -tol * (1.0 + abs(lhs) + abs(rhs)):
            self.violations += 1
            if len(self.details) < 5:
                self.details.append({"lhs": lhs, "rhs": rhs, "info": info})
        return slack

    def as_dict(self):
        return {
            "name": self.name,
            "checked": self.checked,
            "violations": self.violations,
            "worst_slack": self.worst_slack,
            "passed": self.passed,
        }


def _require_cone(A, m, tol):
    lam = eigenvalues(A)
    if not in_gamma_cone(lam, m, tol):
        raise ConeViolation(f"spectrum {np.round(lam, 6)} not in Gamma_{m}")
    return lam


def check_garding(A, B, m, trials=0, rng=None, tol=SLACK):
    """Check M(A_1..A_m) >= prod S~_m(A_i)^{1/m} and
    tr(A F_m(B)) >= m S~_m(A)^{1/m} S~_m(B)^{(m-1)/m}.

    ``A`` and ``B`` are always checked; ``trials`` extra random tuples are
    drawn by mixing A, B and positive combinations of them (which stay in the
    convex cone).
    """
    _require_cone(A, m, tol)
    _require_cone(B, m, tol)
    garding = InequalityReport("garding_M")
    trace = InequalityReport("garding_trace")
    tuples = [[A] * m, [B] * m, [A] + [B] * (m - 1)]
    if rng is not None:
        for _ in range(trials):
            coeffs = rng.uniform(0.0, 1.0, size=(m, 2))
            tuples.append([HyperhermitianMatrix(a * _entries(A) + b * _entries(B)) for a, b in coeffs])
    for tup in tuples:
        s = [max(hyper_S(X, m), 0.0) for X in tup]
        garding.record(polarized_M(tup, m), float(np.prod([v ** (1.0 / m) for v in s])), tol)
    F = grad_F(B, m)
    sA, sB = max(hyper_S(A, m), 0.0), max(hyper_S(B, m), 0.0)
    trace.record(float(real_trace(A, F)), m * sA ** (1.0 / m) * sB ** ((m - 1.0) / m), tol)
    return {"garding_M": garding, "garding_trace": trace}


def maclaurin_check(lam, m, p, tol=SLACK):
    """C(n,m)^{-1/m} S_m^{1/m} <= C(n,p)^{-1/p} S_p^{1/p} for lam in Gamma_m."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if not 1 <= p <= m <= n:
        raise IndexOutOfRange(f"need 1 <= p={p} <= m={m} <= n={n}")
    if not in_gamma_cone(lam, m, tol):
        raise ConeViolation(f"{lam} not in Gamma_{m}")
    e = all_elementary_symmetric(lam)
    lhs = (max(e[m], 0.0) / comb(n, m)) ** (1.0 / m)
    rhs = (max(e[p], 0.0) / comb(n, p)) ** (1.0 / p)
    return bool(lhs <= rhs + tol * (1.0 + abs(lhs) + abs(rhs)))


def random_gamma_point(rng, n, m, scale=1.0, max_tries=10_000):
    """Rejection sample of lam in Gamma_m (shifted Gaussian proposals)."""
    for _ in range(max_tries):
        lam = rng.normal(size=n) * scale + rng.uniform(0.0, 1.5) * scale
        if in_gamma_cone(lam, m, tol=0.0):
            return lam
    raise RuntimeError("could not sample from the cone")


def random_cone_matrix(rng, n, m):
    """Random hyperhermitian matrix with spectrum in Gamma_m (random unitary frame)."""
    from .quatlinalg import random_quaternion_matrix, congruence

    lam = random_gamma_point(rng, n, m)
    U = _random_unitary(rng, n)
    return congruence(HyperhermitianMatrix.diag(lam), U), lam


def _random_unitary(rng, n):
    """Quaternionic unitary via Gram-Schmidt on random columns."""
    from .quatlinalg import qconj, qmul

    C = rng.normal(size=(n, n, 4))
    cols = []
    for j in range(n):
        v = C[:, j, :].copy()
        for u in cols:
            # projection coefficient <u, v> = sum conj(u_i) v_i (right scalars)
            coef = qmul(qconj(u), v).sum(axis=0)
            v = v - qmul(u, coef[None, :])
        v /= np.sqrt(np.sum(v * v))
        cols.append(v)
    return np.stack(cols, axis=1)
