"""Hot loops: batched Hermitian Jacobi, stencil sweeps, obstacle relaxation.

Every kernel has a loop version compiled with numba and a vectorized numpy
version. The public wrappers pick one according to ``_accel.use_numba()``.
Both paths perform the same arithmetic in the same order per node, so they
agree to rounding.
"""
import numpy as np

from . import _accel
from ._accel import njit

# ---------------------------------------------------------------------------
# Hermitian eigenvalues by cyclic Jacobi rotations
# ---------------------------------------------------------------------------


@njit(cache=True)
def _jacobi_eigvals_nb(A, tol, max_sweeps):
    nb, N, _ = A.shape
    out = np.empty((nb, N))
    sweeps_used = np.zeros(nb, dtype=np.int64)
    for b in range(nb):
        M = A[b].copy()
        fro = 0.0
        for i in range(N):
            for j in range(N):
                fro += M[i, j].real ** 2 + M[i, j].imag ** 2
        thresh = tol * max(1.0, np.sqrt(fro))
        sweep = 0
        while True:
            off = 0.0
            for i in range(N):
                for j in range(N):
                    if i != j:
                        off += M[i, j].real ** 2 + M[i, j].imag ** 2
            if np.sqrt(off) <= thresh or sweep >= max_sweeps:
                break
            sweep += 1
            for p in range(N - 1):
                for q in range(p + 1, N):
                    apq = M[p, q]
                    g = abs(apq)
                    if g == 0.0:
                        continue
                    e = apq / g
                    app = M[p, p].real
                    aqq = M[q, q].real
                    theta = (aqq - app) / (2.0 * g)
                    if theta >= 0.0:
                        t = 1.0 / (theta + np.sqrt(theta * theta + 1.0))
                    else:
                        t = -1.0 / (-theta + np.sqrt(theta * theta + 1.0))
                    c = 1.0 / np.sqrt(t * t + 1.0)
                    s = t * c
                    ec = e.conjugate()
                    for k in range(N):
                        mkp = M[k, p]
                        mkq = M[k, q]
                        M[k, p] = c * mkp - s * ec * mkq
                        M[k, q] = s * mkp + c * ec * mkq
                    for k in range(N):
                        mpk = M[p, k]
                        mqk = M[q, k]
                        M[p, k] = c * mpk - s * e * mqk
                        M[q, k] = s * mpk + c * e * mqk
                    M[p, q] = 0.0
                    M[q, p] = 0.0
                    M[p, p] = app - t * g
                    M[q, q] = aqq + t * g
        sweeps_used[b] = sweep
        for i in range(N):
            out[b, i] = M[i, i].real
    return out, sweeps_used


def _jacobi_eigvals_np(A, tol, max_sweeps):
    M = np.array(A, dtype=np.complex128, copy=True)
    nb, N, _ = M.shape
    fro = np.sqrt(np.sum(np.abs(M) ** 2, axis=(1, 2)))
    thresh = tol * np.maximum(1.0, fro)
    offmask = ~np.eye(N, dtype=bool)
    sweeps_used = np.zeros(nb, dtype=np.int64)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.abs(M[:, offmask]) ** 2, axis=1))
        active = off > thresh
        if not active.any():
            break
        sweeps_used += active
        idx = np.nonzero(active)[0]
        S = M[idx]
        for p in range(N - 1):
            for q in range(p + 1, N):
                apq = S[:, p, q]
                g = np.abs(apq)
                nz = g > 0.0
                gs = np.where(nz, g, 1.0)
                e = np.where(nz, apq / gs, 1.0)
                app = S[:, p, p].real.copy()
                aqq = S[:, q, q].real.copy()
                theta = (aqq - app) / (2.0 * gs)
                t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
                t = np.where(theta == 0.0, 1.0, t)
                t = np.where(nz, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ec = np.conj(e)
                cp = S[:, :, p].copy()
                cq = S[:, :, q].copy()
                S[:, :, p] = c[:, None] * cp - (s * ec)[:, None] * cq
                S[:, :, q] = s[:, None] * cp + (c * ec)[:, None] * cq
                rp = S[:, p, :].copy()
                rq = S[:, q, :].copy()
                S[:, p, :] = c[:, None] * rp - (s * e)[:, None] * rq
                S[:, q, :] = s[:, None] * rp + (c * e)[:, None] * rq
                S[nz, p, q] = 0.0
                S[nz, q, p] = 0.0
                S[:, p, p] = app - t * g
                S[:, q, q] = aqq + t * g
        M[idx] = S
    return np.real(np.diagonal(M, axis1=1, axis2=2)).copy(), sweeps_used


def hermitian_eigvals(A, tol=1e-12, max_sweeps=60):
    """Eigenvalues of a stack of Hermitian matrices, shape (B, N, N) -> (B, N).

    Convergence: off-diagonal Frobenius norm <= tol * max(1, ||A||_F).
    Returns ``(values, sweeps)``; values are the unsorted final diagonals.
    """
    A = np.ascontiguousarray(A, dtype=np.complex128)
    if A.ndim == 2:
        A = A[None]
    if _accel.use_numba():
        return _jacobi_eigvals_nb(A, float(tol), int(max_sweeps))
    return _jacobi_eigvals_np(A, float(tol), int(max_sweeps))


# ---------------------------------------------------------------------------
# Second-order stencil operators on a flattened box grid
#
# ``idx``   : flat indices of the active (interior) nodes
# ``offa``  : flat stride of axis a, per coefficient column
# ``offb``  : flat stride of axis b (== offa for pure second differences)
# ``K``     : (len(idx), ncols) coefficients
# Operator  : sum_c K[:, c] * D_c v, with D_c the central second difference.
# ---------------------------------------------------------------------------


@njit(cache=True)
def _apply_op_nb(v, idx, offa, offb, K, h):
    n_act = idx.shape[0]
    ncol = offa.shape[0]
    out = np.empty(n_act)
    ih2 = 1.0 / (h * h)
    iq = 0.25 * ih2
    for t in range(n_act):
        i = idx[t]
        acc = 0.0
        for c in range(ncol):
            k = K[t, c]
            if k == 0.0:
                continue
            sa = offa[c]
            sb = offb[c]
            if sa == sb:
                d = (v[i + sa] + v[i - sa] - 2.0 * v[i]) * ih2
            else:
                d = (v[i + sa + sb] - v[i + sa - sb] - v[i - sa + sb] + v[i - sa - sb]) * iq
            acc += k * d
        out[t] = acc
    return out


def _apply_op_np(v, idx, offa, offb, K, h):
    ih2 = 1.0 / (h * h)
    out = np.zeros(idx.shape[0])
    for c in range(offa.shape[0]):
        sa = offa[c]
        sb = offb[c]
        if sa == sb:
            d = (v[idx + sa] + v[idx - sa] - 2.0 * v[idx]) * ih2
        else:
            d = (v[idx + sa + sb] - v[idx + sa - sb] - v[idx - sa + sb] + v[idx - sa - sb]) * (0.25 * ih2)
        out += K[:, c] * d
    return out


def apply_operator(v, idx, offa, offb, K, h):
    if _accel.use_numba():
        return _apply_op_nb(v, idx, offa, offb, K, float(h))
    return _apply_op_np(v, idx, offa, offb, K, float(h))


@njit(cache=True)
def _wjacobi_nb(v, rhs, idx, offa, offb, K, diag, h, omega, tol, max_sweeps):
    # v is updated in place; returns (sweeps, final max residual)
    n_act = idx.shape[0]
    upd = np.empty(n_act)
    res = np.inf
    sweeps = 0
    while sweeps < max_sweeps:
        Lv = _apply_op_nb(v, idx, offa, offb, K, h)
        res = 0.0
        for t in range(n_act):
            r = rhs[t] - Lv[t]
            if abs(r) > res:
                res = abs(r)
            upd[t] = omega * r / diag[t]
        if res <= tol:
            break
        for t in range(n_act):
            v[idx[t]] += upd[t]
        sweeps += 1
    return sweeps, res


def _wjacobi_np(v, rhs, idx, offa, offb, K, diag, h, omega, tol, max_sweeps):
    res = np.inf
    sweeps = 0
    while sweeps < max_sweeps:
        r = rhs - _apply_op_np(v, idx, offa, offb, K, h)
        res = float(np.max(np.abs(r))) if r.size else 0.0
        if res <= tol:
            break
        v[idx] += omega * r / diag
        sweeps += 1
    return sweeps, res


def weighted_jacobi(v, rhs, idx, offa, offb, K, diag, h, omega=0.8, tol=1e-12, max_sweeps=10_000):
    """Damped Jacobi for ``L v = rhs`` on the active nodes; ``v`` is modified in place."""
    args = (v, np.ascontiguousarray(rhs, dtype=float), idx, offa, offb,
            np.ascontiguousarray(K, dtype=float), np.ascontiguousarray(diag, dtype=float),
            float(h), float(omega), float(tol), int(max_sweeps))
    if _accel.use_numba():
        sweeps, res = _wjacobi_nb(*args)
    else:
        sweeps, res = _wjacobi_np(*args)
    return int(sweeps), float(res)


# ---------------------------------------------------------------------------
# Red-black SOR for the real Laplacian (harmonic extension)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _rb_laplace_sweep_nb(v, red, black, strides, omega):
    nd = strides.shape[0]
    change = 0.0
    for colour in range(2):
        nodes = red if colour == 0 else black
        for t in range(nodes.shape[0]):
            i = nodes[t]
            s = 0.0
            for a in range(nd):
                s += v[i + strides[a]] + v[i - strides[a]]
            new = v[i] + omega * (s / (2 * nd) - v[i])
            d = abs(new - v[i])
            if d > change:
                change = d
            v[i] = new
    return change


def _rb_laplace_sweep_np(v, red, black, strides, omega):
    nd = strides.shape[0]
    change = 0.0
    for nodes in (red, black):
        s = np.zeros(nodes.shape[0])
        for a in range(nd):
            s += v[nodes + strides[a]] + v[nodes - strides[a]]
        new = v[nodes] + omega * (s / (2 * nd) - v[nodes])
        if nodes.size:
            change = max(change, float(np.max(np.abs(new - v[nodes]))))
        v[nodes] = new
    return change


@njit(cache=True)
def _laplace_residual_nb(v, idx, strides):
    nd = strides.shape[0]
    res = 0.0
    for t in range(idx.shape[0]):
        i = idx[t]
        s = 0.0
        for a in range(nd):
            s += v[i + strides[a]] + v[i - strides[a]]
        r = abs(s / (2 * nd) - v[i])
        if r > res:
            res = r
    return res


def _laplace_residual_np(v, idx, strides):
    s = np.zeros(idx.shape[0])
    for a in range(strides.shape[0]):
        s += v[idx + strides[a]] + v[idx - strides[a]]
    r = np.abs(s / (2 * strides.shape[0]) - v[idx])
    return float(r.max()) if r.size else 0.0


def laplace_sor(v, red, black, strides, omega, tol, max_sweeps):
    """Red-black SOR on ``v`` in place until the scaled residual
    ``max |mean(neighbours) - v|`` is <= tol. Returns (sweeps, residual)."""
    nb = _accel.use_numba()
    sweep_fn = _rb_laplace_sweep_nb if nb else _rb_laplace_sweep_np
    res_fn = _laplace_residual_nb if nb else _laplace_residual_np
    idx = np.concatenate([red, black])
    res = res_fn(v, idx, strides)
    sweeps = 0
    while res > tol and sweeps < max_sweeps:
        sweep_fn(v, red, black, strides, float(omega))
        sweeps += 1
        if sweeps % 10 == 0 or sweeps == max_sweeps:
            res = res_fn(v, idx, strides)
    res = res_fn(v, idx, strides)
    return sweeps, float(res)


# ---------------------------------------------------------------------------
# Projected SOR for the relative extremal function (m = 1 local solve)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _psor_sweep_nb(v, red, black, strides, omega, upper):
    nd = strides.shape[0]
    change = 0.0
    for colour in range(2):
        nodes = red if colour == 0 else black
        for t in range(nodes.shape[0]):
            i = nodes[t]
            s = 0.0
            for a in range(nd):
                s += v[i + strides[a]] + v[i - strides[a]]
            new = v[i] + omega * (s / (2 * nd) - v[i])
            if new > upper:
                new = upper
            d = abs(new - v[i])
            if d > change:
                change = d
            v[i] = new
    return change


def _psor_sweep_np(v, red, black, strides, omega, upper):
    nd = strides.shape[0]
    change = 0.0
    for nodes in (red, black):
        s = np.zeros(nodes.shape[0])
        for a in range(nd):
            s += v[nodes + strides[a]] + v[nodes - strides[a]]
        new = np.minimum(v[nodes] + omega * (s / (2 * nd) - v[nodes]), upper)
        if nodes.size:
            change = max(change, float(np.max(np.abs(new - v[nodes]))))
        v[nodes] = new
    return change


def psor_sweep(v, red, black, strides, omega, upper=0.0):
    if _accel.use_numba():
        return _psor_sweep_nb(v, red, black, strides, float(omega), float(upper))
    return _psor_sweep_np(v, red, black, strides, float(omega), float(upper))
