"""Quaternions, hyperhermitian matrices, real spectra and the Moore determinant.

Quaternion matrices are numpy arrays of shape ``(..., n, n, 4)`` holding the
coefficients ``(w, x, y, z)`` of ``w + x i + y j + z k``.
"""
from dataclasses import dataclass
from itertools import permutations
import json

import numpy as np

from . import kernels
from .errors import MalformedInput, PairingFailure, ShapeMismatch

HH_TOL = 1e-9


@dataclass(frozen=True)
class Quaternion:
    w: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __mul__(self, other):
        if not isinstance(other, Quaternion):
            return Quaternion(self.w * other, self.x * other, self.y * other, self.z * other)
        return quat_mul(self, other)

    __rmul__ = lambda self, s: Quaternion(s * self.w, s * self.x, s * self.y, s * self.z)

    def __add__(self, other):
        return Quaternion(self.w + other.w, self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other):
        return Quaternion(self.w - other.w, self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self):
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def conj(self):
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def norm2(self):
        return self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z

    def as_array(self):
        return np.array([self.w, self.x, self.y, self.z], dtype=float)


ONE = Quaternion(1.0)
I = Quaternion(0.0, 1.0)
J = Quaternion(0.0, 0.0, 1.0)
K = Quaternion(0.0, 0.0, 0.0, 1.0)


def quat_mul(a, b):
    """Hamilton product (i^2 = j^2 = k^2 = ijk = -1)."""
    return Quaternion(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )


def qmul(a, b):
    """Hamilton product over the last axis of two broadcastable arrays."""
    a = np.asarray(a)
    b = np.asarray(b)
    aw, ax, ay, az = np.moveaxis(a, -1, 0)
    bw, bx, by, bz = np.moveaxis(b, -1, 0)
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def qconj(a):
    a = np.array(a, dtype=float, copy=True)
    a[..., 1:] *= -1.0
    return a


def qmatmul(A, B):
    """Product of quaternion matrices (..., n, p, 4) x (..., p, r, 4)."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape[-2] != B.shape[-3]:
        raise ShapeMismatch(f"cannot multiply {A.shape[:-1]} by {B.shape[:-1]}")
    return qmul(A[..., :, :, None, :], B[..., None, :, :, :]).sum(axis=-3)


def conj_transpose(A):
    return qconj(np.swapaxes(np.asarray(A, dtype=float), -2, -3))


def hyperhermitian_defect(A):
    """max |a_jk - conj(a_kj)| over the trailing (n, n, 4) block."""
    A = np.asarray(A, dtype=float)
    return float(np.max(np.abs(A - conj_transpose(A)), initial=0.0))


class HyperhermitianMatrix:
    """Immutable n x n hyperhermitian quaternion matrix."""

    __slots__ = ("entries",)

    def __init__(self, entries, tol=HH_TOL, symmetrize=False):
        E = np.array(entries, dtype=float)
        if E.ndim != 3 or E.shape[0] != E.shape[1] or E.shape[2] != 4:
            raise ShapeMismatch(f"expected (n, n, 4) entries, got {E.shape}")
        if symmetrize:
            E = 0.5 * (E + conj_transpose(E))
        elif hyperhermitian_defect(E) > tol * max(1.0, float(np.abs(E).max(initial=0.0))):
            raise ValueError("matrix is not hyperhermitian")
        E.setflags(write=False)
        object.__setattr__(self, "entries", E)

    def __setattr__(self, *_):
        raise AttributeError("HyperhermitianMatrix is immutable")

    @property
    def n(self):
        return self.entries.shape[0]

    def __getitem__(self, jk):
        return Quaternion(*self.entries[jk])

    def __add__(self, other):
        return HyperhermitianMatrix(self.entries + _entries(other), symmetrize=True)

    def __sub__(self, other):
        return HyperhermitianMatrix(self.entries - _entries(other), symmetrize=True)

    def __mul__(self, s):
        return HyperhermitianMatrix(self.entries * float(s), symmetrize=True)

    __rmul__ = __mul__

    def __repr__(self):
        return f"HyperhermitianMatrix(n={self.n})"

    @classmethod
    def diag(cls, values):
        values = np.asarray(values, dtype=float)
        E = np.zeros((len(values), len(values), 4))
        E[np.arange(len(values)), np.arange(len(values)), 0] = values
        return cls(E)

    @classmethod
    def identity(cls, n):
        return cls.diag(np.ones(n))

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros((n, n, 4)))


def _entries(A):
    return A.entries if isinstance(A, HyperhermitianMatrix) else np.asarray(A, dtype=float)


def complex_adjoint(A):
    """2n x 2n complex image under w + xi + yj + zk -> [[w+ix, -y-iz], [y-iz, w-ix]].

    Accepts a single matrix or a stack (..., n, n, 4).
    """
    E = _entries(A)
    w, x, y, z = (E[..., t] for t in range(4))
    n = E.shape[-2]
    out = np.empty(E.shape[:-3] + (2 * n, 2 * n), dtype=np.complex128)
    out[..., 0::2, 0::2] = w + 1j * x
    out[..., 0::2, 1::2] = -y - 1j * z
    out[..., 1::2, 0::2] = y - 1j * z
    out[..., 1::2, 1::2] = w - 1j * x
    return out


def pair_spectrum(values, tol=1e-12, scale=None):
    """Collapse doubled eigenvalues (..., 2n) into one representative each.

    Returns (..., n) sorted descending. Raises PairingFailure when partners
    differ by more than ``10 * tol * max(1, scale)``.
    """
    v = np.sort(np.asarray(values, dtype=float), axis=-1)
    a = v[..., 0::2]
    b = v[..., 1::2]
    if scale is None:
        scale = np.max(np.abs(v), axis=-1, initial=0.0)
    lim = 10.0 * tol * np.maximum(1.0, scale)
    gap = np.abs(a - b)
    bad = gap > np.asarray(lim)[..., None]
    if np.any(bad):
        k = np.argwhere(bad)[0]
        raise PairingFailure(
            f"eigenvalues {a[tuple(k)]:.3e} and {b[tuple(k)]:.3e} do not pair within {np.max(lim):.1e}"
        )
    return (0.5 * (a + b))[..., ::-1]


def eigenvalues(A, tol=1e-12):
    """Real right eigenvalues, sorted descending.

    Single matrix -> (n,); stack (..., n, n, 4) -> (..., n).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    E = _entries(A)
    lead = E.shape[:-3]
    C = complex_adjoint(E).reshape((-1,) + (2 * E.shape[-2],) * 2)
    if C.shape[0] == 0:
        return np.zeros(lead + (E.shape[-2],))
    vals, _ = kernels.hermitian_eigvals(C, tol=tol)
    scale = np.sqrt(np.sum(np.abs(C) ** 2, axis=(1, 2)))
    return pair_spectrum(vals, tol=tol, scale=scale).reshape(lead + (E.shape[-2],))


def moore_det(A, tol=1e-12):
    """Moore determinant as the product of the real eigenvalues."""
    return np.prod(eigenvalues(A, tol=tol), axis=-1)


def _cycles_moore_order(perm):
    n = len(perm)
    seen = [False] * n
    cycles = []
    for start in range(n):
        if seen[start]:
            continue
        cyc = []
        k = start
        while not seen[k]:
            seen[k] = True
            cyc.append(k)
            k = perm[k]
        cycles.append(cyc)  # each cycle already starts with its smallest element
    cycles.sort(key=lambda c: c[0], reverse=True)
    return cycles


def moore_det_permutation(A):
    """Moore determinant from the cycle-ordered permutation sum (O(n!))."""
    E = _entries(A)
    n = E.shape[0]
    total = np.zeros(4)
    for perm in permutations(range(n)):
        cycles = _cycles_moore_order(perm)
        sign = (-1) ** sum(len(c) - 1 for c in cycles)
        prod = np.array([1.0, 0.0, 0.0, 0.0])
        for cyc in cycles:
            for t, k in enumerate(cyc):
                prod = qmul(prod, E[k, cyc[(t + 1) % len(cyc)]])
        total += sign * prod
    return float(total[0])


def is_positive_semidefinite(A, tol=1e-10):
    return bool(eigenvalues(A)[-1] >= -tol)


def congruence(A, C):
    """C* A C for a hyperhermitian A and any compatible quaternion matrix C."""
    E = _entries(A)
    C = np.asarray(C, dtype=float)
    if C.ndim != 3 or C.shape[-1] != 4 or C.shape[0] != E.shape[0]:
        raise ShapeMismatch(f"C of shape {C.shape} incompatible with n={E.shape[0]}")
    out = qmatmul(qmatmul(conj_transpose(C), E), C)
    return HyperhermitianMatrix(out, symmetrize=True)


def random_hyperhermitian(rng, n, low=-1.0, high=1.0):
    E = rng.uniform(low, high, size=(n, n, 4))
    E = 0.5 * (E + conj_transpose(E))
    return HyperhermitianMatrix(E)


def random_quaternion_matrix(rng, n, r=None, low=-1.0, high=1.0):
    return rng.uniform(low, high, size=(n, r or n, 4))


# -- JSON ------------------------------------------------------------------


def matrix_to_json(A):
    E = _entries(A)
    return {"n": int(E.shape[0]), "entries": E.tolist()}


def matrix_from_json(obj, tol=HH_TOL):
    try:
        n = int(obj["n"])
        E = np.array(obj["entries"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInput(f"bad matrix JSON: {exc}") from exc
    if E.shape != (n, n, 4):
        raise MalformedInput(f"entries shape {E.shape} does not match n={n}")
    if not np.all(np.isfinite(E)):
        raise MalformedInput("non-finite entry")
    if hyperhermitian_defect(E) > tol:
        raise MalformedInput(f"matrix violates the hyperhermitian condition by {hyperhermitian_defect(E):.2e}")
    return HyperhermitianMatrix(E, symmetrize=True)


def load_matrix(path):
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedInput(str(exc)) from exc
    return matrix_from_json(obj)
