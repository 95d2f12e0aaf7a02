"""Grid functions on a ball in R^{4n} and the discrete quaternionic Hessian.

The quaternionic Hessian of a real function u is

    H_lk = 2 sum_{s,t} e_s conj(e_t) d^2 u / dx_{4l+s} dx_{4k+t},   e = (1, i, j, k),

so that H(|q|^2) = 16 I and the bridge with the Baston operator reads
(Delta u)^m ^ beta^{n-m} = (m! (n-m)! / 2^m) S~_m(H) Omega_{2n}.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement
from math import factorial
import csv
import json

import numpy as np

from . import exterior as ext
from .errors import MalformedInput, ShapeMismatch, StencilOutOfDomain
from .quatlinalg import conj_transpose, eigenvalues, qconj, qmul
from .symmfunc import all_elementary_symmetric, in_gamma_cone

UNITS = np.eye(4)
# UNIT_PROD[s, t] = e_s * conj(e_t)
UNIT_PROD = qmul(UNITS[:, None, :], qconj(UNITS)[None, :, :])
MAX_NODES = 40_000_000


def bridge_factor(n, m):
    """m! (n-m)! / 2^m."""
    return factorial(m) * factorial(n - m) / 2**m


# -- grids -----------------------------------------------------------------


@dataclass
class GridSpec:
    """Uniform lattice on the box center + [-R, R]^{4n} with a ball domain.

    ``radius`` and ``ball_center`` describe the ball (defaults: R and center);
    sub-balls reuse the lattice of the enclosing grid.
    """

    n: int
    P: int
    R: float = 1.0
    center: np.ndarray = None
    radius: float = None
    ball_center: np.ndarray = None
    safety: float = 0.5

    def __post_init__(self):
        if self.n < 1:
            raise ShapeMismatch("n must be >= 1")
        if self.P < 5 or self.P % 2 == 0:
            raise ShapeMismatch(f"points per axis must be odd and >= 5, got {self.P}")
        if self.P ** (4 * self.n) > MAX_NODES:
            raise ShapeMismatch(f"grid {self.P}^{4 * self.n} exceeds the node budget")
        d = 4 * self.n
        self.center = np.zeros(d) if self.center is None else np.asarray(self.center, dtype=float)
        self.radius = float(self.R if self.radius is None else self.radius)
        self.ball_center = self.center.copy() if self.ball_center is None else np.asarray(self.ball_center, dtype=float)
        if self.center.shape != (d,) or self.ball_center.shape != (d,):
            raise ShapeMismatch(f"centers must have {d} coordinates")
        if self.radius + np.max(np.abs(self.ball_center - self.center)) > self.R + 1e-12:
            raise StencilOutOfDomain("ball does not fit in the lattice box")

    @property
    def dim(self):
        return 4 * self.n

    @property
    def h(self):
        return 2.0 * self.R / (self.P - 1)

    @property
    def shape(self):
        return (self.P,) * self.dim

    @property
    def size(self):
        return self.P**self.dim

    @property
    def strides(self):
        return np.array([self.P ** (self.dim - 1 - a) for a in range(self.dim)], dtype=np.int64)

    def axis(self, a=0):
        return self.center[a] + np.linspace(-self.R, self.R, self.P)

    def coords(self, idx=None):
        """Coordinates of flat node indices, shape (len(idx), 4n)."""
        idx = np.arange(self.size) if idx is None else np.asarray(idx)
        sub = np.stack(np.unravel_index(idx, self.shape), axis=-1)
        return self.center - self.R + sub * self.h

    def sub_ball(self, radius, ball_center=None):
        return GridSpec(self.n, self.P, self.R, self.center, radius,
                        self.ball_center if ball_center is None else ball_center, self.safety)

    def header(self):
        return {
            "n": self.n, "P": self.P, "R": self.R, "center": self.center.tolist(),
            "radius": self.radius, "ball_center": self.ball_center.tolist(), "safety": self.safety,
        }

    @classmethod
    def from_header(cls, hdr):
        try:
            return cls(int(hdr["n"]), int(hdr["P"]), float(hdr.get("R", 1.0)), hdr.get("center"),
                       hdr.get("radius"), hdr.get("ball_center"), float(hdr.get("safety", 0.5)))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedInput(f"bad grid header: {exc}") from exc


def _neighbor_offsets(spec):
    """Flat offsets of the full second-difference stencil (axial and mixed corners)."""
    s = spec.strides
    offs = set()
    for a in range(spec.dim):
        offs.update((s[a], -s[a]))
        for b in range(a + 1, spec.dim):
            for sa in (1, -1):
                for sb in (1, -1):
                    offs.add(sa * s[a] + sb * s[b])
    return np.array(sorted(offs), dtype=np.int64)


class Geometry:
    """Interior nodes, boundary layer and stencil data for one GridSpec."""

    def __init__(self, spec):
        self.spec = spec
        X = spec.coords()
        dist = np.sqrt(np.sum((X - spec.ball_center) ** 2, axis=1))
        self.dist = dist
        interior = dist <= spec.radius - spec.h * spec.safety + 1e-12
        if not interior.any():
            raise ShapeMismatch("grid too coarse: no interior nodes")
        self.interior_idx = np.flatnonzero(interior)
        sub = np.stack(np.unravel_index(self.interior_idx, spec.shape), axis=-1)
        if sub.min() < 1 or sub.max() > spec.P - 2:
            raise StencilOutOfDomain("interior touches the lattice edge")
        domain = interior.copy()
        for off in _neighbor_offsets(spec):
            domain[self.interior_idx + off] = True
        self.interior = interior
        self.domain = domain
        self.boundary = domain & ~interior
        self.boundary_idx = np.flatnonzero(self.boundary)
        parity = sub.sum(axis=1) % 2
        self.red = self.interior_idx[parity == 0]
        self.black = self.interior_idx[parity == 1]

    @property
    def n_interior(self):
        return self.interior_idx.size


_GEOM_CACHE = {}


def geometry(spec):
    key = (spec.n, spec.P, spec.R, spec.center.tobytes(), spec.radius, spec.ball_center.tobytes(), spec.safety)
    g = _GEOM_CACHE.get(key)
    if g is None:
        if len(_GEOM_CACHE) > 16:
            _GEOM_CACHE.clear()
        g = _GEOM_CACHE[key] = Geometry(spec)
    return g


@dataclass
class GridFunction:
    """Samples of a real function on the full lattice (zero off the domain)."""

    spec: GridSpec
    values: np.ndarray
    role: str = "solution"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if self.values.size != self.spec.size:
            raise ShapeMismatch(f"{self.values.size} values for a grid of {self.spec.size} nodes")

    @classmethod
    def from_function(cls, spec, fn, role="solution", where="domain"):
        g = geometry(spec)
        v = np.zeros(spec.size)
        idx = np.flatnonzero(getattr(g, where)) if isinstance(where, str) else np.asarray(where)
        v[idx] = fn(spec.coords(idx))
        return cls(spec, v, role)

    def copy(self):
        return GridFunction(self.spec, self.values.copy(), self.role)

    def on(self, which="interior"):
        g = geometry(self.spec)
        return self.values[getattr(g, which + "_idx")]

    def to_json(self):
        out = self.spec.header()
        out["role"] = self.role
        out["values"] = [float(v) for v in self.values]
        return out

    @classmethod
    def from_json(cls, obj):
        spec = GridSpec.from_header(obj)
        try:
            vals = np.array(obj["values"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedInput(f"bad grid values: {exc}") from exc
        if vals.size != spec.size:
            raise MalformedInput(f"{vals.size} values for a grid of {spec.size} nodes")
        g = geometry(spec)
        if not np.all(np.isfinite(vals[g.domain])):
            raise MalformedInput("non-finite values on the domain")
        return cls(spec, vals, obj.get("role", "solution"))

    def save(self, path):
        from .io import dump_json

        dump_json(self.to_json(), path)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            try:
                return cls.from_json(json.load(fh))
            except json.JSONDecodeError as exc:
                raise MalformedInput(str(exc)) from exc

    def to_csv(self, path, idx=None):
        g = geometry(self.spec)
        idx = g.domain.nonzero()[0] if idx is None else idx
        X = self.spec.coords(idx)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x_{a}" for a in range(self.spec.dim)] + ["value"])
            for x, v in zip(X, self.values[idx]):
                w.writerow([f"{c:.17g}" for c in x] + [f"{v:.17g}"])

    def slice_2d(self, axes=(0, 1)):
        """Indices of the 2D section through the lattice center spanned by two axes."""
        spec = self.spec
        mid = spec.P // 2
        sub = [mid] * spec.dim
        out = []
        for i in range(spec.P):
            for j in range(spec.P):
                sub[axes[0]], sub[axes[1]] = i, j
                out.append(np.ravel_multi_index(tuple(sub), spec.shape))
        idx = np.array(out)
        return idx[geometry(spec).domain[idx]]


# -- Hessians --------------------------------------------------------------


@dataclass
class HessianField:
    spec: GridSpec
    idx: np.ndarray
    entries: np.ndarray  # (N, n, n, 4)

    def __post_init__(self):
        N, n = self.idx.size, self.spec.n
        if self.entries.shape != (N, n, n, 4):
            raise ShapeMismatch(f"entries {self.entries.shape} do not match {N} nodes, n={n}")

    def eigenvalues(self):
        return eigenvalues(self.entries)


def second_differences(values, idx, spec):
    """Central second differences at nodes idx: (N, 4n, 4n) symmetric."""
    h = spec.h
    s = spec.strides
    d = spec.dim
    v = values
    D = np.empty((idx.size, d, d))
    for a in range(d):
        D[:, a, a] = (v[idx + s[a]] + v[idx - s[a]] - 2.0 * v[idx]) / h**2
        for b in range(a + 1, d):
            sa, sb = s[a], s[b]
            D[:, a, b] = D[:, b, a] = (
                v[idx + sa + sb] - v[idx + sa - sb] - v[idx - sa + sb] + v[idx - sa - sb]
            ) / (4.0 * h**2)
    return D


def hessian_from_second(D, n):
    """Assemble H from real second derivatives (..., 4n, 4n); symmetrized."""
    Dq = D.reshape(D.shape[:-2] + (n, 4, n, 4))
    H = 2.0 * np.einsum("...lskt,stq->...lkq", Dq, UNIT_PROD)
    return 0.5 * (H + conj_transpose(H))


def fd_hessian(u, idx=None):
    """Discrete quaternionic Hessian of a GridFunction at interior nodes."""
    spec = u.spec
    g = geometry(spec)
    idx = g.interior_idx if idx is None else np.asarray(idx, dtype=np.int64)
    if not np.all(g.interior[idx]):
        raise StencilOutOfDomain("Hessian requested outside the interior")
    return HessianField(spec, idx, hessian_from_second(second_differences(u.values, idx, spec), spec.n))


def poly_second(u, n):
    """Exact second partials of a PolyScalar as a nested list of PolyScalars."""
    d = 4 * n
    first = [u.diff(a) for a in range(d)]
    return [[first[a].diff(b) for b in range(d)] for a in range(d)]


def poly_hessian(u, n, points):
    """Quaternionic Hessian of a polynomial at points (N, 4n) via exact partials."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    sec = poly_second(u, n)
    d = 4 * n
    D = np.empty((points.shape[0], d, d))
    for a, b in combinations_with_replacement(range(d), 2):
        D[:, a, b] = D[:, b, a] = sec[a][b](points)
    return hessian_from_second(D, n)


def hessian_from_delta(u, n):
    """Polynomial Hessian entries from the Baston coefficients.

    H_lk = 4 (Delta_{(2l)(2k+1)} u + j Delta_{(2l+1)(2k+1)} u), with a complex
    number a + b i read as the quaternion a + b i (so j (c + d i) = c j - d k).
    Returns an n x n nested list of quaternion 4-tuples of PolyScalars.
    """
    exact = ext._is_exact(u)
    four = 4 if exact else 4.0
    H = [[None] * n for _ in range(n)]
    for l in range(n):
        for k in range(n):
            a = ext.delta_ij(u, 2 * l, 2 * k + 1)
            b = ext.delta_ij(u, 2 * l + 1, 2 * k + 1)
            H[l][k] = (a[0] * four, a[1] * four, b[0] * four, -b[1] * four)
    return H


def evaluate_quaternion_field(Hpoly, points):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(Hpoly)
    out = np.empty((points.shape[0], n, n, 4))
    for l in range(n):
        for k in range(n):
            for t in range(4):
                out[:, l, k, t] = Hpoly[l][k][t](points)
    return out


def hessian_constant_for_norm2(n):
    """Exact c with H(|q|^2) = c I, computed through the Baston route."""
    u = ext.PolyScalar.norm2(4 * n, 1)
    H = hessian_from_delta(u, n)
    c = H[0][0][0].terms.get((0,) * (4 * n), 0)
    for l in range(n):
        for k in range(n):
            for t in range(4):
                expect = c if (l == k and t == 0) else 0
                if not (H[l][k][t] - expect).is_zero():
                    raise AssertionError("Hessian of |q|^2 is not a multiple of the identity")
    return Fraction(c)


def sigma_m_field(H, m):
    """Per-node S~_m of a HessianField, as a GridFunction (zero off the nodes)."""
    lam = H.eigenvalues()
    e = all_elementary_symmetric(lam)[:, m]
    v = np.zeros(H.spec.size)
    v[H.idx] = e
    return GridFunction(H.spec, v, "density")


def admissibility_mask(u, m, tol=1e-9, H=None):
    """Per interior node: spectrum of the discrete Hessian in Gamma_m."""
    H = fd_hessian(u) if H is None else H
    return np.atleast_1d(in_gamma_cone(H.eigenvalues(), m, tol))


def forms_matrix_crosscheck(u, m, n, points):
    """max relative gap between (Delta u)^m ^ beta^{n-m} and the matrix route."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    _, top = ext.hessian_power_form(u, n, m)
    lhs = top[0](points)
    lhs_im = top[1](points)
    H = evaluate_quaternion_field(hessian_from_delta(u, n), points)
    rhs = bridge_factor(n, m) * all_elementary_symmetric(eigenvalues(H))[:, m]
    scale = 1.0 + np.maximum(np.abs(lhs), np.abs(rhs))
    return float(np.max(np.abs(lhs - rhs) / scale + np.abs(lhs_im) / scale))
