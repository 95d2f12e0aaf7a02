"""Discrete m-capacity of a compact set K inside a ball Omega.

The relative extremal function u* (largest admissible u <= 0 with u <= -1 on
K) is computed by projected relaxation; its Hessian measure, read through
the bridge factor, gives C_m(K, Omega) = sum_K (m!(n-m)!/2^m) S~_m(H u*) h^{4n}.
"""
import json
from dataclasses import dataclass
from math import comb, gamma, pi

import numpy as np

from . import kernels
from .errors import MalformedInput, NonConvergence, ShapeMismatch
from .hessop import GridFunction, GridSpec, bridge_factor, geometry
from .solver import evaluate, local_homogeneous_value


@dataclass
class CompactMask:
    """K as a boolean mask over the lattice of ``spec``; Omega is the ball of ``spec``."""

    spec: object
    K: np.ndarray

    def __post_init__(self):
        self.K = np.asarray(self.K, dtype=bool).reshape(-1)
        g = geometry(self.spec)
        if self.K.size != self.spec.size:
            raise ShapeMismatch("mask size does not match the grid")
        if not self.K.any():
            raise ShapeMismatch("K is empty")
        if np.any(self.K & ~g.interior):
            raise ShapeMismatch("K must lie inside the interior of Omega")

    @classmethod
    def ball(cls, spec, radius, center=None):
        center = np.zeros(spec.dim) if center is None else np.asarray(center, dtype=float)
        X = spec.coords()
        K = np.sum((X - center) ** 2, axis=1) <= radius**2 + 1e-12
        return cls(spec, K & geometry(spec).interior)

    @classmethod
    def union(cls, *masks):
        spec = masks[0].spec
        return cls(spec, np.logical_or.reduce([mk.K for mk in masks]))

    def on(self, spec):
        """The same K viewed inside another ball on the same lattice."""
        return CompactMask(spec, self.K)

    def to_json(self):
        out = self.spec.header()
        out["mask"] = [bool(b) for b in self.K]
        return out

    @classmethod
    def from_json(cls, obj):
        spec = GridSpec.from_header(obj)
        try:
            mask = np.array(obj["mask"], dtype=bool)
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedInput(f"bad mask: {exc}") from exc
        if mask.size != spec.size:
            raise MalformedInput(f"{mask.size} mask entries for a grid of {spec.size} nodes")
        return cls(spec, mask)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            try:
                return cls.from_json(json.load(fh))
            except json.JSONDecodeError as exc:
                raise MalformedInput(str(exc)) from exc


def relative_extremal(K, m=1, tol=1e-6, omega=None, max_sweeps=200_000):
    """u* by projected SOR: u = -1 on K, 0 on the boundary layer, u <= 0.

    On a quaternionic line (n = 1) the cone condition is S~_1 = 2 Lap u >= 0,
    and the local maximal value at a node is the neighbour mean, so the
    obstacle iteration is a projected Gauss-Seidel sweep.
    """
    spec = K.spec
    if spec.n != 1 or m != 1:
        raise ShapeMismatch("grid capacity runs are limited to n = 1 (use the radial route for n >= 2)")
    g = geometry(spec)
    v = np.zeros(spec.size)
    v[K.K] = -1.0
    free = g.interior & ~K.K
    red = g.red[free[g.red]]
    black = g.black[free[g.black]]
    if omega is None:
        omega = 2.0 / (1.0 + np.sin(np.pi * spec.h / (2.0 * spec.radius)))
    for sweep in range(max_sweeps):
        change = kernels.psor_sweep(v, red, black, spec.strides, omega, 0.0)
        if change <= tol:
            break
    else:
        raise NonConvergence(f"obstacle iteration stalled (change {change:.2e})")
    return GridFunction(spec, v, "solution")


def local_check(u, m, idx):
    """Max violation of the local maximal-value property at free nodes idx.

    For the relative extremal each free node value should equal the largest
    admissible value given its neighbours (clipped at 0).
    """
    spec = u.spec
    H, _, _ = evaluate(u.values, spec, m, idx)
    # remove the node's own contribution: H_rest = H + (16 u_i / h^2) I
    H[:, np.arange(spec.n), np.arange(spec.n), 0] += (16.0 * u.values[idx] / spec.h**2)[:, None]
    c = np.minimum(local_homogeneous_value(H, m, spec.h), 0.0)
    return float(np.max(np.abs(c - u.values[idx]), initial=0.0))


def hessian_mass(u, m, nodes):
    """sum over nodes of (m!(n-m)!/2^m) S~_m(H u) h^{4n}."""
    spec = u.spec
    _, _, E = evaluate(u.values, spec, m, nodes)
    return float(bridge_factor(spec.n, m) * np.sum(E[:, m]) * spec.h ** spec.dim)


def k_neighbourhood(K):
    """Interior nodes of K together with their axial neighbours in the interior."""
    spec = K.spec
    g = geometry(spec)
    near = K.K.copy()
    kidx = np.flatnonzero(K.K)
    for s in spec.strides:
        near[kidx + s] = True
        near[kidx - s] = True
    return np.flatnonzero(near & g.interior)


def capacity_estimate(K, m=1, tol=1e-6, return_extremal=False):
    u = relative_extremal(K, m, tol)
    cap = hessian_mass(u, m, k_neighbourhood(K))
    return (cap, u) if return_extremal else cap


def candidate_mass(K, u, m=1):
    """Discrete Hessian mass of a candidate u on K (a lower bound for the capacity)."""
    return hessian_mass(u, m, np.flatnonzero(K.K))


def quadratic_candidate(spec, t, x0, D):
    """u = t (|x - x0|^2 / D^2 - 1): admissible, and -1 <= u <= 0 when D covers Omega."""
    return GridFunction.from_function(spec, lambda X: t * (np.sum((X - x0) ** 2, axis=1) / D**2 - 1.0))


# -- radial route (any n) ---------------------------------------------------


def sphere_area(d):
    return 2.0 * pi ** (d / 2) / gamma(d / 2)


def radial_mass(n, m, rho, w_rho):
    """Hessian mass of a radial function on B(rho) from u'/r at rho.

    S_m = (2/m) C(n-1,m-1) 8^{m-1} r^{1-4n} (r^{4n} w^m)', w = u'/r, so the
    integral over B(rho) collapses to the boundary term.
    """
    coeff = (2.0 / m) * comb(n - 1, m - 1) * 8.0 ** (m - 1)
    return bridge_factor(n, m) * sphere_area(4 * n) * coeff * rho ** (4 * n) * w_rho**m


def radial_capacity(n, m, rho, R):
    """C_m(B(rho), B(R)) from the radial extremal u = (r^g - R^g)/(R^g - rho^g), g = 2 - 4n/m."""
    g = 2.0 - 4.0 * n / m
    w_rho = g * rho ** (g - 2.0) / (R**g - rho**g)
    return radial_mass(n, m, rho, w_rho)


def radial_quadratic_mass(n, m, rho, t, D):
    """Mass on B(rho) of the candidate t (r^2 / D^2 - 1) (w = 2t / D^2)."""
    return radial_mass(n, m, rho, 2.0 * t / D**2)
