"""Regenerate the frozen reference values in this directory.

Every value here comes from a route that shares no code with qhessian:
sympy quaternions for the Hessian constant, exact sympy determinants and
50-digit mpmath eigenvalues for the Moore fixtures, and closed-form mpmath
evaluation for the ball capacities.  Run from the repository root:

    python tests/fixtures/generate_fixtures.py
"""
import json
import os
from itertools import product
from math import comb, factorial

import mpmath
import numpy as np
import sympy as sp
from sympy.algebras.quaternion import Quaternion as SQ

HERE = os.path.dirname(os.path.abspath(__file__))
UNITS = [SQ(1, 0, 0, 0), SQ(0, 1, 0, 0), SQ(0, 0, 1, 0), SQ(0, 0, 0, 1)]


def quaternion_hessian(u, xs, n):
    """H_lk = 2 sum_{s,t} e_s conj(e_t) d^2 u / dx_{4l+s} dx_{4k+t}, with sympy quaternions."""
    H = [[SQ(0, 0, 0, 0) for _ in range(n)] for _ in range(n)]
    for l, k in product(range(n), repeat=2):
        acc = SQ(0, 0, 0, 0)
        for s, t in product(range(4), repeat=2):
            d = sp.diff(u, xs[4 * l + s], xs[4 * k + t])
            acc = acc + (UNITS[s] * UNITS[t].inverse()) * d
        H[l][k] = acc * 2
    return H


def norm2_constant():
    out = {}
    for n in (1, 2):
        xs = sp.symbols(f"x0:{4 * n}", real=True)
        H = quaternion_hessian(sum(x**2 for x in xs), xs, n)
        c = sp.simplify(H[0][0].a)
        for l, k in product(range(n), repeat=2):
            q = H[l][k]
            assert [sp.simplify(v) for v in (q.a, q.b, q.c, q.d)] == [c if l == k else 0, 0, 0, 0]
        out[str(n)] = int(c)
    return out


def adjoint_sympy(E):
    n = len(E)
    M = sp.zeros(2 * n, 2 * n)
    for l, k in product(range(n), repeat=2):
        w, x, y, z = (sp.Rational(v) for v in E[l][k])
        M[2 * l, 2 * k] = w + sp.I * x
        M[2 * l, 2 * k + 1] = -y - sp.I * z
        M[2 * l + 1, 2 * k] = y - sp.I * z
        M[2 * l + 1, 2 * k + 1] = w - sp.I * x
    return M


def random_rational_hyperhermitian(rng, n):
    E = [[[0, 0, 0, 0] for _ in range(n)] for _ in range(n)]
    for l in range(n):
        E[l][l] = [str(sp.Rational(int(rng.integers(-8, 9)), 4)), "0", "0", "0"]
        for k in range(l + 1, n):
            q = [sp.Rational(int(rng.integers(-8, 9)), 4) for _ in range(4)]
            E[l][k] = [str(v) for v in q]
            E[k][l] = [str(q[0])] + [str(-v) for v in q[1:]]
    return E


def moore_fixtures(seed=20240611, count=8):
    rng = np.random.Generator(np.random.Philox(seed))
    mpmath.mp.dps = 50
    out = []
    for t in range(count):
        n = 1 + t % 4
        E = random_rational_hyperhermitian(rng, n)
        M = adjoint_sympy(E)
        det2 = sp.nsimplify(sp.expand(M.det()))
        Mm = mpmath.matrix([[mpmath.mpc(complex(M[i, j])) for j in range(2 * n)] for i in range(2 * n)])
        vals = sorted((float(v) for v in mpmath.eighe(Mm, eigvals_only=True)), reverse=True)
        lam = vals[0::2]
        out.append({
            "n": n,
            "entries": [[[float(sp.Rational(v)) for v in q] for q in row] for row in E],
            "moore_det_squared": float(det2),
            "eigenvalues": lam,
            "moore_det": float(np.prod(lam)),
        })
    return out


def ball_capacities(rho=0.3, R=1.0):
    """C_m(B(rho), B(R)) for the radial extremal continued by the quadratic inside B(rho).

    Inside B(rho) the Hessian of w r^2 / 2 is 8 w I (from the constant above), so
    the mass is bridge * C(n, m) (8 w)^m vol(B(rho)), vol = pi^{2n} rho^{4n} / (2n)!.
    """
    mpmath.mp.dps = 30
    rho, R = mpmath.mpf(rho), mpmath.mpf(R)
    out = []
    for n, m in ((1, 1), (2, 1), (2, 2), (3, 2)):
        g = 2 - mpmath.mpf(4 * n) / m
        w = g * rho ** (g - 2) / (R**g - rho**g)
        vol = mpmath.pi ** (2 * n) * rho ** (4 * n) / factorial(2 * n)
        bridge = mpmath.mpf(factorial(m) * factorial(n - m)) / 2**m
        out.append({"n": n, "m": m, "rho": float(rho), "R": float(R),
                    "capacity": float(bridge * comb(n, m) * (8 * w) ** m * vol)})
    closed = 4 * mpmath.pi**2 / (rho**-2 - R**-2)
    return {"balls": out, "n1_closed_form": float(closed)}


def main():
    data = {
        "norm2_hessian_constant": norm2_constant(),
        "moore_random": moore_fixtures(),
        "ball_capacity": ball_capacities(),
    }
    with open(os.path.join(HERE, "derived.json"), "w") as fh:
        json.dump(data, fh, indent=1)
        fh.write("\n")


if __name__ == "__main__":
    main()
