"""Exterior calculus on Lambda^{2k} C^{2n} with polynomial coefficients over R^{4n}.

Coordinates: q_l = x_{4l} + x_{4l+1} i + x_{4l+2} j + x_{4l+3} k, l = 0..n-1.
The basis of C^{2n} is omega^0 .. omega^{2n-1}; a p-form is stored as a map
from strictly increasing index tuples to complex coefficients, each a pair of
real polynomials (re, im).

Coefficients keep whatever number type they are built from: ints and
Fractions give exact arithmetic, floats give the fast path.
"""
from fractions import Fraction
from itertools import combinations
from math import factorial
import json

import numpy as np

from .errors import DegreeOverflow, MalformedInput

# -- real polynomials -------------------------------------------------------


class PolyScalar:
    """Sparse real polynomial in ``nvars`` variables: {exponent tuple: coeff}."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars, terms=None):
        self.nvars = nvars
        self.terms = {}
        if terms:
            for e, c in terms.items():
                if c != 0:
                    self.terms[tuple(e)] = c

    @classmethod
    def const(cls, nvars, c):
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def coord(cls, nvars, k, c=1):
        e = [0] * nvars
        e[k] = 1
        return cls(nvars, {tuple(e): c})

    @classmethod
    def norm2(cls, nvars, c=1):
        """c * sum x_a^2."""
        terms = {}
        for k in range(nvars):
            e = [0] * nvars
            e[k] = 2
            terms[tuple(e)] = c
        return cls(nvars, terms)

    def copy(self):
        return PolyScalar(self.nvars, dict(self.terms))

    def is_zero(self):
        return not self.terms

    def degree(self):
        return max((sum(e) for e in self.terms), default=-1)

    def __add__(self, other):
        if not isinstance(other, PolyScalar):
            other = PolyScalar.const(self.nvars, other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = out.get(e, 0) + c
            if v == 0:
                out.pop(e, None)
            else:
                out[e] = v
        return PolyScalar(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return PolyScalar(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, PolyScalar):
            if other == 0:
                return PolyScalar(self.nvars)
            return PolyScalar(self.nvars, {e: c * other for e, c in self.terms.items()})
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return PolyScalar(self.nvars, out)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, PolyScalar):
            other = PolyScalar.const(self.nvars, other)
        return (self - other).is_zero()

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        return f"PolyScalar({self.nvars}, {len(self.terms)} terms)"

    def diff(self, k):
        out = {}
        for e, c in self.terms.items():
            if e[k]:
                f = list(e)
                f[k] -= 1
                out[tuple(f)] = c * e[k]
        return PolyScalar(self.nvars, out)

    def __call__(self, x):
        """Evaluate at one point (length nvars) or a batch (..., nvars)."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for e, c in self.terms.items():
            t = np.full(x.shape[:-1], float(c))
            for k, p in enumerate(e):
                if p:
                    t = t * x[..., k] ** p
            out = out + t
        return out if out.ndim else float(out)

    def max_abs_coeff(self):
        return max((abs(c) for c in self.terms.values()), default=0)

    def to_json(self):
        return [{"exponents": list(e), "coeff": _num_json(c)} for e, c in sorted(self.terms.items())]

    @classmethod
    def from_json(cls, nvars, data):
        try:
            return cls(nvars, {tuple(int(v) for v in t["exponents"]): _num_parse(t["coeff"]) for t in data})
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedInput(f"bad polynomial: {exc}") from exc


def _num_json(c):
    if isinstance(c, Fraction):
        return str(c) if c.denominator != 1 else int(c)
    return c


def _num_parse(c):
    if isinstance(c, str):
        return Fraction(c)
    return c


def random_poly(rng, nvars, degree, nterms, exact=True, low=-3, high=3):
    """Random polynomial with up to ``nterms`` monomials of total degree <= degree."""
    terms = {}
    for _ in range(nterms):
        d = int(rng.integers(0, degree + 1))
        e = [0] * nvars
        for k in rng.integers(0, nvars, size=d):
            e[k] += 1
        if exact:
            c = Fraction(int(rng.integers(low, high + 1)), int(rng.integers(1, 4)))
        else:
            c = float(rng.uniform(low, high))
        terms[tuple(e)] = terms.get(tuple(e), 0) + c
    return PolyScalar(nvars, terms)


# -- complex coefficients: pairs (re, im) of PolyScalar ----------------------


def _cadd(a, b):
    return (a[0] + b[0], a[1] + b[1])


def _cscale(a, s):
    """a * s for a plain (possibly complex) number s."""
    sr, si = (s.real, s.imag) if isinstance(s, complex) else (s, 0)
    re = a[0] * sr - a[1] * si if si else a[0] * sr
    im = a[0] * si + a[1] * sr if si else a[1] * sr
    return (re, im)


def _cmul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _czero(c):
    return c[0].is_zero() and c[1].is_zero()


def _conj(c):
    return (c[0], -c[1])


# -- the first-order operators ---------------------------------------------


def nabla(j, alpha, c):
    """Apply nabla_{j alpha} to the complex polynomial c = (re, im).

    Row 2l:   nabla_0 = d_{4l} + i d_{4l+1},    nabla_1 = -d_{4l+2} - i d_{4l+3}
    Row 2l+1: nabla_0 = d_{4l+2} - i d_{4l+3},  nabla_1 = d_{4l} - i d_{4l+1}
    """
    l, odd = divmod(j, 2)
    if not odd:
        a, b, sa, sb = (4 * l, 4 * l + 1, 1, 1) if alpha == 0 else (4 * l + 2, 4 * l + 3, -1, -1)
    else:
        a, b, sa, sb = (4 * l + 2, 4 * l + 3, 1, -1) if alpha == 0 else (4 * l, 4 * l + 1, 1, -1)
    re, im = c
    # (sa d_a + i sb d_b)(re + i im)
    out_re = re.diff(a) * sa - im.diff(b) * sb
    out_im = im.diff(a) * sa + re.diff(b) * sb
    return (out_re, out_im)


# -- forms -----------------------------------------------------------------


def _merge_sign(I, J):
    """Sign of the permutation sorting I + J (both increasing); 0 if they meet."""
    sign = 1
    for a in I:
        for b in J:
            if a == b:
                return 0
            if a > b:
                sign = -sign
    return sign


class PolyForm:
    """Homogeneous p-form on C^{2n} with complex polynomial coefficients."""

    __slots__ = ("n", "degree", "terms")

    def __init__(self, n, degree, terms=None):
        self.n = n
        self.degree = degree
        self.terms = {}
        if degree > 2 * n or degree < 0:
            raise DegreeOverflow(f"degree {degree} outside [0, {2 * n}]")
        for I, c in (terms or {}).items():
            self._add_term(I, c)

    @property
    def nvars(self):
        return 4 * self.n

    def _add_term(self, I, c):
        I = tuple(I)
        if len(I) != self.degree or any(not 0 <= i < 2 * self.n for i in I):
            raise DegreeOverflow(f"index {I} invalid for a {self.degree}-form with n={self.n}")
        order = sorted(range(len(I)), key=lambda t: I[t])
        J = tuple(I[t] for t in order)
        if len(set(J)) < len(J):
            return
        # parity of the sorting permutation
        sign, seen = 1, [False] * len(order)
        for s in range(len(order)):
            if not seen[s]:
                t, L = s, 0
                while not seen[t]:
                    seen[t] = True
                    t = order[t]
                    L += 1
                if L % 2 == 0:
                    sign = -sign
        if sign < 0:
            c = (-c[0], -c[1])
        old = self.terms.get(J)
        new = c if old is None else _cadd(old, c)
        if _czero(new):
            self.terms.pop(J, None)
        else:
            self.terms[J] = new

    @classmethod
    def scalar(cls, n, u, im=None):
        nv = 4 * n
        if not isinstance(u, PolyScalar):
            u = PolyScalar.const(nv, u)
        im = im if im is not None else PolyScalar(nv)
        return cls(n, 0, {(): (u, im)})

    @classmethod
    def basis(cls, n, I, c=1):
        nv = 4 * n
        re = PolyScalar.const(nv, c.real if isinstance(c, complex) else c)
        im = PolyScalar.const(nv, c.imag if isinstance(c, complex) else 0)
        return cls(n, len(I), {tuple(I): (re, im)})

    def is_zero(self):
        return not self.terms

    def copy(self):
        return PolyForm(self.n, self.degree, dict(self.terms))

    def __add__(self, other):
        if other.n != self.n or other.degree != self.degree:
            raise DegreeOverflow("cannot add forms of different type")
        out = PolyForm(self.n, self.degree, self.terms)
        for I, c in other.terms.items():
            out._add_term(I, c)
        return out

    def __neg__(self):
        return PolyForm(self.n, self.degree, {I: (-c[0], -c[1]) for I, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s):
        """Multiply by a number or a PolyScalar (real) or a (re, im) pair."""
        if isinstance(s, tuple):
            return PolyForm(self.n, self.degree, {I: _cmul(c, s) for I, c in self.terms.items()})
        if isinstance(s, PolyScalar):
            return PolyForm(self.n, self.degree, {I: (c[0] * s, c[1] * s) for I, c in self.terms.items()})
        return PolyForm(self.n, self.degree, {I: _cscale(c, s) for I, c in self.terms.items()})

    __mul__ = scale
    __rmul__ = scale

    def __eq__(self, other):
        return isinstance(other, PolyForm) and other.degree == self.degree and (self - other).is_zero()

    def __xor__(self, other):
        return wedge(self, other)

    def __repr__(self):
        return f"PolyForm(n={self.n}, degree={self.degree}, {len(self.terms)} terms)"

    def coefficient(self, I):
        nv = self.nvars
        return self.terms.get(tuple(I), (PolyScalar(nv), PolyScalar(nv)))

    def top_coefficient(self):
        """Coefficient against Omega_{2n} (only for top-degree forms)."""
        if self.degree != 2 * self.n:
            raise DegreeOverflow(f"{self.degree}-form is not top degree")
        return self.coefficient(tuple(range(2 * self.n)))

    def evaluate(self, x):
        """Constant-coefficient form (complex numbers) at point x."""
        x = np.asarray(x, dtype=float)
        return {I: complex(c[0](x), c[1](x)) for I, c in self.terms.items()}

    def at(self, x):
        """The form frozen at point x (float constant coefficients)."""
        nv = self.nvars
        out = {}
        for I, v in self.evaluate(x).items():
            out[I] = (PolyScalar.const(nv, v.real), PolyScalar.const(nv, v.imag))
        return PolyForm(self.n, self.degree, out)

    def to_json(self):
        return {
            "n": self.n,
            "degree": self.degree,
            "terms": [
                {"index": list(I), "re": c[0].to_json(), "im": c[1].to_json()}
                for I, c in sorted(self.terms.items())
            ],
        }

    @classmethod
    def from_json(cls, obj):
        try:
            n, p = int(obj["n"]), int(obj["degree"])
            F = cls(n, p)
            for t in obj["terms"]:
                re = PolyScalar.from_json(4 * n, t["re"])
                im = PolyScalar.from_json(4 * n, t["im"])
                F._add_term(tuple(t["index"]), (re, im))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedInput(f"bad form JSON: {exc}") from exc
        return F


def wedge(F, G):
    if F.n != G.n:
        raise DegreeOverflow("forms live on different spaces")
    p = F.degree + G.degree
    if p > 2 * F.n:
        raise DegreeOverflow(f"degree {p} exceeds {2 * F.n}")
    out = PolyForm(F.n, p)
    for I, a in F.terms.items():
        for J, b in G.terms.items():
            s = _merge_sign(I, J)
            if s == 0:
                continue
            c = _cmul(a, b)
            if s < 0:
                c = (-c[0], -c[1])
            out._add_term(tuple(sorted(I + J)), c)
    return out


def wedge_power(F, k, n=None):
    n = F.n if n is None else n
    out = PolyForm.scalar(n, 1)
    for _ in range(k):
        out = wedge(out, F)
    return out


def _d(alpha, F):
    out = PolyForm(F.n, F.degree + 1) if F.degree < 2 * F.n else None
    if out is None:
        return PolyForm(F.n, F.degree)  # d of a top form vanishes; keep type
    for I, c in F.terms.items():
        for k in range(2 * F.n):
            if k in I:
                continue
            g = nabla(k, alpha, c)
            if not _czero(g):
                out._add_term((k,) + I, g)
    return out


def d0(F):
    """d0 F = sum_k nabla_{k0} f_I omega^k ^ omega^I."""
    return _d(0, F)


def d1(F):
    return _d(1, F)


def as_form(u, n):
    return u if isinstance(u, PolyForm) else PolyForm.scalar(n, u)


def delta_ij(u, i, j):
    """Delta_{ij} u = (nabla_{i0} nabla_{j1} u - nabla_{i1} nabla_{j0} u) / 2 as (re, im)."""
    nv = u.nvars
    c = (u, PolyScalar(nv))
    a = nabla(i, 0, nabla(j, 1, c))
    b = nabla(i, 1, nabla(j, 0, c))
    half = Fraction(1, 2) if _is_exact(u) else 0.5
    return ((a[0] - b[0]) * half, (a[1] - b[1]) * half)


def _is_exact(u):
    return all(isinstance(c, (int, Fraction)) for c in u.terms.values())


def baston(u, n):
    """Delta u = sum_{i,j} Delta_{ij} u omega^i ^ omega^j (coefficient 2 Delta_{ij} on i < j)."""
    out = PolyForm(n, 2)
    for i, j in combinations(range(2 * n), 2):
        c = delta_ij(u, i, j)
        if not _czero(c):
            out._add_term((i, j), (c[0] * 2, c[1] * 2))
    return out


def beta(n, exact=True):
    one = 1 if exact else 1.0
    out = PolyForm(n, 2)
    for l in range(n):
        out._add_term((2 * l, 2 * l + 1), (PolyScalar.const(4 * n, one), PolyScalar(4 * n)))
    return out


def omega_top(n, c=1):
    return PolyForm.basis(n, tuple(range(2 * n)), c)


def mixed_ma(us, n):
    """Delta u_1 ^ ... ^ Delta u_k; for k = n also returns the Omega coefficient."""
    if len(us) > n:
        raise DegreeOverflow(f"{len(us)} factors exceed n={n}")
    out = PolyForm.scalar(n, 1)
    for u in us:
        out = wedge(out, baston(u, n))
    if len(us) == n:
        return out, out.top_coefficient()
    return out


def hessian_power_form(u, n, m):
    """(Delta u)^m ^ beta^{n-m} and its top coefficient (re, im)."""
    exact = _is_exact(u)
    F = wedge(wedge_power(baston(u, n), m, n), wedge_power(beta(n, exact), n - m, n))
    return F, F.top_coefficient()


# -- reality structure -----------------------------------------------------


def _J_index(i):
    """J(omega^{2l}) = omega^{2l+1}, J(omega^{2l+1}) = -omega^{2l}."""
    return (i + 1, 1) if i % 2 == 0 else (i - 1, -1)


def reality_involution(F):
    """Antilinear multiplicative map fixing beta and Omega_{2n}."""
    out = PolyForm(F.n, F.degree)
    for I, c in F.terms.items():
        sign, J = 1, []
        for i in I:
            j, s = _J_index(i)
            J.append(j)
            sign *= s
        cc = _conj(c)
        if sign < 0:
            cc = (-cc[0], -cc[1])
        out._add_term(tuple(J), cc)
    return out


def is_real_form(F):
    return (reality_involution(F) - F).is_zero()


# -- positivity tests on constant-coefficient forms ------------------------


def _const_dict(F, point=None):
    if point is None:
        return {I: complex(float(c[0](np.zeros(F.nvars))), float(c[1](np.zeros(F.nvars)))) for I, c in F.terms.items()}
    return F.evaluate(point)


def _wedge_const(A, B):
    out = {}
    for I, a in A.items():
        for J, b in B.items():
            s = _merge_sign(I, J)
            if s:
                K = tuple(sorted(I + J))
                out[K] = out.get(K, 0) + s * a * b
    return out


def _pos_simple(rng, n):
    """a ^ Ja for a random complex 1-form a: a strongly positive 2-form."""
    c = rng.normal(size=2 * n) + 1j * rng.normal(size=2 * n)
    a = {(i,): c[i] for i in range(2 * n)}
    Ja = {}
    for i in range(2 * n):
        j, s = _J_index(i)
        Ja[(j,)] = Ja.get((j,), 0) + s * np.conj(c[i])
    return _wedge_const(a, Ja)


def positivity_sample_check(F, point=None, trials=64, rng=None, tol=1e-10):
    """Necessary condition for positivity of a 2k-form at a point.

    Wedges F with ``trials`` random products of n - k simple strongly positive
    2-forms a ^ Ja and checks that every top coefficient is >= -tol.
    """
    if F.degree % 2:
        raise DegreeOverflow("positivity is defined for even degrees")
    rng = np.random.default_rng(0) if rng is None else rng
    n, k = F.n, F.degree // 2
    base = _const_dict(F, point)
    top = tuple(range(2 * n))
    scale = 1.0 + max((abs(v) for v in base.values()), default=0.0)
    for _ in range(trials):
        G = dict(base)
        for _ in range(n - k):
            G = _wedge_const(G, _pos_simple(rng, n))
        if G.get(top, 0).real < -tol * scale:
            return False
    return True


def in_gamma_hat(alpha, m, point=None, tol=1e-10):
    """alpha^p ^ beta^{n-p} >= 0 (top coefficient) for p = 1..m; alpha a 2-form."""
    n = alpha.n
    a = _const_dict(alpha, point)
    b = {(2 * l, 2 * l + 1): 1.0 for l in range(n)}
    top = tuple(range(2 * n))
    scale = 1.0 + max((abs(v) for v in a.values()), default=0.0)
    for p in range(1, m + 1):
        G = {(): 1.0}
        for _ in range(p):
            G = _wedge_const(G, a)
        for _ in range(n - p):
            G = _wedge_const(G, b)
        if G.get(top, 0).real < -tol * scale**p * factorial(n):
            return False
    return True


def dump_form(F, path):
    with open(path, "w") as fh:
        json.dump(F.to_json(), fh)
