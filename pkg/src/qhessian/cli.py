"""Command-line front end: det, verify, solve, capacity."""
import argparse
import dataclasses
import json
import logging
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .errors import MalformedInput, QHessianError, ShapeMismatch
from .io import dump_json, dumps

log = logging.getLogger("qhessian")

EXIT_CODES = """exit codes:
  0  success (verify: every invariant passed)
  1  a verified invariant failed, or an input left the admissible cone
  2  malformed input, shape mismatch, index or degree out of range
  3  quaternionic eigenvalue pairing failure
  4  Newton or inner iteration did not converge
  5  admissibility lost along every damped step
  6  no subsolution barrier found for the initial guess
  7  an independent oracle disagreed with the main route
"""

SUITES = ("algebra", "cones", "forms", "crosscheck", "solver", "capacity", "all")


@dataclass
class RunConfig:
    command: str = "solve"
    n: int = 1
    m: int = 1
    grid: int = 17
    radius: float = 1.0
    boundary: str = "coord:0"
    manufactured: bool = False
    mode: str = "grid"
    a_init: float = 1.0
    a_factor: float = 0.25
    a_final: float = 1e-6
    tol: float = 1e-10
    seed: int = 0
    threads: int = 0
    out: str = "qhessian_out"
    suite: str = "all"
    matrix: str = None
    k_radius: float = 0.3
    k_center: list = field(default_factory=list)
    mask: str = None

    def validate(self):
        if self.n < 1:
            raise ShapeMismatch("--n must be >= 1")
        if not 1 <= self.m <= self.n:
            raise ShapeMismatch(f"--m must lie in [1, n={self.n}]")
        if self.grid < 5 or self.grid % 2 == 0:
            raise ShapeMismatch("--grid must be odd and >= 5")
        if self.radius <= 0:
            raise ShapeMismatch("--radius must be positive")
        if not (self.a_init >= self.a_final > 0 and 0 < self.a_factor < 1):
            raise ShapeMismatch("need a_init >= a_final > 0 and 0 < a_factor < 1")
        if self.tol <= 0:
            raise ShapeMismatch("--tol must be positive")
        if self.mode not in ("grid", "radial"):
            raise ShapeMismatch("--mode is grid or radial")
        if not 0 <= self.seed < 2**64:
            raise ShapeMismatch("--seed must fit in 64 bits")
        return self


def load_config(path):
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedInput(f"cannot read config {path}: {exc}") from exc
    names = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(obj) - names
    if unknown:
        raise MalformedInput(f"unknown config keys: {sorted(unknown)}")
    return obj


def resolve_config(args):
    """flags > config file > defaults."""
    values = {}
    if getattr(args, "config", None):
        values.update(load_config(args.config))
    for f in dataclasses.fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    values["command"] = args.command
    return RunConfig(**values).validate()


# -- boundary presets ---------------------------------------------------------


def boundary_function(preset, nvars):
    """Callable X -> values and, for polynomials, the PolyScalar itself."""
    from .exterior import PolyScalar

    kind, _, arg = preset.partition(":")
    if kind == "const":
        c = _float(arg, preset)
        return (lambda X: np.full(len(X), c)), PolyScalar.const(nvars, c)
    if kind == "coord":
        k = _int(arg, preset)
        if not 0 <= k < nvars:
            raise MalformedInput(f"coordinate {k} outside [0, {nvars})")
        return (lambda X: X[:, k].copy()), PolyScalar.coord(nvars, k, 1.0)
    if kind == "norm2":
        c = _float(arg or "1", preset)
        u = PolyScalar.norm2(nvars, c)
        return u, u
    if kind == "poly":
        with open(arg) as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise MalformedInput(str(exc)) from exc
        terms = obj["terms"] if isinstance(obj, dict) else obj
        u = PolyScalar.from_json(nvars, terms)
        return u, u
    raise MalformedInput(f"unknown boundary preset {preset!r} (const:c, coord:k, norm2:c, poly:file, grid:file)")


def _float(s, preset):
    try:
        return float(s)
    except ValueError as exc:
        raise MalformedInput(f"bad number in {preset!r}") from exc


def _int(s, preset):
    try:
        return int(s)
    except ValueError as exc:
        raise MalformedInput(f"bad index in {preset!r}") from exc


def _outdir(cfg):
    os.makedirs(cfg.out, exist_ok=True)
    return cfg.out


def _emit(obj):
    sys.stdout.write(dumps(obj) + "\n")


# -- commands -------------------------------------------------------------------


def cmd_det(cfg):
    from .quatlinalg import eigenvalues, load_matrix, moore_det

    if not cfg.matrix:
        raise MalformedInput("det needs a matrix JSON file")
    A = load_matrix(cfg.matrix)
    lam = eigenvalues(A)
    _emit({"moore_det": moore_det(A), "eigenvalues": lam})
    return 0


def cmd_verify(cfg):
    from .verify import run_suite

    kw = {}
    if cfg.suite == "crosscheck" and cfg.n_given:
        kw["n_values"] = (cfg.n,)
    report = run_suite(cfg.suite, cfg.seed, **kw)
    report["seed"] = cfg.seed
    path = os.path.join(_outdir(cfg), f"verify_{cfg.suite}.json")
    dump_json(report, path)
    for rep in report.get("reports", [report]):
        for c in rep["checks"]:
            status = "PASS" if c["passed"] else "FAIL"
            print(f"{status} {rep['suite']}.{c['name']}: {c['checked']} checked, "
                  f"{c['failures']} failed, worst {c['worst']:.3e}")
    print(f"report written to {path}")
    return 0 if report["passed"] else 1


def cmd_solve(cfg):
    if cfg.mode == "radial":
        return _solve_radial(cfg)
    from .hessop import GridFunction, GridSpec, geometry
    from .solver import Continuation, DirichletProblem, NewtonOptions, manufactured_problem, solve_dirichlet

    cont = Continuation(cfg.a_init, cfg.a_factor, cfg.a_final)
    newton = NewtonOptions(tol_residual=cfg.tol)
    kind, _, arg = cfg.boundary.partition(":")
    exact = None
    if kind == "grid":
        bnd = GridFunction.load(arg)
        spec = bnd.spec
        if spec.n != cfg.n:
            raise ShapeMismatch(f"grid file has n={spec.n}, expected {cfg.n}")
        bnd.role = "boundary"
        problem = DirichletProblem(spec, cfg.m, bnd, None, cont, newton)
    else:
        spec = GridSpec(cfg.n, cfg.grid, cfg.radius)
        fn, poly = boundary_function(cfg.boundary, spec.dim)
        if cfg.manufactured:
            problem = manufactured_problem(spec, cfg.m, poly, cont, newton)
            exact = poly
        else:
            problem = DirichletProblem(spec, cfg.m, GridFunction.from_function(spec, fn, "boundary"), None, cont, newton)
    u, report = solve_dirichlet(problem)
    out = report.as_dict()
    out["config"] = dataclasses.asdict(cfg)
    out["grid"] = spec.header()
    g = geometry(spec)
    if exact is not None:
        err = float(np.max(np.abs(u.values[g.interior_idx] - exact(spec.coords(g.interior_idx)))))
        out["sup_error"] = err
        out["C_h2"] = err / spec.h**2
    d = _outdir(cfg)
    u.save(os.path.join(d, "solution.json"))
    dump_json(out, os.path.join(d, "report.json"))
    u.to_csv(os.path.join(d, "slice.csv"), u.slice_2d())
    _emit({"success": report.success, "final_residual": report.final_residual,
           "sup_error": out.get("sup_error"), "C_h2": out.get("C_h2"), "out": d})
    return 0 if report.success else 4


def _solve_radial(cfg):
    from math import factorial

    from .hessop import bridge_factor
    from .radial import radial_solve

    kind, _, arg = cfg.boundary.partition(":")
    if kind != "const":
        raise MalformedInput("radial mode takes const:c boundary data")
    g = _float(arg, cfg.boundary)
    T = cfg.a_final * factorial(cfg.n) / bridge_factor(cfg.n, cfg.m)
    r = np.linspace(0.0, cfg.radius, cfg.grid)
    prof = radial_solve(g, cfg.m, cfg.n, r, T=T, R=cfg.radius, tol=cfg.tol)
    d = _outdir(cfg)
    out = {"config": dataclasses.asdict(cfg), "target": T, "u0": prof.u0,
           "shooting_iters": prof.shooting_iters, "r": prof.r, "u": prof.u, "du": prof.du}
    dump_json(out, os.path.join(d, "report.json"))
    with open(os.path.join(d, "slice.csv"), "w") as fh:
        fh.write("r,u,du\n")
        for row in zip(prof.r, prof.u, prof.du):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    _emit({"u0": prof.u0, "out": d})
    return 0


def cmd_capacity(cfg):
    d = _outdir(cfg)
    center = np.zeros(4 * cfg.n)
    if cfg.k_center:
        center[: len(cfg.k_center)] = cfg.k_center
    if cfg.mode == "radial" or (cfg.n > 1 and not cfg.mask):
        from .capacity import radial_capacity

        if np.any(center):
            raise ShapeMismatch("the radial capacity route needs K centered at the origin")
        value = radial_capacity(cfg.n, cfg.m, cfg.k_radius, cfg.radius)
        out = {"capacity": value, "route": "radial", "n": cfg.n, "m": cfg.m,
               "k_radius": cfg.k_radius, "radius": cfg.radius}
    else:
        from .capacity import CompactMask, capacity_estimate
        from .hessop import GridSpec
        from .oracles import ball_capacity_n1

        if cfg.mask:
            K = CompactMask.load(cfg.mask)
            spec = K.spec
            center = np.ones(1)  # no closed form for a general mask
        else:
            spec = GridSpec(1, cfg.grid, cfg.radius)
            K = CompactMask.ball(spec, cfg.k_radius, center)
        value, u = capacity_estimate(K, cfg.m, return_extremal=True)
        u.save(os.path.join(d, "extremal.json"))
        dump_json(K.to_json(), os.path.join(d, "mask.json"))
        out = {"capacity": value, "route": "grid", "n": 1, "m": cfg.m, "k_radius": None if cfg.mask else cfg.k_radius,
               "radius": spec.radius, "grid": spec.P, "k_nodes": int(K.K.sum())}
        if not np.any(center):
            out["closed_form_ball"] = ball_capacity_n1(cfg.k_radius, cfg.radius)
    dump_json(out, os.path.join(d, "capacity.json"))
    _emit(out)
    return 0


COMMANDS = {"det": cmd_det, "verify": cmd_verify, "solve": cmd_solve, "capacity": cmd_capacity}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig fields (flags override it)")
    common.add_argument("--n", type=int, help="quaternionic dimension")
    common.add_argument("--m", type=int, help="Hessian order, 1 <= m <= n")
    common.add_argument("--grid", type=int, help="lattice points per axis (odd, >= 5)")
    common.add_argument("--radius", type=float, help="radius of the ball Omega")
    common.add_argument("--boundary", help="const:c | coord:k | norm2:c | poly:<file> | grid:<file>")
    common.add_argument("--manufactured", action="store_true", default=None,
                        help="use the boundary polynomial as exact solution and derive the density from it")
    common.add_argument("--mode", choices=("grid", "radial"), help="full lattice or radial reduction")
    common.add_argument("--a-init", dest="a_init", type=float)
    common.add_argument("--a-factor", dest="a_factor", type=float)
    common.add_argument("--a-final", dest="a_final", type=float)
    common.add_argument("--tol", type=float, help="Newton residual tolerance")
    common.add_argument("--seed", type=int, help="64-bit seed of the Philox generator")
    common.add_argument("--threads", type=int, help="cap on numba worker threads")
    common.add_argument("--out", help="output directory")
    common.add_argument("--backend", choices=("numba", "numpy"), help="kernel backend")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="qhessian", description="Quaternionic m-Hessian toolkit.",
                                epilog=EXIT_CODES, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)
    fmt = argparse.RawDescriptionHelpFormatter
    s = sub.add_parser("det", parents=[common], help="Moore determinant and spectrum", epilog=EXIT_CODES, formatter_class=fmt)
    s.add_argument("matrix", help="matrix JSON file {n, entries[n][n][4]}")
    s = sub.add_parser("verify", parents=[common], help="run an invariant suite", epilog=EXIT_CODES, formatter_class=fmt)
    s.add_argument("suite", choices=SUITES)
    sub.add_parser("solve", parents=[common], help="solve the Dirichlet problem", epilog=EXIT_CODES, formatter_class=fmt)
    s = sub.add_parser("capacity", parents=[common], help="m-capacity of a ball K", epilog=EXIT_CODES, formatter_class=fmt)
    s.add_argument("--k-radius", dest="k_radius", type=float, help="radius of K")
    s.add_argument("--k-center", dest="k_center", type=float, nargs="+", help="center of K")
    s.add_argument("--mask", help="mask JSON file (GridSpec header plus boolean 'mask' array) instead of a ball")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        cfg.n_given = args.n is not None
        if args.backend:
            _accel.set_backend(args.backend)
        _accel.set_threads(cfg.threads)
        return COMMANDS[cfg.command](cfg)
    except QHessianError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
