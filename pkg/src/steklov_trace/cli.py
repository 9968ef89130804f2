"""Command-line interface: ``steklov-trace <command> [options]``.

Every option can also be given in a JSON file passed with ``--config``; keys
are option names with dashes replaced by underscores, and flags given on the
command line win over the file.

Exit status: 0 on success, 1 for invalid arguments, configs or input files,
2 when a solver fails, 3 when a computed object violates an invariant (a
diagnostic report is written to stderr).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .asymptotics import weyl_constant_laplace, weyl_fit
from .besov_oracle import besov_diff_seminorm, gagliardo_seminorm
from .compatibility import TracePair, check_pair, geymonat_check, vertex_compat_p2
from .disk_spectral import biharmonic_steklov_disk, disk_auxiliary, laplace_steklov_disk
from .errors import InvalidArgument, InvariantViolation, SPDViolation
from .fem import solve, solve_auxiliary
from .geometry import (BoundarySamples, DiskDomain, Mesh2D, build_disk, build_polygon_disk_mesh,
                       build_rect_mesh, node_angles, polygon_param)
from .serialize import dumps
from .spectrum import SteklovProblemSpec
from .trace_spaces import (TraceCoefficients, WeightScheme, boundary_expand, classify_membership,
                           extend, hadamard_coefficients, trace_of, weighted_norm)

log = logging.getLogger("steklov_trace")

COMMANDS = ("solve", "solve-aux", "expand", "extend", "check-pair", "check-polygon",
            "check-geymonat", "oracle", "weyl", "hadamard", "reproduce")

# option defaults; options are declared with default None so that config
# values can fill the gaps the command line leaves
DEFAULTS = {
    "domain": "disk:1",
    "k": 1,
    "ell": 0,
    "m": 1,
    "beta": None,
    "modes": 20,
    "N": None,
    "tol": 1e-8,
    "threads": 1,
    "out": None,
    "g": None,
    "g0": None,
    "g1": None,
    "zero": False,
    "coeffs": None,
    "corners": "0,0;1,0;1,1;0,1",
    "n_per_side": 1024,
    "samples": 1024,
    "s": 0.5,
    "p": 2.0,
    "method": "gagliardo",
    "sigma_order": 1,
    "levels": 5,
    "j_min": 10,
    "j_max": None,
}

_EXPR_NAMES = {name: getattr(np, name) for name in (
    "sin", "cos", "tan", "exp", "log", "sqrt", "abs", "arctan2", "arccos", "arcsin", "arctan",
    "sinh", "cosh", "tanh", "sign", "where", "minimum", "maximum", "heaviside", "pi", "hypot")}


# -- argument handling ---------------------------------------------------------------------

def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with option values")
    common.add_argument("--threads", type=int, help="cap on worker threads")
    common.add_argument("--out", help="output file (default: stdout)")

    problem = argparse.ArgumentParser(add_help=False)
    problem.add_argument("--domain", help="disk:R | square:lx,ly,nx,ny | polydisk:R,refinement "
                                          "| mesh:path.json")
    problem.add_argument("--k", type=int, help="Sobolev order (1 or 2)")
    problem.add_argument("--ell", type=int, help="trace order carrying the eigenvalue")
    problem.add_argument("--beta", help="boundary weights, e.g. '1=2.5'")
    problem.add_argument("--modes", type=int, help="number of eigenpairs")

    parser = argparse.ArgumentParser(prog="steklov-trace", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common, problem], help="Steklov spectrum as CSV")
    p = sub.add_parser("solve-aux", parents=[common, problem],
                       help="auxiliary spectrum eta^{ell,m} as CSV")
    p.add_argument("--m", type=int, help="trace order of the eigenvalue form")

    for name, text in (("expand", "boundary coefficients of a datum as JSON"),
                       ("extend", "extension of boundary coefficients as JSON")):
        p = sub.add_parser(name, parents=[common, problem], help=text)
        p.add_argument("--N", type=int, help="truncation")
        p.add_argument("--tol", type=float, help="round-trip tolerance")
        if name == "expand":
            p.add_argument("--g", help="boundary datum as an expression")
        else:
            p.add_argument("--coeffs", help="coefficients JSON written by 'expand'")

    p = sub.add_parser("check-pair", parents=[common],
                       help="spectral compatibility of a Dirichlet/Neumann pair")
    p.add_argument("--domain", help="disk:R | square:lx,ly,nx,ny")
    p.add_argument("--modes", type=int, help="angular modes (disk) of the bases")
    p.add_argument("--zero", action="store_true", default=None, help="test the zero pair")
    p.add_argument("--g0", help="Dirichlet datum expression")
    p.add_argument("--g1", help="Neumann datum expression")
    p.add_argument("--N", type=int, help="truncation")
    p.add_argument("--tol", type=float, help="orthonormality tolerance")

    for name, text in (("check-polygon", "corner conditions of boundary data"),
                       ("check-geymonat", "rotated-gradient condition of a pair")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--corners", help="counterclockwise corners 'x,y;x,y;...'")
        p.add_argument("--n-per-side", type=int, help="boundary nodes per side")
        if name == "check-polygon":
            p.add_argument("--g", help="boundary datum expression")
        else:
            p.add_argument("--g0", help="Dirichlet datum expression")
            p.add_argument("--g1", help="Neumann datum expression")
            p.add_argument("--levels", type=int, help="refinement levels")

    p = sub.add_parser("oracle", parents=[common], help="fractional seminorm by quadrature")
    p.add_argument("--domain", help="disk:R (uniform samples) or omit for --corners")
    p.add_argument("--corners", help="polygon corners instead of a disk")
    p.add_argument("--n-per-side", type=int)
    p.add_argument("--samples", type=int, help="boundary samples on a disk")
    p.add_argument("--g", help="boundary datum expression")
    p.add_argument("--s", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--method", choices=("gagliardo", "besov"))
    p.add_argument("--sigma-order", type=int, choices=(1, 2))
    p.add_argument("--levels", type=int)

    p = sub.add_parser("weyl", parents=[common, problem], help="Weyl-law fit of a spectrum")
    p.add_argument("--j-min", type=int)
    p.add_argument("--j-max", type=int)

    p = sub.add_parser("hadamard", parents=[common], help="Hadamard-type coefficient verdicts")
    p.add_argument("--N", type=int, help="truncation (default 10000)")

    sub.add_parser("reproduce", parents=[common], help="run every acceptance criterion")
    return parser


def _merge_config(args):
    opts = {k: v for k, v in vars(args).items() if k not in ("config", "command")}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidArgument(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise InvalidArgument("config must be a JSON object")
        for key, value in cfg.items():
            key = key.replace("-", "_")
            if key not in DEFAULTS and key not in opts:
                raise InvalidArgument(f"unknown config key {key!r}")
            if opts.get(key) is None:
                opts[key] = value
    for key, value in DEFAULTS.items():
        if opts.get(key) is None:
            opts[key] = value
    if args.command == "hadamard" and args.N is None and opts["N"] is None:
        opts["N"] = 10_000
    for key in ("tol", "threads", "modes"):
        if opts[key] is not None and not opts[key] > 0:
            raise InvalidArgument(f"--{key} must be positive")
    return argparse.Namespace(command=args.command, **opts)


def _parse_beta(text):
    if not text:
        return ()
    if isinstance(text, dict):
        return tuple((int(j), float(b)) for j, b in text.items())
    out = []
    for item in str(text).split(","):
        j, _, b = item.partition("=")
        try:
            out.append((int(j), float(b)))
        except ValueError as exc:
            raise InvalidArgument(f"malformed beta entry {item!r}") from exc
    return tuple(out)


def _numbers(text, what):
    try:
        return [float(v) for v in str(text).split(",")]
    except ValueError as exc:
        raise InvalidArgument(f"malformed {what} {text!r}") from exc


def parse_domain(text, k):
    """Domain object for ``disk:R``, ``square:...``, ``polydisk:...`` or ``mesh:path``."""
    kind, _, rest = str(text).partition(":")
    if kind == "disk":
        (R,) = _numbers(rest or "1", "radius")
        if not R > 0:
            raise InvalidArgument("radius must be positive")
        return DiskDomain(R)
    if kind == "square":
        vals = _numbers(rest or "1,1,8,8", "rectangle")
        if len(vals) != 4:
            raise InvalidArgument("square needs lx,ly,nx,ny")
        lx, ly, nx, ny = vals
        return build_rect_mesh(lx, ly, int(nx), int(ny), "P1" if k == 1 else "C1-rect")[0]
    if kind == "polydisk":
        vals = _numbers(rest or "1,3", "polygon disk")
        if k != 1:
            raise InvalidArgument("polygon-disk meshes carry P1 elements only (k = 1)")
        return build_polygon_disk_mesh(vals[0], int(vals[1]))[0]
    if kind == "mesh":
        if not rest:
            raise InvalidArgument("mesh: needs a file path")
        return Mesh2D.from_json(rest)
    raise InvalidArgument(f"unknown domain {text!r}")


def parse_corners(text):
    try:
        pts = [[float(v) for v in c.split(",")] for c in str(text).split(";")]
        return np.array(pts, float).reshape(-1, 2)
    except ValueError as exc:
        raise InvalidArgument(f"malformed corner list {text!r}") from exc


def boundary_function(expr, param):
    """Sample an expression in ``x, y, nx, ny, tx, ty, s, theta, side`` at the nodes."""
    if expr is None:
        raise InvalidArgument("a boundary datum expression is required")
    names = dict(_EXPR_NAMES)
    x, y = param.points.T
    names.update(x=x, y=y, nx=param.normals[:, 0], ny=param.normals[:, 1],
                 tx=param.tangents[:, 0], ty=param.tangents[:, 1], s=param.node_arclengths,
                 theta=np.arctan2(y, x) % (2 * np.pi),
                 side=param.node_side if param.node_side is not None else np.zeros(x.size, int))
    try:
        with np.errstate(all="ignore"):  # non-finite results are rejected below
            val = eval(compile(str(expr), "<expression>", "eval"), {"__builtins__": {}}, names)
    except Exception as exc:  # any failure is a bad user expression
        raise InvalidArgument(f"cannot evaluate {expr!r}: {exc}") from exc
    val = np.broadcast_to(np.asarray(val, float), x.shape)
    if not np.all(np.isfinite(val)):
        raise InvalidArgument(f"expression {expr!r} is not finite on the boundary")
    return BoundarySamples(param, np.array(val))


# -- spectra ---------------------------------------------------------------------------------

def _disk_spectrum(R, k, ell, beta, count, workers):
    """Disk spectrum with at least ``count`` certified pairs."""
    disk = DiskDomain(R)
    if k == 1:
        return laplace_steklov_disk(R, max(1, count // 2))
    n_modes = max(2, count // 2 + 2)
    while True:
        s = biharmonic_steklov_disk(SteklovProblemSpec(2, ell, beta, disk), n_modes,
                                    workers=workers)
        if len(s) >= count:
            return s
        n_modes *= 2


def build_spectrum(opts, count=None):
    count = opts.modes if count is None else count
    domain = parse_domain(opts.domain, opts.k)
    beta = _parse_beta(opts.beta)
    if isinstance(domain, DiskDomain):
        if opts.k not in (1, 2):
            raise InvalidArgument("disk spectra are available for k = 1 and k = 2")
        if opts.k == 1 and (opts.ell or beta):
            raise InvalidArgument("k = 1 has only ell = 0 and no weights")
        SteklovProblemSpec(opts.k, opts.ell, beta)
        return _disk_spectrum(domain.radius, opts.k, opts.ell, beta, count, opts.threads)
    spec = SteklovProblemSpec(opts.k, opts.ell, beta, domain)
    return solve(spec, domain, count)


def build_aux(opts, domain, ell, m, count):
    if isinstance(domain, DiskDomain):
        n_modes = max(2, count // 2 + 2)
        while True:
            s = disk_auxiliary(domain.radius, ell, m, n_modes, workers=opts.threads)
            if len(s) >= count:
                return s
            n_modes *= 2
    return solve_auxiliary(domain, ell, m, count)


# -- commands --------------------------------------------------------------------------------

def cmd_solve(opts):
    s = build_spectrum(opts)
    s.check_invariants(opts.modes, tol=max(opts.tol, 1e-8))
    return s.to_csv(opts.modes)


def cmd_solve_aux(opts):
    domain = parse_domain(opts.domain, 2)
    s = build_aux(opts, domain, opts.ell, opts.m, opts.modes)
    s.check_invariants(opts.modes, tol=max(opts.tol, 1e-8))
    return s.to_csv(opts.modes)


def _truncation(opts, s):
    N = opts.N or opts.modes
    if N > len(s):
        raise InvalidArgument(f"truncation {N} exceeds the {len(s)} computed modes")
    return N


def cmd_expand(opts):
    s = build_spectrum(opts, max(opts.modes, opts.N or 0))
    g = boundary_function(opts.g, s.param)
    c = boundary_expand(g, s, _truncation(opts, s))
    log.info("expand: L2 norm %.6g, H^1/2_A norm %.6g",
             weighted_norm(c, WeightScheme.L2()), weighted_norm(c, WeightScheme.HsA(0.5)))
    return c.to_json()


def cmd_extend(opts):
    if not opts.coeffs:
        raise InvalidArgument("extend needs --coeffs")
    try:
        text = Path(opts.coeffs).read_text()
        data = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidArgument(f"cannot read coefficients {opts.coeffs}: {exc}") from exc
    N = len(data.get("coeffs", []))
    s = build_spectrum(opts, max(opts.modes, N))
    c = TraceCoefficients.from_json(text, s)
    u = extend(c, s)
    back = boundary_expand(trace_of(u, s), s, c.truncation)
    err = float(np.max(np.abs(back.coeffs - c.coeffs))) if c.truncation else 0.0
    if err > opts.tol * max(1.0, float(np.max(np.abs(c.coeffs), initial=0.0))):
        raise InvariantViolation(f"extension round trip error {err:.3g}",
                                 {"round_trip_error": err})
    return dumps({"basis": s.basis_id, "dofs": u.tolist(),
                  "energy_norm": float(np.sqrt(s.inner(u, u))),
                  "round_trip_error": err,
                  "traces": {str(m): trace_of(u, s, m).values.tolist() for m in range(s.space.k)}})


def cmd_check_pair(opts):
    domain = parse_domain(opts.domain, 2)
    if isinstance(domain, DiskDomain):
        n_modes = opts.modes if opts.modes != DEFAULTS["modes"] else 64
        spectra = {ell: biharmonic_steklov_disk(SteklovProblemSpec(2, ell, (), domain), n_modes,
                                                workers=opts.threads) for ell in (0, 1)}
        aux = {(0, 1): disk_auxiliary(domain.radius, 0, 1, n_modes, workers=opts.threads),
               (1, 0): disk_auxiliary(domain.radius, 1, 0, n_modes, workers=opts.threads)}
    else:
        spectra = {ell: solve(SteklovProblemSpec(2, ell, (), domain), domain) for ell in (0, 1)}
        aux = {(0, 1): solve_auxiliary(domain, 0, 1, None), (1, 0): solve_auxiliary(domain, 1, 0, None)}
    param = spectra[0].param
    if opts.zero:
        pair = TracePair.zero(param)
    else:
        pair = TracePair(boundary_function(opts.g0 or "0", param),
                         boundary_function(opts.g1 or "0", param))
    res = check_pair(pair, spectra, aux, N=opts.N, tol=opts.tol)
    if not res.consistent:
        raise InvariantViolation("compatibility routes contradict each other",
                                 json.loads(res.to_json()))
    if res.verdict == "undecided":
        log.warning("check-pair: verdict undecided (soft failure); raise the truncation")
    return res.to_json()


def _polygon(opts):
    corners = parse_corners(opts.corners)
    return polygon_param(corners, int(opts.n_per_side))


def cmd_check_polygon(opts):
    param = _polygon(opts)
    reports = vertex_compat_p2(boundary_function(opts.g, param), param)
    return dumps({"vertices": [{"vertex": r.vertex, "position": r.position, "verdict": r.verdict,
                                "fit": r.fit, "levels": [list(x) for x in r.levels]}
                               for r in reports]})


def cmd_check_geymonat(opts):
    param = _polygon(opts)
    pair = TracePair(boundary_function(opts.g0 or "0", param),
                     boundary_function(opts.g1 or "0", param))
    return dumps(geymonat_check(pair, param, n_levels=opts.levels).to_dict())


def cmd_oracle(opts):
    if str(opts.domain).startswith("disk") and opts.corners == DEFAULTS["corners"]:
        R = parse_domain(opts.domain, 1).radius
        param = build_disk(R, int(opts.samples))[1]
    else:
        param = _polygon(opts)
    g = boundary_function(opts.g, param)
    if opts.method == "gagliardo":
        est = gagliardo_seminorm(g, opts.s, opts.p, n_levels=opts.levels)
    else:
        est = besov_diff_seminorm(g, opts.s, opts.p, opts.sigma_order, n_levels=opts.levels)
    return dumps({"method": opts.method, "s": opts.s, "p": opts.p,
                  "levels": [list(x) for x in est.value_at_levels],
                  "extrapolated": est.extrapolated, "diagnostics": est.diagnostics})


def cmd_weyl(opts):
    count = opts.modes if opts.modes != DEFAULTS["modes"] else 200
    s = build_spectrum(opts, count)
    fit = weyl_fit(s.eigenvalues[:count], opts.j_min, opts.j_max, s.param.total_length)
    out = json.loads(fit.to_json())
    if opts.k == 1:
        out["closed_form_constant"] = weyl_constant_laplace(2)
    return dumps(out)


def cmd_hadamard(opts):
    N = int(opts.N)
    c = hadamard_coefficients(N)
    l2 = classify_membership(c, WeightScheme.L2(), N)
    h12 = classify_membership(c, WeightScheme.HsA(0.5), N)
    return dumps({"N": N, "L2": l2.verdict, "H12A": h12.verdict,
                  "details": {"L2": l2.to_dict(), "H12A": h12.to_dict()}})


def cmd_reproduce(opts):
    from .acceptance import NOTE_10, reproduce_all
    results = reproduce_all()
    lines = [r.line() for r in results] + [NOTE_10]
    for r in results:
        if not r.passed:
            log.error("criterion %d details: %s", r.number, r.details)
    return "\n".join(lines) + "\n", 0 if all(r.passed for r in results) else 4


HANDLERS = {
    "solve": cmd_solve, "solve-aux": cmd_solve_aux, "expand": cmd_expand, "extend": cmd_extend,
    "check-pair": cmd_check_pair, "check-polygon": cmd_check_polygon,
    "check-geymonat": cmd_check_geymonat, "oracle": cmd_oracle, "weyl": cmd_weyl,
    "hadamard": cmd_hadamard, "reproduce": cmd_reproduce,
}


def _emit(text, path):
    if not text.endswith("\n"):
        text += "\n"
    if path:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise InvalidArgument(f"cannot write {path}: {exc}") from exc
    else:
        sys.stdout.write(text)


def _setup_logging():
    level = os.environ.get("STEKLOV_TRACE_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG,
              "warning": logging.WARNING}
    logging.basicConfig(level=levels.get(level, logging.ERROR), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    """Entry point; returns the exit status."""
    _setup_logging()
    args = _parser().parse_args(argv)
    try:
        opts = _merge_config(args)
        out = HANDLERS[args.command](opts)
        status = 0
        if isinstance(out, tuple):
            out, status = out
        _emit(out, opts.out)
        return status
    except InvalidArgument as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        print(dumps(_plain(exc.report)), file=sys.stderr)
        return 3
    except (SPDViolation, np.linalg.LinAlgError, ArithmeticError, RuntimeError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (int, float, str, bool, np.number, np.bool_)) or obj is None:
        return obj
    return repr(obj)


if __name__ == "__main__":
    sys.exit(main())
