"""Command-line interface.

Every subcommand writes a deterministic report (sorted-key JSON, or CSV /
markdown where requested) that embeds the configuration, tool version and
tolerance.  Exit status: 0 success, 1 usage error, 2 a checked quantity
fell outside its tolerance.
"""

import argparse
import cmath
import csv
import io
import json
import math
import sys
from fractions import Fraction

from . import __version__
from . import edge, jensen, kac, lattice, stieltjes, zeros
from .errors import InvalidCoupling, LatticeTooLarge, LyEdgeError

EXIT_OK, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2
SIGMA_MAX_DENOMINATOR = 1000


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_rational(text):
    """'p/q' exactly, or a decimal snapped to the nearest fraction with
    denominator <= 1000 (so -0.1666667 becomes -1/6)."""
    text = str(text).strip()
    try:
        value = Fraction(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")
    if "/" not in text:
        value = value.limit_denominator(SIGMA_MAX_DENOMINATOR)
    return value


def _positive(kind):
    def conv(text):
        v = kind(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
        return v
    return conv


def _precision(text):
    v = int(text)
    if v < 64:
        raise argparse.ArgumentTypeError("precision must be >= 64 bits")
    return v


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def _c(z):
    return [z.real, z.imag]


def _check(name, value, target, tol, *, relative=False):
    dev = abs(value - target)
    if relative:
        dev = dev / abs(target)
    return {"name": name, "value": _jsonable(value), "target": _jsonable(target),
            "deviation": dev, "tolerance": tol, "relative": relative,
            "passed": bool(dev <= tol)}


def _report(args, result, checks, tolerance):
    config = {k: v for k, v in sorted(vars(args).items())
              if k not in ("handler", "config", "out")}
    return {"command": args.command, "version": __version__,
            "config": _jsonable(config), "tolerance": tolerance,
            "result": _jsonable(result), "checks": checks,
            "passed": all(c["passed"] for c in checks)}


# --- model construction ---------------------------------------------------

def _density_model(args):
    sigma = float(args.sigma)
    if args.arc_width is not None:
        return stieltjes.DensityModel(args.A, sigma, args.thetac, args.arc_width), False
    W = stieltjes.DensityModel.calibrated_width(args.A, sigma)
    limit = math.pi - args.thetac
    clipped = W > limit
    model = stieltjes.DensityModel(args.A, sigma, args.thetac, min(W, limit))
    return model, not clipped


def _lattice_spec(args):
    for k in ("width", "length", "coupling"):
        if getattr(args, k) is None:
            raise UsageError(f"--{k} is required")
    return lattice.LatticeSpec(args.width, args.length, args.coupling,
                               args.boundary)


def _load_polynomial(args):
    if getattr(args, "spec", None):
        with open(args.spec) as fh:
            data = json.load(fh)
        if "coefficients" in data:
            return lattice.FugacityPolynomial.from_dict(data)
        spec = lattice.LatticeSpec(**data)
        return lattice.partition_polynomial(spec, args.precision_bits)
    return lattice.partition_polynomial(_lattice_spec(args), args.precision_bits)


# --- subcommands ----------------------------------------------------------

def cmd_lattice(args):
    poly = _load_polynomial(args)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "c_k"])
        for k, c in enumerate(poly.to_dict()["coefficients"]):
            w.writerow([k, c])
        return buf.getvalue(), True
    result = {"polynomial": poly.to_dict(), "digest": poly.digest}
    return _report(args, result, [], None), True


def cmd_zeros(args):
    poly = _load_polynomial(args)
    zs = zeros.find_roots(poly, certify_tol=args.tol)
    if args.format == "csv":
        return zs.to_csv(), zs.certified
    result = zs.to_dict()
    try:
        result["gap_edge"] = zeros.gap_edge(zs)
    except ValueError as exc:
        result["gap_edge"] = None
        result["gap_edge_error"] = str(exc)
    worst = float(max(abs(r) for r in zs.residuals))
    checks = [_check("max |radius - 1|", worst, 0.0, args.tol)]
    return _report(args, result, checks, args.tol), zs.certified


def _samples_csv(samples):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "N", "err"])
    for s in samples:
        w.writerow([repr(s.x), repr(s.value), repr(s.error)])
    return buf.getvalue()


def cmd_jensen(args):
    xs = [args.x] if args.x is not None else jensen.geometric_grid(args.x0, args.halvings)
    if any(x == 0 for x in xs):
        raise UsageError("x must be nonzero")
    checks = []
    result = {}
    if args.model == "branch":
        if args.alpha is None:
            raise UsageError("--alpha is required for the branch model")
        z_c = cmath.exp(1j * args.zc_angle)
        f = jensen.branch_power(z_c, args.alpha)
        samples = [jensen.circular_average(f, x, tol=args.tol,
                                           breakpoints=[args.zc_angle])
                   for x in xs]
        for s in samples:
            checks.append(_check(f"N({s.x})", s.value,
                                 jensen.branch_average_exact(args.alpha, s.x), 1e-8))
        target_slope = args.alpha
        slope_tol = 0.02
    elif args.model == "stieltjes":
        model, calibrated = _density_model(args)
        f = stieltjes.jensen_log_evaluator(model)
        samples = [jensen.circular_average(f, x, tol=args.tol, kind="log",
                                           breakpoints=model.breakpoints())
                   for x in xs]
        target_slope = stieltjes.total_mass(model)
        slope_tol = 0.02
        pred = stieltjes.predicted_B(model.A, model.sigma, model.theta_c)
        result.update(model=model.to_dict(), total_mass=target_slope,
                      log_abs_B=math.log(pred.modulus))
    else:
        poly = _load_polynomial(args)
        zs = zeros.find_roots(poly)
        samples = [jensen.lattice_jensen_raw(poly, x, zeros=zs, tol=args.tol)
                   for x in xs]
        for s in samples:
            closed = jensen.finite_jensen(poly, s.x, zs) / (2.0 * math.pi)
            checks.append(_check(f"N({s.x})", s.value, closed, 1e-7))
        target_slope = poly.degree / poly.volume
        slope_tol = 0.02
        result["digest"] = poly.digest
    if args.format == "csv":
        return _samples_csv(samples), all(c["passed"] for c in checks)
    result["samples"] = [{"x": s.x, "N": s.value, "err": s.error,
                          "intervals": s.n_intervals} for s in samples]
    if len(samples) >= 4:
        fit = jensen.slope_extrapolate(samples)
        result["slope_fit"] = fit.to_dict()
        checks.append(_check("slope", fit.slope, target_slope, slope_tol,
                             relative=True))
    rep = _report(args, result, checks, args.tol)
    return rep, rep["passed"]


def cmd_stieltjes(args):
    model, calibrated = _density_model(args)
    pred = stieltjes.predicted_B(model.A, model.sigma, model.theta_c)
    lhs, rhs = stieltjes.mellin_barnes_check(model.sigma, 1.0)
    result = {"model": model.to_dict(), "width_calibrated": calibrated,
              "total_mass": stieltjes.total_mass(model),
              "predicted_B": _c(pred.B), "predicted_abs_B": pred.modulus,
              "mellin_barnes": {"a": 1.0, "lhs": _c(lhs), "rhs": _c(rhs)}}
    checks = [_check("mellin-barnes a=1", lhs, rhs, 1e-6)]
    if args.verify_b:
        rep = stieltjes.verify_H2(model)
        result.update(fitted_B=_c(rep.fit.B), fitted_abs_B=abs(rep.fit.B),
                      rel_err=rep.modulus_rel_err, phase_err=rep.phase_err,
                      fit=rep.fit.to_dict())
        checks.append(_check("|B|", abs(rep.fit.B), pred.modulus, 0.01,
                             relative=True))
        checks.append(_check("arg B", rep.phase_err, 0.0, 0.02))
    r = _report(args, result, checks, {"abs_B_rel": 0.01, "phase": 0.02})
    return r, r["passed"]


def _monodromy_checks(res, alpha):
    checks = [_check("multiplier", res.multiplier,
                     cmath.exp(2j * math.pi * float(alpha)), 1e-6)]
    q = alpha.denominator
    expected = q if q <= 64 else None
    checks.append({"name": "order", "value": res.to_dict()["order"],
                   "target": q if expected else "infinite", "deviation": None,
                   "tolerance": 0, "relative": False,
                   "passed": res.order == expected})
    return checks


def cmd_monodromy(args):
    alpha = args.sigma + 1
    if not 0 < alpha < 1:
        raise UsageError("sigma must lie in (-1, 0)")
    germ = edge.PowerGerm(1.0, float(alpha))
    res = edge.continue_around(germ, args.radius, args.samples)
    reg = edge.continue_around(edge.RegularGerm(1.0, 0.5), args.radius,
                               args.samples)
    checks = _monodromy_checks(res, alpha)
    checks.append(_check("regular multiplier", reg.multiplier, 1.0, 1e-10))
    result = {"sigma": str(args.sigma), "exponent": str(alpha),
              "monodromy": res.to_dict(), "regular": reg.to_dict()}
    r = _report(args, result, checks, 1e-6)
    return r, r["passed"]


def cmd_kac_table(args):
    rows = kac.kac_table(args.m_max)
    ok = all(r.sigma == Fraction(1 - r.m, 3 * r.m) and r.sigma + 1 == 1 / (1 - r.h)
             for r in rows)
    if args.format == "json":
        checks = [{"name": "row invariants", "value": ok, "target": True,
                   "deviation": None, "tolerance": 0, "relative": False,
                   "passed": ok}]
        r = _report(args, {"rows": [row.to_dict() for row in rows]}, checks, 0)
        return r, ok
    return kac.format_table(rows, args.format), ok


def pipeline_edge_report(args):
    """stieltjes -> edge fit -> Jensen slope -> monodromy for one sigma."""
    stages = {}
    checks = []

    def stage(name, fn):
        try:
            return fn()
        except LyEdgeError as exc:
            raise LyEdgeError(f"[{name}] {exc}") from exc

    model, calibrated = stage("stieltjes", lambda: _density_model(args))
    alpha_exact = args.sigma + 1
    alpha = float(alpha_exact)
    pred = stieltjes.predicted_B(model.A, model.sigma, model.theta_c)
    mass = stieltjes.total_mass(model)
    stages["stieltjes"] = {"model": model.to_dict(), "total_mass": mass,
                           "width_calibrated": calibrated,
                           "predicted_B": _c(pred.B),
                           "predicted_abs_B": pred.modulus}

    h2 = stage("edge-fit", lambda: stieltjes.verify_H2(model))
    stages["edge_fit"] = h2.to_dict()
    checks.append(_check("|B|", abs(h2.fit.B), pred.modulus, 0.01, relative=True))
    checks.append(_check("arg B", h2.phase_err, 0.0, 0.02))

    samples, fit = stage("jensen", lambda: jensen.jensen_slope(
        stieltjes.jensen_log_evaluator(model), x0=args.x0,
        halvings=args.halvings, tol=args.tol, kind="log",
        breakpoints=model.breakpoints()))
    stages["jensen"] = {"slope_fit": fit.to_dict(),
                        "samples": [{"x": s.x, "N": s.value, "err": s.error}
                                    for s in samples],
                        "log_abs_B": math.log(pred.modulus)}
    checks.append(_check("slope vs total mass", fit.slope, mass, 0.02,
                         relative=True))
    if calibrated:
        checks.append(_check("slope vs sigma+1", fit.slope, alpha, 0.02,
                             relative=True))

    germ = edge.singular_part(h2.fit)
    mono = stage("monodromy", lambda: edge.continue_around(
        germ, min(args.radius, edge.dominance_radius(h2.fit)), args.samples,
        start_arg=h2.fit.branch_start + edge.CUT_CLEARANCE))
    stages["monodromy"] = mono.to_dict()
    checks += _monodromy_checks(mono, alpha_exact)
    stages["q"] = edge.monodromy_order(alpha_exact)
    return stages, checks


def cmd_edge_report(args):
    stages, checks = pipeline_edge_report(args)
    r = _report(args, stages, checks,
                {"abs_B_rel": 0.01, "phase": 0.02, "slope_rel": 0.02,
                 "multiplier": 1e-6, "quadrature": args.tol})
    return r, r["passed"]


# --- parser ---------------------------------------------------------------

def _common(p, formats=("json",), tol=1e-8):
    p.add_argument("--config", help="JSON file supplying default flag values")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=formats, default=formats[0])
    p.add_argument("--precision-bits", type=_precision, default=128)
    p.add_argument("--tol", type=_positive(float), default=tol)


def _lattice_flags(p):
    p.add_argument("--spec", help="JSON lattice spec or serialized polynomial")
    p.add_argument("--width", type=int)
    p.add_argument("--length", type=int)
    p.add_argument("--coupling", type=_positive(float))
    p.add_argument("--boundary", choices=lattice.BOUNDARIES, default="free")


def _model_flags(p):
    p.add_argument("--A", type=_positive(float), default=1.0)
    p.add_argument("--sigma", type=parse_rational, default=Fraction(-1, 6))
    p.add_argument("--thetac", type=float, default=0.5)
    p.add_argument("--arc-width", type=_positive(float),
                   help="arc width W (default: total mass sigma+1, clipped to pi - thetac)")


def build_parser():
    parser = _Parser(prog="lyedge", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    subs = {}

    p = sub.add_parser("lattice", help="partition polynomial of an Ising rectangle")
    _common(p, ("json", "csv"))
    _lattice_flags(p)
    p.set_defaults(handler=cmd_lattice)
    subs["lattice"] = p

    p = sub.add_parser("zeros", help="certified Lee-Yang zeros")
    _common(p, ("json", "csv"))
    _lattice_flags(p)
    p.set_defaults(handler=cmd_zeros)
    subs["zeros"] = p

    p = sub.add_parser("jensen", help="Jensen averages and right-slope at 0")
    _common(p, ("json", "csv"))
    p.add_argument("--model", choices=("lattice", "stieltjes", "branch"),
                   default="branch")
    p.add_argument("--x0", type=_positive(float), default=0.1)
    p.add_argument("--halvings", type=int, default=6)
    p.add_argument("--x", type=float, help="single log-radius instead of the grid")
    p.add_argument("--alpha", type=_positive(float))
    p.add_argument("--zc-angle", type=float, default=1.0)
    _lattice_flags(p)
    _model_flags(p)
    p.set_defaults(handler=cmd_jensen)
    subs["jensen"] = p

    p = sub.add_parser("stieltjes", help="synthetic density model and amplitude B")
    _common(p)
    _model_flags(p)
    p.add_argument("--verify-b", action="store_true")
    p.set_defaults(handler=cmd_stieltjes)
    subs["stieltjes"] = p

    p = sub.add_parser("monodromy", help="continue xi^(sigma+1) around 0")
    _common(p)
    p.add_argument("--sigma", type=parse_rational, default=Fraction(-1, 6))
    p.add_argument("--radius", type=_positive(float), default=0.1)
    p.add_argument("--samples", type=int, default=256)
    p.set_defaults(handler=cmd_monodromy)
    subs["monodromy"] = p

    p = sub.add_parser("kac-table", help="exact exponents for M(2,2m+1)")
    _common(p, ("markdown", "csv", "json"))
    p.add_argument("--m-max", type=int, default=5)
    p.set_defaults(handler=cmd_kac_table)
    subs["kac-table"] = p

    p = sub.add_parser("edge-report", help="full synthetic pipeline for one sigma")
    _common(p, tol=1e-9)
    _model_flags(p)
    p.add_argument("--x0", type=_positive(float), default=0.1)
    p.add_argument("--halvings", type=int, default=6)
    p.add_argument("--radius", type=_positive(float), default=1e-3)
    p.add_argument("--samples", type=int, default=256)
    p.set_defaults(handler=cmd_edge_report)
    subs["edge-report"] = p
    return parser, subs


def _apply_config(sub, path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}")
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        dest = key.lstrip("-").replace("-", "_")
        if dest not in actions or dest in ("config", "help"):
            raise UsageError(f"unknown config key {key!r}")
        act = actions[dest]
        if act.type is not None and value is not None and not isinstance(value, bool):
            try:
                value = act.type(str(value))
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"config key {key!r}: {exc}")
        if act.choices is not None and value not in act.choices:
            raise UsageError(f"config key {key!r}: invalid choice {value!r}")
        defaults[dest] = value
    sub.set_defaults(**defaults)


def _serialise(report):
    if isinstance(report, str):
        return report
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser, subs = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        if args.config:
            _apply_config(subs[args.command], args.config)
            args = parser.parse_args(argv)
        text, ok = args.handler(args)
        text = _serialise(text)
        if args.out:
            try:
                with open(args.out, "w") as fh:
                    fh.write(text)
            except OSError as exc:
                raise UsageError(f"cannot write {args.out}: {exc}")
        else:
            sys.stdout.write(text)
    except UsageError as exc:
        print(f"lyedge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LatticeTooLarge, InvalidCoupling) as exc:
        print(f"lyedge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LyEdgeError as exc:
        print(f"lyedge: verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (ValueError, OSError) as exc:
        print(f"lyedge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK if ok else EXIT_VERIFY
