"""Jensen circular averages and right-slope extraction.

For a function ``f`` and log-radius ``x`` the Jensen average is the mean of
``log|f|`` over the circle ``|z| = e^x``.  Evaluators are vectorised
callables ``z -> complex`` (``kind="value"``) or ``z -> log f(z)``
(``kind="log"``, used when ``f`` itself would overflow, e.g. Z_n at large
degree, or when the natural object is already a logarithm).
"""

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from . import quadrature
from .errors import (InsufficientSamples, NonGeometricGrid, RootsOffCircle,
                     ZeroOfPolynomial)
from .lattice import evaluate_log_Z, log_Z_array
from .zeros import CERTIFY_TOL, find_roots

TWO_PI = 2.0 * math.pi
NEAR_ZERO = 1e-300


@dataclass(frozen=True)
class CircularAverageSample:
    x: float
    value: float
    error: float
    evaluator: str = ""
    n_intervals: int = 0


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    grid: tuple
    residual: float
    ls_slope: float
    two_point_slopes: tuple = field(default=())

    def to_dict(self):
        return {"slope": self.slope, "intercept": self.intercept,
                "ls_slope": self.ls_slope, "residual": self.residual,
                "grid": list(self.grid),
                "two_point_slopes": list(self.two_point_slopes)}


def branch_average_exact(alpha, x):
    """Mean of log|(z - z_c)^alpha| over |z| = e^x for |z_c| = 1."""
    if not alpha > 0:
        raise ValueError("alpha must be > 0")
    return alpha * max(x, 0.0)


def branch_power(z_c, alpha):
    """Principal-branch evaluator z -> (z - z_c)^alpha."""
    def f(z):
        return np.exp(alpha * np.log(np.asarray(z, dtype=complex) - z_c))
    f.descriptor = f"(z - {z_c})^{alpha}"
    return f


def _log_modulus(func, kind):
    def g(theta, x):
        z = np.exp(x + 1j * theta)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = func(z)
            if kind == "log":
                out = np.real(v)
            else:
                mod = np.abs(v)
                out = np.where(mod < NEAR_ZERO, np.nan, np.log(np.maximum(mod, NEAR_ZERO)))
        return out
    return g


def circular_average(func, x, *, tol=1e-10, kind="value", breakpoints=(),
                     max_intervals=20000, descriptor=None):
    """Jensen average of ``func`` on |z| = e^x by adaptive Gauss-Kronrod.

    Nodes where |func| < 1e-300 are never passed to the logarithm; the
    enclosing interval is bisected instead.  ``breakpoints`` are angles
    where the integrand is known to be rough (arc endpoints, branch cuts).
    """
    if x == 0:
        raise ValueError("x must be nonzero")
    g = _log_modulus(func, kind)
    total, err, nint = quadrature.integrate(
        lambda th: g(th, x), 0.0, TWO_PI,
        breakpoints=[b % TWO_PI for b in breakpoints],
        tol=tol * TWO_PI, max_intervals=max_intervals)
    desc = descriptor or getattr(func, "descriptor", getattr(func, "__name__", ""))
    return CircularAverageSample(float(x), total / TWO_PI, err / TWO_PI,
                                 desc, nint)


def geometric_grid(x0=0.1, halvings=6):
    return [x0 * 2.0 ** (-j) for j in range(halvings + 1)]


def slope_extrapolate(samples, *, min_samples=4):
    """Right-derivative at 0 from samples on the grid x_j = x0 * 2^-j.

    Two estimates are formed: a weighted least-squares line, and a
    Richardson table built from successive two-point slopes (each slope is
    assumed to carry a bias linear in x).  The Richardson value is the
    reported slope; the intercept is the least-squares intercept.
    """
    if len(samples) < min_samples:
        raise InsufficientSamples(f"need >= {min_samples} samples, got {len(samples)}")
    xs = np.array([s.x for s in samples])
    ys = np.array([s.value for s in samples])
    errs = np.array([s.error for s in samples])
    if np.any(xs <= 0):
        raise NonGeometricGrid("grid must be positive")
    ratios = xs[:-1] / xs[1:]
    if not np.allclose(ratios, 2.0, rtol=1e-9, atol=0):
        raise NonGeometricGrid("grid must halve at each step")

    w = 1.0 / np.maximum(errs, 1e-14) ** 2
    w = w / w.max()
    W = np.diag(w)
    X = np.stack([np.ones_like(xs), xs], axis=1)
    coef = np.linalg.solve(X.T @ W @ X, X.T @ W @ ys)
    intercept, ls_slope = float(coef[0]), float(coef[1])
    resid = ys - X @ coef
    rms = float(np.sqrt(np.sum(w * resid ** 2) / np.sum(w)))

    two_pt = (ys[:-1] - ys[1:]) / (xs[:-1] - xs[1:])
    # each Richardson level removes one power of x from the bias
    table = list(two_pt)
    level = table
    for _ in range(min(2, len(two_pt) - 1)):
        level = [2.0 * level[i + 1] - level[i] for i in range(len(level) - 1)]
    slope = float(level[-1])
    if not math.isfinite(slope):
        slope = ls_slope
    return SlopeFit(slope=slope, intercept=intercept, grid=tuple(xs.tolist()),
                    residual=rms, ls_slope=ls_slope,
                    two_point_slopes=tuple(float(v) for v in two_pt))


def jensen_slope(func, *, x0=0.1, halvings=6, tol=1e-10, kind="value",
                 breakpoints=()):
    """Sample the Jensen average on the default grid and fit the slope."""
    samples = [circular_average(func, x, tol=tol, kind=kind,
                                breakpoints=breakpoints)
               for x in geometric_grid(x0, halvings)]
    return samples, slope_extrapolate(samples)


def _check_on_circle(poly, zeros):
    if zeros is None:
        zeros = find_roots(poly)
    if np.max(np.abs(zeros.residuals)) > CERTIFY_TOL:
        raise RootsOffCircle("roots off the unit circle; Jensen closed form invalid")
    return zeros


def finite_jensen(poly, x, zeros=None):
    """(1/|V|) * integral over theta of log|Z_n(e^{x+i theta})|, closed form.

    With all N roots on the unit circle, Jensen's formula makes the circular
    mean log c_0 for x < 0 and log c_N + N x for x > 0.
    """
    _check_on_circle(poly, zeros)
    c = poly.coefficients
    if x > 0:
        mean = float(mpmath.log(c[-1])) + poly.degree * x
    else:
        mean = float(mpmath.log(c[0]))
    return TWO_PI * mean / poly.volume


def log_Z_evaluator(poly, per_site=False):
    scale = 1.0 / poly.volume if per_site else 1.0

    def f(z):
        return scale * log_Z_array(poly, z)
    f.descriptor = f"log Z[{poly.digest}]"
    return f


def factored_log_Z(poly, zeros, per_site=False):
    """log Z from the certified roots: log c_N + sum log(z - z_k).

    Fast and stable near the circle; the imaginary part is reduced to the
    principal value (-pi, pi].
    """
    roots = np.array([complex(r) for r in zeros.roots])
    log_lead = float(mpmath.log(poly.coefficients[-1]))
    scale = 1.0 / poly.volume if per_site else 1.0

    def f(z):
        z = np.asarray(z, dtype=complex)
        flat = z.reshape(-1)
        acc = np.full(flat.shape, log_lead, dtype=complex)
        for r in roots:
            acc += np.log(flat - r)
        im = np.angle(np.exp(1j * acc.imag))
        return (scale * (acc.real + 1j * im)).reshape(z.shape)
    f.descriptor = f"factored log Z[{poly.digest}]"
    return f


def finite_jensen_quadrature(poly, x, *, tol=1e-9):
    """Direct quadrature of (1/|V|) * integral of log|Z_n| from the coefficients."""
    zs = find_roots(poly)
    s = circular_average(log_Z_evaluator(poly), x, tol=tol, kind="log",
                         breakpoints=list(zs.angles))
    return TWO_PI * s.value / poly.volume, TWO_PI * s.error / poly.volume


def lattice_jensen_raw(poly, x, *, zeros=None, tol=1e-9):
    """Jensen average of the per-site free energy proxy Re F_n = log|Z_n|/|V|."""
    zeros = zeros or find_roots(poly)
    f = factored_log_Z(poly, zeros, per_site=True)
    return circular_average(f, x, tol=tol, kind="log",
                            breakpoints=list(zeros.angles))


def lattice_jensen_tilde(poly, z_c, x, *, zeros=None, tol=1e-8,
                         max_intervals=40000):
    """Jensen average of F_n(z) - F_n(z_c) with F_n = (1/|V|) Log Z_n.

    ``Log`` is the principal branch, so the integrand has jumps where the
    argument of Z_n wraps; they are integrable and the adaptive rule
    resolves them.
    """
    zeros = zeros or find_roots(poly)
    base = factored_log_Z(poly, zeros, per_site=True)
    try:
        fc = complex(evaluate_log_Z(poly, z_c)) / poly.volume
    except ZeroOfPolynomial:
        raise ValueError("z_c is a root of the polynomial")

    def f(z):
        return base(z) - fc
    f.descriptor = f"F_n - F_n(z_c) [{poly.digest}]"
    return circular_average(f, x, tol=tol, kind="value",
                            breakpoints=list(zeros.angles) + [np.angle(z_c)],
                            max_intervals=max_intervals)


def uniform_integrability_report(polys, xs, *, tol=1e-8):
    """Per-site L1 norms (1/|V|) * integral |log|Z_n|| dtheta on a grid of x.

    Returns rows per polynomial plus the running supremum over the list, in
    the given order, and whether that per-polynomial maximum is
    non-increasing beyond ``noise``.
    """
    if not polys:
        raise ValueError("need at least one polynomial")
    xs = list(xs)
    if not xs:
        raise ValueError("x grid is empty")
    rows = []
    running = -math.inf
    for p in polys:
        zeros = find_roots(p)
        f = factored_log_Z(p, zeros)

        def g(theta, x, f=f):
            v = np.real(f(np.exp(x + 1j * theta)))
            return np.abs(v)
        vals = []
        for x in xs:
            total, _, _ = quadrature.integrate(
                lambda th, x=x: g(th, x), 0.0, TWO_PI,
                breakpoints=list(zeros.angles), tol=tol)
            vals.append(total / p.volume)
        m = max(vals)
        running = max(running, m)
        rows.append({"volume": p.volume, "digest": p.digest,
                     "values": vals, "max": m, "running_sup": running})
    maxima = [r["max"] for r in rows]
    noise = 1e-6 * max(1.0, max(abs(v) for v in maxima))
    non_increasing = all(b <= a + noise for a, b in zip(maxima, maxima[1:]))
    return {"x_grid": xs, "rows": rows, "sup": running,
            "non_increasing": non_increasing}

