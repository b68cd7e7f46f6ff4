"""Lee-Yang zeros of fugacity polynomials and edge-exponent estimation."""

import csv
import io
import json
import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import (DegeneratePolynomial, InsufficientZeros, NoGap,
                     NonConvergence, OutOfModel)

CERTIFY_TOL = 1e-8
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ZeroSet:
    angles: np.ndarray          # sorted, in (0, 2*pi)
    residuals: np.ndarray       # |z_k| - 1, aligned with angles
    roots: tuple                # mpc roots, aligned with angles
    digest: str
    volume: int
    certified: bool

    @property
    def count(self):
        return len(self.angles)

    def to_dict(self):
        return {
            "digest": self.digest,
            "volume": self.volume,
            "certified": self.certified,
            "max_abs_residual": float(np.max(np.abs(self.residuals))),
            "angles": [float(a) for a in self.angles],
            "residuals": [float(r) for r in self.residuals],
        }

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "theta", "radial_residual"])
        for k, (a, r) in enumerate(zip(self.angles, self.residuals)):
            w.writerow([k, repr(float(a)), repr(float(r))])
        return buf.getvalue()


@dataclass(frozen=True)
class DensityHistogram:
    edges: np.ndarray
    density: np.ndarray     # rho per bin, dtheta/2pi weighting
    counts: np.ndarray
    volume: int

    @property
    def mass(self):
        widths = np.diff(self.edges)
        return math.fsum(self.density * widths / TWO_PI)


@dataclass(frozen=True)
class EdgeEstimate:
    theta_c: float
    A: float
    sigma: float
    window: float
    residual: float
    n_used: int

    def to_dict(self):
        return {"theta_c": self.theta_c, "A": self.A, "sigma": self.sigma,
                "window": self.window, "residual": self.residual,
                "n_used": self.n_used}


def _aberth_float(c, z, max_iter=500, tol=1e-14):
    """Aberth-Ehrlich in complex128.  ``c`` is c_0..c_N."""
    p = c[::-1]
    dp = np.polyder(p)
    n = len(z)
    eye = np.eye(n, dtype=bool)
    for _ in range(max_iter):
        pv = np.polyval(p, z)
        dv = np.polyval(dp, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = pv / dv
            diff = z[:, None] - z[None, :]
            diff[eye] = 1.0
            inv = 1.0 / diff
            inv[eye] = 0.0
            corr = ratio / (1.0 - ratio * inv.sum(axis=1))
        if not np.all(np.isfinite(corr)):
            break
        z = z - corr
        if np.max(np.abs(corr)) < tol:
            break
    return z


def _aberth_mp(coeffs, z, prec, max_iter=60):
    n = len(z)
    dcoeffs = [k * coeffs[k] for k in range(1, len(coeffs))]
    tol = mpmath.mpf(2) ** (-(prec - 12))
    # clustered roots stall at the rounding floor; accept a stalled iteration
    # once it is below sqrt(eps)
    stall = mpmath.mpf(2) ** (-(prec // 2))
    worst = None
    prev = None
    for _ in range(max_iter):
        pv = [mpmath.polyval(coeffs[::-1], zi) for zi in z]
        dv = [mpmath.polyval(dcoeffs[::-1], zi) for zi in z]
        new = list(z)
        worst = mpmath.mpf(0)
        for i in range(n):
            ratio = pv[i] / dv[i]
            s = mpmath.fsum(1 / (z[i] - z[j]) for j in range(n) if j != i)
            corr = ratio / (1 - ratio * s)
            new[i] = z[i] - corr
            worst = max(worst, abs(corr))
        z = new
        if worst < tol or (prev is not None and worst < stall and worst > prev / 2):
            return z
        prev = worst
    raise NonConvergence(
        f"Aberth iteration did not converge (last correction {float(worst):.3e})",
        worst_residual=float(worst))


def find_roots(poly, *, certify_tol=CERTIFY_TOL):
    """All roots of ``poly`` by simultaneous Aberth-Ehrlich iteration.

    Initial guesses sit on the unit circle, offset by a quarter step so no
    guess is real (a real guess can never leave the real axis for a real
    polynomial).  A float64 stage gets close; an mpmath stage at the
    polynomial's precision finishes the job.
    """
    n = poly.degree
    prec = poly.precision_bits
    with mpmath.workprec(prec):
        cmax = max(poly.coefficients)
        lead = poly.coefficients[-1] / cmax
        if lead < mpmath.mpf(2) ** (-prec):
            raise DegeneratePolynomial("leading coefficient underflows")
        c = np.array([float(ci / cmax) for ci in poly.coefficients])
    k = np.arange(n)
    z0 = np.exp(1j * TWO_PI * (k + 0.25) / n)
    if n == 1:
        zf = np.array([-c[0] / c[1]], dtype=complex)
    else:
        zf = _aberth_float(c, z0)
        if not np.all(np.isfinite(zf)):
            zf = z0
    with mpmath.workprec(prec):
        coeffs = [ci / cmax for ci in poly.coefficients]
        roots = _aberth_mp(coeffs, [mpmath.mpc(complex(x)) for x in zf], prec)
        angles = np.array([float(mpmath.arg(r)) % TWO_PI for r in roots])
        resid = np.array([float(abs(r) - 1) for r in roots])
    order = np.argsort(angles)
    angles = angles[order]
    resid = resid[order]
    roots = tuple(roots[i] for i in order)
    certified = bool(np.max(np.abs(resid)) <= certify_tol)
    return ZeroSet(angles, resid, roots, poly.digest, poly.volume, certified)


def zero_set_from_angles(angles, volume=None):
    """A certified ZeroSet built from exact unit-circle angles (synthetic data)."""
    a = np.sort(np.mod(np.asarray(angles, dtype=float), TWO_PI))
    roots = tuple(mpmath.mpc(complex(np.exp(1j * t))) for t in a)
    vol = len(a) if volume is None else volume
    return ZeroSet(a, np.zeros_like(a), roots, "synthetic", vol, True)


def gap_edge(zs, *, resolution=1e-6):
    """The empirical Lee-Yang edge: smallest zero angle on the upper circle.

    By conjugate symmetry the occupied arc is [theta_c, 2*pi - theta_c]; the
    gap adjacent to theta = 0 is the one reported.
    """
    if not zs.certified:
        raise ValueError("gap_edge needs a certified ZeroSet")
    upper = zs.angles[(zs.angles > 0) & (zs.angles <= math.pi + 1e-12)]
    if upper.size == 0:
        raise NoGap("no zero on the upper half circle")
    theta_c = float(upper.min())
    if theta_c < resolution:
        raise NoGap(f"zeros reach z = 1 (smallest angle {theta_c:.3e})")
    return theta_c


def empirical_density(zs, bins, volume=None):
    """Histogram of zero angles on (0, 2*pi), normalised per site."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    vol = zs.volume if volume is None else volume
    edges = np.linspace(0.0, TWO_PI, bins + 1)
    counts, _ = np.histogram(zs.angles, bins=edges)
    widths = np.diff(edges)
    density = counts / (vol * widths / TWO_PI)
    return DensityHistogram(edges, density, counts, vol)


def fit_edge_exponent(data, theta_c, window, *, volume=None, min_zeros=8):
    """Fit rho ~ A (theta - theta_c)^sigma from the zero counting function.

    Per site, the number of zeros in (theta_c, theta_c + t] behaves as
    A t^(sigma+1) / (2*pi*(sigma+1)).  A straight-line fit of log count
    against log t gives sigma + 1 as the slope.  Counting at the step tops
    (the k-th zero has exactly k zeros at or below it) needs no binning.
    """
    if isinstance(data, DensityHistogram):
        centres = 0.5 * (data.edges[:-1] + data.edges[1:])
        angles = np.repeat(centres, data.counts)
        vol = data.volume
    else:
        angles = np.asarray(getattr(data, "angles", data), dtype=float)
        vol = getattr(data, "volume", None) or len(angles)
    if volume is not None:
        vol = volume
    t = np.sort(angles - theta_c)
    t = t[(t > 0) & (t <= window)]
    if t.size < min_zeros:
        raise InsufficientZeros(
            f"{t.size} zeros inside window {window}, need {min_zeros}")
    k = np.arange(1, t.size + 1, dtype=float)
    X = np.log(t)
    Y = np.log(k)
    slope, intercept = np.polyfit(X, Y, 1)
    resid = Y - (slope * X + intercept)
    sigma = float(slope - 1.0)
    A = float(TWO_PI * slope * math.exp(intercept) / vol)
    est = EdgeEstimate(theta_c=float(theta_c), A=A, sigma=sigma,
                       window=float(window),
                       residual=float(np.sqrt(np.mean(resid ** 2))),
                       n_used=int(t.size))
    if not (-1.0 + 1e-9 < sigma < -1e-9):
        raise OutOfModel(f"fitted sigma = {sigma:.6g} outside (-1, 0)",
                         estimate=est)
    return est


def edge_estimate_json(est):
    return json.dumps(est.to_dict(), indent=2, sort_keys=True)
