"""Edge-expansion fitting and monodromy around the Lee-Yang edge.

Near z_c the free energy splits into a single-valued regular part and a
singular part carrying the fractional exponent sigma + 1:

    F(z_c + xi) ~ a0 + a1 xi + B xi^(sigma+1) + B1 xi^(sigma+2)

Powers of xi are taken on a branch fixed by ``branch_start``: the argument
of xi runs over (branch_start, branch_start + 2 pi), so the cut is the ray
from z_c at angle ``branch_start``.  The default 0 puts the cut along
z_c + s, s >= 0.
"""

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (FitResidualTooLarge, NoBranchPoint, PhaseUnwrapFailure,
                     RadiusTooLarge, RankDeficient)

TWO_PI = 2.0 * math.pi
CUT_CLEARANCE = math.radians(5.0)
B_FLOOR = 1e-10
SIGMA_BOUNDS = (-0.95, -0.05)


@dataclass(frozen=True)
class EdgeFit:
    a0: complex
    a1: complex
    B: complex
    B1: complex
    sigma_used: float
    residual: float         # RMS of |data - model|
    rel_residual: float     # residual / RMS |B xi^(sigma+1)|
    radii: tuple
    branch_start: float = 0.0

    @property
    def exponent(self):
        return self.sigma_used + 1.0

    def to_dict(self):
        c = lambda v: [v.real, v.imag]
        return {"a0": c(self.a0), "a1": c(self.a1), "B": c(self.B),
                "abs_B": abs(self.B), "B1": c(self.B1),
                "sigma_used": self.sigma_used, "residual": self.residual,
                "rel_residual": self.rel_residual, "radii": list(self.radii),
                "branch_start": self.branch_start}


@dataclass(frozen=True)
class MonodromyResult:
    multiplier: complex
    predicted: complex
    order: int              # None means no order <= max_order ("infinite")
    radius: float
    samples: int

    def to_dict(self):
        return {
            "multiplier": [self.multiplier.real, self.multiplier.imag],
            "predicted": (None if self.predicted is None else
                          [self.predicted.real, self.predicted.imag]),
            "deviation": (None if self.predicted is None else
                          abs(self.multiplier - self.predicted)),
            "order": "infinite" if self.order is None else self.order,
            "radius": self.radius,
            "samples": self.samples,
        }


def _branch_arg(xi, branch_start):
    """arg xi reduced into (branch_start, branch_start + 2 pi]."""
    ang = np.angle(xi)
    return branch_start + np.mod(ang - branch_start, TWO_PI)


def _power(r, arg, beta):
    return r ** beta * np.exp(1j * beta * arg)


def _sample_points(radii, directions, branch_start, clearance):
    span = TWO_PI - 2.0 * clearance
    psi = branch_start + clearance + span * (np.arange(directions) + 0.5) / directions
    r = np.repeat(np.asarray(radii, dtype=float), directions)
    arg = np.tile(psi, len(radii))
    return r, arg


def _solve(values, r, arg, sigma, correction):
    alpha = sigma + 1.0
    xi = r * np.exp(1j * arg)
    cols = [np.ones_like(xi), xi, _power(r, arg, alpha)]
    if correction:
        cols.append(_power(r, arg, alpha + 1.0))
    M = np.stack(cols, axis=1)
    scale = np.max(np.abs(M), axis=0)
    Ms = M / scale
    coef, _, rank, sv = np.linalg.lstsq(Ms, values, rcond=None)
    if rank < Ms.shape[1] or sv[-1] < 1e-12 * sv[0]:
        raise RankDeficient("edge-fit design is rank deficient; spread the radii")
    coef = coef / scale
    resid = values - M @ coef
    rms = float(np.sqrt(np.mean(np.abs(resid) ** 2)))
    sing = np.sqrt(np.mean(np.abs(coef[2] * cols[2]) ** 2))
    rel = rms / sing if sing > 0 else math.inf
    return coef, rms, rel


def fit_edge_expansion(func, z_c, sigma, radii, *, directions=16,
                       branch_start=0.0, correction=True,
                       clearance=CUT_CLEARANCE, tol=1e-3, sigma_tol=1e-4):
    """Least-squares fit of a0 + a1 xi + B xi^(sigma+1) [+ B1 xi^(sigma+2)].

    ``sigma`` is a number in (-1, 0) or ``"free"``/None, in which case the
    profiled residual is minimised over sigma in (-0.95, -0.05) by a coarse
    scan followed by a bounded scalar minimisation.  Samples keep ``clearance``
    radians away from the cut on both sides.
    """
    radii = [float(r) for r in radii]
    if len(radii) < 3:
        raise ValueError("need at least 3 radii")
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    if directions < 8:
        raise ValueError("need at least 8 directions")
    r, arg = _sample_points(radii, directions, branch_start, clearance)
    values = np.asarray(func(z_c + r * np.exp(1j * arg)), dtype=complex)
    if not np.all(np.isfinite(values)):
        raise ValueError("evaluator returned non-finite samples")

    if sigma is None or sigma == "free":
        lo, hi = SIGMA_BOUNDS

        def cost(s):
            try:
                return _solve(values, r, arg, s, correction)[1]
            except RankDeficient:
                return math.inf
        grid = np.linspace(lo, hi, 37)
        costs = [cost(s) for s in grid]
        i = int(np.argmin(costs))
        step = grid[1] - grid[0]
        res = minimize_scalar(cost, bounds=(max(lo, grid[i] - step),
                                            min(hi, grid[i] + step)),
                              method="bounded", options={"xatol": sigma_tol})
        sigma = float(res.x)
    elif not -1.0 < sigma < 0.0:
        raise ValueError("sigma must lie in (-1, 0)")

    coef, rms, rel = _solve(values, r, arg, float(sigma), correction)
    B1 = complex(coef[3]) if correction else 0j
    fit = EdgeFit(a0=complex(coef[0]), a1=complex(coef[1]), B=complex(coef[2]),
                  B1=B1, sigma_used=float(sigma), residual=rms,
                  rel_residual=rel, radii=tuple(radii),
                  branch_start=float(branch_start))
    if abs(fit.B) < B_FLOOR:
        raise NoBranchPoint("no detectable branch point (|B| below floor)")
    if rel > tol:
        raise FitResidualTooLarge(
            f"relative residual {rel:.3e} above tolerance {tol:.1e}", fit=fit)
    return fit


class PowerGerm:
    """xi -> B xi^alpha with the argument of xi supplied by the caller.

    Called with one argument the branch (branch_start, branch_start + 2 pi]
    is used; with an explicit ``arg`` the value follows that argument, which
    is what analytic continuation along a path needs.
    """

    def __init__(self, B, alpha, branch_start=0.0):
        self.B = complex(B)
        self.alpha = float(alpha)
        self.branch_start = float(branch_start)

    @property
    def exponent(self):
        return self.alpha

    def __call__(self, xi, arg=None):
        xi = np.asarray(xi, dtype=complex)
        if arg is None:
            arg = _branch_arg(xi, self.branch_start)
        return self.B * _power(np.abs(xi), np.asarray(arg, dtype=float), self.alpha)


class RegularGerm:
    """xi -> a0 + a1 xi; single valued, so the argument is ignored."""

    exponent = 0.0

    def __init__(self, a0, a1):
        self.a0 = complex(a0)
        self.a1 = complex(a1)

    def __call__(self, xi, arg=None):
        return self.a0 + self.a1 * np.asarray(xi, dtype=complex)


def singular_part(fit):
    return PowerGerm(fit.B, fit.exponent, fit.branch_start)


def regular_part(fit):
    return RegularGerm(fit.a0, fit.a1)


def dominance_radius(fit, factor=10.0):
    """Largest r with |B| r^alpha >= factor * (|a1| r + |B1| r^(alpha+1))."""
    alpha = fit.exponent
    lo, hi = 0.0, 1e6

    def ok(rr):
        return abs(fit.B) * rr ** alpha >= factor * (abs(fit.a1) * rr +
                                                     abs(fit.B1) * rr ** (alpha + 1))
    if not ok(1e-300):
        return 0.0
    if ok(hi):
        return hi
    for _ in range(200):
        mid = math.sqrt(max(lo, 1e-300) * hi)
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    return lo


def continue_around(func, radius, samples=256, *, z_c=0j, start_arg=0.0,
                    fit=None, predicted=None, max_order=64, order_tol=1e-6):
    """Continue ``func`` once counter-clockwise around z_c.

    ``func(z_c + xi, arg)`` receives the continuously tracked argument of
    xi.  The argument of the sample points is unwrapped, consecutive value
    phases are checked for jumps, and the multiplier is
    value(after) / value(before).  Germs of xi use the default z_c = 0.
    """
    if samples < 64:
        raise ValueError("need at least 64 samples")
    if fit is not None and radius > dominance_radius(fit):
        raise RadiusTooLarge("singular part does not dominate at this radius")
    theta = start_arg + TWO_PI * np.arange(samples + 1) / samples
    xi = radius * np.exp(1j * theta)
    arg = np.unwrap(np.angle(xi))
    arg = arg - arg[0] + start_arg
    if np.max(np.abs(np.diff(arg))) >= math.pi:
        raise PhaseUnwrapFailure("argument steps >= pi; increase samples")
    v = np.asarray(func(z_c + xi, arg), dtype=complex)
    # a smooth loop turns the phase by at most 2 pi / 64 per sample; pi/2
    # also catches a principal-branch flip sampled just short of pi
    steps = np.angle(v[1:] / v[:-1])
    if np.max(np.abs(steps)) >= 0.5 * math.pi:
        raise PhaseUnwrapFailure("value phase jumps between samples; "
                                 "increase samples or track the argument")
    multiplier = complex(v[-1] / v[0])
    if predicted is None:
        exp_ = getattr(func, "exponent", None)
        if exp_ is not None:
            predicted = cmath.exp(2j * math.pi * exp_)
    order = None
    for q in range(1, max_order + 1):
        if abs(multiplier ** q - 1.0) < order_tol:
            order = q
            break
    return MonodromyResult(multiplier=multiplier, predicted=predicted,
                           order=order, radius=float(radius), samples=samples)


def monodromy_order(sigma_plus_1):
    """Reduced denominator of sigma + 1 in (0, 1)."""
    v = Fraction(sigma_plus_1)
    if not 0 < v < 1:
        raise ValueError("sigma + 1 must lie in (0, 1)")
    return v.denominator


def compose_affine(func, z_c, lam):
    """z -> func(z_c + lam (z - z_c)), a local analytic change of variable."""
    def f(z):
        return func(z_c + lam * (np.asarray(z, dtype=complex) - z_c))
    f.descriptor = f"{getattr(func, 'descriptor', 'f')} o affine(lam={lam})"
    return f
