"""Synthetic edge densities and their log-potential free energies.

A ``DensityModel`` puts the density rho(phi) = A (phi - theta_c)_+^sigma on
the arc [theta_c, theta_c + W] and, by default, its mirror image on
[2 pi - theta_c - W, 2 pi - theta_c].  The free energy is

    F(z) = int log((z - e^{i phi}) / (z0 - e^{i phi})) rho(phi) dphi / 2 pi,

computed arc by arc after the substitution t = u^{1/(sigma+1)}, which turns
t^sigma dt into a constant multiple of du.  The remaining integrand only has
the (near-)logarithmic singularity at the projection of z onto the arc, and
Gauss-Legendre panels graded geometrically toward that point and toward
u = 0 resolve it.

Two branch conventions are offered for the logarithm of each factor:

``principal``  principal log of the ratio.  For z0 = 0 each factor's cut is
               the outward radial ray through e^{i phi}.
``arc``        cut along the forward tangent ray at e^{i phi}.  Near the edge
               the union of cuts is a horn of zero opening angle hugging the
               arc, so F is analytic in a full punctured neighbourhood of
               z_c minus the arc itself.  This is the branch on which the
               edge expansion holds.

Real parts agree for both branches.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import OnSupport

TWO_PI = 2.0 * math.pi
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class DensityModel:
    A: float
    sigma: float
    theta_c: float
    width: float
    z0: complex = 0j
    mirror: bool = True

    def __post_init__(self):
        if not self.A > 0:
            raise ValueError("A must be > 0")
        if not -1.0 < self.sigma < 0.0:
            raise ValueError("sigma must lie in (-1, 0)")
        if not 0.0 < self.theta_c < math.pi:
            raise ValueError("theta_c must lie in (0, pi)")
        if not 0.0 < self.width <= math.pi - self.theta_c + 1e-12:
            raise ValueError("width must lie in (0, pi - theta_c]")
        if abs(abs(self.z0) - 1.0) < 1e-9:
            raise ValueError("|z0| must differ from 1")

    @staticmethod
    def calibrated_width(A, sigma):
        """W at which the two-arc total mass equals sigma + 1."""
        a = sigma + 1.0
        return (math.pi * a * a / A) ** (1.0 / a)

    @classmethod
    def calibrated(cls, A, sigma, theta_c, **kw):
        return cls(A=A, sigma=sigma, theta_c=theta_c,
                   width=cls.calibrated_width(A, sigma), **kw)

    @property
    def z_c(self):
        return cmath.exp(1j * self.theta_c)

    @property
    def arcs(self):
        """(edge angle, orientation) for each arc; orientation points inward."""
        out = [(self.theta_c, 1.0)]
        if self.mirror:
            out.append((TWO_PI - self.theta_c, -1.0))
        return out

    def density(self, phi):
        phi = np.mod(np.asarray(phi, dtype=float), TWO_PI)
        out = np.zeros_like(phi)
        for edge, s in self.arcs:
            t = s * (phi - edge)
            t = np.mod(t + math.pi, TWO_PI) - math.pi
            m = (t > 0) & (t <= self.width)
            out[m] += self.A * t[m] ** self.sigma
        return out

    def breakpoints(self):
        """Angles where rho is singular or jumps."""
        pts = []
        for edge, s in self.arcs:
            pts += [edge % TWO_PI, (edge + s * self.width) % TWO_PI]
        return pts

    def to_dict(self):
        return {"A": self.A, "sigma": self.sigma, "theta_c": self.theta_c,
                "width": self.width, "z0": [self.z0.real, self.z0.imag],
                "mirror": self.mirror}


@dataclass(frozen=True)
class AmplitudePrediction:
    B: complex
    modulus: float


def _chord(edge, orient, t):
    """e^{i edge} - e^{i (edge + orient t)}, accurate for tiny t."""
    half = 0.5 * orient * t
    return -2j * np.sin(half) * np.exp(1j * (edge + half))


def _factor_log(z, z0, ze, chord, w, d, branch):
    # z - w computed as (z - z_e) + chord to avoid cancellation near the edge
    num = (z - ze) + chord
    den = (z0 - ze) + chord
    if branch == "principal":
        return np.log(num / den)
    # cut along the forward tangent ray w + s d, s > 0
    return np.log(-num / d) - np.log(-den / d)


def _jump_angles(model, z, edge, orient, branch):
    """Arc parameters t where a factor's branch cut passes through z (or z0)."""
    out = []
    if branch == "arc":
        for pt in (z, np.full(z.shape, model.z0)):
            r = np.abs(pt)
            with np.errstate(invalid="ignore"):
                back = np.arccos(np.minimum(1.0, 1.0 / np.maximum(r, 1.0)))
            t = orient * (np.angle(pt) - edge) - back
            t = np.mod(t + math.pi, TWO_PI) - math.pi
            out.append(np.where(r > 1.0, t, np.nan))
    else:
        # w on the segment between z and z0: |z + s (z0 - z)| = 1, s in [0, 1]
        dz = model.z0 - z
        a2 = np.abs(dz) ** 2
        b = 2.0 * np.real(np.conj(z) * dz)
        c = np.abs(z) ** 2 - 1.0
        disc = b * b - 4.0 * a2 * c
        with np.errstate(invalid="ignore", divide="ignore"):
            for sgn in (-1.0, 1.0):
                s = (-b + sgn * np.sqrt(disc)) / (2.0 * a2)
                ok = (disc >= 0) & (s >= 0) & (s <= 1)
                wpt = z + s * dz
                t = orient * (np.angle(wpt) - edge)
                t = np.mod(t + math.pi, TWO_PI) - math.pi
                out.append(np.where(ok, t, np.nan))
    return out


def _arc_integral(model, z, edge, orient, branch, levels=None):
    """int_0^W t^sigma log-factor(theta_e + orient t) dt, vectorised over z."""
    a = model.sigma + 1.0
    p = 1.0 / a
    W = model.width
    U = W ** a
    ang = orient * (np.angle(z) - edge)
    ang = np.mod(ang + math.pi, TWO_PI) - math.pi
    with np.errstate(divide="ignore"):
        im = np.minimum(np.abs(np.log(np.abs(z))), math.pi)
    t_star = np.clip(ang, 0.0, W)
    dist = np.hypot(ang - t_star, im)
    u_star = t_star ** a
    du = (t_star + dist) ** a - u_star
    du = np.maximum(du, U * 1e-24)
    if levels is None:
        levels = int(math.ceil(math.log2(U / du.min()))) + 2
    k = 2.0 ** np.arange(levels)
    jumps = []
    for t in _jump_angles(model, z, edge, orient, branch):
        inside = (t > 0) & (t < W)
        jumps.append(np.where(inside, np.clip(t, 0.0, W) ** a, 0.0)[:, None])
    bp = np.concatenate([
        np.zeros((z.size, 1)), np.full((z.size, 1), U), u_star[:, None],
        u_star[:, None] - du[:, None] * k[None, :],
        u_star[:, None] + du[:, None] * k[None, :],
        np.broadcast_to(U / (2.0 * k[None, :]), (z.size, levels)),
        *jumps,
    ], axis=1)
    bp = np.sort(np.clip(bp, 0.0, U), axis=1)
    lo, hi = bp[:, :-1], bp[:, 1:]
    half = 0.5 * (hi - lo)
    u = (0.5 * (hi + lo))[..., None] + half[..., None] * _GL_X
    wts = half[..., None] * _GL_W
    # clipped breakpoints leave empty panels; park their nodes mid-arc
    u = np.where(wts > 0, u, 0.5 * U)
    t = u ** p
    chord = _chord(edge, orient, t)
    ze = cmath.exp(1j * edge)
    w = ze - chord
    d = orient * 1j * w
    zz = z[:, None, None]
    L = _factor_log(zz, model.z0, ze, chord, w, d, branch)
    return p * np.sum(wts * L, axis=(1, 2))


def evaluate_F_tilde(model, z, *, branch="principal", chunk=128,
                     check_support=True):
    """F-tilde(z) by the substituted, panel-graded quadrature.

    Accepts a scalar or array; returns the same shape.  Points on the
    interior of a support arc (distance < 1e-12) raise OnSupport; arc
    endpoints are allowed since F is continuous there.
    """
    if branch not in ("principal", "arc"):
        raise ValueError("branch must be 'principal' or 'arc'")
    scalar = np.ndim(z) == 0
    zarr = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    if check_support:
        _check_support(model, zarr)
    out = np.empty(zarr.shape, dtype=complex)
    for start in range(0, zarr.size, chunk):
        block = zarr[start:start + chunk]
        acc = np.zeros(block.shape, dtype=complex)
        for edge, orient in model.arcs:
            acc += _arc_integral(model, block, edge, orient, branch)
        out[start:start + chunk] = acc
    out *= model.A / TWO_PI
    # the integrand is log 1 there; complex division need not round to 1
    out[zarr == model.z0] = 0.0
    if scalar:
        return complex(out[0])
    return out.reshape(np.shape(z))


def _check_support(model, z):
    near = np.abs(np.abs(z) - 1.0) < 1e-12
    if not near.any():
        return
    for edge, s in model.arcs:
        t = np.mod(s * (np.angle(z[near]) - edge) + math.pi, TWO_PI) - math.pi
        inside = (t > 1e-12) & (t < model.width - 1e-12)
        if inside.any():
            raise OnSupport("z lies on the support arc")


def F_tilde_evaluator(model, branch="principal"):
    def f(z):
        return evaluate_F_tilde(model, z, branch=branch, check_support=False)
    f.descriptor = f"stieltjes[{branch}] A={model.A} sigma={model.sigma}"
    return f


def jensen_log_evaluator(model):
    """z -> F(z) - F(z_c), read as the log of a per-site partition function.

    Its real part plays the role of (1/|V|) log|Z| in the infinite-volume
    limit, so the Jensen average uses kind="log".
    """
    fc = evaluate_F_tilde(model, model.z_c)

    def f(z):
        return evaluate_F_tilde(model, z, check_support=False) - fc
    f.descriptor = f"stieltjes log-partition A={model.A} sigma={model.sigma}"
    return f


def total_mass(model):
    """(1/2 pi) * integral of rho over the support, in closed form."""
    a = model.sigma + 1.0
    n_arcs = 2 if model.mirror else 1
    return n_arcs * model.A * model.width ** a / (a * TWO_PI)


def predicted_B(A, sigma, theta_c):
    """Edge amplitude implied by rho ~ A t^sigma, on the 'arc' branch.

    The branch of xi^(sigma+1) has arg xi in (theta_c - 3 pi/2, theta_c + pi/2),
    i.e. its cut runs along the arc.
    """
    if not -1.0 < sigma < 0.0:
        raise ValueError("sigma must lie in (-1, 0)")
    if not A > 0:
        raise ValueError("A must be > 0")
    a = sigma + 1.0
    s = math.sin(math.pi * sigma)
    B = (A * cmath.exp(1j * math.pi * sigma / 2) / (2j * a * s)
         * cmath.exp(-1j * theta_c * a))
    return AmplitudePrediction(B=B, modulus=A / (2.0 * a * abs(s)))


def edge_branch_start(theta_c):
    """Start angle of the xi^(sigma+1) branch used by predicted_B."""
    return theta_c - 1.5 * math.pi


def mellin_barnes_check(sigma, a, *, tol=1e-12):
    """Return (quadrature, closed form) for int_0^inf t^sigma / (t + a) dt.

    [0, 1] is mapped by t = u^{1/(sigma+1)} and [1, inf) by t = 1/v followed
    by v = w^{-1/sigma}; both leave bounded integrands.
    """
    if not -1.0 < sigma < 0.0:
        raise ValueError("sigma must lie in (-1, 0)")
    a = complex(a)
    if a.imag == 0 and a.real <= 0:
        raise ValueError("a must lie off (-inf, 0]")
    p = 1.0 / (sigma + 1.0)
    q = -1.0 / sigma

    def near(u):
        return p / (u ** p + a)

    def far(w):
        return q / (1.0 + a * w ** q)

    lhs = 0j
    for f in (near, far):
        val, err = quad(f, 0.0, 1.0, complex_func=True, epsabs=tol,
                        epsrel=tol, limit=500)
        lhs += val
    rhs = math.pi * a ** sigma / math.sin(math.pi * (sigma + 1.0))
    return lhs, rhs


@dataclass(frozen=True)
class H2Report:
    predicted: AmplitudePrediction
    fit: object
    modulus_rel_err: float
    phase_err: float

    def to_dict(self):
        return {
            "predicted_B": [self.predicted.B.real, self.predicted.B.imag],
            "predicted_abs_B": self.predicted.modulus,
            "fitted_B": [self.fit.B.real, self.fit.B.imag],
            "fitted_abs_B": abs(self.fit.B),
            "rel_err": self.modulus_rel_err,
            "phase_err": self.phase_err,
            "fit_residual": self.fit.residual,
        }


def default_radii(model, n=4):
    base = 0.01 * min(model.width, model.theta_c, 1.0)
    return [base * 2.0 ** (-j) for j in range(n)]


def verify_H2(model, radii=None, *, directions=16, correction=True):
    """Fit the edge expansion to F near z_c and compare B with predicted_B."""
    from .edge import fit_edge_expansion

    radii = default_radii(model) if radii is None else list(radii)
    if radii[0] >= model.width:
        raise ValueError("radii must be small compared with the arc width")
    f = F_tilde_evaluator(model, branch="arc")
    fit = fit_edge_expansion(f, model.z_c, model.sigma, radii,
                             directions=directions,
                             branch_start=edge_branch_start(model.theta_c),
                             correction=correction)
    pred = predicted_B(model.A, model.sigma, model.theta_c)
    rel = abs(abs(fit.B) - pred.modulus) / pred.modulus
    phase = abs(cmath.phase(fit.B / pred.B))
    return H2Report(pred, fit, rel, phase)

