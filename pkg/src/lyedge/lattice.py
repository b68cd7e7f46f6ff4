"""Finite-volume ferromagnetic Ising partition functions as fugacity polynomials.

A site with spin up contributes one factor ``z``, so ``Z(z) = sum_k c_k z^k``
with ``c_k`` the Boltzmann weight of all configurations having ``k`` up
spins.  The column transfer tracks exact integer counts ``n(k, b)`` of
configurations with ``k`` up spins and ``b`` satisfied bonds, so the
coupling enters only at the end::

    c_k = sum_b n(k, b) * exp(beta_J * (2 b - E))

where ``E`` is the number of bonds.  Counts are exact integers; the final
exponentials are taken in mpmath at the requested precision.
"""

import functools
import hashlib
import json
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .errors import InvalidCoupling, LatticeTooLarge, ZeroOfPolynomial

DEFAULT_MAX_SITES = 36
DEFAULT_PRECISION = 128
BOUNDARIES = ("free", "periodic")


@dataclass(frozen=True)
class LatticeSpec:
    """An L x M rectangle; free in the width direction, either in the length."""

    width: int
    length: int
    coupling: float
    boundary: str = "free"
    max_sites: int = DEFAULT_MAX_SITES

    def __post_init__(self):
        if self.width < 1 or self.length < 1:
            raise ValueError("width and length must be >= 1")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}")
        if self.boundary == "periodic" and self.length < 3:
            # M = 1, 2 would create self-bonds or doubled bonds
            raise ValueError("periodic boundary needs length >= 3")
        if self.sites > self.max_sites:
            raise LatticeTooLarge(
                f"{self.width}x{self.length} = {self.sites} sites exceeds "
                f"maximum {self.max_sites}")
        if not self.coupling > 0:
            raise InvalidCoupling(f"beta_J must be > 0, got {self.coupling}")

    @property
    def sites(self):
        return self.width * self.length

    @property
    def n_bonds(self):
        L, M = self.width, self.length
        horizontal = L * M if self.boundary == "periodic" else L * (M - 1)
        return M * (L - 1) + horizontal

    def bonds(self):
        """Explicit nearest-neighbour bond list over site index i + L*j."""
        L, M = self.width, self.length
        out = []
        for j in range(M):
            for i in range(L - 1):
                out.append((i + L * j, i + 1 + L * j))
        for j in range(M - 1):
            for i in range(L):
                out.append((i + L * j, i + L * (j + 1)))
        if self.boundary == "periodic":
            for i in range(L):
                out.append((i + L * (M - 1), i))
        return out

    def to_dict(self):
        return {"width": self.width, "length": self.length,
                "coupling": self.coupling, "boundary": self.boundary}


@dataclass(frozen=True)
class FugacityPolynomial:
    """Z(z) = sum_k c_k z^k with strictly positive, palindromic coefficients."""

    coefficients: tuple
    precision_bits: int = DEFAULT_PRECISION
    provenance: object = "synthetic"
    volume: int = None
    _digest: str = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        with mpmath.workprec(self.precision_bits):
            coeffs = tuple(mpmath.mpf(c) for c in self.coefficients)
        if len(coeffs) < 2:
            raise ValueError("polynomial must have degree >= 1")
        if any(c <= 0 for c in coeffs):
            raise ValueError("coefficients must be strictly positive")
        n = len(coeffs) - 1
        for k in range(n // 2 + 1):
            a, b = coeffs[k], coeffs[n - k]
            if abs(a - b) > 1e-12 * max(a, b):
                raise ValueError(f"coefficients not palindromic at k={k}")
        object.__setattr__(self, "coefficients", coeffs)
        if self.volume is None:
            object.__setattr__(self, "volume", n)
        text = json.dumps(self._coefficient_strings())
        object.__setattr__(self, "_digest",
                           hashlib.sha256(text.encode()).hexdigest()[:16])

    @property
    def degree(self):
        return len(self.coefficients) - 1

    @property
    def digest(self):
        return self._digest

    def _coefficient_strings(self):
        digits = int(self.precision_bits * 0.30103) + 1
        return [mpmath.nstr(c, digits, min_fixed=-1, max_fixed=-1)
                for c in self.coefficients]

    def to_dict(self):
        prov = self.provenance
        if isinstance(prov, LatticeSpec):
            prov = prov.to_dict()
        return {
            "degree": self.degree,
            "precision_bits": self.precision_bits,
            "coefficients": self._coefficient_strings(),
            "provenance": prov,
        }

    @classmethod
    def from_dict(cls, data):
        prov = data.get("provenance", "synthetic")
        if isinstance(prov, dict):
            prov = LatticeSpec(**prov)
        bits = int(data["precision_bits"])
        with mpmath.workprec(bits):
            coeffs = tuple(mpmath.mpf(s) for s in data["coefficients"])
        return cls(coeffs, precision_bits=bits, provenance=prov)

    def as_float_array(self):
        """Coefficients c_0..c_N as float64 (lossy)."""
        return np.array([float(c) for c in self.coefficients])


def _popcount(s):
    return bin(s).count("1")


@functools.lru_cache(maxsize=64)
def bond_counts(width, length, boundary="free"):
    """Exact counts n[k, b]: configurations with k up spins, b satisfied bonds.

    The column state is an L-bit mask (bit i set = spin up in row i).  The
    inter-column transfer factorises over rows, so it is applied one bit
    axis at a time instead of as a dense 2^L x 2^L matrix.
    """
    L, M = width, length
    S = 1 << L
    N = L * M
    E = LatticeSpec(width, length, 1.0, boundary,
                    max_sites=max(N, DEFAULT_MAX_SITES)).n_bonds
    pop = np.array([_popcount(s) for s in range(S)])
    sat_in = np.array([sum(((s >> i) & 1) == ((s >> (i + 1)) & 1)
                           for i in range(L - 1)) for s in range(S)])

    def place_column(T_prev_mixed):
        # shift each state's table by its own up-count and internal bonds
        out = np.zeros_like(T_prev_mixed)
        for s in range(S):
            k0, b0 = pop[s], sat_in[s]
            src = T_prev_mixed[s]
            out[s, k0:, b0:] = src[:N + 1 - k0, :E + 1 - b0]
        return out

    def mix_rows(T):
        # horizontal bonds: weight y^[s_i == s'_i] per row, y shifts b by one
        for i in range(L):
            view = T.reshape(S >> (i + 1), 2, 1 << i, N + 1, E + 1)
            t0 = view[:, 0].copy()
            t1 = view[:, 1].copy()
            new0 = t1.copy()
            new0[..., 1:] += t0[..., :-1]
            new1 = t0.copy()
            new1[..., 1:] += t1[..., :-1]
            view[:, 0] = new0
            view[:, 1] = new1
        return T

    def run(first_states):
        T = np.zeros((S, N + 1, E + 1), dtype=np.int64)
        for s in first_states:
            T[s, pop[s], sat_in[s]] = 1
        for _ in range(M - 1):
            T = place_column(mix_rows(T))
        return T

    if boundary == "free":
        return run(range(S)).sum(axis=0)

    total = np.zeros((N + 1, E + 1), dtype=np.int64)
    for s0 in range(S):
        T = run([s0])
        for s in range(S):
            h = L - _popcount(s ^ s0)
            total[:, h:] += T[s, :, :E + 1 - h]
    return total


def partition_polynomial(spec, precision_bits=DEFAULT_PRECISION):
    """Return Z_n(z) for the lattice described by ``spec``."""
    counts = bond_counts(spec.width, spec.length, spec.boundary)
    E = spec.n_bonds
    with mpmath.workprec(precision_bits + 32):
        bj = mpmath.mpf(spec.coupling)
        weights = [mpmath.exp(bj * (2 * b - E)) for b in range(E + 1)]
        coeffs = []
        for k in range(spec.sites + 1):
            row = counts[k]
            coeffs.append(mpmath.fsum(int(n) * w for n, w in zip(row, weights)
                                      if n))
    return FugacityPolynomial(tuple(coeffs), precision_bits=precision_bits,
                              provenance=spec, volume=spec.sites)


def brute_force_coefficients(spec, precision_bits=DEFAULT_PRECISION):
    """Direct enumeration over all 2^|V| configurations (test oracle)."""
    N = spec.sites
    if N > 20:
        raise LatticeTooLarge("brute force limited to 20 sites")
    bonds = np.array(spec.bonds()).reshape(-1, 2)
    configs = (np.arange(1 << N)[:, None] >> np.arange(N)[None, :]) & 1
    spins = 2 * configs - 1
    k = configs.sum(axis=1)
    if len(bonds):
        energy = (spins[:, bonds[:, 0]] * spins[:, bonds[:, 1]]).sum(axis=1)
    else:
        energy = np.zeros(1 << N, dtype=int)
    with mpmath.workprec(precision_bits + 32):
        bj = mpmath.mpf(spec.coupling)
        coeffs = [mpmath.mpf(0)] * (N + 1)
        pairs, mult = np.unique(np.stack([k, energy], axis=1), axis=0,
                                return_counts=True)
        for (kk, e), n in zip(pairs, mult):
            coeffs[kk] += int(n) * mpmath.exp(bj * int(e))
    return coeffs


def _horner(coeffs, z):
    acc = mpmath.mpc(0)
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def evaluate_log_Z(poly, z):
    """Principal-branch log Z(z), evaluated at the polynomial's precision.

    mpmath floats carry an unbounded exponent, so |z|^N never overflows.
    Raises ZeroOfPolynomial when |Z(z)| is below the rounding level of the
    Horner sum, since the logarithm is then meaningless.
    """
    with mpmath.workprec(poly.precision_bits):
        zz = mpmath.mpc(z)
        if zz == 0:
            return complex(mpmath.log(poly.coefficients[0]))
        value = _horner(poly.coefficients, zz)
        r = abs(zz)
        scale = abs(_horner([abs(c) for c in poly.coefficients], r))
        eps = mpmath.mpf(2) ** (-poly.precision_bits)
        if abs(value) <= 4 * (poly.degree + 1) * eps * scale:
            raise ZeroOfPolynomial(f"Z vanishes to working precision at z={z}")
        return complex(mpmath.log(value))


def log_Z_array(poly, z):
    """Vectorised wrapper over evaluate_log_Z; zeros come back as NaN."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape, dtype=complex)
    flat = out.reshape(-1)
    for i, zi in enumerate(z.reshape(-1)):
        try:
            flat[i] = evaluate_log_Z(poly, complex(zi))
        except ZeroOfPolynomial:
            flat[i] = complex(np.nan, np.nan)
    return out
