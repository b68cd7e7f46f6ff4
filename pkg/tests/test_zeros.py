import math

import mpmath
import numpy as np
import pytest

from lyedge.errors import InsufficientZeros, NoGap, OutOfModel
from lyedge.lattice import FugacityPolynomial, LatticeSpec, partition_polynomial
from lyedge.zeros import (empirical_density, find_roots, fit_edge_exponent,
                          gap_edge, zero_set_from_angles)


def companion_roots(poly, dps=40):
    """Eigenvalues of the companion matrix at elevated precision.

    float64 eigenvalues lose ~1e-7 on the clustered roots at weak coupling.
    """
    with mpmath.workdps(dps):
        c = [mpmath.mpf(x) for x in poly.coefficients]
        n = len(c) - 1
        C = mpmath.zeros(n, n)
        for i in range(1, n):
            C[i, i - 1] = 1
        for i in range(n):
            C[i, n - 1] = -c[i] / c[n]
        ev = mpmath.eig(C, left=False, right=False)
        return np.array([complex(e) for e in ev])


def test_linear_root():
    zs = find_roots(FugacityPolynomial((1, 1)))
    assert zs.angles[0] == pytest.approx(math.pi, abs=1e-15)
    assert abs(zs.residuals[0]) < 1e-30
    assert gap_edge(zs) == pytest.approx(math.pi)


def test_chain_quadratic_formula():
    b = 0.6
    u = math.exp(-2 * b)
    zs = find_roots(partition_polynomial(LatticeSpec(1, 2, b)))
    want = sorted(np.angle([complex(-u, math.sqrt(1 - u * u)),
                            complex(-u, -math.sqrt(1 - u * u))]) % (2 * math.pi))
    assert zs.angles == pytest.approx(want, abs=1e-14)
    assert gap_edge(zs) == pytest.approx(math.acos(-u), abs=1e-14)
    assert zs.certified


@pytest.mark.parametrize("L,M,bj", [(2, 2, 0.4), (2, 6, 0.3), (3, 5, 1.0),
                                    (4, 6, 1.5), (3, 8, 0.1)])
def test_against_companion_eigenvalues(L, M, bj):
    p = partition_polynomial(LatticeSpec(L, M, bj))
    zs = find_roots(p)
    assert zs.certified and zs.count == L * M
    ref = np.sort(np.angle(companion_roots(p)) % (2 * math.pi))
    assert np.max(np.abs(zs.angles - ref)) < 1e-8
    # conjugate pairing
    assert np.max(np.abs(np.sort(2 * math.pi - zs.angles) - zs.angles)) < 1e-8


def test_gap_detection_synthetic():
    rng = np.random.default_rng(1)
    ang = rng.uniform(1.0, 2 * math.pi - 1.0, 400)
    ang = np.concatenate([ang, [1.0 + 1e-9]])
    zs = zero_set_from_angles(ang)
    spacing = (2 * math.pi - 2) / 400
    assert abs(gap_edge(zs) - 1.0) < spacing


def test_no_gap():
    with pytest.raises(NoGap):
        gap_edge(zero_set_from_angles([1e-8, 2 * math.pi - 1e-8]))


def test_density_single_bin():
    h = empirical_density(zero_set_from_angles([math.pi], volume=1), 4, volume=1)
    assert sorted(h.counts) == [0, 0, 0, 1]
    assert h.mass == pytest.approx(1.0)
    with pytest.raises(ValueError):
        empirical_density(zero_set_from_angles([math.pi]), 0)


def test_density_uniform_flat():
    rng = np.random.default_rng(0)
    zs = zero_set_from_angles(rng.uniform(0, 2 * math.pi, 40000))
    h = empirical_density(zs, 20)
    per_bin = 2000
    assert np.max(np.abs(h.density - 1.0)) < 3 / math.sqrt(per_bin)


def test_density_lattice_mass_one():
    zs = find_roots(partition_polynomial(LatticeSpec(4, 6, 0.5)))
    assert empirical_density(zs, 32).mass == pytest.approx(1.0, abs=1e-12)


def quantile_angles(sigma, theta_c=0.7, W=1.5, K=2000):
    k = np.arange(1, K + 1)
    return theta_c + (k / K) ** (1.0 / (sigma + 1.0)) * W


@pytest.mark.parametrize("sigma", [-1 / 2, -1 / 6, -1 / 4])
def test_fit_edge_exponent_inverse_cdf(sigma):
    ang = quantile_angles(sigma)
    est = fit_edge_exponent(ang, 0.7, 1.5, volume=len(ang))
    assert abs(est.sigma - sigma) < 0.02
    # rho integrates to 1 on [0, W] per site: A W^(s+1)/(2 pi (s+1)) = 1
    A = 2 * math.pi * (sigma + 1) / 1.5 ** (sigma + 1)
    assert est.A == pytest.approx(A, rel=0.05)


def test_fit_edge_exponent_uniform_is_out_of_model():
    ang = np.linspace(1.0, 2.0, 2001)[1:]
    with pytest.raises(OutOfModel) as exc:
        fit_edge_exponent(ang, 1.0, 1.0)
    assert exc.value.estimate.sigma == pytest.approx(0.0, abs=1e-2)


def test_fit_edge_exponent_insufficient():
    with pytest.raises(InsufficientZeros):
        fit_edge_exponent(np.array([1.1, 1.2]), 1.0, 0.5)


def test_serialisation():
    zs = find_roots(partition_polynomial(LatticeSpec(2, 2, 0.4)))
    assert zs.to_csv().splitlines()[0] == "k,theta,radial_residual"
    assert len(zs.to_dict()["angles"]) == 4
