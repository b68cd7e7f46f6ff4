import cmath
import math

import mpmath
import numpy as np
import pytest

from lyedge.errors import OnSupport
from lyedge.jensen import jensen_slope
from lyedge.stieltjes import (DensityModel, edge_branch_start,
                              evaluate_F_tilde, jensen_log_evaluator,
                              mellin_barnes_check, predicted_B, total_mass,
                              verify_H2)


def trapezoid_oracle(model, z, n=1_000_000):
    """Dense trapezoid after phi = edge +- s^(1/(sigma+1)), which turns
    rho dphi into the constant A/(sigma+1) ds.  Principal log of the ratio."""
    a = model.sigma + 1.0
    s = np.linspace(0.0, model.width ** a, n + 1)
    wts = np.full(n + 1, s[1] - s[0])
    wts[[0, -1]] *= 0.5
    total = 0j
    for edge, orient in model.arcs:
        w = np.exp(1j * (edge + orient * s ** (1.0 / a)))
        total += np.sum(wts * np.log((z - w) / (model.z0 - w)))
    return model.A / a * total / (2 * math.pi)


def test_normalisation_point():
    m = DensityModel(1.0, -0.5, 1.0, 1.0)
    assert evaluate_F_tilde(m, 0j) == 0
    m = DensityModel(1.0, -0.5, 1.0, 1.0, z0=0.3 + 0.2j)
    assert abs(evaluate_F_tilde(m, 0.3 + 0.2j)) < 1e-15


def test_conjugation_symmetry():
    m = DensityModel(1.3, -1 / 6, 0.8, 1.2)
    z = np.array([0.4 + 0.7j, 1.5 - 0.3j, -2.0 + 0.1j])
    f = evaluate_F_tilde(m, z)
    g = evaluate_F_tilde(m, np.conj(z))
    assert np.max(np.abs(g - np.conj(f))) < 1e-13


def test_trapezoid_oracle_near_edge():
    m = DensityModel(1.0, -0.5, 1.0, 1.0)
    z = cmath.exp(0.999j) * 1.001
    assert abs(evaluate_F_tilde(m, z) - trapezoid_oracle(m, z)) < 1e-6


@pytest.mark.parametrize("sigma", [-1 / 6, -1 / 4, -3 / 4])
def test_trapezoid_oracle_general(sigma):
    m = DensityModel(0.7, sigma, 0.6, 1.4)
    for z in (0.5 + 0.5j, 1.3 * cmath.exp(0.3j), 0.9 * cmath.exp(2.0j)):
        assert abs(evaluate_F_tilde(m, z) - trapezoid_oracle(m, z, 200_000)) < 1e-7


def test_on_support():
    m = DensityModel(1.0, -0.5, 1.0, 1.0)
    with pytest.raises(OnSupport):
        evaluate_F_tilde(m, cmath.exp(1.5j))
    assert np.isfinite(evaluate_F_tilde(m, cmath.exp(1.0j)))


def test_total_mass():
    one_arc = DensityModel(1.0, -0.5, 1.0, 1.0, mirror=False)
    assert total_mass(one_arc) == pytest.approx(1 / math.pi, rel=1e-14)
    assert total_mass(DensityModel(1e-12, -0.5, 1.0, 1.0)) < 1e-12
    assert total_mass(DensityModel(1.0, -0.5, 1.0, 1e-12)) < 1e-5
    for s in (-1 / 6, -1 / 4, -1 / 2):
        m = DensityModel.calibrated(1.0, s, 0.5)
        assert total_mass(m) == pytest.approx(s + 1, rel=1e-14)


def test_total_mass_matches_density_integral():
    from scipy.integrate import quad
    m = DensityModel(1.7, -1 / 4, 0.9, 1.1)
    val, _ = quad(lambda t: m.A * t ** m.sigma, 0, m.width)
    assert total_mass(m) == pytest.approx(2 * val / (2 * math.pi), rel=1e-9)


def test_predicted_B_examples():
    assert predicted_B(1, -1 / 6, 0.3).modulus == pytest.approx(1.2)
    assert predicted_B(1, -1 / 2, 0.3).modulus == pytest.approx(1.0)
    assert predicted_B(2, -1 / 6, 0.3).modulus == pytest.approx(2.4)
    with pytest.raises(ValueError):
        predicted_B(1, 0.0, 0.3)


@pytest.mark.parametrize("sigma,a,rhs", [
    (-0.5, 1, math.pi),
    (-1 / 6, 1, 2 * math.pi),
    (-0.5, 1j, math.pi * cmath.exp(-1j * math.pi / 4)),
])
def test_mellin_barnes_examples(sigma, a, rhs):
    lhs, closed = mellin_barnes_check(sigma, a)
    assert closed == pytest.approx(rhs, abs=1e-14)
    assert abs(lhs - rhs) < 1e-6


def test_mellin_barnes_against_mpmath():
    for sigma in (-0.3, -0.8):
        for a in (2.0, 0.5 - 0.5j):
            lhs, _ = mellin_barnes_check(sigma, a)
            # both halves as Gauss hypergeometric functions (tail via t = 1/v)
            b = sigma + 1
            ref = (mpmath.hyp2f1(1, b, b + 1, -1 / a) / (a * b)
                   + mpmath.hyp2f1(1, -sigma, 1 - sigma, -a) / (-sigma))
            assert abs(lhs - complex(ref)) < 1e-8


@pytest.mark.parametrize("sigma,target", [(-1 / 6, 1.2), (-1 / 4, None), (-1 / 2, 1.0)])
def test_verify_H2(sigma, target):
    m = DensityModel.calibrated(1.0, sigma, 0.5)
    rep = verify_H2(m)
    assert rep.modulus_rel_err < 0.01
    assert rep.phase_err < 0.02
    if target is not None:
        assert abs(rep.fit.B) == pytest.approx(target, rel=0.01)


def test_branch_start_convention():
    assert edge_branch_start(0.5) == pytest.approx(0.5 - 1.5 * math.pi)


def test_jensen_slope_equals_mass_uncalibrated():
    m = DensityModel(2.0, -1 / 3, 0.7, 0.9)
    _, fit = jensen_slope(jensen_log_evaluator(m), kind="log", tol=1e-9,
                          breakpoints=m.breakpoints())
    assert fit.slope == pytest.approx(total_mass(m), rel=1e-4)


def test_invalid_models():
    with pytest.raises(ValueError):
        DensityModel(0.0, -0.5, 1.0, 1.0)
    with pytest.raises(ValueError):
        DensityModel(1.0, 0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        DensityModel(1.0, -0.5, 1.0, 3.0)
    with pytest.raises(ValueError):
        DensityModel(1.0, -0.5, 1.0, 1.0, z0=1j)
