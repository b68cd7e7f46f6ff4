import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lyedge.errors import (InsufficientSamples, NonGeometricGrid,
                           RootsOffCircle)
from lyedge.jensen import (CircularAverageSample, branch_average_exact,
                           branch_power, circular_average, finite_jensen,
                           finite_jensen_quadrature, geometric_grid,
                           lattice_jensen_raw, lattice_jensen_tilde,
                           slope_extrapolate, uniform_integrability_report)
from lyedge.lattice import FugacityPolynomial, LatticeSpec, partition_polynomial
from lyedge.zeros import find_roots, zero_set_from_angles


def test_branch_closed_form():
    assert branch_average_exact(5 / 6, 0.2) == pytest.approx(1 / 6)
    assert branch_average_exact(1, -0.3) == 0
    assert branch_average_exact(2, 0.0) == 0
    with pytest.raises(ValueError):
        branch_average_exact(0, 0.1)


def test_circular_average_linear_factor():
    f = lambda z: z - 1
    assert circular_average(f, 0.1).value == pytest.approx(0.1, abs=1e-10)
    assert circular_average(f, -0.2).value == pytest.approx(0.0, abs=1e-10)


def test_circular_average_branch_power():
    s = circular_average(branch_power(1.0, 5 / 6), 0.05, breakpoints=[0.0])
    assert s.value == pytest.approx(5 / 6 * 0.05, abs=1e-8)
    assert math.isfinite(s.error)


@pytest.mark.parametrize("alpha", [1 / 6, 1 / 2, 5 / 6, 1, 2])
@pytest.mark.parametrize("zc", [1, 1j, cmath.exp(1j * math.pi / 3)])
def test_lemma_grid(alpha, zc):
    for x in (-0.5, -0.1, -0.01, 0.01, 0.1, 0.5):
        s = circular_average(branch_power(zc, alpha), x,
                             breakpoints=[cmath.phase(zc)])
        assert s.value == pytest.approx(branch_average_exact(alpha, x), abs=1e-8)


def test_x_zero_rejected():
    with pytest.raises(ValueError):
        circular_average(lambda z: z, 0.0)


def test_slope_extrapolate_linear():
    xs = geometric_grid(0.1, 6)
    samples = [CircularAverageSample(x, math.log(1.2) + 5 / 6 * x, 1e-12) for x in xs]
    fit = slope_extrapolate(samples)
    assert fit.slope == pytest.approx(5 / 6, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(1.2), abs=1e-12)
    assert fit.residual < 1e-12


@settings(max_examples=30, deadline=None)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5), c=st.floats(-5, 5))
def test_slope_extrapolate_removes_quadratic_bias(a, b, c):
    xs = geometric_grid(0.1, 6)
    samples = [CircularAverageSample(x, a + b * x + c * x * x, 1e-12) for x in xs]
    fit = slope_extrapolate(samples)
    assert fit.slope == pytest.approx(b, abs=1e-9)


def test_slope_extrapolate_errors():
    s = [CircularAverageSample(x, x, 0.0) for x in (0.1, 0.05, 0.025)]
    with pytest.raises(InsufficientSamples):
        slope_extrapolate(s)
    s = [CircularAverageSample(x, x, 0.0) for x in (0.1, 0.05, 0.02, 0.01)]
    with pytest.raises(NonGeometricGrid):
        slope_extrapolate(s)


def test_finite_jensen_examples():
    p = FugacityPolynomial((1, 1))
    assert finite_jensen(p, 0.3) == pytest.approx(2 * math.pi * 0.3)
    assert finite_jensen(p, -0.3) == 0.0
    b = 0.45
    chain = partition_polynomial(LatticeSpec(1, 2, b))
    assert finite_jensen(chain, 0.2) == pytest.approx(2 * math.pi * (b + 0.4) / 2)


def test_finite_jensen_off_circle():
    p = FugacityPolynomial((1, 5, 1))  # roots real, off the circle
    with pytest.raises(RootsOffCircle):
        finite_jensen(p, 0.1)


@pytest.mark.parametrize("L,M", [(1, 6), (2, 5), (3, 4)])
def test_finite_jensen_quadrature(L, M):
    p = partition_polynomial(LatticeSpec(L, M, 0.7))
    for x in (-0.3, -0.02, 0.02, 0.3):
        q, err = finite_jensen_quadrature(p, x)
        assert q == pytest.approx(finite_jensen(p, x), abs=1e-7)


def test_lattice_raw_slope_is_one():
    p = partition_polynomial(LatticeSpec(2, 4, 0.5))
    zs = find_roots(p)
    samples = [lattice_jensen_raw(p, x, zeros=zs) for x in geometric_grid(0.1, 4)]
    assert slope_extrapolate(samples).slope == pytest.approx(1.0, abs=1e-8)


def test_lattice_tilde_finite():
    p = partition_polynomial(LatticeSpec(2, 4, 0.5))
    zs = find_roots(p)
    theta = zs.angles[0] / 2
    for x in (-0.5, -1e-3, 1e-3, 0.5):
        s = lattice_jensen_tilde(p, cmath.exp(1j * theta), x, zeros=zs)
        assert math.isfinite(s.value)


def test_lattice_tilde_rejects_root():
    p = FugacityPolynomial((1, 1))
    with pytest.raises(ValueError):
        lattice_jensen_tilde(p, -1.0, 0.1)


def test_lattice_tilde_single_root_power():
    # Z = (z + 1)^N with F_n = (1/N) Log Z_n on the principal branch of Log Z_n
    N = 6
    from math import comb
    p = FugacityPolynomial(tuple(comb(N, k) for k in range(N + 1)))
    zs = zero_set_from_angles([math.pi] * N)
    zc = cmath.exp(1j * 0.5)

    def F(z):
        w = z + 1
        return np.log(np.abs(w)) + 1j * np.angle(w ** N) / N

    th = np.linspace(0, 2 * math.pi, 400001)[:-1]
    for x in (-0.2, 0.1):
        s = lattice_jensen_tilde(p, zc, x, zeros=zs)
        ref = np.mean(np.log(np.abs(F(np.exp(x + 1j * th)) - F(zc))))
        assert s.value == pytest.approx(ref, abs=1e-5)


def test_uniform_integrability():
    rep = uniform_integrability_report([FugacityPolynomial((1, 1))], [0.1])
    assert math.isfinite(rep["sup"])
    polys = [partition_polynomial(LatticeSpec(1, M, 0.5)) for M in range(2, 11)]
    rep = uniform_integrability_report(polys, [-0.05, 0.05])
    assert rep["sup"] < 10
    with pytest.raises(ValueError):
        uniform_integrability_report(polys, [])
    with pytest.raises(ValueError):
        uniform_integrability_report([], [0.1])


def test_lattice_tilde_trend_report():
    # finite-size slopes are reported, never asserted against a limit
    rows = []
    for M in (4, 6, 8):
        p = partition_polynomial(LatticeSpec(4, M, 0.3))
        zs = find_roots(p)
        zc = cmath.exp(0.5j * zs.angles[0])
        samples = [lattice_jensen_tilde(p, zc, x, zeros=zs)
                   for x in geometric_grid(0.1, 4)]
        rows.append((p.volume, zs.angles[0], slope_extrapolate(samples).slope))
    print("volume, gap edge, tilde slope:", rows)
    assert all(math.isfinite(s) for _, _, s in rows)
    # the empirical edge moves toward theta = 0 as the lattice grows
    assert rows[0][1] > rows[1][1] > rows[2][1]
