import math

import numpy as np
import pytest

from lyedge.errors import QuadratureNonConvergence
from lyedge.quadrature import integrate


def test_polynomial_exact():
    v, err, _ = integrate(lambda x: x ** 5 - 3 * x, 0.0, 2.0)
    assert v == pytest.approx(64 / 6 - 6, abs=1e-13)


def test_log_singularity():
    v, err, _ = integrate(lambda x: np.log(np.abs(x - 0.3)), 0.0, 1.0,
                          breakpoints=[0.3], tol=1e-12)
    exact = 0.3 * math.log(0.3) - 0.3 + 0.7 * math.log(0.7) - 0.7
    assert v == pytest.approx(exact, abs=1e-11)


def test_nan_node_is_bisected_not_logged():
    def f(x):
        with np.errstate(divide="ignore"):
            out = np.log(np.abs(x - 0.5))
        return np.where(x == 0.5, np.nan, out)
    v, _, _ = integrate(f, 0.0, 1.0, tol=1e-9)
    assert v == pytest.approx(math.log(0.5) - 1, abs=1e-8)


def test_nonconvergence_raises():
    with pytest.raises(QuadratureNonConvergence):
        integrate(lambda x: np.sin(1 / np.maximum(x, 1e-300)), 0.0, 1.0,
                  tol=1e-14, max_intervals=50)
