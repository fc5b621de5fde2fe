import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from afcopt.errors import OptimizationFailure, QuadratureFailure
from afcopt.quadrature import fixed_gauss_legendre, quadrature
from afcopt.search import golden_section_max, scan_then_golden


def test_polynomial_exact():
    assert quadrature(lambda x: x**7 - 3 * x**2, -1.0, 2.0) == pytest.approx(2**8 / 8 - 1 / 8 - 9.0, rel=1e-13)


def test_sine_and_cancelling_cosine():
    assert quadrature(np.sin, 0.0, np.pi) == pytest.approx(2.0, rel=1e-12)
    assert abs(quadrature(np.cos, -np.pi, np.pi)) < 1e-12


def test_complex_integrand():
    val = quadrature(lambda x: np.exp(1j * x), -np.pi / 2, np.pi / 2)
    assert isinstance(val, complex)
    assert val == pytest.approx(2.0 + 0j, abs=1e-12)


def test_breakpoints_handle_jumps():
    step = lambda x: np.where(x < 0.3, 1.0, 5.0)
    assert quadrature(step, 0.0, 1.0, points=[0.3]) == pytest.approx(0.3 + 3.5, rel=1e-13)


def test_narrow_lorentzian_matches_arctan():
    w = 1e-4
    val = quadrature(lambda x: w / (x * x + w * w), -np.pi, np.pi, points=[0.0, w, -w])
    assert val == pytest.approx(2 * math.atan(np.pi / w), rel=1e-10)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        quadrature(np.sin, 1.0, 1.0)
    with pytest.raises(ValueError):
        quadrature(np.sin, 0.0, 1.0, rel_tol=0.5)


def test_depth_exhaustion_raises():
    with pytest.raises(QuadratureFailure):
        quadrature(lambda x: 1.0 / np.sqrt(np.abs(x - 0.3)), 0.0, 1.0, 1e-13, max_depth=3)


@given(st.floats(-3, 3), st.floats(0.1, 4), st.floats(0.1, 10))
def test_agrees_with_scipy(a, width, k):
    f = lambda x: np.exp(-k * x * x) * np.cos(3 * x)
    ref = integrate.quad(lambda x: math.exp(-k * x * x) * math.cos(3 * x), a, a + width, epsabs=1e-13, epsrel=1e-12)[0]
    assert quadrature(f, a, a + width) == pytest.approx(ref, rel=1e-9, abs=1e-13)


def test_fixed_gauss_legendre_panels():
    vals = fixed_gauss_legendre(lambda x: x**3, np.array([0.0, 1.0]), np.array([1.0, 2.0]))
    np.testing.assert_allclose(vals, [0.25, 3.75], rtol=1e-14)


def test_golden_section_parabola():
    x, fx = golden_section_max(lambda x: -(x - 0.3) ** 2, -1.0, 2.0, tol=1e-10)
    assert x == pytest.approx(0.3, abs=1e-9)
    assert fx == pytest.approx(0.0, abs=1e-16)


def test_scan_finds_global_peak_of_bimodal():
    f = lambda x: math.exp(-((x - 0.2) ** 2) / 0.01) + 2 * math.exp(-((x - 2.5) ** 2) / 0.01)
    x, _ = scan_then_golden(f, 0.0, 3.0, 64)
    assert x == pytest.approx(2.5, abs=1e-6)


def test_golden_section_rejects_empty_interval():
    with pytest.raises(OptimizationFailure):
        golden_section_max(lambda x: x, 1.0, 1.0)
