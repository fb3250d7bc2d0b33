import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import ALL_MODELS, single_model
from levyliq.levy_model import phi, rational_form
from levyliq.numerics import (NumericalError, QuadratureSpec, central_diff, expm1_over, integrate,
                              integrate_semi_inf, poly_roots)
from levyliq.scale_functions import build_scale


# -- poly_roots ---------------------------------------------------------------

def test_roots_of_theta_squared_minus_one():
    assert np.allclose(np.sort(poly_roots([-1.0, 0.0, 1.0]).real), [-1.0, 1.0], atol=1e-14)


def test_roots_of_theta_squared_plus_one_are_a_conjugate_pair():
    r = poly_roots([1.0, 0.0, 1.0])
    assert np.allclose(sorted(r.imag), [-1.0, 1.0], atol=1e-14)
    assert np.allclose(r.real, 0.0, atol=1e-14)
    assert r[0] == np.conj(r[1])


def test_largest_real_quartic_root_matches_phi():
    model = single_model()
    N, _ = rational_form(model, 0.1)
    assert N.size == 5
    roots = poly_roots(N)
    real = roots[np.abs(roots.imag) == 0].real
    assert abs(real.max() - phi(model, 0.1)) < 1e-9


@pytest.mark.parametrize("name", sorted(ALL_MODELS))
@pytest.mark.parametrize("q", [0.0, 0.05, 0.1, 0.2, 0.5])
def test_root_residuals_are_small_on_all_models(name, q):
    N, _ = rational_form(ALL_MODELS[name](), q)
    roots = poly_roots(N)
    norm = np.abs(N).sum()
    for r in roots:
        scale = np.polynomial.polynomial.polyval(abs(r), np.abs(N))
        assert abs(np.polynomial.polynomial.polyval(r, N)) < 1e-10 * max(scale, norm)
    # conjugate closed
    assert np.allclose(np.sort_complex(roots), np.sort_complex(np.conj(roots)))


def test_poly_roots_rejects_zero_leading_coefficient():
    with pytest.raises(ValueError):
        poly_roots([1.0, 2.0, 0.0])


def test_poly_roots_rejects_degree_above_eight():
    with pytest.raises(ValueError):
        poly_roots([1.0] * 10)


def test_poly_roots_reports_failed_residual_test():
    coeffs = np.polynomial.polynomial.polyfromroots([1.0] * 8)
    with pytest.raises(NumericalError) as info:
        poly_roots(coeffs, polish=False, residual_tol=1e-30)
    assert info.value.best_estimate is not None


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=6))
def test_roots_reproduce_the_polynomial(zeros):
    coeffs = np.polynomial.polynomial.polyfromroots(zeros)
    roots = poly_roots(coeffs)
    assert roots.size == len(zeros)
    for r in roots:
        assert abs(np.polynomial.polynomial.polyval(r, coeffs)) <= 1e-8 * np.polynomial.polynomial.polyval(
            abs(r), np.abs(coeffs)) + 1e-12


# -- integrate ----------------------------------------------------------------

def test_integrate_linear():
    val, err = integrate(lambda x: x, 0.0, 1.0)
    assert abs(val - 0.5) < 1e-14
    assert err >= 0


def test_integrate_exponential():
    assert abs(integrate(np.exp, 0.0, 1.0)[0] - (math.e - 1)) < 1e-12


def test_integrate_scale_function_against_closed_form_z():
    sf = build_scale(single_model(), 0.1)
    for x in (0.5, 2.0, 7.0):
        val = integrate(sf.W, 0.0, x)[0]
        assert abs(1 + 0.1 * val - sf.Z(x)) < 1e-9


def test_integrate_respects_kinks():
    spec = QuadratureSpec(kinks=(0.3,))
    val = integrate(lambda x: np.abs(x - 0.3), 0.0, 1.0, spec)[0]
    assert abs(val - (0.3 ** 2 + 0.7 ** 2) / 2) < 1e-14


def test_integrate_reports_non_convergence_with_best_estimate():
    spec = QuadratureSpec(abs_tol=1e-15, rel_tol=1e-15, max_depth=2)
    with pytest.raises(NumericalError) as info:
        integrate(lambda x: np.sqrt(x), 0.0, 1.0, spec)
    assert abs(info.value.best_estimate - 2 / 3) < 1e-3


def test_integrate_rejects_reversed_interval():
    with pytest.raises(ValueError):
        integrate(np.exp, 1.0, 0.0)


def test_quadrature_error_estimates_are_conservative():
    cases = [
        (np.exp, 0, 1, math.e - 1),
        (np.sin, 0, math.pi, 2.0),
        (np.cos, 0, 10, math.sin(10)),
        (lambda x: x ** 5, 0, 2, 64 / 6),
        (lambda x: 1 / (1 + x * x), 0, 1, math.pi / 4),
        (lambda x: 1 / (1 + x * x), -50, 50, 2 * math.atan(50)),
        (np.sqrt, 0, 1, 2 / 3),
        (lambda x: x ** 1.5, 0, 1, 0.4),
        (np.log1p, 0, 1, 2 * math.log(2) - 1),
        (lambda x: np.exp(-x * x), -6, 6, math.sqrt(math.pi) * math.erf(6)),
        (lambda x: np.exp(-30 * x), 0, 1, (1 - math.exp(-30)) / 30),
        (lambda x: np.sin(20 * x), 0, 1, (1 - math.cos(20)) / 20),
        (lambda x: 1 / x, 1, 100, math.log(100)),
        (lambda x: x * np.exp(-x), 0, 40, 1 - 41 * math.exp(-40)),
        (np.cosh, -2, 2, 2 * math.sinh(2)),
        (lambda x: np.abs(np.sin(x)), 0, 3, 1 - math.cos(3)),
        (lambda x: 1 / np.sqrt(x + 1e-3), 0, 1, 2 * (math.sqrt(1.001) - math.sqrt(1e-3))),
        (lambda x: x ** 10, -1, 1, 2 / 11),
        (np.arctan, 0, 5, 5 * math.atan(5) - 0.5 * math.log(26)),
        (lambda x: np.exp(np.sin(x)), 0, 2 * math.pi, 2 * math.pi * 1.2660658777520084),
    ]
    honest = 0
    for f, lo, hi, truth in cases:
        val, err = integrate(f, lo, hi)
        honest += abs(val - truth) <= max(err, 1e-15 * abs(truth))
    assert honest >= 19


# -- integrate_semi_inf ---------------------------------------------------------

def test_semi_infinite_exponential():
    assert abs(integrate_semi_inf(lambda y: np.exp(-y), 0.0, 1.0)[0] - 1.0) < 1e-10


def test_semi_infinite_gamma_moment():
    assert abs(integrate_semi_inf(lambda y: y * np.exp(-2 * y), 0.0, 1.5)[0] - 0.25) < 1e-10


def test_semi_infinite_rejects_nonpositive_rate():
    with pytest.raises(ValueError):
        integrate_semi_inf(lambda y: np.exp(-y), 0.0, 0.0)


def test_semi_infinite_omega_tail_is_stable_under_longer_cut():
    from levyliq.fluctuation import OmegaKernel
    model = single_model()
    kern = OmegaKernel(model, model, 0.0, 0.1, 0.0, QuadratureSpec(abs_tol=1e-12, rel_tol=1e-12))
    v1 = kern.value_inf("W", -1.0, 1.0)
    v2 = kern.value("W", -1.0, 1.0, 400.0)
    assert abs(v1 - v2) < 1e-10


# -- central_diff / expm1_over ----------------------------------------------------

def test_central_diff_exact_on_quadratics():
    assert abs(central_diff(lambda x: 3 * x * x - x + 2, 1.7, 0.3) - (6 * 1.7 - 1)) < 1e-12


def test_central_diff_sine_at_zero():
    h = 1e-3
    assert abs(central_diff(math.sin, 0.0, h) - 1.0) < h * h
    assert abs(central_diff(math.sin, 0.0, h, richardson=True) - 1.0) < h ** 4


def test_central_diff_matches_analytic_scale_derivative():
    sf = build_scale(single_model(), 0.1)
    assert abs(central_diff(sf.W, 1.0, 1e-4) - sf.W_prime(1.0)) < 1e-7


def test_central_diff_rejects_nonpositive_step():
    with pytest.raises(ValueError):
        central_diff(math.sin, 0.0, 0.0)


@given(st.complex_numbers(max_magnitude=30, allow_nan=False, allow_infinity=False))
def test_expm1_over_matches_definition(z):
    val = expm1_over(z)
    if abs(z) > 1e-3:
        assert abs(val - np.expm1(z) / z) <= 1e-12 * max(1.0, abs(val))
    else:
        assert abs(val - 1.0) <= abs(z)
