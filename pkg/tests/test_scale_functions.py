import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import ALL_MODELS, single_model, solvent_model
from levyliq.levy_model import LevyModel, laplace_exponent, phi, safety_loading
from levyliq.numerics import integrate
from levyliq.scale_functions import (DegenerateRoots, ScaleFunction, build_scale, eval_W,
                                     eval_W_prime, eval_Z, verify_laplace_transform)

QS = [0.0, 0.05, 0.1, 0.5]


def theta_grid(sf, n=10):
    return sf.phi + np.geomspace(0.05, 50.0, n)


# -- construction ---------------------------------------------------------------

def test_single_model_has_four_roots():
    sf = build_scale(single_model(), 0.1)
    assert sf.roots.size == 4


def test_solvent_model_has_five_roots():
    assert build_scale(solvent_model(), 0.1).roots.size == 5


@pytest.mark.parametrize("name", sorted(ALL_MODELS))
@pytest.mark.parametrize("q", QS)
def test_residue_sum_vanishes_with_gaussian_part(name, q):
    sf = build_scale(ALL_MODELS[name](), q)
    assert abs(sf.coeffs.sum()) < 1e-8


@pytest.mark.parametrize("name", sorted(ALL_MODELS))
@pytest.mark.parametrize("q", QS)
def test_first_root_is_phi(name, q):
    model = ALL_MODELS[name]()
    sf = build_scale(model, q)
    assert abs(sf.roots[0].imag) == 0
    assert abs(sf.phi - phi(model, q)) < 1e-9
    assert np.all(sf.roots[1:].real < sf.phi)


@pytest.mark.parametrize("name", sorted(ALL_MODELS))
@pytest.mark.parametrize("q", QS)
def test_roots_are_distinct_and_conjugate_closed(name, q):
    sf = build_scale(ALL_MODELS[name](), q)
    gaps = np.abs(sf.roots[:, None] - sf.roots[None, :]) + np.eye(sf.roots.size)
    assert gaps.min() > 1e-7 * np.abs(sf.roots).max()
    assert np.allclose(np.sort_complex(sf.coeffs), np.sort_complex(np.conj(sf.coeffs)))


def test_degenerate_roots_are_reported():
    # psi - q has distinct zeros for every admissible q, so exercise the guard directly
    sf = build_scale(LevyModel(2.0, 2.0), 0.0)
    assert sf.roots.size == 2
    from levyliq import scale_functions as mod
    with pytest.raises(DegenerateRoots):
        mod._check_distinct(np.array([1.0 + 0j, 1.0 + 1e-12j]))


def test_negative_q_is_rejected():
    with pytest.raises(ValueError):
        build_scale(single_model(), -0.1)


# -- W ----------------------------------------------------------------------------

def test_W_vanishes_below_zero():
    sf = build_scale(single_model(), 0.1)
    assert eval_W(sf, -1.0) == 0.0
    assert np.all(eval_W(sf, np.array([-3.0, -0.5])) == 0.0)


def test_W_ratio_tends_to_one_when_phi_is_zero():
    sf = build_scale(single_model(), 0.0)
    assert abs(sf.W(201.0) / sf.W(200.0) - 1.0) < 1e-6


def test_W_at_infinity_is_inverse_loading():
    sf = build_scale(single_model(), 0.0)
    assert abs(eval_W(sf, 200.0) - 1 / 3) < 1e-6


@pytest.mark.parametrize("name", sorted(ALL_MODELS))
@pytest.mark.parametrize("q", QS)
def test_W_is_strictly_increasing_and_nonnegative(name, q):
    sf = build_scale(ALL_MODELS[name](), q)
    x = np.linspace(0.0, 50.0, 2001)
    w = sf.W(x)
    assert np.all(w >= -1e-15)
    # strict on [0, 10]; beyond that q = 0 increments fall below rounding
    assert np.all(np.diff(w[x <= 10.0]) > 0)
    assert np.all(np.diff(w) >= -1e-15 * np.abs(w[1:]))


@pytest.mark.parametrize("name", sorted(ALL_MODELS))
def test_W_real_part_dominates(name):
    sf = build_scale(ALL_MODELS[name](), 0.1)
    x = np.linspace(0.0, 30.0, 301)
    terms = np.exp(np.multiply.outer(x, sf.roots - sf.phi)) @ sf.coeffs
    assert np.all(np.abs(terms.imag) < 1e-9 * (1 + np.abs(terms.real)))


def test_W_does_not_overflow_at_large_arguments():
    sf = build_scale(solvent_model(), 0.5)
    big = sf.W(300.0)
    assert np.isfinite(big) and big > 0
    ratio = sf.W_ratio(300.0, 299.0)
    assert abs(ratio - math.exp(sf.phi)) < 1e-6 * math.exp(sf.phi)


# -- W' ---------------------------------------------------------------------------

def test_W_prime_matches_finite_difference():
    sf = build_scale(single_model(), 0.1)
    h = 1e-5
    fd = (sf.W(1 + h) - sf.W(1 - h)) / (2 * h)
    assert abs(eval_W_prime(sf, 1.0) - fd) < 1e-8


@pytest.mark.parametrize("name", sorted(ALL_MODELS))
@pytest.mark.parametrize("q", QS)
def test_asymptotic_ratios(name, q):
    sf = build_scale(ALL_MODELS[name](), q)
    y = 200.0
    scaled_prime = sf.W_prime.scaled(y, sf.phi)
    scaled_w = sf.W.scaled(y, sf.phi)
    assert abs(scaled_prime / scaled_w - sf.phi) < 1e-6
    for x in (0.5, 2.0):
        assert abs(sf.W_ratio(x + y, y) - math.exp(sf.phi * x)) < 1e-6 * math.exp(sf.phi * x)


def test_W_prime_at_zero_is_two_over_sigma_squared():
    sf = build_scale(single_model(), 0.1)
    assert abs(eval_W_prime(sf, 0.0) - 8.0) < 1e-6
    assert abs((sf.coeffs * sf.roots).sum().real - 8.0) < 1e-6


# -- Z ----------------------------------------------------------------------------

def test_Z_is_one_on_the_negative_half_line():
    sf = build_scale(single_model(), 0.1)
    assert eval_Z(sf, -3.0) == 1.0
    assert eval_Z(sf, 0.0) == pytest.approx(1.0, abs=1e-14)


def test_Z_is_one_when_q_is_zero():
    sf = build_scale(solvent_model(), 0.0)
    assert np.all(eval_Z(sf, np.array([-1.0, 0.0, 3.0, 40.0])) == 1.0)


def test_Z_closed_form_matches_quadrature():
    sf = build_scale(solvent_model(), 0.1)
    quad = 1 + 0.1 * integrate(sf.W, 0.0, 2.0)[0]
    assert abs(eval_Z(sf, 2.0) - quad) < 1e-9


@pytest.mark.parametrize("name", sorted(ALL_MODELS))
@pytest.mark.parametrize("q", QS)
def test_Z_nondecreasing_and_consistent(name, q):
    sf = build_scale(ALL_MODELS[name](), q)
    x = np.linspace(0.0, 10.0, 201)
    z = sf.Z(x)
    assert np.all(np.diff(z) >= 0)
    for xi in (0.7, 4.0):
        assert abs(sf.Z(xi) - 1 - q * integrate(sf.W, 0.0, xi)[0]) < 1e-9 * max(1.0, sf.Z(xi))


# -- Laplace transform identity ---------------------------------------------------

@pytest.mark.parametrize("name", sorted(ALL_MODELS))
@pytest.mark.parametrize("q", QS)
def test_laplace_identity_on_all_models(name, q):
    sf = build_scale(ALL_MODELS[name](), q)
    report = verify_laplace_transform(sf, theta_grid(sf))
    assert report.max_rel_error < 1e-8
    assert report.passed


def test_laplace_identity_examples_near_phi():
    sf = build_scale(single_model(), 0.1)
    report = verify_laplace_transform(sf, [sf.phi + 0.5, sf.phi + 1, sf.phi + 5])
    assert report.max_rel_error < 1e-8


def test_laplace_transform_of_brownian_scale_function():
    sf = build_scale(LevyModel(1.0, 1.0), 0.0)
    transform = (sf.coeffs / (1.0 - sf.roots)).sum().real
    assert abs(transform - 2 / 3) < 1e-14
    numeric = integrate(lambda x: np.exp(-x) * sf.W(x), 0.0, 60.0)[0]
    assert abs(numeric - 2 / 3) < 1e-9


def test_laplace_report_flags_perturbed_coefficients():
    sf = build_scale(single_model(), 0.1)
    bad = ScaleFunction(sf.q, sf.roots, sf.coeffs * (1 + 1e-3), sf.model)
    report = verify_laplace_transform(bad, theta_grid(sf))
    assert not report.passed


def test_laplace_grid_must_exceed_phi():
    sf = build_scale(single_model(), 0.1)
    with pytest.raises(ValueError):
        verify_laplace_transform(sf, [sf.phi])


@given(st.floats(0.5, 10.0), st.floats(0.1, 3.0), st.floats(0.0, 2.0))
def test_brownian_scale_function_closed_form(drift, sigma, q):
    # W_q for drifted Brownian motion: (exp(r+ x) - exp(r- x)) / sqrt(d^2 + 2 q s^2)
    model = LevyModel(drift, sigma)
    sf = build_scale(model, q)
    disc = math.sqrt(drift ** 2 + 2 * q * sigma ** 2)
    rp, rm = (-drift + disc) / sigma ** 2, (-drift - disc) / sigma ** 2
    for x in (0.1, 1.0, 3.0):
        expected = (math.exp(rp * x) - math.exp(rm * x)) / disc
        assert abs(sf.W(x) - expected) <= 1e-10 * max(1.0, expected)
    assert abs(laplace_exponent(model, sf.phi) - q) < 1e-9 * max(1.0, q)
    if q == 0:
        # the transient decays at rate 2 drift / sigma^2; go 40 decay lengths out
        far = 40.0 * sigma ** 2 / (2.0 * drift)
        assert abs(sf.W(far) - 1 / safety_loading(model)) < 1e-6 / safety_loading(model)


def test_Z_stays_finite_when_phi_underflows():
    sf = build_scale(single_model(), 7.5e-203)
    assert np.all(np.isfinite(sf.Z(np.array([0.0, 1.0, 5.0]))))
    assert abs(sf.Z(5.0) - 1.0) < 1e-12
