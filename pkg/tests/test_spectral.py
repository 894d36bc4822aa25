"""
Test Tangential Spectral Calculus
Derivatives, multipliers, commutators and dealiasing on the periodic direction
"""

import os
import sys

import numpy as np
import pytest

# Add project root to path
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, project_root)

from src.core import spectral
from src.core.errors import InvalidParameterError


def nodes(nx):
    return 2.0 * np.pi * np.arange(nx) / nx


def test_dx_of_trigonometric_rows():
    x = nodes(16)
    assert np.allclose(spectral.dx(np.sin(x)), np.cos(x), atol=1e-12)
    assert np.allclose(spectral.dx(np.cos(2 * x), 2), -4.0 * np.cos(2 * x), atol=1e-12)
    assert np.allclose(spectral.dx(np.sin(3 * x), 4), 81.0 * np.sin(3 * x), atol=1e-10)


def test_dx_acts_on_last_axis_of_fields():
    x = nodes(8)
    field = np.stack([np.sin(x), 2.0 * np.cos(x)])
    assert np.allclose(spectral.dx(field), np.stack([np.cos(x), -2.0 * np.sin(x)]), atol=1e-12)


def test_odd_derivative_drops_nyquist_mode():
    x = nodes(16)
    assert np.allclose(spectral.dx(np.cos(8 * x)), 0.0, atol=1e-12)
    assert np.allclose(spectral.dx(np.cos(8 * x), 2), -64.0 * np.cos(8 * x), atol=1e-9)


def test_dx_rejects_bad_order():
    with pytest.raises(InvalidParameterError):
        spectral.dx(np.zeros(8), 5)


def test_transform_round_trip_and_parseval():
    rng = np.random.default_rng(3)
    row = rng.standard_normal(32)
    line = spectral.forward_transform(row)
    assert line.is_hermitian()
    assert np.allclose(spectral.inverse_transform(line), row)
    parseval = np.sum(np.abs(line.coefficients) ** 2) / (2.0 * np.pi)
    assert parseval == pytest.approx(spectral.l2_x_norm(row) ** 2)
    assert set(line.wavenumbers) == set(range(-16, 16))


def test_lambda_sigma_inverts():
    rng = np.random.default_rng(4)
    row = rng.standard_normal(32)
    back = spectral.lambda_sigma(spectral.lambda_sigma(row, 0.7), -0.7)
    assert np.allclose(back, row)


def test_abs_dx_sigma():
    x = nodes(16)
    assert np.allclose(spectral.abs_dx_sigma(np.full(16, 3.0), 0.5), 0.0, atol=1e-12)
    assert np.allclose(spectral.abs_dx_sigma(np.cos(2 * x), 1.0), 2.0 * np.cos(2 * x), atol=1e-12)
    with pytest.raises(InvalidParameterError):
        spectral.abs_dx_sigma(x, 0.0)


def test_commutator_vanishes_for_constant_rho():
    rng = np.random.default_rng(5)
    w = rng.standard_normal(32)
    assert np.allclose(spectral.commutator_multiplier(np.full(32, 2.5), w, 0.5), 0.0, atol=1e-12)


def test_commutator_two_mode_closed_form():
    x = nodes(32)
    rho, w = np.cos(x), np.cos(3 * x)
    s2, s3 = np.sqrt(2.0), np.sqrt(3.0)
    expected = (0.5 * s2 - 0.5 * s3) * np.cos(2 * x) + (1.0 - 0.5 * s3) * np.cos(4 * x)
    assert np.allclose(spectral.commutator_multiplier(rho, w, 0.5), expected, atol=1e-12)


def test_commutator_rejects_sigma_outside_unit_interval():
    with pytest.raises(InvalidParameterError):
        spectral.commutator_multiplier(np.ones(8), np.ones(8), 1.0)
    with pytest.raises(InvalidParameterError):
        spectral.commutator_multiplier(np.ones(8), np.ones(16), 0.5)


def test_two_thirds_filter_keeps_low_band():
    x = nodes(16)
    low = np.cos(5 * x)
    high = np.cos(6 * x)
    assert np.allclose(spectral.two_thirds_filter(low), low, atol=1e-12)
    assert np.allclose(spectral.two_thirds_filter(high), 0.0, atol=1e-12)


def test_dealiased_product_is_exact_inside_band():
    x = nodes(16)
    a = np.sin(x) + 0.3 * np.cos(2 * x)
    b = np.cos(x) - 0.2 * np.sin(2 * x)
    assert np.allclose(spectral.dealiased_product(a, b), a * b, atol=1e-12)
    assert np.allclose(spectral.dealiased_product(np.sin(x), np.sin(x)), 0.5 * (1.0 - np.cos(2 * x)), atol=1e-12)


def test_dealiased_product_removes_high_modes():
    x = nodes(16)
    product = spectral.dealiased_product(np.cos(4 * x), np.cos(4 * x))
    # cos^2(4x) = (1 + cos 8x) / 2, and mode 8 lies outside the kept band
    assert np.allclose(product, 0.5, atol=1e-12)
