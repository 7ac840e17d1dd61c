"""
Skew potential, factorized model and the nondivergence front-end
"""

import numpy as np
import pytest

from cell_spectral import find_bloch_parameter
from config import Config
from errors import NonZeroMean, NotDivergenceFree
from factorize import (
    build_factorized_model,
    build_skew_potential,
    divergence_tolerance,
    general_from_factorized,
    nondivergence_frontend,
)
from models import PeriodicField, TorusGrid
from presets import get_preset
from torus_field import divergence

TWO_PI = 2 * np.pi


class TestSkewPotential:

    def test_single_mode(self, grid_2d):
        _, y2 = grid_2d.mesh()
        beta = PeriodicField.vector(grid_2d, np.stack([np.sin(TWO_PI * y2), np.zeros_like(y2)]))
        B = build_skew_potential(beta).values
        np.testing.assert_allclose(B[0, 1], -np.cos(TWO_PI * y2) / TWO_PI, atol=1e-12)
        np.testing.assert_allclose(B[1, 0], np.cos(TWO_PI * y2) / TWO_PI, atol=1e-12)
        np.testing.assert_allclose(B + np.swapaxes(B, 0, 1), 0.0, atol=1e-14)
        div_B = divergence(PeriodicField.matrix(grid_2d, B)).values
        np.testing.assert_allclose(beta.values + div_B, 0.0, atol=1e-12)

    def test_nonzero_mean(self, grid_2d):
        beta = PeriodicField.constant(grid_2d, "vector", [1e-3, 0.0])
        with pytest.raises(NonZeroMean):
            build_skew_potential(beta)

    def test_tolerance_scales_with_grid_and_size(self):
        coarse = PeriodicField.constant(TorusGrid(2, 16), "vector", [0.5, 0.0])
        fine = PeriodicField.constant(TorusGrid(2, 64), "vector", [3.0, 0.0])
        assert divergence_tolerance(coarse) == pytest.approx(4 * Config.DIVERGENCE_TOL)
        assert divergence_tolerance(fine) == pytest.approx(3 * Config.DIVERGENCE_TOL)

    def test_not_divergence_free(self, grid_2d):
        y1, _ = grid_2d.mesh()
        beta = PeriodicField.vector(grid_2d, np.stack([np.sin(TWO_PI * y1), np.zeros_like(y1)]))
        with pytest.raises(NotDivergenceFree):
            build_skew_potential(beta)


class TestFactorizedModel:

    def test_classical_reduction(self):
        coeffs = get_preset("classical-2d").build(16)
        fm = build_factorized_model(coeffs, find_bloch_parameter(coeffs))
        np.testing.assert_allclose(fm.sigma.values, 1.0, atol=1e-8)
        np.testing.assert_allclose(fm.beta.values, 0.0, atol=1e-8)
        np.testing.assert_allclose(fm.B.values, 0.0, atol=1e-8)
        identity = np.eye(2).reshape(2, 2, 1, 1)
        np.testing.assert_allclose(fm.M.values, np.broadcast_to(identity, fm.M.values.shape), atol=1e-8)

    @pytest.mark.slow
    def test_structural_residuals_2d(self):
        coeffs = get_preset("drift-2d").build(32)
        fm = build_factorized_model(coeffs, find_bloch_parameter(coeffs))
        assert fm.residuals["skew"] <= 1e-10
        assert fm.residuals["beta_plus_div_B"] <= 1e-8
        assert fm.residuals["beta_mean"] <= 1e-8
        assert fm.residuals["beta_divergence"] <= 1e-8
        assert fm.residuals["sigma_mean"] <= 1e-10
        gc = general_from_factorized(fm)
        assert gc.kappa == pytest.approx(0.5 * fm.sigma.values.min())

    def test_coarse_drift_model_builds(self):
        coeffs = get_preset("drift-2d").build(16)
        fm = build_factorized_model(coeffs, find_bloch_parameter(coeffs))
        assert fm.residuals["beta_divergence"] <= divergence_tolerance(fm.beta)
        assert fm.residuals["skew"] <= 1e-10

    def test_one_dimensional_drift_vanishes(self):
        coeffs = get_preset("oscillatory-1d").build(64)
        fm = build_factorized_model(coeffs, find_bloch_parameter(coeffs))
        np.testing.assert_allclose(fm.beta.values, 0.0, atol=1e-8)
        np.testing.assert_allclose(fm.M.values, fm.alpha.values, atol=1e-8)


def test_nondivergence_frontend_drift(grid_1d):
    coeffs = get_preset("nondiv-1d").build(64)
    (y,) = grid_1d.mesh()
    problem = nondivergence_frontend(coeffs)
    expected = 0.25 * TWO_PI * np.cos(TWO_PI * y) + 0.3 * np.cos(TWO_PI * y)
    np.testing.assert_allclose(problem.b.values[0], expected, atol=1e-10)
    np.testing.assert_array_equal(problem.A.values, coeffs.K.values)
    assert problem.mu == coeffs.ellipticity
