"""
Spectral calculus on the periodic cell: derivatives, divergence convention, Poisson
solves, interpolation, Krylov helper and CSV import
"""

import numpy as np
import pandas as pd
import pytest

from errors import NonZeroMean, NoConvergence
from models import PeriodicField, TorusGrid
from torus_field import (
    aliasing_fraction,
    cell_average,
    divergence,
    gradient,
    krylov_solve,
    laplacian,
    load_field_csv,
    sample_on_tensor_grid,
    save_field_csv,
    solve_cell_poisson,
    spectral_derivative,
)

TWO_PI = 2 * np.pi


class TestDerivatives:

    def test_sine_derivative(self, grid_1d):
        (y,) = grid_1d.mesh()
        f = PeriodicField.scalar(grid_1d, np.sin(TWO_PI * 3 * y))
        df = spectral_derivative(f, 0)
        np.testing.assert_allclose(df.values, 3 * TWO_PI * np.cos(TWO_PI * 3 * y), atol=1e-10)

    def test_axis_out_of_range(self, grid_1d):
        with pytest.raises(ValueError):
            spectral_derivative(PeriodicField.constant(grid_1d, "scalar", 1.0), 1)

    def test_gradient_appends_derivative_index(self, grid_2d):
        y1, y2 = grid_2d.mesh()
        u = PeriodicField.vector(grid_2d, np.stack([np.sin(TWO_PI * y2), np.zeros_like(y1)]))
        grad = gradient(u).values
        assert grad.shape == (2, 2, 16, 16)
        np.testing.assert_allclose(grad[0, 1], TWO_PI * np.cos(TWO_PI * y2), atol=1e-10)
        np.testing.assert_allclose(grad[0, 0], 0.0, atol=1e-10)

    def test_divergence_contracts_first_index(self, grid_2d):
        y1, _ = grid_2d.mesh()
        M = np.zeros((2, 2, 16, 16))
        M[0, 1] = np.sin(TWO_PI * y1)
        div = divergence(PeriodicField.matrix(grid_2d, M)).values
        np.testing.assert_allclose(div[1], TWO_PI * np.cos(TWO_PI * y1), atol=1e-10)
        np.testing.assert_allclose(div[0], 0.0, atol=1e-10)

    def test_laplacian_of_mode(self, grid_2d):
        y1, y2 = grid_2d.mesh()
        f = PeriodicField.scalar(grid_2d, np.cos(TWO_PI * (y1 + 2 * y2)))
        np.testing.assert_allclose(laplacian(f).values, -5 * TWO_PI ** 2 * f.values, atol=1e-9)


class TestPoisson:

    def test_single_mode(self, grid_1d):
        (y,) = grid_1d.mesh()
        w = solve_cell_poisson(PeriodicField.scalar(grid_1d, np.cos(TWO_PI * y)))
        np.testing.assert_allclose(w.values, -np.cos(TWO_PI * y) / TWO_PI ** 2, atol=1e-14)
        assert abs(cell_average(w)) < 1e-15

    def test_nonzero_mean(self, grid_1d):
        with pytest.raises(NonZeroMean):
            solve_cell_poisson(PeriodicField.constant(grid_1d, "scalar", 1e-6))


class TestInterpolation:

    def test_band_limited_off_grid(self):
        grid = TorusGrid(2, 16)
        y1, y2 = grid.mesh()
        f = PeriodicField.scalar(grid, np.sin(TWO_PI * y1) * np.cos(TWO_PI * 2 * y2) + 0.5)
        x1 = np.linspace(0.0, 3.0, 7)
        x2 = np.linspace(-0.5, 0.7, 5)
        X1, X2 = np.meshgrid(x1, x2, indexing="ij")
        expected = np.sin(TWO_PI * X1) * np.cos(TWO_PI * 2 * X2) + 0.5
        np.testing.assert_allclose(sample_on_tensor_grid(f, [x1, x2]), expected, atol=1e-12)

    def test_constant_is_exact(self, grid_1d):
        f = PeriodicField.constant(grid_1d, "scalar", 0.7)
        values = sample_on_tensor_grid(f, [np.linspace(0, 5, 11)])
        assert np.all(values == 0.7)


def test_krylov_solve_diagonal():
    diagonal = np.linspace(1.0, 3.0, 40)
    rhs = np.cos(np.arange(40.0))
    x = krylov_solve(lambda v: diagonal * v, rhs, 1e-12)
    np.testing.assert_allclose(diagonal * x, rhs, atol=1e-11)


def test_krylov_strict_failure():
    # singular operator, inconsistent right-hand side
    with pytest.raises(NoConvergence):
        krylov_solve(lambda v: np.concatenate([v[:-1], [0.0]]), np.ones(10), 1e-12,
                     max_iterations=100)


class TestCsvImport:

    def test_export_then_import(self, tmp_path, grid_2d):
        y1, y2 = grid_2d.mesh()
        Theta = np.zeros((2, 2, 16, 16))
        Theta[0, 0] = 1.0 + 0.2 * np.sin(TWO_PI * y1)
        Theta[1, 1] = 1.0
        Theta[0, 1] = Theta[1, 0] = 0.1 * np.cos(TWO_PI * y2)
        field = PeriodicField.matrix(grid_2d, Theta)
        path = tmp_path / "theta.csv"
        save_field_csv(field, str(path), name="Theta")
        frame = pd.read_csv(path)
        assert list(frame.columns) == ["Theta11", "Theta12", "Theta21", "Theta22"]
        loaded = load_field_csv(str(path), grid_2d, "matrix")
        np.testing.assert_array_equal(loaded.values, field.values)

    def test_wrong_row_count(self, tmp_path, grid_1d):
        path = tmp_path / "short.csv"
        pd.DataFrame({"f": np.ones(10)}).to_csv(path, index=False)
        with pytest.raises(ValueError):
            load_field_csv(str(path), grid_1d, "scalar")

    def test_aliasing_fraction(self, grid_1d):
        (y,) = grid_1d.mesh()
        smooth = PeriodicField.scalar(grid_1d, np.sin(TWO_PI * y))
        rough = PeriodicField.scalar(grid_1d, np.sin(TWO_PI * 30 * y))
        assert aliasing_fraction(smooth) < 1e-20
        assert aliasing_fraction(rough) > 0.99
