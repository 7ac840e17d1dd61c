#!/usr/bin/env python3
"""
Corrector cell problems, homogenized tensor and flux corrector of (zeta, Theta)
"""

# built-in dependencies
from typing import Sequence, Tuple

# 3rd party dependencies
import numpy as np

# project dependencies
from config import Config
from errors import NotElliptic
from factorize import build_skew_potential
from models import EffectiveModel, GeneralCoefficients, PeriodicField
from torus_field import (
    component_average,
    derivative_symbols,
    derivative_values,
    divergence,
    fourier_preconditioner,
    gradient,
    krylov_solve,
    nyquist_mask,
    nyquist_part,
)
from LabKit.logger import Logger

logger = Logger()

WEIGHTS = ("zeta", "uniform")


class EffectiveModelBuilder:
    """Solves the d corrector problems of one coefficient set and assembles the effective model"""

    def __init__(self, gc: GeneralCoefficients, weight: str = "zeta"):
        if weight not in WEIGHTS:
            raise ValueError(f"weight must be one of {WEIGHTS}, got {weight!r}")
        self.gc = gc
        self.weight = weight
        self.grid = gc.grid
        self.Theta = gc.Theta.values
        d = self.grid.dim
        theta_bar = component_average(gc.Theta)
        self.nyquist_weight = float(np.trace(theta_bar) / d) * (np.pi * self.grid.n) ** 2
        kappa = derivative_symbols(self.grid)
        symbol = np.zeros(self.grid.shape)
        for i in range(d):
            for k in range(d):
                symbol = symbol + theta_bar[i, k] * kappa[i] * kappa[k]
        symbol = symbol + self.nyquist_weight * nyquist_mask(self.grid)
        symbol.flat[0] = 1.0
        self._precond = fourier_preconditioner(self.grid, symbol)

    def _apply(self, flat: np.ndarray) -> np.ndarray:
        # -div(Theta grad w) + avg(w), Nyquist modes decoupled
        grid = self.grid
        w = flat.reshape(grid.shape)
        grads = [derivative_values(w, grid, k) for k in range(grid.dim)]
        out = np.full(grid.shape, w.mean()) + self.nyquist_weight * nyquist_part(w, grid)
        for i in range(grid.dim):
            flux = sum(self.Theta[i, k] * grads[k] for k in range(grid.dim))
            out -= derivative_values(flux, grid, i)
        return out.ravel()

    def solve_corrector(self, j: int) -> PeriodicField:
        """
        Corrector omega_j: div(Theta grad(omega_j + y_j)) = 0 with avg(weight omega_j) = 0
        Args:
            j (int): axis index
        Returns:
            omega_j (PeriodicField)
        Raises:
            NoConvergence: if the Krylov solve misses the residual target
        """
        if not 0 <= j < self.grid.dim:
            raise ValueError(f"axis {j} out of range for dimension {self.grid.dim}")
        grid = self.grid
        rhs = sum(derivative_values(self.Theta[i, j], grid, i) for i in range(grid.dim))
        solution = krylov_solve(self._apply, np.asarray(rhs).ravel(), Config.CORRECTOR_TOL,
                                self._precond, label=f"corrector {j}")
        omega = solution.reshape(grid.shape)
        if self.weight == "zeta":
            omega = omega - np.mean(self.gc.zeta.values * omega)
        else:
            omega = omega - omega.mean()
        return PeriodicField.scalar(grid, omega)

    def corrected_flux(self, correctors: Sequence[PeriodicField]) -> np.ndarray:
        """Theta + Theta grad omega as a (d, d, grid) array, column j from omega_j"""
        grads = np.stack([gradient(omega).values for omega in correctors], axis=1)  # (k, j, ...)
        return self.Theta + np.einsum("ik...,kj...->ij...", self.Theta, grads)

    def homogenized_tensor(self, correctors: Sequence[PeriodicField]) -> np.ndarray:
        """Cell average of Theta + Theta grad omega"""
        flux = self.corrected_flux(correctors)
        return flux.reshape(flux.shape[:2] + (-1,)).mean(axis=-1)

    def flux_corrector(self, correctors: Sequence[PeriodicField], tensor_h: np.ndarray) -> PeriodicField:
        """
        Rank-3 phi_kij, antisymmetric in (k, i), with d_k phi_kij = r_ij where
        r = Theta + Theta grad omega - Theta_h
        Raises:
            NotDivergenceFree: if some column of r is not divergence free (corrector residual too large)
        """
        grid = self.grid
        d = grid.dim
        defect = self.corrected_flux(correctors) - np.asarray(tensor_h).reshape((d, d) + (1,) * d)
        phi = np.zeros((d, d, d) + grid.shape)
        for j in range(d):
            column = PeriodicField.vector(grid, defect[:, j])
            phi[:, :, j] = -build_skew_potential(column).values
        return PeriodicField(grid, "tensor3", phi)

    def build(self) -> EffectiveModel:
        """Correctors, tensor and flux corrector with residual diagnostics"""
        grid = self.grid
        d = grid.dim
        correctors = tuple(self.solve_corrector(j) for j in range(d))
        tensor_h = self.homogenized_tensor(correctors)
        phi = self.flux_corrector(correctors, tensor_h)
        diagnostics = self._diagnostics(correctors, tensor_h, phi)
        logger.info(f"homogenized tensor {np.array2string(tensor_h, precision=10)}")
        return EffectiveModel(correctors=correctors, tensor_h=tensor_h, flux_corrector=phi,
                              weight=self.weight, diagnostics=diagnostics)

    def _diagnostics(self, correctors: Tuple[PeriodicField, ...], tensor_h: np.ndarray,
                     phi: PeriodicField) -> dict:
        d = self.grid.dim
        diagnostics = {}
        for j, omega in enumerate(correctors):
            residual = self._apply(omega.values.ravel()) - np.mean(omega.values)
            rhs = sum(derivative_values(self.Theta[i, j], self.grid, i) for i in range(d))
            diagnostics[f"corrector_{j}_residual"] = float(np.abs(residual - np.ravel(rhs)).max())
            weight = self.gc.zeta.values if self.weight == "zeta" else 1.0
            diagnostics[f"corrector_{j}_normalization"] = abs(float(np.mean(weight * omega.values)))
        antisymmetry = phi.values + np.swapaxes(phi.values, 0, 1)
        diagnostics["flux_antisymmetry"] = float(np.abs(antisymmetry).max())
        defect = self.corrected_flux(correctors) - tensor_h.reshape((d, d) + (1,) * d)
        diagnostics["flux_identity"] = float(np.abs(divergence(phi).values - defect).max())
        sym = 0.5 * (tensor_h + tensor_h.T)
        smallest = float(np.linalg.eigvalsh(sym).min())
        if smallest <= 0:
            raise NotElliptic(f"homogenized tensor has non-positive symmetric eigenvalue {smallest:.3e}")
        diagnostics["tensor_min_eigenvalue"] = smallest
        diagnostics["harmonic_gap"] = smallest - self._harmonic_bound()
        if diagnostics["harmonic_gap"] < -1e-8:
            logger.warn(f"homogenized tensor falls below the harmonic-mean bound by "
                        f"{-diagnostics['harmonic_gap']:.3e}")
        return diagnostics

    def _harmonic_bound(self) -> float:
        """Smallest eigenvalue of the inverse of avg(sym(Theta)^-1)"""
        d = self.grid.dim
        nodes = np.moveaxis(self.Theta.reshape(d, d, -1), -1, 0)
        inverse = np.linalg.inv(0.5 * (nodes + np.swapaxes(nodes, 1, 2))).mean(axis=0)
        return float(np.linalg.eigvalsh(np.linalg.inv(inverse)).min())


def solve_corrector(gc: GeneralCoefficients, j: int, weight: str = "zeta") -> PeriodicField:
    return EffectiveModelBuilder(gc, weight).solve_corrector(j)


def homogenized_tensor(gc: GeneralCoefficients, correctors: Sequence[PeriodicField]) -> np.ndarray:
    return EffectiveModelBuilder(gc).homogenized_tensor(correctors)


def flux_corrector(gc: GeneralCoefficients, correctors: Sequence[PeriodicField],
                   tensor_h: np.ndarray) -> PeriodicField:
    return EffectiveModelBuilder(gc).flux_corrector(correctors, tensor_h)


def build_effective_model(gc: GeneralCoefficients, weight: str = "zeta") -> EffectiveModel:
    return EffectiveModelBuilder(gc, weight).build()
