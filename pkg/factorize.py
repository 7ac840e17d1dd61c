#!/usr/bin/env python3
"""
Factorized coefficient set sigma, alpha, beta, skew potential B and M = alpha + B,
plus the front-end that turns nondivergence-form coefficients into (A, b, c)
"""

# 3rd party dependencies
import numpy as np

# project dependencies
from cell_spectral import drift_field
from config import Config
from errors import NonZeroMean, NotDivergenceFree, NotSymmetric
from models import (
    CellEigenSolution,
    FactorizedModel,
    GeneralCoefficients,
    NondivergenceCoefficients,
    PeriodicField,
    ProblemCoefficients,
)
from torus_field import component_average, divergence, gradient, solve_cell_poisson
from LabKit.logger import Logger

logger = Logger()


def build_beta(coeffs: ProblemCoefficients, eig: CellEigenSolution) -> PeriodicField:
    """
    Effective drift of a normalized eigenpair
    Args:
        coeffs (ProblemCoefficients): A, b, c
        eig (CellEigenSolution): normalized eigenpair at its Bloch parameter
    Returns:
        beta (PeriodicField): vector field
    Raises:
        GridMismatch: if the eigenpair lives on another grid
    """
    coeffs.A.check_grid(eig.psi)
    return drift_field(coeffs, eig.theta, eig.psi, eig.psi_star)


def divergence_tolerance(beta: PeriodicField) -> float:
    """DIVERGENCE_TOL relative to max(1, |beta|), widened as (32/n)^2 on grids coarser than 32"""
    scale = max(1.0, float(np.abs(beta.values).max()))
    coarsening = max(1.0, (Config.DIVERGENCE_REFERENCE_N / beta.grid.n) ** 2)
    return Config.DIVERGENCE_TOL * scale * coarsening


def build_skew_potential(beta: PeriodicField) -> PeriodicField:
    """
    Skew-symmetric B with -div B = beta: solve Laplace(u_i) = beta_i and set
    B_ij = d_j u_i - d_i u_j
    Args:
        beta (PeriodicField): zero-mean divergence-free vector field
    Returns:
        B (PeriodicField): matrix field
    Raises:
        NonZeroMean: if some component of beta has mean above tolerance
        NotDivergenceFree: if div beta exceeds tolerance
    """
    means = component_average(beta)
    if np.abs(means).max() > Config.MEAN_TOL:
        raise NonZeroMean(f"beta has cell average {means} (tolerance {Config.MEAN_TOL})")
    div_beta = float(np.abs(divergence(beta).values).max())
    tolerance = divergence_tolerance(beta)
    if div_beta > tolerance:
        raise NotDivergenceFree(f"max |div beta| = {div_beta:.3e} (tolerance {tolerance:.3e})")
    grid = beta.grid
    potential = np.stack([
        solve_cell_poisson(PeriodicField.scalar(grid, beta.values[i] - means[i])).values
        for i in range(grid.dim)
    ])
    grad_u = gradient(PeriodicField.vector(grid, potential)).values
    return PeriodicField.matrix(grid, grad_u - np.swapaxes(grad_u, 0, 1))


def build_factorized_model(coeffs: ProblemCoefficients, eig: CellEigenSolution) -> FactorizedModel:
    """
    sigma = p p*, alpha = sigma A, beta, B and M = alpha + B
    Args:
        coeffs (ProblemCoefficients): A, b, c
        eig (CellEigenSolution): result of find_bloch_parameter on coeffs
    Returns:
        FactorizedModel
    """
    grid = coeffs.grid
    sigma = PeriodicField.scalar(grid, eig.psi.values * eig.psi_star.values)
    alpha = PeriodicField.matrix(grid, sigma.values * coeffs.A.values)
    beta = build_beta(coeffs, eig)
    B = build_skew_potential(beta)
    M = PeriodicField.matrix(grid, alpha.values + B.values)
    ellipticity_b = coeffs.mu * float(sigma.values.min())
    residuals = {
        "skew": float(np.abs(B.values + np.swapaxes(B.values, 0, 1)).max()),
        "beta_plus_div_B": float(np.abs(beta.values + divergence(B).values).max()),
        "beta_mean": float(np.abs(component_average(beta)).max()),
        "beta_divergence": float(np.abs(divergence(beta).values).max()),
        "sigma_mean": abs(float(sigma.values.mean()) - 1.0),
    }
    logger.debug(f"factorized model residuals: {residuals}")
    return FactorizedModel(sigma=sigma, alpha=alpha, beta=beta, B=B, M=M,
                           ellipticity_b=ellipticity_b, eig=eig, residuals=residuals)


def general_from_factorized(fm: FactorizedModel) -> GeneralCoefficients:
    """Divergence-form coefficients (zeta, Theta) = (sigma, M) of the factorized problem"""
    return GeneralCoefficients(zeta=fm.sigma, Theta=fm.M, kappa=fm.ellipticity_b)


def nondivergence_frontend(ndc: NondivergenceCoefficients) -> ProblemCoefficients:
    """
    A = K, b = div K + q, c = r
    Args:
        ndc (NondivergenceCoefficients): K symmetric elliptic, q, r
    Returns:
        ProblemCoefficients
    Raises:
        NotSymmetric: if K is not symmetric nodewise
    """
    K = ndc.K.values
    skew = float(np.abs(K - np.swapaxes(K, 0, 1)).max())
    if skew > Config.SYMMETRY_TOL:
        raise NotSymmetric(f"K is not symmetric (max |K - K^T| = {skew:.3e})")
    drift = PeriodicField.vector(ndc.K.grid, divergence(ndc.K).values + ndc.q.values)
    return ProblemCoefficients(A=ndc.K, b=drift, c=ndc.r, mu=ndc.ellipticity)
