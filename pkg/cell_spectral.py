#!/usr/bin/env python3
"""
Bloch-twisted cell eigenvalue problems

Writing psi = exp(2 pi theta.y) p and psi* = exp(-2 pi theta.y) p*, the direct and
adjoint exponential eigenproblems become periodic problems for p and p*. Their
principal eigenpairs are found by shifted inverse power iteration on the Fourier
collocation operators, and theta is tuned by damped Newton so that the effective
drift beta averages to zero.
"""

# built-in dependencies
from dataclasses import dataclass
from typing import Optional, Tuple

# 3rd party dependencies
import numpy as np

# project dependencies
from config import Config
from errors import NoConvergence, NonPositiveEigenfunction, SignChange
from models import CellEigenSolution, PeriodicField, ProblemCoefficients
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

SIDES = ("direct", "adjoint")


@dataclass
class _DriftState:
    theta: np.ndarray
    lam: float
    lam_star: float
    psi: PeriodicField
    psi_star: PeriodicField
    beta: np.ndarray
    mean_beta: np.ndarray
    residual: float
    residual_star: float

    @property
    def drift_norm(self) -> float:
        return float(np.abs(self.mean_beta).max())


def drift_field(coeffs: ProblemCoefficients, theta: np.ndarray,
                psi: PeriodicField, psi_star: PeriodicField) -> PeriodicField:
    """
    beta = p p* b + p A^T (grad p* - gamma p*) - p* A (grad p + gamma p), gamma = 2 pi theta

    This is psi psi* b + psi A^T grad psi* - psi* A grad psi with the exponential
    factors cancelled, so only the periodic parts enter.
    """
    grid = coeffs.grid
    gamma = (2 * np.pi * np.asarray(theta, dtype=np.float64)).reshape((grid.dim,) + (1,) * grid.dim)
    p, p_star = psi.values, psi_star.values
    A = coeffs.A.values
    twisted = gradient(psi).values + gamma * p
    twisted_star = gradient(psi_star).values - gamma * p_star
    beta = (p * p_star * coeffs.b.values
            + p * np.einsum("ji...,j...->i...", A, twisted_star)
            - p_star * np.einsum("ij...,j...->i...", A, twisted))
    return PeriodicField.vector(grid, beta)


def normalize_pair(psi: PeriodicField, psi_star: PeriodicField) -> Tuple[PeriodicField, PeriodicField]:
    """
    Make both eigenfunctions positive and scale them so that avg(psi psi*) = 1 and
    avg(psi^2) = avg(psi*^2)
    Args:
        psi (PeriodicField): direct eigenfunction (periodic part)
        psi_star (PeriodicField): adjoint eigenfunction (periodic part)
    Returns:
        (psi, psi_star) normalized
    Raises:
        SignChange: if either input changes sign beyond tolerance
    """
    psi.check_grid(psi_star)
    p = _sign_fixed(psi.values, "psi")
    p_star = _sign_fixed(psi_star.values, "psi_star")
    q, q_star, pairing = np.mean(p * p), np.mean(p_star * p_star), np.mean(p * p_star)
    if pairing <= 0:
        raise SignChange("psi and psi_star have non-positive pairing")
    s = np.sqrt(np.sqrt(q_star / q) / pairing)
    t = s if np.array_equal(p, p_star) else 1.0 / (pairing * s)
    return PeriodicField.scalar(psi.grid, s * p), PeriodicField.scalar(psi.grid, t * p_star)


def _sign_fixed(values: np.ndarray, name: str) -> np.ndarray:
    peak = values.flat[int(np.argmax(np.abs(values)))]
    if peak == 0:
        raise SignChange(f"{name} vanishes identically")
    fixed = values * np.sign(peak)
    if fixed.min() < -Config.EIG_SIGN_TOL * abs(peak):
        raise SignChange(f"{name} changes sign (min {fixed.min() / abs(peak):.3e} relative to max)")
    return fixed


class CellEigenSolver:
    """Principal eigenpairs of the twisted cell operators of one coefficient set"""

    def __init__(self, coeffs: ProblemCoefficients):
        self.coeffs = coeffs
        self.grid = coeffs.grid
        self.A = coeffs.A.values
        self.A_t = np.swapaxes(self.A, 0, 1)
        self.b = coeffs.b.values
        self.c = coeffs.c.values
        d = self.grid.dim
        self.a_bar = float(np.einsum("ii...->...", self.A).mean() / d)
        # the collocation derivative ignores Nyquist modes; give them the continuum diffusion
        self.nyquist_weight = self.a_bar * (np.pi * self.grid.n) ** 2
        self._nyquist = nyquist_mask(self.grid)
        self._kappa = derivative_symbols(self.grid)

    def _gamma(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=np.float64).reshape(self.grid.dim)
        return 2 * np.pi * theta

    def apply(self, flat: np.ndarray, theta, side: str) -> np.ndarray:
        """Periodic-part operator for the given side applied to a flat vector"""
        grid = self.grid
        gamma = self._gamma(theta)
        sign = 1.0 if side == "direct" else -1.0
        p = flat.reshape(grid.shape)
        twisted = [derivative_values(p, grid, a) + sign * gamma[a] * p for a in range(grid.dim)]
        A = self.A if side == "direct" else self.A_t
        out = self.c * p + self.nyquist_weight * nyquist_part(p, grid)
        for i in range(grid.dim):
            flux = sum(A[i, j] * twisted[j] for j in range(grid.dim))
            out -= derivative_values(flux, grid, i) + sign * gamma[i] * flux
            if side == "direct":
                out += self.b[i] * twisted[i]
            else:
                carried = self.b[i] * p
                out -= derivative_values(carried, grid, i) - gamma[i] * carried
        return out.ravel()

    def _symbol(self, theta, side: str, shift: float) -> np.ndarray:
        """Fourier symbol of the operator with averaged coefficients, minus the shift"""
        gamma = self._gamma(theta)
        sign = 1.0 if side == "direct" else -1.0
        d = self.grid.dim
        A_bar = component_average(self.coeffs.A)
        if side == "adjoint":
            A_bar = A_bar.T
        b_bar = component_average(self.coeffs.b)
        g = [1j * self._kappa[a] + sign * gamma[a] for a in range(d)]
        symbol = np.zeros(self.grid.shape, dtype=np.complex128)
        for i in range(d):
            for j in range(d):
                symbol -= A_bar[i, j] * g[i] * g[j]
            symbol += sign * b_bar[i] * g[i]
        symbol += float(self.c.mean()) + self.nyquist_weight * self._nyquist - shift
        return symbol

    def initial_estimate(self, theta) -> float:
        """Lower estimate of the principal eigenvalue used to place the first shift"""
        gamma = self._gamma(theta)
        g2 = float(np.dot(gamma, gamma))
        if g2 == 0.0:
            return min(0.0, float(self.c.min()))
        a_max = float(np.abs(self.A).max()) * self.grid.dim
        b_max = float(np.abs(self.b).max())
        return min(0.0, float(self.c.min())) - a_max * g2 - b_max * np.sqrt(g2)

    def solve_side(self, theta, side: str, lambda_estimate: Optional[float] = None,
                   x0: Optional[np.ndarray] = None) -> Tuple[float, PeriodicField, float]:
        """
        Shifted inverse power iteration for one side
        Args:
            theta (array): Bloch parameter
            side (str): direct or adjoint
            lambda_estimate (float): previous eigenvalue, the shift is placed one unit below
            x0 (np.ndarray): warm start (eigenfunction samples)
        Returns:
            (lambda, eigenfunction with sup = 1, relative eigen-residual)
        Raises:
            NoConvergence: after Config.EIG_MAX_ITERATIONS iterations
            NonPositiveEigenfunction: if the converged eigenfunction changes sign
        """
        if side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}, got {side!r}")
        estimate = self.initial_estimate(theta) if lambda_estimate is None else lambda_estimate
        shift = estimate - Config.EIG_SHIFT_OFFSET
        precond = fourier_preconditioner(self.grid, self._symbol(theta, side, shift))

        def shifted(v):
            return self.apply(v, theta, side) - shift * v

        x = np.ones(self.grid.size) if x0 is None else np.array(x0, dtype=np.float64).ravel()
        x = x / x[int(np.argmax(np.abs(x)))]
        lam_prev = None
        for iteration in range(1, Config.EIG_MAX_ITERATIONS + 1):
            guess = None if lam_prev is None else x / (lam_prev - shift)
            y = krylov_solve(shifted, x, Config.INNER_KRYLOV_TOL, precond, x0=guess,
                             label=f"{side} inverse iteration",
                             max_iterations=Config.EIG_INNER_MAX_ITERATIONS, strict=False)
            y = y / y[int(np.argmax(np.abs(y)))]
            applied = self.apply(y, theta, side)
            lam = float(np.dot(y, applied) / np.dot(y, y))
            residual = float(np.abs(applied - lam * y).max())
            scale = max(1.0, abs(lam))
            if (lam_prev is not None
                    and abs(lam - lam_prev) <= Config.EIG_RELATIVE_TOL * scale
                    and residual <= Config.EIG_RESIDUAL_TOL * scale):
                break
            lam_prev, x = lam, y
        else:
            raise NoConvergence(
                f"{side} eigenproblem at theta={np.round(self._gamma(theta) / (2 * np.pi), 10)} "
                f"not converged after {Config.EIG_MAX_ITERATIONS} iterations"
            )
        logger.debug(f"{side} eigenpair: lambda={lam:.12g} after {iteration} iterations, "
                     f"residual {residual:.2e}")
        if y.min() < -Config.EIG_SIGN_TOL:
            raise NonPositiveEigenfunction(
                f"{side} eigenfunction has min {y.min():.3e}; refine the cell grid (n={self.grid.n})"
            )
        return lam, PeriodicField.scalar(self.grid, y.reshape(self.grid.shape)), residual

    def principal_eigenpair(self, theta, side: str) -> Tuple[float, PeriodicField]:
        lam, eigenfunction, _ = self.solve_side(theta, side)
        return lam, eigenfunction

    def _evaluate(self, theta: np.ndarray, lambda_estimate: Optional[float],
                  warm: Optional[_DriftState]) -> _DriftState:
        lam, psi, res = self.solve_side(theta, "direct", lambda_estimate,
                                        None if warm is None else warm.psi.values)
        lam_star, psi_star, res_star = self.solve_side(
            theta, "adjoint", lam, None if warm is None else warm.psi_star.values)
        if abs(lam - lam_star) > Config.EIG_PAIR_TOL * (1 + abs(lam)):
            raise NoConvergence(
                f"direct and adjoint eigenvalues differ: {lam:.12g} vs {lam_star:.12g}"
            )
        psi, psi_star = normalize_pair(psi, psi_star)
        beta = drift_field(self.coeffs, theta, psi, psi_star)
        return _DriftState(np.array(theta, dtype=np.float64), lam, lam_star, psi, psi_star,
                           beta.values, component_average(beta), res, res_star)

    def find_bloch_parameter(self) -> CellEigenSolution:
        """
        Damped Newton on F(theta) = avg(beta_theta), finite-difference Jacobian, theta0 = 0
        Returns:
            CellEigenSolution at the root
        Raises:
            NoConvergence: after Config.NEWTON_MAX_STEPS steps or a failed line search
        """
        d = self.grid.dim
        theta = np.zeros(d)
        state = self._evaluate(theta, None, None)
        for step in range(Config.NEWTON_MAX_STEPS + 1):
            logger.debug(f"Newton step {step}: |F|={state.drift_norm:.3e}, lambda={state.lam:.12g}")
            if state.drift_norm <= Config.NEWTON_TOL:
                return self._solution(state, step)
            if step == Config.NEWTON_MAX_STEPS:
                break
            jacobian = np.zeros((d, d))
            for k in range(d):
                probe = state.theta.copy()
                probe[k] += Config.NEWTON_FD_STEP
                shifted = self._evaluate(probe, state.lam, state)
                jacobian[:, k] = (shifted.mean_beta - state.mean_beta) / Config.NEWTON_FD_STEP
            try:
                delta = -np.linalg.solve(jacobian, state.mean_beta)
            except np.linalg.LinAlgError as err:
                raise NoConvergence(f"singular drift Jacobian at theta={state.theta}") from err
            damping = 1.0
            for halving in range(Config.NEWTON_MAX_HALVINGS + 1):
                trial = self._evaluate(state.theta + damping * delta, state.lam, state)
                if trial.drift_norm < state.drift_norm:
                    break
                damping *= 0.5
            else:
                raise NoConvergence(
                    f"line search failed at theta={state.theta} (|F|={state.drift_norm:.3e})"
                )
            if halving:
                logger.debug(f"Newton step {step}: damped by 2^-{halving}")
            state = trial
        raise NoConvergence(
            f"Newton did not reach |F| <= {Config.NEWTON_TOL} in {Config.NEWTON_MAX_STEPS} steps "
            f"(|F|={state.drift_norm:.3e})"
        )

    def _solution(self, state: _DriftState, steps: int) -> CellEigenSolution:
        lower = float(min(state.psi.values.min(), state.psi_star.values.min()))
        if lower <= 0:
            raise NonPositiveEigenfunction(f"eigenfunction lower bound {lower:.3e} is not positive")
        residuals = {
            "direct_residual": state.residual,
            "adjoint_residual": state.residual_star,
            "lambda_pair_gap": abs(state.lam - state.lam_star),
            "beta_mean": state.drift_norm,
            "beta_divergence": float(np.abs(
                divergence(PeriodicField.vector(self.grid, state.beta)).values).max()),
            "pairing": abs(float(np.mean(state.psi.values * state.psi_star.values)) - 1.0),
        }
        if self.grid.size <= Config.DENSE_ORACLE_LIMIT:
            residuals["spectral_gap"] = self.spectral_gap(state.theta)
        logger.info(f"Bloch parameter theta={np.array2string(state.theta, precision=10)}, "
                    f"lambda={state.lam:.10g} ({steps} Newton steps)")
        return CellEigenSolution(theta=state.theta, lam=state.lam, psi=state.psi,
                                 psi_star=state.psi_star, lower_bound_a=lower,
                                 residuals=residuals, newton_steps=steps)

    def dense_operator(self, theta, side: str) -> np.ndarray:
        """Assembled operator matrix (columns are images of unit vectors)"""
        size = self.grid.size
        if size > Config.DENSE_ORACLE_LIMIT:
            logger.warn(f"assembling a dense {size}x{size} cell operator")
        identity = np.eye(size)
        return np.column_stack([self.apply(identity[:, k], theta, side) for k in range(size)])

    def dense_spectrum(self, theta, side: str = "direct") -> np.ndarray:
        """All eigenvalues of the assembled operator, sorted by real part"""
        eigenvalues = np.linalg.eigvals(self.dense_operator(theta, side))
        return eigenvalues[np.lexsort((eigenvalues.imag, eigenvalues.real))]

    def spectral_gap(self, theta) -> float:
        """Re(lambda_2) - Re(lambda_1) of the direct operator"""
        spectrum = self.dense_spectrum(theta, "direct")
        return float(spectrum[1].real - spectrum[0].real)


def principal_eigenpair(coeffs: ProblemCoefficients, theta, side: str) -> Tuple[float, PeriodicField]:
    """Principal eigenvalue and positive sup-normalized periodic eigenfunction"""
    return CellEigenSolver(coeffs).principal_eigenpair(theta, side)


def find_bloch_parameter(coeffs: ProblemCoefficients) -> CellEigenSolution:
    """Bloch parameter killing the mean effective drift, with the normalized eigenpair"""
    return CellEigenSolver(coeffs).find_bloch_parameter()


def dense_spectrum(coeffs: ProblemCoefficients, theta, side: str = "direct") -> np.ndarray:
    return CellEigenSolver(coeffs).dense_spectrum(theta, side)


def spectral_gap(coeffs: ProblemCoefficients, theta) -> float:
    return CellEigenSolver(coeffs).spectral_gap(theta)
