#!/usr/bin/env python3
"""
Periodic unit-cell calculus on the d-torus

Fourier collocation on TorusGrid samples: derivatives, averages, Poisson solves,
trigonometric interpolation onto arbitrary tensor grids, and the Krylov helper
shared by the cell solvers.
"""

# built-in dependencies
from pathlib import Path
from typing import Callable, Optional, Sequence

# 3rd party dependencies
import numpy as np
import pandas as pd
from scipy.sparse.linalg import LinearOperator, gmres

# project dependencies
from config import Config
from errors import NoConvergence, NonFiniteField, NonZeroMean, ReportWriteError
from models import RANKS, PeriodicField, TorusGrid
from LabKit.logger import Logger

logger = Logger()


def wavenumbers(n: int) -> np.ndarray:
    """Integer wavenumbers in numpy FFT order"""
    return np.fft.fftfreq(n, d=1.0 / n)


def _axis_shape(grid: TorusGrid, axis: int) -> tuple:
    shape = [1] * grid.dim
    shape[axis] = grid.n
    return tuple(shape)


def _check_finite(values: np.ndarray):
    if not np.all(np.isfinite(values)):
        raise NonFiniteField("input field contains NaN or infinite entries")


def derivative_values(values: np.ndarray, grid: TorusGrid, axis: int) -> np.ndarray:
    # grid axes are the trailing dim axes of values
    k = wavenumbers(grid.n)
    multiplier = 2j * np.pi * k
    multiplier[grid.n // 2] = 0.0
    array_axis = values.ndim - grid.dim + axis
    shape = [1] * values.ndim
    shape[array_axis] = grid.n
    spectrum = np.fft.fft(values, axis=array_axis)
    return np.fft.ifft(spectrum * multiplier.reshape(shape), axis=array_axis).real


def spectral_derivative(f: PeriodicField, axis: int) -> PeriodicField:
    """
    Partial derivative of a scalar field by Fourier collocation
    Args:
        f (PeriodicField): scalar field
        axis (int): direction, 0 <= axis < dim
    Returns:
        derivative (PeriodicField)
    Raises:
        ValueError: if axis is out of range or f is not scalar
        NonFiniteField: on non-finite samples
    """
    if f.rank != "scalar":
        raise ValueError(f"spectral_derivative expects a scalar field, got {f.rank}")
    if not 0 <= axis < f.grid.dim:
        raise ValueError(f"axis {axis} out of range for dimension {f.grid.dim}")
    _check_finite(f.values)
    return PeriodicField.scalar(f.grid, derivative_values(f.values, f.grid, axis))


def gradient(f: PeriodicField) -> PeriodicField:
    """Gradient of any field; the derivative index is appended last: (grad u)_ij = d_j u_i"""
    rank = RANKS[f.rank]
    if rank >= 3:
        raise ValueError("gradient of a rank-3 field is not supported")
    parts = [derivative_values(f.values, f.grid, axis) for axis in range(f.grid.dim)]
    values = np.stack(parts, axis=rank)
    new_rank = [name for name, r in RANKS.items() if r == rank + 1][0]
    return PeriodicField(f.grid, new_rank, values)


def divergence(f: PeriodicField) -> PeriodicField:
    """Divergence contracting the first component index: (div F)_rest = sum_i d_i F_i,rest"""
    rank = RANKS[f.rank]
    if rank == 0:
        raise ValueError("divergence of a scalar field is undefined")
    total = sum(derivative_values(f.values[i], f.grid, i) for i in range(f.grid.dim))
    new_rank = [name for name, r in RANKS.items() if r == rank - 1][0]
    return PeriodicField(f.grid, new_rank, total)


def laplacian(f: PeriodicField) -> PeriodicField:
    """Sum of repeated spectral derivatives"""
    total = np.zeros_like(f.values)
    for axis in range(f.grid.dim):
        total += derivative_values(derivative_values(f.values, f.grid, axis), f.grid, axis)
    return PeriodicField(f.grid, f.rank, total)


def cell_average(f: PeriodicField) -> float:
    """Mean of the node values of a scalar field"""
    if f.rank != "scalar":
        raise ValueError(f"cell_average expects a scalar field, got {f.rank}")
    _check_finite(f.values)
    return float(f.values.mean())


def component_average(f: PeriodicField) -> np.ndarray:
    """Cell average of every component (shape of the component index)"""
    axes = tuple(range(f.values.ndim - f.grid.dim, f.values.ndim))
    return f.values.mean(axis=axes)


def poisson_symbol(grid: TorusGrid) -> np.ndarray:
    """-|2 pi k|^2 on the full FFT grid"""
    k2 = np.zeros(grid.shape)
    for axis in range(grid.dim):
        k2 = k2 + (2 * np.pi * wavenumbers(grid.n).reshape(_axis_shape(grid, axis))) ** 2
    return -k2


def solve_cell_poisson(rhs: PeriodicField) -> PeriodicField:
    """
    Zero-mean periodic solution of Laplace(w) = rhs
    Args:
        rhs (PeriodicField): scalar field of zero cell average
    Returns:
        w (PeriodicField): the unique zero-mean solution
    Raises:
        NonZeroMean: if |cell_average(rhs)| exceeds the de-meaning tolerance
    """
    mean = cell_average(rhs)
    if abs(mean) > Config.DEMEAN_TOL:
        raise NonZeroMean(f"Poisson right-hand side has mean {mean:.3e}")
    symbol = poisson_symbol(rhs.grid)
    symbol.flat[0] = 1.0
    spectrum = np.fft.fftn(rhs.values) / symbol
    spectrum.flat[0] = 0.0
    return PeriodicField.scalar(rhs.grid, np.fft.ifftn(spectrum).real)


def nyquist_mask(grid: TorusGrid) -> np.ndarray:
    """True on Fourier modes with some |k_a| = n/2"""
    mask = np.zeros(grid.shape, dtype=bool)
    for axis in range(grid.dim):
        on_axis = (np.abs(wavenumbers(grid.n)) == grid.n // 2).reshape(_axis_shape(grid, axis))
        mask = mask | np.broadcast_to(on_axis, grid.shape)
    return mask


def nyquist_part(values: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Projection of scalar samples onto the Nyquist modes"""
    return np.fft.ifftn(np.fft.fftn(values) * nyquist_mask(grid)).real


def aliasing_fraction(f: PeriodicField) -> float:
    """Share of spectral energy carried by the top third of wavenumbers (any component)"""
    k_max = np.zeros(f.grid.shape)
    for axis in range(f.grid.dim):
        k_axis = np.abs(wavenumbers(f.grid.n)).reshape(_axis_shape(f.grid, axis))
        k_max = np.maximum(k_max, k_axis)
    high = k_max > (f.grid.n // 2) * 2.0 / 3.0
    axes = tuple(range(f.values.ndim - f.grid.dim, f.values.ndim))
    spectrum = np.abs(np.fft.fftn(f.values, axes=axes)) ** 2
    total = spectrum.sum()
    if total == 0:
        return 0.0
    return float(spectrum[..., high].sum() / total)


def _evaluation_matrix(n: int, points: np.ndarray) -> np.ndarray:
    # rows: points, columns: FFT-ordered modes; Nyquist mode evaluated as a cosine
    k = wavenumbers(n)
    matrix = np.exp(2j * np.pi * np.outer(points, k))
    matrix[:, n // 2] = np.cos(np.pi * n * points)
    return matrix / n


def sample_on_tensor_grid(f: PeriodicField, points: Sequence[np.ndarray]) -> np.ndarray:
    """
    Evaluate the trigonometric interpolant of a scalar field on a tensor grid
    Args:
        f (PeriodicField): scalar field
        points (list of 1D arrays): cell coordinates per axis (taken mod 1)
    Returns:
        values (np.ndarray): shape (len(points[0]), ..., len(points[d-1]))
    """
    if len(points) != f.grid.dim:
        raise ValueError(f"need {f.grid.dim} coordinate arrays, got {len(points)}")
    if np.ptp(f.values) == 0.0:
        return np.full(tuple(len(p) for p in points), float(f.values.flat[0]))
    result = np.fft.fftn(f.values)
    for axis, coords in enumerate(points):
        matrix = _evaluation_matrix(f.grid.n, np.mod(np.asarray(coords, dtype=np.float64), 1.0))
        result = np.moveaxis(np.tensordot(matrix, result, axes=([1], [axis])), 0, axis)
    return result.real


def derivative_symbols(grid: TorusGrid) -> list:
    """2 pi k per axis (Nyquist zeroed), shaped to broadcast over the grid"""
    symbols = []
    for axis in range(grid.dim):
        kappa = 2 * np.pi * wavenumbers(grid.n)
        kappa[grid.n // 2] = 0.0
        symbols.append(kappa.reshape(_axis_shape(grid, axis)))
    return symbols


def fourier_preconditioner(grid: TorusGrid, symbol: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """Approximate inverse of a constant-coefficient operator given its Fourier symbol"""
    floor = 1e-8 * max(float(np.abs(symbol).max()), 1.0)
    safe = np.where(np.abs(symbol) < floor, floor, symbol)

    def apply(flat: np.ndarray) -> np.ndarray:
        return np.fft.ifftn(np.fft.fftn(flat.reshape(grid.shape)) / safe).real.ravel()

    return apply


def krylov_solve(matvec: Callable[[np.ndarray], np.ndarray], rhs: np.ndarray, tol: float,
                 preconditioner: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                 x0: Optional[np.ndarray] = None, label: str = "cell solve",
                 max_iterations: int = Config.KRYLOV_MAX_ITERATIONS,
                 strict: bool = True) -> np.ndarray:
    """
    Restarted GMRES with iterative refinement on the true residual
    Args:
        matvec (callable): flat vector -> flat vector
        rhs (np.ndarray): flat right-hand side
        tol (float): max-norm residual target relative to max|rhs|
        preconditioner (callable): approximate inverse, flat -> flat
        x0 (np.ndarray): initial guess
        label (str): context for log lines and errors
        max_iterations (int): GMRES iteration cap per refinement round
        strict (bool): raise when the target is missed, otherwise return the last iterate
    Returns:
        solution (np.ndarray)
    Raises:
        NoConvergence: if strict and the residual target is not met after the refinement rounds
    """
    size = rhs.size
    operator = LinearOperator((size, size), matvec=matvec, dtype=np.float64)
    precond = None
    if preconditioner is not None:
        precond = LinearOperator((size, size), matvec=preconditioner, dtype=np.float64)
    scale = max(float(np.abs(rhs).max()), np.finfo(float).tiny)
    target = tol * scale
    x = np.zeros(size) if x0 is None else np.array(x0, dtype=np.float64)
    residual = rhs - matvec(x)
    max_cycles = max(1, max_iterations // Config.KRYLOV_RESTART)
    for refinement in range(Config.KRYLOV_REFINEMENTS + 1):
        if float(np.abs(residual).max()) <= target:
            return x
        correction, info = gmres(operator, residual, rtol=tol, atol=0.0,
                                 restart=Config.KRYLOV_RESTART, maxiter=max_cycles, M=precond)
        if info < 0:
            raise NoConvergence(f"{label}: GMRES breakdown (info={info})")
        x = x + correction
        residual = rhs - matvec(x)
        logger.debug(f"{label}: refinement {refinement}, residual {np.abs(residual).max():.3e}")
    res_norm = float(np.abs(residual).max())
    if res_norm > target and strict:
        raise NoConvergence(
            f"{label}: residual {res_norm:.3e} above target {target:.3e} "
            f"after {Config.KRYLOV_REFINEMENTS} refinements"
        )
    return x


def load_field_csv(path: str, grid: TorusGrid, rank: str) -> PeriodicField:
    """
    Import a sampled field: one row per node in lexicographic order, one column per component
    Args:
        path (str): csv file with a header row naming the components
        grid (TorusGrid): target grid
        rank (str): scalar, vector or matrix
    Returns:
        field (PeriodicField)
    """
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError) as err:
        raise ValueError(f"cannot read field samples from {path}: {err}") from err
    components = grid.dim ** RANKS[rank]
    if frame.shape != (grid.size, components):
        raise ValueError(
            f"{path}: expected {grid.size} rows x {components} columns, got {frame.shape}"
        )
    values = frame.to_numpy(dtype=np.float64).T.reshape((grid.dim,) * RANKS[rank] + grid.shape)
    field = PeriodicField(grid, rank, values)
    fraction = aliasing_fraction(field)
    if fraction > Config.ALIASING_ENERGY_FRACTION:
        logger.warn(f"{Path(path).name}: {100 * fraction:.2f}% of the spectral energy sits in the "
                    "top third of wavenumbers, samples may be aliased")
    return field


def save_field_csv(field: PeriodicField, path: str, name: str = "f"):
    """Export a field in the import layout"""
    index_sets = np.ndindex(*field.component_shape) if field.component_shape else [()]
    columns = {}
    for index in index_sets:
        label = name + "".join(str(i + 1) for i in index)
        columns[label] = field.values[index].ravel()
    try:
        pd.DataFrame(columns).to_csv(path, index=False, float_format="%.17g")
    except OSError as err:
        raise ReportWriteError(path, str(err)) from err
