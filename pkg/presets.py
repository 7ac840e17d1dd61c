#!/usr/bin/env python3
"""
Named coefficient sets and initial data, plus CSV import of sampled coefficients
"""

# built-in dependencies
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Union

# 3rd party dependencies
import numpy as np

# project dependencies
from errors import InvalidCoefficients
from models import (
    DomainSpec,
    GeneralCoefficients,
    NondivergenceCoefficients,
    PeriodicField,
    ProblemCoefficients,
    TorusGrid,
)
from torus_field import load_field_csv
from LabKit.logger import Logger

logger = Logger()

TWO_PI = 2.0 * np.pi

# which coefficient family each pipeline consumes
PIPELINE_FAMILIES = {
    "section-1": "problem",
    "section-2": "general",
    "nondivergence": "nondivergence",
}

AnyCoefficients = Union[ProblemCoefficients, GeneralCoefficients, NondivergenceCoefficients]


@dataclass(frozen=True)
class Preset:
    name: str
    family: str
    dim: int
    builder: Callable[[TorusGrid], AnyCoefficients]
    description: str = ""

    def build(self, n: int) -> AnyCoefficients:
        return self.builder(TorusGrid(self.dim, n))


def _harmonic_profile(y):
    return 1.0 / (1.0 + 0.5 * np.sin(TWO_PI * y))


def _classical(grid: TorusGrid) -> ProblemCoefficients:
    return ProblemCoefficients(
        A=PeriodicField.constant(grid, "matrix", np.eye(grid.dim)),
        b=PeriodicField.constant(grid, "vector", np.zeros(grid.dim)),
        c=PeriodicField.constant(grid, "scalar", 0.0),
        mu=1.0,
    )


def _constant_drift(grid: TorusGrid) -> ProblemCoefficients:
    return ProblemCoefficients(
        A=PeriodicField.constant(grid, "matrix", np.eye(1)),
        b=PeriodicField.constant(grid, "vector", np.ones(1)),
        c=PeriodicField.constant(grid, "scalar", 0.0),
        mu=1.0,
    )


def _oscillatory_1d(grid: TorusGrid) -> ProblemCoefficients:
    (y,) = grid.mesh()
    return ProblemCoefficients(
        A=PeriodicField.matrix(grid, _harmonic_profile(y)[np.newaxis, np.newaxis]),
        b=PeriodicField.vector(grid, (0.5 * np.cos(TWO_PI * y))[np.newaxis]),
        c=PeriodicField.scalar(grid, 0.25 * np.sin(TWO_PI * y) ** 2),
        mu=2.0 / 3.0,
    )


def _potential_1d(grid: TorusGrid) -> ProblemCoefficients:
    (y,) = grid.mesh()
    return ProblemCoefficients(
        A=PeriodicField.constant(grid, "matrix", np.eye(1)),
        b=PeriodicField.constant(grid, "vector", np.zeros(1)),
        c=PeriodicField.scalar(grid, 1.0 + 0.5 * np.cos(TWO_PI * y)),
        mu=1.0,
    )


def _drift_2d(grid: TorusGrid) -> ProblemCoefficients:
    y1, y2 = grid.mesh()
    A = np.zeros((2, 2) + grid.shape)
    A[0, 0] = 1.0 + 0.25 * np.sin(TWO_PI * y2)
    A[1, 1] = 1.0 + 0.25 * np.cos(TWO_PI * y1)
    A[0, 1] = A[1, 0] = 0.1 * np.sin(TWO_PI * (y1 + y2))
    b = np.stack([0.5 * np.sin(TWO_PI * y2), 0.3 + 0.2 * np.cos(TWO_PI * y1)])
    c = 0.5 * np.cos(TWO_PI * y1) ** 2
    return ProblemCoefficients(A=PeriodicField.matrix(grid, A), b=PeriodicField.vector(grid, b),
                               c=PeriodicField.scalar(grid, c), mu=0.5)


def _harmonic_1d(grid: TorusGrid) -> GeneralCoefficients:
    (y,) = grid.mesh()
    return GeneralCoefficients(
        zeta=PeriodicField.constant(grid, "scalar", 1.0),
        Theta=PeriodicField.matrix(grid, _harmonic_profile(y)[np.newaxis, np.newaxis]),
        kappa=2.0 / 3.0,
    )


def _weighted_1d(grid: TorusGrid) -> GeneralCoefficients:
    (y,) = grid.mesh()
    return GeneralCoefficients(
        zeta=PeriodicField.scalar(grid, 1.0 + 0.5 * np.cos(TWO_PI * y)),
        Theta=PeriodicField.matrix(grid, _harmonic_profile(y)[np.newaxis, np.newaxis]),
        kappa=2.0 / 3.0,
    )


def _layered_2d(grid: TorusGrid) -> GeneralCoefficients:
    y1, _ = grid.mesh()
    profile = _harmonic_profile(y1)
    Theta = np.zeros((2, 2) + grid.shape)
    Theta[0, 0] = Theta[1, 1] = profile
    return GeneralCoefficients(zeta=PeriodicField.constant(grid, "scalar", 1.0),
                               Theta=PeriodicField.matrix(grid, Theta), kappa=2.0 / 3.0)


def _constant_general(grid: TorusGrid) -> GeneralCoefficients:
    return GeneralCoefficients(zeta=PeriodicField.constant(grid, "scalar", 1.0),
                               Theta=PeriodicField.constant(grid, "matrix", np.eye(grid.dim)),
                               kappa=1.0)


def _nondiv_1d(grid: TorusGrid) -> NondivergenceCoefficients:
    (y,) = grid.mesh()
    return NondivergenceCoefficients(
        K=PeriodicField.matrix(grid, (1.0 + 0.25 * np.sin(TWO_PI * y))[np.newaxis, np.newaxis]),
        q=PeriodicField.vector(grid, (0.3 * np.cos(TWO_PI * y))[np.newaxis]),
        r=PeriodicField.constant(grid, "scalar", 0.0),
        ellipticity=0.75,
    )


def _nondiv_2d(grid: TorusGrid) -> NondivergenceCoefficients:
    y1, y2 = grid.mesh()
    K = np.zeros((2, 2) + grid.shape)
    K[0, 0] = 1.0 + 0.25 * np.sin(TWO_PI * y1)
    K[1, 1] = 1.0 + 0.25 * np.sin(TWO_PI * y2)
    K[0, 1] = K[1, 0] = 0.1 * np.cos(TWO_PI * (y1 - y2))
    return NondivergenceCoefficients(
        K=PeriodicField.matrix(grid, K),
        q=PeriodicField.vector(grid, np.stack([0.2 * np.cos(TWO_PI * y2), np.zeros(grid.shape)])),
        r=PeriodicField.scalar(grid, 0.1 * np.sin(TWO_PI * y1) ** 2),
        ellipticity=0.6,
    )


PRESETS: Dict[str, Preset] = {p.name: p for p in [
    Preset("classical", "problem", 1, _classical, "A = 1, b = c = 0"),
    Preset("classical-2d", "problem", 2, _classical, "A = I, b = c = 0"),
    Preset("constant-drift-1d", "problem", 1, _constant_drift, "A = 1, b = 1, c = 0"),
    Preset("oscillatory-1d", "problem", 1, _oscillatory_1d, "oscillating A, b and c"),
    Preset("potential-1d", "problem", 1, _potential_1d, "A = 1, b = 0, oscillating c"),
    Preset("drift-2d", "problem", 2, _drift_2d, "anisotropic A with a non-gradient drift"),
    Preset("harmonic-1d", "general", 1, _harmonic_1d, "zeta = 1, Theta = 1/(1 + sin(2 pi y)/2)"),
    Preset("weighted-1d", "general", 1, _weighted_1d, "oscillating zeta and Theta"),
    Preset("layered-2d", "general", 2, _layered_2d, "Theta = a(y1) I"),
    Preset("constant-1d", "general", 1, _constant_general, "zeta = 1, Theta = 1"),
    Preset("constant-2d", "general", 2, _constant_general, "zeta = 1, Theta = I"),
    Preset("nondiv-1d", "nondivergence", 1, _nondiv_1d, "K, q oscillating"),
    Preset("nondiv-2d", "nondivergence", 2, _nondiv_2d, "anisotropic K"),
]}


def get_preset(name: str) -> Preset:
    """
    Look up a coefficient preset
    Raises:
        InvalidCoefficients: for unknown names
    """
    try:
        return PRESETS[name]
    except KeyError as err:
        raise InvalidCoefficients(f"unknown preset {name!r}; known: {sorted(PRESETS)}") from err


def load_imported(spec: Dict[str, Any], base_dir: Optional[str] = None) -> AnyCoefficients:
    """
    Coefficients from sampled CSV files

    spec = {"family": "problem" | "general" | "nondivergence", "dim": d, "n": n,
            "files": {field name: csv path}, "mu" | "kappa" | "ellipticity": constant}
    Relative paths resolve against base_dir (the config file's folder).
    """
    family = spec.get("family")
    if family not in PIPELINE_FAMILIES.values():
        raise InvalidCoefficients(f"unknown coefficient family {family!r}")
    grid = TorusGrid(int(spec["dim"]), int(spec["n"]))
    files = spec.get("files", {})

    def load(name: str, rank: str) -> PeriodicField:
        if name not in files:
            raise InvalidCoefficients(f"import is missing the {name} samples")
        path = Path(files[name])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return load_field_csv(str(path), grid, rank)

    logger.info(f"importing {family} coefficients on a {grid.n}^{grid.dim} grid")
    if family == "problem":
        return ProblemCoefficients(A=load("A", "matrix"), b=load("b", "vector"),
                                   c=load("c", "scalar"), mu=float(spec["mu"]))
    if family == "general":
        return GeneralCoefficients(zeta=load("zeta", "scalar"), Theta=load("Theta", "matrix"),
                                   kappa=float(spec["kappa"]))
    return NondivergenceCoefficients(K=load("K", "matrix"), q=load("q", "vector"),
                                     r=load("r", "scalar"), ellipticity=float(spec["ellipticity"]))


def family_of(coeffs: AnyCoefficients) -> str:
    if isinstance(coeffs, ProblemCoefficients):
        return "problem"
    if isinstance(coeffs, GeneralCoefficients):
        return "general"
    return "nondivergence"


def coefficient_arrays(coeffs: AnyCoefficients) -> list:
    """Sampled arrays in a fixed order, for content hashing"""
    if isinstance(coeffs, ProblemCoefficients):
        return [coeffs.A.values, coeffs.b.values, coeffs.c.values, np.array([coeffs.mu])]
    if isinstance(coeffs, GeneralCoefficients):
        return [coeffs.zeta.values, coeffs.Theta.values, np.array([coeffs.kappa])]
    return [coeffs.K.values, coeffs.q.values, coeffs.r.values, np.array([coeffs.ellipticity])]


# initial data on the box, all vanishing on the boundary


def _bump_datum(domain: DomainSpec) -> np.ndarray:
    values = np.ones(domain.spatial_shape)
    for x in domain.mesh():
        r = np.abs(x - 0.5) / 0.4
        inside = r < 1.0
        factor = np.zeros_like(x)
        factor[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
        values = values * factor
    return values


def _sine_datum(domain: DomainSpec) -> np.ndarray:
    values = np.ones(domain.spatial_shape)
    for x in domain.mesh():
        values = values * np.sin(np.pi * x)
    # exact zeros on the boundary
    for axis in range(domain.dim):
        index = [slice(None)] * domain.dim
        for end in (0, -1):
            index[axis] = end
            values[tuple(index)] = 0.0
    return values


DATUM_PRESETS: Dict[str, Callable[[DomainSpec], np.ndarray]] = {
    "bump": _bump_datum,
    "sine": _sine_datum,
}


def datum_values(name: str, domain: DomainSpec) -> np.ndarray:
    """
    Base datum u0 on the box nodes
    Raises:
        InvalidCoefficients: for unknown names
    """
    if name not in DATUM_PRESETS:
        raise InvalidCoefficients(f"unknown datum {name!r}; known: {sorted(DATUM_PRESETS)}")
    return DATUM_PRESETS[name](domain)
