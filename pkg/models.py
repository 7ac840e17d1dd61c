#!/usr/bin/env python3
"""
Data models and structures for the homogenization lab
"""

# built-in dependencies
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

# 3rd party dependencies
import numpy as np

# project dependencies
from config import Config
from errors import (
    GridMismatch,
    InvalidCoefficients,
    InvalidDomain,
    InvalidGrid,
    NonFiniteField,
    NotElliptic,
    NotSymmetric,
)

RANKS = {"scalar": 0, "vector": 1, "matrix": 2, "tensor3": 3}


def _is_power_of_two(value: int) -> bool:
    return value > 0 and (value & (value - 1)) == 0


def _is_unit_fraction(value: float) -> bool:
    inverse = 1.0 / value
    return abs(inverse - round(inverse)) <= 1e-9 * inverse


def _min_sym_eigenvalue(matrix_values: np.ndarray) -> float:
    """Smallest eigenvalue of the symmetric part over all nodes of a (d, d, ...) array"""
    d = matrix_values.shape[0]
    nodes = np.moveaxis(matrix_values.reshape(d, d, -1), -1, 0)
    sym = 0.5 * (nodes + np.swapaxes(nodes, 1, 2))
    return float(np.linalg.eigvalsh(sym).min())


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic grid over the unit cell Y = [0,1)^d"""
    dim: int
    n: int

    def __post_init__(self):
        if not 1 <= self.dim <= 3:
            raise InvalidGrid(f"dimension must be 1, 2 or 3, got {self.dim}")
        if self.n < Config.MIN_CELL_N or not _is_power_of_two(self.n):
            raise InvalidGrid(f"n must be a power of two >= {Config.MIN_CELL_N}, got {self.n}")
        if self.n ** self.dim > Config.MAX_CELL_POINTS:
            raise InvalidGrid(
                f"n^d = {self.n ** self.dim} exceeds the memory budget {Config.MAX_CELL_POINTS}"
            )

    @property
    def spacing(self) -> float:
        return 1.0 / self.n

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n ** self.dim

    def coordinates(self) -> np.ndarray:
        """1D node coordinates i/n"""
        return np.arange(self.n) / self.n

    def mesh(self) -> Tuple[np.ndarray, ...]:
        """Node coordinates per axis, broadcast to the grid shape"""
        axis = self.coordinates()
        return tuple(np.meshgrid(*([axis] * self.dim), indexing="ij"))

    def to_dict(self) -> Dict[str, Any]:
        return {"dim": self.dim, "n": self.n}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TorusGrid":
        return cls(dim=int(data["dim"]), n=int(data["n"]))


@dataclass(frozen=True, eq=False)
class PeriodicField:
    """Scalar, vector, matrix or rank-3 field sampled on a TorusGrid (component-major values)"""
    grid: TorusGrid
    rank: str
    values: np.ndarray

    def __post_init__(self):
        if self.rank not in RANKS:
            raise ValueError(f"unknown rank {self.rank!r}")
        values = np.array(self.values, dtype=np.float64)
        expected = (self.grid.dim,) * RANKS[self.rank] + self.grid.shape
        if values.shape != expected:
            if values.size != int(np.prod(expected)):
                raise GridMismatch(
                    f"{self.rank} field needs {int(np.prod(expected))} values, got {values.size}"
                )
            values = values.reshape(expected)
        if not np.all(np.isfinite(values)):
            raise NonFiniteField(f"{self.rank} field contains NaN or infinite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def component_shape(self) -> Tuple[int, ...]:
        return (self.grid.dim,) * RANKS[self.rank]

    @classmethod
    def scalar(cls, grid: TorusGrid, values) -> "PeriodicField":
        return cls(grid, "scalar", values)

    @classmethod
    def vector(cls, grid: TorusGrid, values) -> "PeriodicField":
        return cls(grid, "vector", values)

    @classmethod
    def matrix(cls, grid: TorusGrid, values) -> "PeriodicField":
        return cls(grid, "matrix", values)

    @classmethod
    def constant(cls, grid: TorusGrid, rank: str, value) -> "PeriodicField":
        """Broadcast a constant component array over every node"""
        value = np.asarray(value, dtype=np.float64).reshape((grid.dim,) * RANKS[rank])
        values = value.reshape(value.shape + (1,) * grid.dim) * np.ones(grid.shape)
        return cls(grid, rank, values)

    @classmethod
    def from_function(cls, grid: TorusGrid, rank: str, func) -> "PeriodicField":
        """Sample func(*mesh) on the grid; func returns an array of the component-major shape"""
        return cls(grid, rank, np.broadcast_to(func(*grid.mesh()),
                                               (grid.dim,) * RANKS[rank] + grid.shape))

    def component(self, *index: int) -> "PeriodicField":
        return PeriodicField(self.grid, "scalar", self.values[index])

    def check_grid(self, other: "PeriodicField"):
        if self.grid != other.grid:
            raise GridMismatch(f"grids differ: {self.grid} vs {other.grid}")

    def to_dict(self) -> Dict[str, Any]:
        return {"grid": self.grid.to_dict(), "rank": self.rank, "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PeriodicField":
        return cls(TorusGrid.from_dict(data["grid"]), data["rank"], np.asarray(data["values"]))


@dataclass(frozen=True, eq=False)
class ProblemCoefficients:
    """Diffusion A, drift b and potential c of the oscillating problem"""
    A: PeriodicField
    b: PeriodicField
    c: PeriodicField
    mu: float

    def __post_init__(self):
        if (self.A.rank, self.b.rank, self.c.rank) != ("matrix", "vector", "scalar"):
            raise InvalidCoefficients("A must be a matrix, b a vector and c a scalar field")
        self.A.check_grid(self.b)
        self.A.check_grid(self.c)
        if self.mu <= 0:
            raise NotElliptic(f"ellipticity constant must be positive, got {self.mu}")
        smallest = _min_sym_eigenvalue(self.A.values)
        if smallest < self.mu - Config.FINITE_TOL:
            raise NotElliptic(f"symmetric part of A has eigenvalue {smallest:.6g} < mu={self.mu:.6g}")

    @property
    def grid(self) -> TorusGrid:
        return self.A.grid

    def shifted(self, c0: float) -> "ProblemCoefficients":
        """Same coefficients with the potential shifted by a constant"""
        return ProblemCoefficients(self.A, self.b,
                                   PeriodicField.scalar(self.grid, self.c.values + c0), self.mu)


@dataclass(frozen=True, eq=False)
class CellEigenSolution:
    """Bloch parameter, principal eigenvalue and normalized periodic parts of psi, psi*"""
    theta: np.ndarray
    lam: float
    psi: PeriodicField
    psi_star: PeriodicField
    lower_bound_a: float
    residuals: Dict[str, float] = field(default_factory=dict)
    newton_steps: int = 0

    @property
    def grid(self) -> TorusGrid:
        return self.psi.grid

    def to_dict(self) -> Dict[str, Any]:
        return {
            "theta": [float(v) for v in self.theta],
            "lambda": float(self.lam),
            "lower_bound_a": float(self.lower_bound_a),
            "newton_steps": int(self.newton_steps),
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "grid": self.grid.to_dict(),
        }


@dataclass(frozen=True, eq=False)
class FactorizedModel:
    """sigma, alpha, beta, skew potential B and M = alpha + B"""
    sigma: PeriodicField
    alpha: PeriodicField
    beta: PeriodicField
    B: PeriodicField
    M: PeriodicField
    ellipticity_b: float
    eig: CellEigenSolution
    residuals: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "eigen": self.eig.to_dict(),
            "ellipticity_b": float(self.ellipticity_b),
            "sigma_average": float(self.sigma.values.mean()),
            "sigma_min": float(self.sigma.values.min()),
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "M_average": self.M.values.reshape(
                self.M.values.shape[:2] + (-1,)).mean(axis=-1).tolist(),
        }


@dataclass(frozen=True, eq=False)
class NondivergenceCoefficients:
    """Nondivergence-form coefficients K, q, r"""
    K: PeriodicField
    q: PeriodicField
    r: PeriodicField
    ellipticity: float

    def __post_init__(self):
        self.K.check_grid(self.q)
        self.K.check_grid(self.r)
        skew = np.abs(self.K.values - np.swapaxes(self.K.values, 0, 1)).max()
        if skew > Config.SYMMETRY_TOL:
            raise NotSymmetric(f"K is not symmetric (max |K - K^T| = {skew:.3e})")
        smallest = _min_sym_eigenvalue(self.K.values)
        if smallest < self.ellipticity - Config.FINITE_TOL:
            raise NotElliptic(f"K has eigenvalue {smallest:.6g} < {self.ellipticity:.6g}")


@dataclass(frozen=True, eq=False)
class GeneralCoefficients:
    """Weight zeta (mean one) and diffusion Theta of the divergence-form problem"""
    zeta: PeriodicField
    Theta: PeriodicField
    kappa: float

    def __post_init__(self):
        self.zeta.check_grid(self.Theta)
        mean = float(self.zeta.values.mean())
        if abs(mean - 1.0) > Config.DEMEAN_TOL:
            raise InvalidCoefficients(f"zeta must average to 1, got {mean:.12f}")
        if self.zeta.values.min() <= 0:
            raise InvalidCoefficients("zeta must be positive")
        smallest = _min_sym_eigenvalue(self.Theta.values)
        if self.kappa <= 0 or smallest < self.kappa - Config.FINITE_TOL:
            raise NotElliptic(f"Theta has eigenvalue {smallest:.6g} < kappa={self.kappa:.6g}")

    @property
    def grid(self) -> TorusGrid:
        return self.zeta.grid


@dataclass(frozen=True, eq=False)
class EffectiveModel:
    """Correctors, homogenized tensor and flux corrector of one coefficient set"""
    correctors: Tuple[PeriodicField, ...]
    tensor_h: np.ndarray
    flux_corrector: PeriodicField
    weight: str = "zeta"
    diagnostics: Dict[str, float] = field(default_factory=dict)

    @property
    def grid(self) -> TorusGrid:
        return self.flux_corrector.grid

    def to_dict(self) -> Dict[str, Any]:
        return {
            "grid": self.grid.to_dict(),
            "tensor_h": np.asarray(self.tensor_h).tolist(),
            "weight": self.weight,
            "diagnostics": {k: float(v) for k, v in sorted(self.diagnostics.items())},
        }


@dataclass(frozen=True)
class DomainSpec:
    """Box (0,1)^d, final time and discretization of one epsilon level"""
    dim: int
    T: float
    h: float
    tau: float
    epsilon: float
    record_stride: int = 1

    def __post_init__(self):
        if not 1 <= self.dim <= 3:
            raise InvalidDomain(f"dimension must be 1, 2 or 3, got {self.dim}")
        if self.T <= 0:
            raise InvalidDomain(f"final time must be positive, got {self.T}")
        if not 0 < self.epsilon < 1 or not _is_unit_fraction(self.epsilon):
            raise InvalidDomain(f"1/epsilon must be an integer, got epsilon={self.epsilon}")
        if not 0 < self.h or not _is_unit_fraction(self.h):
            raise InvalidDomain(f"1/h must be an integer, got h={self.h}")
        if self.h > self.epsilon / Config.RESOLUTION_PER_EPSILON * (1 + 1e-12):
            raise InvalidDomain(f"h={self.h:g} does not resolve epsilon={self.epsilon:g}")
        if not 0 < self.tau <= self.h * (1 + 1e-12):
            raise InvalidDomain(f"tau={self.tau:g} must lie in (0, h]")
        if self.record_stride < 1:
            raise InvalidDomain("record_stride must be >= 1")

    @classmethod
    def for_epsilon(cls, dim: int, epsilon: float, T: float,
                    policy: str = "standard", tau_policy: Optional[str] = None) -> "DomainSpec":
        """Grid of one ladder level following a named grid policy"""
        settings = Config.get_grid_policy(policy)
        h = epsilon / settings["h_divisor"]
        tau_rule = tau_policy or settings["tau_policy"]
        tau = h * h if tau_rule == "h2" else h
        stride = max(1, math.floor(epsilon ** 2 / (settings["record_per_eps2"] * tau) + 1e-9))
        return cls(dim=dim, T=T, h=h, tau=tau, epsilon=epsilon, record_stride=stride)

    @property
    def N(self) -> int:
        return int(round(1.0 / self.h))

    @property
    def steps(self) -> int:
        """Number of time steps, a multiple of record_stride"""
        blocks = math.ceil(self.T / (self.tau * self.record_stride) - 1e-9)
        return max(1, blocks) * self.record_stride

    @property
    def dt(self) -> float:
        """Time step actually used (T/steps <= tau)"""
        return self.T / self.steps

    @property
    def record_times(self) -> np.ndarray:
        levels = self.steps // self.record_stride
        return np.arange(levels + 1) * (self.record_stride * self.dt)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.N + 1)

    @property
    def spatial_shape(self) -> Tuple[int, ...]:
        return (self.N + 1,) * self.dim

    def mesh(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.nodes] * self.dim), indexing="ij"))

    def distance_to_boundary(self) -> np.ndarray:
        """dist(x, boundary of the unit box) at every node"""
        dist = np.full(self.spatial_shape, np.inf)
        for x in self.mesh():
            dist = np.minimum(dist, np.minimum(x, 1.0 - x))
        return dist

    def to_dict(self) -> Dict[str, Any]:
        return {"dim": self.dim, "T": self.T, "h": self.h, "tau": self.tau,
                "epsilon": self.epsilon, "record_stride": self.record_stride,
                "steps": self.steps}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DomainSpec":
        return cls(dim=int(data["dim"]), T=float(data["T"]), h=float(data["h"]),
                   tau=float(data["tau"]), epsilon=float(data["epsilon"]),
                   record_stride=int(data.get("record_stride", 1)))


@dataclass(frozen=True, eq=False)
class InitialDatum:
    """Initial datum u0 on the box nodes plus its preparation mode

    psi_nodes holds psi(x/eps) (full eigenfunction) on the nodes when the mode needs it;
    limit_factor rescales the homogenized datum in ill-prepared mode.
    """
    mode: str
    base: np.ndarray
    psi_nodes: Optional[np.ndarray] = None
    limit_factor: float = 1.0

    def __post_init__(self):
        if self.mode not in Config.DATUM_MODES:
            raise InvalidDomain(f"unknown datum mode {self.mode!r}")
        base = np.array(self.base, dtype=np.float64)
        if not np.all(np.isfinite(base)):
            raise NonFiniteField("initial datum contains NaN or infinite entries")
        boundary = _boundary_values(base)
        if boundary.size and np.abs(boundary).max() > Config.FINITE_TOL:
            raise InvalidDomain("initial datum must vanish on the boundary")
        object.__setattr__(self, "base", base)

    def values_for(self, kind: str) -> np.ndarray:
        """Initial values seen by a problem of the given kind"""
        if kind == "full-oscillatory":
            if self.mode == "well-prepared" and self.psi_nodes is not None:
                return self.base * self.psi_nodes
            return self.base
        if kind == "oscillatory-divform":
            if self.mode == "ill-prepared" and self.psi_nodes is not None:
                return self.base / self.psi_nodes
            return self.base
        return self.base * self.limit_factor


def _boundary_values(values: np.ndarray) -> np.ndarray:
    parts = []
    for axis in range(values.ndim):
        parts.append(np.take(values, [0, -1], axis=axis).ravel())
    return np.concatenate(parts) if parts else np.empty(0)


@dataclass(frozen=True, eq=False)
class ParabolicProblem:
    """One Dirichlet parabolic problem on the box"""
    domain: DomainSpec
    kind: str
    initial: InitialDatum
    zeta: Optional[PeriodicField] = None
    Theta: Optional[PeriodicField] = None
    tensor: Optional[np.ndarray] = None
    coefficients: Optional[ProblemCoefficients] = None
    scheme: str = Config.DEFAULT_SCHEME
    linear_solver: str = Config.DEFAULT_LINEAR_SOLVER

    def __post_init__(self):
        if self.kind == "oscillatory-divform":
            ok = self.zeta is not None and self.Theta is not None
        elif self.kind == "homogenized":
            ok = self.tensor is not None
        elif self.kind == "full-oscillatory":
            ok = self.coefficients is not None
        else:
            raise InvalidDomain(f"unknown problem kind {self.kind!r}")
        if not ok:
            raise InvalidCoefficients(f"coefficients do not match problem kind {self.kind!r}")
        if self.scheme not in ("implicit-euler", "crank-nicolson"):
            raise InvalidDomain(f"unknown time scheme {self.scheme!r}")
        if self.linear_solver not in ("direct", "krylov"):
            raise InvalidDomain(f"unknown linear solver {self.linear_solver!r}")
        if self.initial.base.shape != self.domain.spatial_shape:
            raise GridMismatch(
                f"datum shape {self.initial.base.shape} != grid {self.domain.spatial_shape}"
            )


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Recorded time levels of a grid function on the box"""
    domain: DomainSpec
    times: np.ndarray
    values: np.ndarray
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (len(self.times),) + self.domain.spatial_shape:
            raise GridMismatch(
                f"snapshots of shape {values.shape} do not match {len(self.times)} levels "
                f"on {self.domain.spatial_shape}"
            )
        if not np.all(np.isfinite(values)):
            raise NonFiniteField("space-time field contains NaN or infinite entries")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "times", np.asarray(self.times, dtype=np.float64))

    def check_grid(self, other: "SpaceTimeField"):
        if self.values.shape != other.values.shape or not np.allclose(self.times, other.times):
            raise GridMismatch("space-time fields live on different grids")

    def with_values(self, values: np.ndarray, **diagnostics) -> "SpaceTimeField":
        return SpaceTimeField(self.domain, self.times, values, dict(diagnostics))

    def __sub__(self, other: "SpaceTimeField") -> "SpaceTimeField":
        self.check_grid(other)
        return self.with_values(self.values - other.values)


@dataclass(frozen=True, eq=False)
class CutoffPair:
    """Space cut-off on the nodes and time cut-off on the recorded levels"""
    eta1: np.ndarray
    eta2: np.ndarray
    epsilon: float
    layer_scale: float = 1.0


@dataclass
class SweepConfig:
    """One epsilon-sweep experiment"""
    pipeline: str = Config.DEFAULT_PIPELINE
    preset: Optional[str] = Config.DEFAULT_PRESET
    import_spec: Optional[Dict[str, Any]] = None
    epsilons: List[float] = field(default_factory=lambda: list(Config.DEFAULT_EPSILONS))
    n_cell: int = Config.DEFAULT_CELL_N
    h_policy: str = "standard"
    tau_policy: Optional[str] = None
    datum_mode: str = "well-prepared"
    datum_expr: str = "bump"
    T: float = Config.DEFAULT_T
    seed: int = Config.DEFAULT_SEED
    workers: int = Config.DEFAULT_WORKERS
    out_dir: str = str(Config.RUNS_DIR)
    cutoff_scale: float = Config.DEFAULT_CUTOFF_SCALE
    include_timings: bool = False
    plot: bool = True

    def validate(self):
        """Check the ladder and the grid policy at every level"""
        if self.pipeline not in Config.PIPELINES:
            raise InvalidCoefficients(f"unknown pipeline {self.pipeline!r}")
        if self.datum_mode not in Config.DATUM_MODES:
            raise InvalidDomain(f"unknown datum mode {self.datum_mode!r}")
        if self.preset is None and self.import_spec is None:
            raise InvalidCoefficients("either a preset or an import must be given")
        if len(self.epsilons) < 3:
            raise InvalidDomain("the epsilon ladder needs at least 3 levels")
        for eps in self.epsilons:
            k = math.log2(1.0 / eps)
            if abs(k - round(k)) > 1e-9:
                raise InvalidDomain(f"ladder entries must be 1/2^k, got {eps}")
        if any(a <= b for a, b in zip(self.epsilons, self.epsilons[1:])):
            raise InvalidDomain("the epsilon ladder must be strictly descending")
        for eps in self.epsilons:
            DomainSpec.for_epsilon(1, eps, self.T, self.h_policy, self.tau_policy)
        return self

    def to_dict(self) -> Dict[str, Any]:
        """Serialize in the nested config-file schema"""
        data = {
            "pipeline": self.pipeline,
            "epsilons": [float(e) for e in self.epsilons],
            "grid": {"n_cell": self.n_cell, "h_policy": self.h_policy,
                     "tau_policy": self.tau_policy},
            "datum": {"mode": self.datum_mode, "expr": self.datum_expr},
            "T": self.T,
            "seed": self.seed,
            "workers": self.workers,
            "cutoff_scale": self.cutoff_scale,
            "include_timings": self.include_timings,
            "plot": self.plot,
        }
        if self.import_spec is not None:
            data["import"] = self.import_spec
        else:
            data["preset"] = self.preset
        return data

    def provenance(self) -> Dict[str, Any]:
        """Fields that determine the report content (workers and paths excluded)"""
        data = self.to_dict()
        data.pop("workers")
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SweepConfig":
        """Create SweepConfig from the nested config-file schema"""
        grid = data.get("grid", {})
        datum = data.get("datum", {})
        cfg = cls()
        cfg.pipeline = data.get("pipeline", cfg.pipeline)
        if "import" in data:
            cfg.import_spec = data["import"]
            cfg.preset = None
        cfg.preset = data.get("preset", cfg.preset)
        cfg.epsilons = [float(e) for e in data.get("epsilons", cfg.epsilons)]
        cfg.n_cell = int(grid.get("n_cell", cfg.n_cell))
        cfg.h_policy = grid.get("h_policy", cfg.h_policy)
        cfg.tau_policy = grid.get("tau_policy", cfg.tau_policy)
        cfg.datum_mode = datum.get("mode", cfg.datum_mode)
        cfg.datum_expr = datum.get("expr", cfg.datum_expr)
        cfg.T = float(data.get("T", cfg.T))
        cfg.seed = int(data.get("seed", cfg.seed))
        cfg.workers = int(data.get("workers", cfg.workers))
        cfg.out_dir = data.get("out", cfg.out_dir)
        cfg.cutoff_scale = float(data.get("cutoff_scale", cfg.cutoff_scale))
        cfg.include_timings = bool(data.get("include_timings", cfg.include_timings))
        cfg.plot = bool(data.get("plot", cfg.plot))
        return cfg


@dataclass
class EpsilonRecord:
    """Measurements of one ladder level"""
    epsilon: float
    h: float
    tau: float
    l2_error: float
    w_eps_h1: Optional[float] = None
    wall_ms: Optional[float] = None
    residuals: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epsilon": self.epsilon,
            "h": self.h,
            "tau": self.tau,
            "l2_error": self.l2_error,
            "w_eps_h1": self.w_eps_h1,
            "w_eps_ratio": (None if self.w_eps_h1 is None
                            else self.w_eps_h1 / self.epsilon ** Config.PROVEN_EXPONENT),
            "wall_ms": self.wall_ms,
            "residuals": {k: float(v) for k, v in sorted(self.residuals.items())},
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EpsilonRecord":
        return cls(epsilon=data["epsilon"], h=data["h"], tau=data["tau"],
                   l2_error=data["l2_error"], w_eps_h1=data.get("w_eps_h1"),
                   wall_ms=data.get("wall_ms"), residuals=dict(data.get("residuals", {})))


@dataclass
class SweepReport:
    """Per-level records, the fitted rate and provenance of one sweep"""
    config: Dict[str, Any]
    config_hash: str
    records: List[EpsilonRecord]
    tensor_h: List[List[float]]
    slope: Optional[float] = None
    half_width: Optional[float] = None
    slope_note: Optional[str] = None
    monotone: bool = True
    limit_factor: Optional[float] = None
    runtime: Dict[str, str] = field(default_factory=dict)

    def errors(self) -> List[Tuple[float, float]]:
        return [(r.epsilon, r.l2_error) for r in self.records]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config,
            "config_hash": self.config_hash,
            "records": [r.to_dict() for r in self.records],
            "tensor_h": self.tensor_h,
            "rate": {
                "slope": self.slope,
                "half_width": self.half_width,
                "note": self.slope_note,
                "proven_exponent": Config.PROVEN_EXPONENT,
                "anticipated_exponent": Config.ANTICIPATED_EXPONENT,
                "slope_minus_anticipated": (None if self.slope is None
                                            else self.slope - Config.ANTICIPATED_EXPONENT),
            },
            "monotone": self.monotone,
            "limit_factor": self.limit_factor,
            "runtime": self.runtime,
            "constants_note": "all empirical constants are generated by this lab",
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SweepReport":
        rate = data.get("rate", {})
        return cls(
            config=data["config"],
            config_hash=data["config_hash"],
            records=[EpsilonRecord.from_dict(r) for r in data["records"]],
            tensor_h=data["tensor_h"],
            slope=rate.get("slope"),
            half_width=rate.get("half_width"),
            slope_note=rate.get("note"),
            monotone=data.get("monotone", True),
            limit_factor=data.get("limit_factor"),
            runtime=data.get("runtime", {}),
        )


@dataclass(frozen=True, eq=False)
class CellModels:
    """Everything a sweep needs from the cell: (zeta, Theta), the effective model and the eigenpair"""
    general: GeneralCoefficients
    effective: EffectiveModel
    eig: Optional[CellEigenSolution] = None
    factorized_residuals: Dict[str, float] = field(default_factory=dict)

    @property
    def grid(self) -> TorusGrid:
        return self.general.grid
