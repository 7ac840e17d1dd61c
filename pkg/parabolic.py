#!/usr/bin/env python3
"""
Dirichlet parabolic solvers on the unit box

Finite-volume stiffness with face-midpoint coefficient sampling, implicit Euler
(or Crank-Nicolson) in time, one sparse factorization per solve. Also the
factorization u = exp(-lambda t / eps^2) psi(x/eps) v, space-time norms and the
boundary-layer masks.
"""

# built-in dependencies
import time
from functools import reduce
from typing import List, Optional

# 3rd party dependencies
import numpy as np
import scipy.sparse as sp
from scipy.integrate import trapezoid
from scipy.sparse.linalg import LinearOperator, gmres, spilu, splu

# project dependencies
from config import Config
from errors import (
    GridMismatch,
    InvalidCoefficients,
    InvalidDomain,
    NonFiniteState,
    SolverFailure,
    StiffnessCap,
)
from models import (
    CellEigenSolution,
    DomainSpec,
    InitialDatum,
    ParabolicProblem,
    PeriodicField,
    SpaceTimeField,
)
from torus_field import sample_on_tensor_grid
from LabKit.logger import Logger

logger = Logger()

NORM_KINDS = ("L2", "H1", "L2-subset")


def _kron_all(matrices: List[sp.spmatrix]) -> sp.csr_matrix:
    return reduce(lambda left, right: sp.kron(left, right, format="csr"), matrices).tocsr()


def _forward_difference(N: int, h: float) -> sp.csr_matrix:
    """(N, N+1): (f_{i+1} - f_i) / h at the faces"""
    return sp.diags([-np.ones(N), np.ones(N)], [0, 1], shape=(N, N + 1), format="csr") / h


def _face_average(N: int) -> sp.csr_matrix:
    return sp.diags([np.full(N, 0.5), np.full(N, 0.5)], [0, 1], shape=(N, N + 1), format="csr")


def _centered_difference(N: int, h: float) -> sp.csr_matrix:
    """(N+1, N+1): (f_{i+1} - f_{i-1}) / 2h at interior nodes, zero rows on the boundary"""
    C = sp.diags([-np.ones(N), np.ones(N)], [-1, 1], shape=(N + 1, N + 1), format="csr")
    mask = np.ones(N + 1)
    mask[[0, N]] = 0.0
    return (sp.diags(mask) @ C / (2 * h)).tocsr()


def boundary_layer_mask(domain: DomainSpec, s: float) -> np.ndarray:
    """Nodes of the layer {x : dist(x, boundary) < s}"""
    return domain.distance_to_boundary() < s


def spacetime_layer_mask(domain: DomainSpec, delta: float) -> np.ndarray:
    """Recorded space-time nodes in the boundary layer of width delta or within delta of t=0, t=T"""
    times = domain.record_times
    in_time = (times < delta) | (times > domain.T - delta)
    layer = boundary_layer_mask(domain, delta)
    return in_time.reshape((-1,) + (1,) * domain.dim) | layer[np.newaxis]


def eigenfunction_on_nodes(eig: CellEigenSolution, domain: DomainSpec, adjoint: bool = False) -> np.ndarray:
    """psi(x/eps) = exp(2 pi theta.x/eps) p(x/eps) on the box nodes (psi* with adjoint=True)"""
    if eig.grid.dim != domain.dim:
        raise GridMismatch(f"cell dimension {eig.grid.dim} != box dimension {domain.dim}")
    periodic = eig.psi_star if adjoint else eig.psi
    scaled = domain.nodes / domain.epsilon
    values = sample_on_tensor_grid(periodic, [scaled] * domain.dim)
    gamma = 2 * np.pi * np.asarray(eig.theta) * (-1.0 if adjoint else 1.0)
    if np.any(gamma != 0):
        exponent = sum(g * x for g, x in zip(gamma, domain.mesh())) / domain.epsilon
        values = values * np.exp(exponent)
    return values


def prepare_datum(domain: DomainSpec, base: np.ndarray, mode: str,
                  eig: Optional[CellEigenSolution] = None) -> InitialDatum:
    """
    Initial datum with the eigenfunction samples its mode needs
    Args:
        domain (DomainSpec): box grid
        base (np.ndarray): u0 on the nodes, zero on the boundary
        mode (str): well-prepared, ill-prepared or plain
        eig (CellEigenSolution): required for ill-prepared data and for full-oscillatory solves
    Returns:
        InitialDatum
    Raises:
        InvalidCoefficients: ill-prepared data need an eigenpair with theta = 0
    """
    if eig is None:
        if mode == "ill-prepared":
            raise InvalidCoefficients("ill-prepared data need the cell eigenpair")
        return InitialDatum(mode=mode, base=base)
    limit_factor = 1.0
    if mode == "ill-prepared":
        if np.abs(eig.theta).max() > Config.NEWTON_TOL:
            raise InvalidCoefficients(
                "ill-prepared data need theta = 0 (1/psi(x/eps) has no periodic weak limit otherwise)"
            )
        limit_factor = float(np.mean(1.0 / eig.psi.values))
    return InitialDatum(mode=mode, base=base, psi_nodes=eigenfunction_on_nodes(eig, domain),
                        limit_factor=limit_factor)


class ParabolicSolver:
    """Assembles and time-steps one ParabolicProblem"""

    def __init__(self, problem: ParabolicProblem):
        self.problem = problem
        self.domain = problem.domain
        self.N = self.domain.N
        self.h = self.domain.h
        self.dim = self.domain.dim
        self.interior_shape = (self.N - 1,) * self.dim
        select = sp.eye(self.N + 1, format="csr")[1:self.N]
        self._restrict = _kron_all([select] * self.dim)
        self.mass, self.stiffness = self._assemble()

    # coefficient sampling

    def _face_coords(self, axis: int, a: int) -> np.ndarray:
        nodes = self.domain.nodes
        coords = nodes[:-1] + 0.5 * self.h if axis == a else nodes
        return coords / self.domain.epsilon

    def _face_shape(self, a: int) -> tuple:
        return tuple(self.N if axis == a else self.N + 1 for axis in range(self.dim))

    def _face_coefficient(self, matrix: PeriodicField, a: int, b: int) -> np.ndarray:
        component = matrix.component(a, b)
        return sample_on_tensor_grid(component, [self._face_coords(axis, a) for axis in range(self.dim)])

    def _node_samples(self, field: PeriodicField) -> np.ndarray:
        scaled = self.domain.nodes / self.domain.epsilon
        return sample_on_tensor_grid(field, [scaled] * self.dim)

    def _face_coefficients(self) -> List[List[np.ndarray]]:
        p = self.problem
        faces = []
        for a in range(self.dim):
            row = []
            for b in range(self.dim):
                if p.kind == "homogenized":
                    row.append(np.full(self._face_shape(a), float(p.tensor[a][b])))
                elif p.kind == "oscillatory-divform":
                    row.append(self._face_coefficient(p.Theta, a, b))
                else:
                    row.append(self._face_coefficient(p.coefficients.A, a, b))
            faces.append(row)
        return faces

    # assembly

    def _diffusion(self, faces: List[List[np.ndarray]]) -> sp.csr_matrix:
        """-div(Theta grad .) on all nodes, two-point fluxes plus centered cross terms"""
        N, h, d = self.N, self.h, self.dim
        identity = sp.eye(N + 1, format="csr")
        delta = _forward_difference(N, h)
        average = _face_average(N)
        centered = _centered_difference(N, h)
        size = (N + 1) ** d
        K = sp.csr_matrix((size, size))
        for a in range(d):
            divergence_t = _kron_all([delta.T if axis == a else identity for axis in range(d)])
            for b in range(d):
                coefficient = faces[a][b]
                if not np.any(coefficient):
                    continue
                if b == a:
                    grad = _kron_all([delta if axis == a else identity for axis in range(d)])
                else:
                    grad = _kron_all([average if axis == a else (centered if axis == b else identity)
                                      for axis in range(d)])
                K = K + divergence_t @ sp.diags(coefficient.ravel()) @ grad
        return K.tocsr()

    def _assemble(self):
        p = self.problem
        eps = self.domain.epsilon
        K = self._diffusion(self._face_coefficients())
        if p.kind == "full-oscillatory":
            centered = _centered_difference(self.N, self.h)
            identity = sp.eye(self.N + 1, format="csr")
            coeffs = p.coefficients
            for a in range(self.dim):
                drift = self._node_samples(coeffs.b.component(a))
                if np.any(drift):
                    grad = _kron_all([centered if axis == a else identity for axis in range(self.dim)])
                    K = K + sp.diags(drift.ravel() / eps) @ grad
            reaction = self._node_samples(coeffs.c)
            if np.any(reaction):
                K = K + sp.diags(reaction.ravel() / eps ** 2)
            mass = np.ones(self.interior_shape)
        elif p.kind == "oscillatory-divform":
            mass = self._interior(self._node_samples(p.zeta))
        else:
            mass = np.ones(self.interior_shape)
        stiffness = (self._restrict @ K @ self._restrict.T).tocsc()
        return mass.ravel(), stiffness

    def _interior(self, values: np.ndarray) -> np.ndarray:
        return values[(slice(1, -1),) * self.dim]

    def _embed(self, interior: np.ndarray) -> np.ndarray:
        full = np.zeros(self.domain.spatial_shape)
        full[(slice(1, -1),) * self.dim] = interior.reshape(self.interior_shape)
        return full

    # time stepping

    def _system(self, dt: float):
        Z = sp.diags(self.mass, format="csc")
        if self.problem.scheme == "crank-nicolson":
            return (Z + 0.5 * dt * self.stiffness).tocsc(), (Z - 0.5 * dt * self.stiffness).tocsc()
        return (Z + dt * self.stiffness).tocsc(), Z

    def _is_m_matrix(self, lhs: sp.csc_matrix) -> bool:
        off_diagonal = (lhs - sp.diags(lhs.diagonal())).tocsr()
        off_diagonal.eliminate_zeros()
        if off_diagonal.nnz and off_diagonal.data.max() > 0:
            return False
        row_sums = np.asarray(lhs.sum(axis=1)).ravel()
        return bool(np.all(row_sums >= 0) and np.all(lhs.diagonal() > 0))

    def _linear_solver(self, lhs: sp.csc_matrix):
        if self.problem.linear_solver == "direct":
            try:
                factor = splu(lhs)
            except RuntimeError as err:
                raise SolverFailure(f"sparse factorization failed: {err}") from err
            return factor.solve
        try:
            ilu = spilu(lhs)
        except RuntimeError as err:
            raise SolverFailure(f"incomplete factorization failed: {err}") from err
        precond = LinearOperator(lhs.shape, matvec=ilu.solve, dtype=np.float64)

        def solve(rhs: np.ndarray, guess: Optional[np.ndarray] = None) -> np.ndarray:
            solution, info = gmres(lhs, rhs, x0=guess, rtol=Config.PARABOLIC_KRYLOV_TOL,
                                   atol=0.0, M=precond, maxiter=Config.KRYLOV_MAX_ITERATIONS)
            if info != 0:
                raise SolverFailure(f"GMRES failed on the parabolic step (info={info})")
            return solution

        return solve

    def run(self) -> SpaceTimeField:
        """
        Time-step the problem and record snapshots every record_stride steps
        Returns:
            SpaceTimeField with energy and maximum-principle diagnostics
        Raises:
            SolverFailure: if the factorization or an iterative solve fails
            NonFiniteState: if a step produces NaN or infinite values
        """
        domain = self.domain
        p = self.problem
        dt = domain.dt
        lhs, rhs_matrix = self._system(dt)
        solve = self._linear_solver(lhs)
        started = time.perf_counter()

        datum = p.initial.values_for(p.kind)
        state = self._interior(datum).ravel().copy()
        energies = [float(np.sum(self.mass * state ** 2) * self.h ** self.dim)]
        snapshots = [self._embed(state)]
        for step in range(1, domain.steps + 1):
            rhs = rhs_matrix @ state
            if p.linear_solver == "direct":
                state = solve(rhs)
            else:
                state = solve(rhs, state)
            energies.append(float(np.sum(self.mass * state ** 2) * self.h ** self.dim))
            if step % domain.record_stride == 0:
                if not np.all(np.isfinite(state)):
                    raise NonFiniteState(f"non-finite values at t={step * dt:.6g} ({p.kind})")
                snapshots.append(self._embed(state))

        diagnostics = {
            "kind": p.kind,
            "scheme": p.scheme,
            "linear_solver": p.linear_solver,
            "steps": domain.steps,
            "dt": dt,
            "energy": energies,
            "energy_nonincreasing": bool(np.all(np.diff(energies) <= 0)),
            "wall_ms": 1e3 * (time.perf_counter() - started),
        }
        diagnostics.update(self._maximum_principle(lhs, datum, snapshots))
        logger.debug(f"{p.kind} solve: {domain.steps} steps of {dt:.3e} on N={self.N}")
        return SpaceTimeField(domain, domain.record_times, np.stack(snapshots), diagnostics)

    def _maximum_principle(self, lhs: sp.csc_matrix, datum: np.ndarray, snapshots) -> dict:
        if self.problem.scheme == "crank-nicolson":
            reason = "Crank-Nicolson steps are not monotone"
        elif not self._is_m_matrix(lhs):
            reason = "step matrix is not an M-matrix (cross-term or drift stencil)"
        else:
            reason = None
        if reason is not None:
            logger.debug(f"maximum principle check skipped: {reason}")
            return {"m_matrix": False, "max_principle": f"skipped: {reason}"}
        result = {"m_matrix": True, "max_principle": "asserted"}
        if datum.min() >= 0:
            result["min_value"] = float(min(s.min() for s in snapshots))
        return result


def solve_divform(p: ParabolicProblem) -> SpaceTimeField:
    """
    zeta(x/eps) d_t f = div(Theta(x/eps) grad f), or the homogenized problem with a constant tensor
    Raises:
        InvalidCoefficients: if p.kind is not oscillatory-divform or homogenized
    """
    if p.kind not in ("oscillatory-divform", "homogenized"):
        raise InvalidCoefficients(f"solve_divform cannot handle kind {p.kind!r}")
    return ParabolicSolver(p).run()


def solve_full_oscillatory(p: ParabolicProblem) -> SpaceTimeField:
    """
    d_t u - div(A grad u) + b.grad u / eps + c u / eps^2 = 0, validation solver for moderate eps
    Raises:
        StiffnessCap: if eps < Config.FULL_OSCILLATORY_MIN_EPSILON
        InvalidDomain: if h > eps / Config.FULL_RESOLUTION_PER_EPSILON
    """
    if p.kind != "full-oscillatory":
        raise InvalidCoefficients(f"solve_full_oscillatory cannot handle kind {p.kind!r}")
    eps = p.domain.epsilon
    if eps < Config.FULL_OSCILLATORY_MIN_EPSILON:
        raise StiffnessCap(f"epsilon={eps:g} below {Config.FULL_OSCILLATORY_MIN_EPSILON:g}")
    if p.domain.h > eps / Config.FULL_RESOLUTION_PER_EPSILON * (1 + 1e-12):
        raise InvalidDomain(f"h={p.domain.h:g} exceeds eps/{Config.FULL_RESOLUTION_PER_EPSILON}")
    return ParabolicSolver(p).run()


def reconstruct_u(v: SpaceTimeField, eig: CellEigenSolution, domain: DomainSpec) -> SpaceTimeField:
    """u = exp(-lambda t / eps^2) psi(x/eps) v"""
    if v.domain != domain:
        raise GridMismatch("v does not live on the given domain")
    psi = eigenfunction_on_nodes(eig, domain)
    decay = np.exp(-eig.lam * v.times / domain.epsilon ** 2)
    values = decay.reshape((-1,) + (1,) * domain.dim) * psi[np.newaxis] * v.values
    return v.with_values(values)


def integrate_spacetime(density: np.ndarray, times: np.ndarray, h: float, dim: int) -> float:
    integral = density
    for _ in range(dim):
        integral = trapezoid(integral, dx=h, axis=-1)
    return float(trapezoid(integral, x=times)) if len(times) > 1 else float(integral[0])


def spacetime_norm(f: SpaceTimeField, kind: str = "L2", delta: Optional[float] = None,
                   reference: Optional[SpaceTimeField] = None) -> float:
    """
    Composite-trapezoid space-time norm
    Args:
        f (SpaceTimeField): field
        kind (str): L2, H1 (centered-difference gradients) or L2-subset (needs delta)
        delta (float): width of the space-time layer for L2-subset
        reference (SpaceTimeField): when given, the norm of f - reference
    Returns:
        norm (float)
    Raises:
        GridMismatch: if reference lives on another grid
    """
    if kind not in NORM_KINDS:
        raise ValueError(f"norm kind must be one of {NORM_KINDS}, got {kind!r}")
    values = f.values
    if reference is not None:
        f.check_grid(reference)
        values = values - reference.values
    domain = f.domain
    density = values ** 2
    if kind == "H1":
        for axis in range(domain.dim):
            density = density + np.gradient(values, domain.h, axis=axis + 1) ** 2
    elif kind == "L2-subset":
        if delta is None:
            raise ValueError("L2-subset norm needs delta")
        density = density * spacetime_layer_mask(domain, delta)
    return float(np.sqrt(integrate_spacetime(density, f.times, domain.h, domain.dim)))
