#!/usr/bin/env python3
"""
Proof-side computable objects: the parabolic smoothing operator, space and time
cut-offs, the corrected difference w_eps and the measured smoothing-operator constants
"""

# built-in dependencies
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

# 3rd party dependencies
import numpy as np
import pandas as pd
from scipy.integrate import quad, trapezoid
from scipy.signal import fftconvolve

# project dependencies
from config import Config
from errors import EpsilonTooLarge, GridMismatch, KernelUnderresolved
from models import CutoffPair, DomainSpec, EffectiveModel, PeriodicField, SpaceTimeField, TorusGrid
from parabolic import integrate_spacetime, spacetime_norm
from torus_field import gradient, sample_on_tensor_grid, solve_cell_poisson
from LabKit.logger import Logger

logger = Logger()

SUITES = ["L1-i", "L1-ii-grad", "L1-ii-hess", "L2", "L3-i", "L3-ii", "remark-poisson"]


def _bump(r: np.ndarray) -> np.ndarray:
    """exp(-1/(1-r^2)) on |r| < 1, zero outside"""
    r = np.asarray(r, dtype=np.float64)
    inside = np.abs(r) < 1.0
    out = np.zeros_like(r)
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


def _sphere_area(dim: int) -> float:
    return {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}[dim]


@dataclass(frozen=True)
class SmoothingKernel:
    """Separable even mollifier on {|s| <= 1/2} x {|y|^2 <= 1/2}, inside {|s| + |y|^2 <= 1}"""
    dim: int
    time_radius: float = Config.KERNEL_TIME_RADIUS
    space_radius_sq: float = Config.KERNEL_SPACE_RADIUS_SQ
    mass: float = field(init=False)

    def __post_init__(self):
        radius = math.sqrt(self.space_radius_sq)
        time_mass, _ = quad(lambda s: float(_bump(s / self.time_radius)), -self.time_radius,
                            self.time_radius, epsabs=1e-14, epsrel=1e-13)
        radial_mass, _ = quad(lambda r: float(_bump(r / radius)) * r ** (self.dim - 1), 0.0, radius,
                              epsabs=1e-14, epsrel=1e-13)
        object.__setattr__(self, "mass", time_mass * _sphere_area(self.dim) * radial_mass)

    def profile(self, s: np.ndarray, y_sq: np.ndarray) -> np.ndarray:
        """Kernel value at scaled time s and squared scaled distance |y|^2 (unit mass)"""
        radius = math.sqrt(self.space_radius_sq)
        return _bump(s / self.time_radius) * _bump(np.sqrt(y_sq) / radius) / self.mass

    def weights(self, eps: float, h: float, tau: float) -> np.ndarray:
        """
        Discrete convolution weights on a grid with spacing (tau, h, ..., h), summing to one
        Raises:
            KernelUnderresolved: if eps^2/tau < 4 or eps/h < 4
        """
        if eps ** 2 / tau < Config.KERNEL_MIN_CELLS * (1 - 1e-12) or \
                eps / h < Config.KERNEL_MIN_CELLS * (1 - 1e-12):
            raise KernelUnderresolved(
                f"eps={eps:g}: eps^2/tau={eps ** 2 / tau:.3g}, eps/h={eps / h:.3g} (need >= "
                f"{Config.KERNEL_MIN_CELLS})"
            )
        n_time = int(math.floor(self.time_radius * eps ** 2 / tau + 1e-9))
        n_space = int(math.floor(math.sqrt(self.space_radius_sq) * eps / h + 1e-9))
        s = np.arange(-n_time, n_time + 1) * tau / eps ** 2
        offsets = np.arange(-n_space, n_space + 1) * h / eps
        y_sq = sum(g ** 2 for g in np.meshgrid(*([offsets] * self.dim), indexing="ij"))
        weights = self.profile(s.reshape((-1,) + (1,) * self.dim), y_sq[np.newaxis])
        weights = weights * tau * h ** self.dim / eps ** (self.dim + 2)
        return weights / weights.sum()


def _convolve(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Zero-extended convolution; exact zeros where the kernel sees only zeros"""
    result = fftconvolve(values, weights, mode="same")
    reach = fftconvolve((values != 0).astype(np.float64), (weights > 0).astype(np.float64),
                        mode="same")
    result[reach < 0.5] = 0.0
    return result


def _record_step(times: np.ndarray) -> float:
    steps = np.diff(times)
    if len(steps) == 0 or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise GridMismatch("smoothing needs uniformly spaced time levels")
    return float(steps[0])


def smooth(g: SpaceTimeField, eps: float, kernel: SmoothingKernel) -> SpaceTimeField:
    """
    S_eps g = eps^-(d+2) int g(t-s, x-y) kernel(s/eps^2, y/eps), g extended by zero outside the box
    Args:
        g (SpaceTimeField): field on uniformly spaced time levels
        eps (float): scale
        kernel (SmoothingKernel): mollifier
    Returns:
        SpaceTimeField on the same grid
    Raises:
        KernelUnderresolved: if the kernel spans fewer than 4 cells per axis
    """
    weights = kernel.weights(eps, g.domain.h, _record_step(g.times))
    return g.with_values(_convolve(g.values, weights))


def build_cutoffs(domain: DomainSpec, layer_scale: float = 1.0) -> CutoffPair:
    """
    eta1: linear ramp of dist(x, boundary), 0 on the layer of width 3 s sqrt(eps), 1 beyond 4 s sqrt(eps)
    eta2: cubic smoothstep, 0 on (0, 4 s eps] and [T - 4 s eps, T), 1 on [8 s eps, T - 8 s eps]
    Args:
        domain (DomainSpec): box grid with recorded times
        layer_scale (float): s, multiplies every layer width
    Returns:
        CutoffPair
    Raises:
        EpsilonTooLarge: if the layers do not fit inside the box or the time interval
    """
    eps, s = domain.epsilon, layer_scale
    root = s * math.sqrt(eps)
    if 4 * root >= 0.5:
        raise EpsilonTooLarge(f"4 s sqrt(eps) = {4 * root:.4g} does not fit in the unit box")
    if 8 * s * eps >= domain.T / 2:
        raise EpsilonTooLarge(f"8 s eps = {8 * s * eps:.4g} does not fit in T/2 = {domain.T / 2:g}")
    eta1 = np.clip((domain.distance_to_boundary() - 3 * root) / root, 0.0, 1.0)
    times = domain.record_times
    width = 4 * s * eps

    def smoothstep(r):
        r = np.clip(r, 0.0, 1.0)
        return r * r * (3.0 - 2.0 * r)

    eta2 = np.minimum(smoothstep((times - width) / width),
                      smoothstep((domain.T - width - times) / width))
    return CutoffPair(eta1=eta1, eta2=eta2, epsilon=eps, layer_scale=s)


def _nodes_of(field_: PeriodicField, domain: DomainSpec) -> np.ndarray:
    return sample_on_tensor_grid(field_, [domain.nodes / domain.epsilon] * domain.dim)


def build_w_eps(f_eps: SpaceTimeField, f0: SpaceTimeField, em: EffectiveModel,
                domain: DomainSpec, kernel: SmoothingKernel,
                cutoffs: Optional[CutoffPair] = None) -> SpaceTimeField:
    """
    w = f_eps - f0 - eps sum_j omega_j(x/eps) S_eps(eta1 eta2 d_j f0)
    Args:
        f_eps, f0 (SpaceTimeField): oscillatory and homogenized solutions on one grid
        em (EffectiveModel): correctors
        domain (DomainSpec): shared grid
        kernel (SmoothingKernel): mollifier
        cutoffs (CutoffPair): defaults to build_cutoffs(domain)
    Returns:
        SpaceTimeField with diagnostics h1_norm (L2(0,T;H1)) and l2_norm
    """
    f_eps.check_grid(f0)
    if f_eps.domain != domain:
        raise GridMismatch("fields do not live on the given domain")
    cutoffs = cutoffs or build_cutoffs(domain)
    eps = domain.epsilon
    weights = kernel.weights(eps, domain.h, _record_step(f0.times))
    window = cutoffs.eta2.reshape((-1,) + (1,) * domain.dim) * cutoffs.eta1[np.newaxis]
    correction = np.zeros_like(f0.values)
    for j, omega in enumerate(em.correctors):
        grad_j = np.gradient(f0.values, domain.h, axis=j + 1)
        correction += _nodes_of(omega, domain)[np.newaxis] * _convolve(window * grad_j, weights)
    w = f_eps.values - f0.values - eps * correction
    result = f0.with_values(w)
    h1 = spacetime_norm(result, "H1")
    l2 = spacetime_norm(result, "L2")
    return f0.with_values(w, h1_norm=h1, l2_norm=l2, layer_scale=cutoffs.layer_scale)


# measured constants of the smoothing operator


def _window(domain: DomainSpec) -> np.ndarray:
    """Compactly supported space-time window centered in the box and the interval"""
    times = domain.record_times
    window = _bump((times - domain.T / 2) / (0.4 * domain.T)).reshape((-1,) + (1,) * domain.dim)
    for x in domain.mesh():
        window = window * _bump((x - 0.5) / 0.4)[np.newaxis]
    return window


def random_sample(domain: DomainSpec, rng: np.random.Generator, modes: int = 4) -> np.ndarray:
    """Random field band-limited at scale eps (wavelengths >= 2 eps in space, 2 eps^2 in time)"""
    eps = domain.epsilon
    times = domain.record_times.reshape((-1,) + (1,) * domain.dim)
    mesh = [x[np.newaxis] for x in domain.mesh()]
    values = np.zeros((len(domain.record_times),) + domain.spatial_shape)
    for _ in range(modes):
        k = rng.uniform(-0.5 / eps, 0.5 / eps, size=domain.dim)
        omega = rng.uniform(-0.5 / eps ** 2, 0.5 / eps ** 2)
        phase = rng.uniform(0, 2 * np.pi)
        amplitude = rng.normal()
        values = values + amplitude * np.cos(
            2 * np.pi * (sum(kk * x for kk, x in zip(k, mesh)) + omega * times) + phase)
    return values * _window(domain)


def random_cell_field(grid: TorusGrid, rng: np.random.Generator, degree: int = 3,
                      zero_mean: bool = False) -> PeriodicField:
    """Random real trigonometric polynomial on the cell"""
    values = np.zeros(grid.shape) if zero_mean else np.full(grid.shape, rng.normal())
    mesh = grid.mesh()
    for _ in range(degree):
        k = rng.integers(-degree, degree + 1, size=grid.dim)
        if not np.any(k):
            k[0] = 1
        values = values + rng.normal() * np.cos(
            2 * np.pi * sum(kk * y for kk, y in zip(k, mesh)) + rng.uniform(0, 2 * np.pi))
    if zero_mean:
        values = values - values.mean()
    return PeriodicField.scalar(grid, values)


def _l2(values: np.ndarray, domain: DomainSpec, mask: Optional[np.ndarray] = None) -> float:
    density = values ** 2 if mask is None else values ** 2 * mask
    return math.sqrt(integrate_spacetime(density, domain.record_times, domain.h, domain.dim))


def _grad_norm(values: np.ndarray, domain: DomainSpec, mask=None) -> float:
    density = sum(np.gradient(values, domain.h, axis=a + 1) ** 2 for a in range(domain.dim))
    return _l2(np.sqrt(density), domain, mask)


def _hess_norm(values: np.ndarray, domain: DomainSpec) -> float:
    density = np.zeros_like(values)
    for a in range(domain.dim):
        first = np.gradient(values, domain.h, axis=a + 1)
        for b in range(domain.dim):
            density += np.gradient(first, domain.h, axis=b + 1) ** 2
    return _l2(np.sqrt(density), domain)


def oscillating_average_ratio(tau_field: PeriodicField, kappa: np.ndarray, domain: DomainSpec) -> float:
    """
    |int tau(x/eps) kappa dx| / (eps ||grad_y w||_{L2(Y)} ||grad kappa||_{L^{2d/(d+2)}})
    with Laplace(w) = tau on the cell; kappa is a spatial grid function vanishing near the boundary
    """
    eps = domain.epsilon
    potential = solve_cell_poisson(tau_field)
    grad_potential = math.sqrt(float(np.sum(gradient(potential).values ** 2, axis=0).mean()))
    integrand = _nodes_of(tau_field, domain) * kappa
    for _ in range(domain.dim):
        integrand = trapezoid(integrand, dx=domain.h, axis=-1)
    exponent = 2.0 * domain.dim / (domain.dim + 2.0)
    grad_kappa = np.sqrt(sum(np.gradient(kappa, domain.h, axis=a) ** 2 for a in range(domain.dim)))
    lp = grad_kappa ** exponent
    for _ in range(domain.dim):
        lp = trapezoid(lp, dx=domain.h, axis=-1)
    denominator = eps * grad_potential * float(lp) ** (1.0 / exponent)
    return abs(float(integrand)) / denominator


def _interior_masks(domain: DomainSpec):
    """Sub-box omega = [1/4, 3/4]^d and its eps-dilation, as space-time masks"""
    dist = domain.distance_to_boundary()
    inner = (dist >= 0.25)[np.newaxis]
    dilated = (dist >= 0.25 - domain.epsilon - 1e-12)[np.newaxis]
    return inner, dilated


def appendix_constants(sample_count: int, eps_list: Sequence[float], dim: int = 1,
                       kernel: Optional[SmoothingKernel] = None,
                       seed: int = Config.DEFAULT_SEED, n_cell: int = 32) -> pd.DataFrame:
    """
    Measure the smoothing-operator ratios over random band-limited compactly supported samples
    Args:
        sample_count (int): samples per eps (at least Config.APPENDIX_MIN_SAMPLES)
        eps_list (list of float): scales, each 1/2^k
        dim (int): box dimension
        kernel (SmoothingKernel): defaults to the standard kernel
        seed (int): generator seed
        n_cell (int): cell grid for the periodic weights
    Returns:
        DataFrame with columns epsilon, lemma, ratio_max, ratio_median, samples
    """
    if sample_count < Config.APPENDIX_MIN_SAMPLES:
        raise ValueError(f"need at least {Config.APPENDIX_MIN_SAMPLES} samples, got {sample_count}")
    kernel = kernel or SmoothingKernel(dim)
    rng = np.random.default_rng(seed)
    grid = TorusGrid(dim, n_cell)
    rows: List[Dict] = []
    for eps in eps_list:
        domain = DomainSpec(dim=dim, T=Config.APPENDIX_T, h=eps / 8, tau=eps ** 2 / 8, epsilon=eps)
        weights = kernel.weights(eps, domain.h, domain.dt)
        inner, dilated = _interior_masks(domain)
        ratios: Dict[str, List[float]] = {name: [] for name in SUITES}
        for _ in range(sample_count):
            phi = random_sample(domain, rng)
            smoothed = _convolve(phi, weights)
            norm_phi = _l2(phi, domain)
            ratios["L1-i"].append(_l2(smoothed, domain) / norm_phi)
            ratios["L1-ii-grad"].append(eps * _grad_norm(smoothed, domain) / norm_phi)
            ratios["L1-ii-hess"].append(eps ** 2 * _hess_norm(smoothed, domain) / norm_phi)

            f = random_sample(domain, rng)
            smoothed_f = _convolve(f, weights)
            defect = 0.0
            for a in range(dim):
                defect = defect + (np.gradient(smoothed_f, domain.h, axis=a + 1)
                                   - np.gradient(f, domain.h, axis=a + 1)) ** 2
            scale = _hess_norm(f, domain) + _l2(np.gradient(f, domain.dt, axis=0), domain)
            ratios["L2"].append(_l2(np.sqrt(defect), domain) / (eps * scale))

            g = random_cell_field(grid, rng)
            g_nodes = _nodes_of(g, domain)[np.newaxis]
            g_norm = math.sqrt(float(np.mean(g.values ** 2)))
            f_norm = _l2(f, domain, dilated)
            ratios["L3-i"].append(_l2(g_nodes * smoothed_f, domain, inner) / (g_norm * f_norm))
            grad_smoothed = np.sqrt(sum(np.gradient(smoothed_f, domain.h, axis=a + 1) ** 2
                                        for a in range(dim)))
            ratios["L3-ii"].append(eps * _l2(g_nodes * grad_smoothed, domain, inner) / (g_norm * f_norm))

            tau_field = random_cell_field(grid, rng, zero_mean=True)
            kappa = random_sample(domain, rng)[len(domain.record_times) // 2]
            ratios["remark-poisson"].append(oscillating_average_ratio(tau_field, kappa, domain))
        for name in SUITES:
            values = np.asarray(ratios[name])
            rows.append({"epsilon": eps, "lemma": name, "ratio_max": float(values.max()),
                         "ratio_median": float(np.median(values)), "samples": sample_count})
        logger.info(f"appendix constants at eps={eps:g}: "
                    + ", ".join(f"{name}={max(ratios[name]):.3g}" for name in SUITES))
    return pd.DataFrame(rows, columns=["epsilon", "lemma", "ratio_max", "ratio_median", "samples"])
