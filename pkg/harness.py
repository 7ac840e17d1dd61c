#!/usr/bin/env python3
"""
Epsilon sweeps: cell models (cached), oscillatory and homogenized solves on a shared
grid per level, rate fitting and report emission
"""

# built-in dependencies
import math
import time
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

# 3rd party dependencies
import numpy as np
from scipy import stats

# project dependencies
from cell_spectral import find_bloch_parameter
from config import Config
from errors import (
    DegenerateErrors,
    EpsilonTooLarge,
    InvalidCoefficients,
    KernelUnderresolved,
)
from factorize import build_factorized_model, general_from_factorized, nondivergence_frontend
from homogenize import build_effective_model
from models import (
    CellModels,
    DomainSpec,
    EpsilonRecord,
    GeneralCoefficients,
    NondivergenceCoefficients,
    ParabolicProblem,
    ProblemCoefficients,
    SpaceTimeField,
    SweepConfig,
    SweepReport,
)
from oscillo_analysis import SmoothingKernel, build_cutoffs, build_w_eps
from parabolic import (
    prepare_datum,
    reconstruct_u,
    solve_divform,
    solve_full_oscillatory,
    spacetime_norm,
)
from presets import (
    AnyCoefficients,
    PIPELINE_FAMILIES,
    coefficient_arrays,
    datum_values,
    family_of,
    get_preset,
    load_imported,
)
from result_store import ModelCache, ResultStore
from sweep_worker import SweepWorkerPool
from LabKit.logger import Logger
from LabKit.package_utils import array_hash, json_hash, runtime_fingerprint

logger = Logger()


def load_coefficients(cfg: SweepConfig, base_dir: Optional[str] = None) -> AnyCoefficients:
    """Preset or imported coefficients, checked against the pipeline"""
    if cfg.import_spec is not None:
        coeffs = load_imported(cfg.import_spec, base_dir)
    else:
        coeffs = get_preset(cfg.preset).build(cfg.n_cell)
    expected = PIPELINE_FAMILIES[cfg.pipeline]
    if family_of(coeffs) != expected:
        raise InvalidCoefficients(
            f"pipeline {cfg.pipeline} needs {expected} coefficients, got {family_of(coeffs)}"
        )
    return coeffs


def build_cell_models(coeffs: AnyCoefficients) -> CellModels:
    """
    Cell-side chain of one pipeline
    section-2: (zeta, Theta) -> effective model
    section-1: (A, b, c) -> Bloch parameter -> factorized model -> effective model
    nondivergence: (K, q, r) -> (A, b, c) -> section-1 chain
    """
    if isinstance(coeffs, GeneralCoefficients):
        return CellModels(general=coeffs, effective=build_effective_model(coeffs))
    if isinstance(coeffs, NondivergenceCoefficients):
        coeffs = nondivergence_frontend(coeffs)
    eig = find_bloch_parameter(coeffs)
    fm = build_factorized_model(coeffs, eig)
    gc = general_from_factorized(fm)
    return CellModels(general=gc, effective=build_effective_model(gc), eig=eig,
                      factorized_residuals=dict(fm.residuals))


def cell_models_key(coeffs: AnyCoefficients) -> str:
    """Content hash of the coefficient samples; array shapes carry the grid"""
    return array_hash(coefficient_arrays(coeffs), {
        "family": family_of(coeffs),
        "weight": "zeta",
        "version": Config.APP_VERSION,
    })


def cached_cell_models(coeffs: AnyCoefficients, cache: Optional[ModelCache]) -> CellModels:
    if cache is None:
        return build_cell_models(coeffs)
    key = cell_models_key(coeffs)
    models = cache.load(key)
    if models is None:
        models = build_cell_models(coeffs)
        cache.save(key, models)
    return models


class SweepRunner:
    """Solves the ladder levels of one configuration"""

    def __init__(self, cfg: SweepConfig, models: CellModels):
        self.cfg = cfg
        self.models = models
        self.dim = models.grid.dim
        self.kernel = SmoothingKernel(self.dim)
        if cfg.datum_mode == "ill-prepared" and models.eig is None:
            raise InvalidCoefficients("ill-prepared data need a section-1 or nondivergence pipeline")

    def domain(self, epsilon: float) -> DomainSpec:
        return DomainSpec.for_epsilon(self.dim, epsilon, self.cfg.T, self.cfg.h_policy,
                                      self.cfg.tau_policy)

    def solve_level(self, epsilon: float) -> Tuple[DomainSpec, SpaceTimeField, SpaceTimeField]:
        """Oscillatory and homogenized solutions of one level on the shared grid"""
        domain = self.domain(epsilon)
        gc = self.models.general
        datum = prepare_datum(domain, datum_values(self.cfg.datum_expr, domain),
                              self.cfg.datum_mode, self.models.eig)
        f_eps = solve_divform(ParabolicProblem(domain, "oscillatory-divform", datum,
                                               zeta=gc.zeta, Theta=gc.Theta))
        f0 = solve_divform(ParabolicProblem(domain, "homogenized", datum,
                                            tensor=self.models.effective.tensor_h))
        return domain, f_eps, f0

    def run_level(self, epsilon: float) -> EpsilonRecord:
        started = time.perf_counter()
        logger.info(f"level eps={epsilon:g}: solving")
        domain, f_eps, f0 = self.solve_level(epsilon)
        l2_error = spacetime_norm(f_eps, "L2", reference=f0)
        residuals = {
            "energy_nonincreasing": float(f_eps.diagnostics["energy_nonincreasing"]
                                          and f0.diagnostics["energy_nonincreasing"]),
            "steps": float(domain.steps),
        }
        w_h1 = None
        if self.cfg.datum_mode != "ill-prepared":
            try:
                cutoffs = build_cutoffs(domain, self.cfg.cutoff_scale)
                w = build_w_eps(f_eps, f0, self.models.effective, domain, self.kernel, cutoffs)
            except (KernelUnderresolved, EpsilonTooLarge) as err:
                logger.warn(f"eps={epsilon:g}: no w_eps diagnostic ({err})")
            else:
                w_h1 = float(w.diagnostics["h1_norm"])
                residuals["w_eps_initial"] = float(np.abs(w.values[0]).max())
        wall_ms = 1e3 * (time.perf_counter() - started) if self.cfg.include_timings else None
        logger.info(f"level eps={epsilon:g}: L2 error {l2_error:.6e}")
        return EpsilonRecord(epsilon=epsilon, h=domain.h, tau=domain.dt, l2_error=l2_error,
                             w_eps_h1=w_h1, wall_ms=wall_ms, residuals=residuals)


def fit_rate(points: Sequence[Tuple[float, float]]) -> Tuple[float, float]:
    """
    Least-squares slope of log(error) against log(eps)
    Args:
        points (list of (eps, error)): at least 3 levels
    Returns:
        slope (float), half_width (float): half-width of the Config.RATE_CONFIDENCE interval
    Raises:
        DegenerateErrors: too few points, an error below 1e-14 or all errors equal
    """
    if len(points) < 3:
        raise DegenerateErrors(f"need at least 3 points, got {len(points)}")
    eps = np.array([p[0] for p in points], dtype=np.float64)
    err = np.array([p[1] for p in points], dtype=np.float64)
    if np.any(err <= Config.DEGENERATE_ERROR_TOL):
        raise DegenerateErrors(f"errors at or below {Config.DEGENERATE_ERROR_TOL:g}: {err.tolist()}")
    if err.max() - err.min() <= Config.DEGENERATE_ERROR_TOL:
        raise DegenerateErrors("all errors are equal")
    x, y = np.log(eps), np.log(err)
    slope, intercept = np.polyfit(x, y, 1)
    dof = len(points) - 2
    residual = y - (slope * x + intercept)
    if dof > 0:
        spread = float(np.sum((x - x.mean()) ** 2))
        stderr = math.sqrt(float(np.sum(residual ** 2)) / dof / spread)
        half_width = float(stats.t.ppf(0.5 + Config.RATE_CONFIDENCE / 2, dof)) * stderr
    else:
        half_width = 0.0
    return float(slope), half_width


def run_sweep(cfg: SweepConfig, cache: Optional[ModelCache] = None,
              base_dir: Optional[str] = None) -> SweepReport:
    """
    Run every ladder level and fit the convergence rate
    Args:
        cfg (SweepConfig): experiment
        cache (ModelCache): effective-model cache, None disables caching
        base_dir (str): folder relative import paths resolve against
    Returns:
        SweepReport
    Raises:
        SweepLevelError: the first failing level, with its epsilon
    """
    cfg.validate()
    coeffs = load_coefficients(cfg, base_dir)
    models = cached_cell_models(coeffs, cache)
    runner = SweepRunner(cfg, models)
    records = SweepWorkerPool(runner.run_level, cfg.workers).run(cfg.epsilons)

    errors = [r.l2_error for r in records]
    monotone = all(a > b for a, b in zip(errors, errors[1:]))
    if not monotone:
        logger.warn(f"errors do not decrease down the ladder: {errors}")

    slope = half_width = limit_factor = None
    note = None
    if cfg.datum_mode == "ill-prepared":
        limit_factor = float(np.mean(1.0 / models.eig.psi.values))
        note = "ill-prepared datum: weak convergence only, no rate fitted"
    else:
        try:
            slope, half_width = fit_rate([(r.epsilon, r.l2_error) for r in records])
        except DegenerateErrors as err:
            logger.info(f"slope fit skipped: {err}")
            note = "degenerate errors"
        else:
            logger.info(f"fitted slope {slope:.4f} +/- {half_width:.4f} "
                        f"(proven {Config.PROVEN_EXPONENT}, anticipated {Config.ANTICIPATED_EXPONENT})")

    provenance = cfg.provenance()
    return SweepReport(
        config=provenance,
        config_hash=json_hash(provenance),
        records=records,
        tensor_h=np.asarray(models.effective.tensor_h).tolist(),
        slope=slope,
        half_width=half_width,
        slope_note=note,
        monotone=monotone,
        limit_factor=limit_factor,
        runtime=runtime_fingerprint(),
    )


def emit_report(report: SweepReport, out_dir: str, plot: bool = True) -> List[Path]:
    """
    Write the CSV, JSON and (optionally) SVG files of a report
    Raises:
        ReportWriteError: with the offending path
    """
    store = ResultStore(out_dir)
    paths = [store.save_report_csv(report), store.save_report_json(report)]
    if plot:
        paths.append(store.save_report_svg(report))
    for path in paths:
        logger.info(f"wrote {path}")
    return paths


def factorization_discrepancy(coeffs: ProblemCoefficients, epsilon: float, h: float,
                              T: float = Config.DEFAULT_T, datum_expr: str = "bump",
                              models: Optional[CellModels] = None) -> float:
    """
    Relative L2 distance between the direct solution u_eps and
    exp(-lambda t/eps^2) psi(x/eps) v_eps for a well-prepared datum
    """
    models = models or build_cell_models(coeffs)
    domain = DomainSpec(dim=coeffs.grid.dim, T=T, h=h, tau=h * h, epsilon=epsilon)
    datum = prepare_datum(domain, datum_values(datum_expr, domain), "well-prepared", models.eig)
    u = solve_full_oscillatory(ParabolicProblem(domain, "full-oscillatory", datum,
                                                coefficients=coeffs))
    v = solve_divform(ParabolicProblem(domain, "oscillatory-divform", datum,
                                       zeta=models.general.zeta, Theta=models.general.Theta))
    factored = reconstruct_u(v, models.eig, domain)
    return spacetime_norm(u, "L2", reference=factored) / spacetime_norm(u, "L2")
