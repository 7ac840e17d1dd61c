#!/usr/bin/env python3
"""
Configuration management for the homogenization lab
Contains all tolerances, iteration caps, grid policies and default paths
"""

from pathlib import Path

from LabKit.folder_utils import cache_folder, ensure_folder


class Config:
    """Central configuration class"""

    # Application info
    APP_NAME = "Periodic Homogenization Lab"
    APP_VERSION = "1.0.0"

    # Data storage paths
    RUNS_DIR = Path("homog_runs")
    CACHE_DIR = cache_folder()

    # Cell discretization
    DEFAULT_CELL_N = 64
    MIN_CELL_N = 8
    MAX_CELL_POINTS = 2 ** 21        # memory budget for n^d
    DEMEAN_TOL = 1e-10
    FINITE_TOL = 1e-12
    SYMMETRY_TOL = 1e-10
    ALIASING_ENERGY_FRACTION = 0.01  # warn when the top third of the spectrum carries more

    # Cell eigenvalue problem
    EIG_RELATIVE_TOL = 1e-10
    EIG_RESIDUAL_TOL = 1e-9
    EIG_MAX_ITERATIONS = 10_000
    EIG_SHIFT_OFFSET = 1.0
    EIG_SIGN_TOL = 1e-8
    EIG_PAIR_TOL = 1e-8              # |lambda - lambda*| <= tol * (1 + |lambda|)
    NORMALIZATION_TOL = 1e-12
    DENSE_ORACLE_LIMIT = 512         # n^d up to which the dense spectrum is computed

    # Bloch parameter search
    NEWTON_TOL = 1e-8
    NEWTON_MAX_STEPS = 50
    NEWTON_MAX_HALVINGS = 20
    NEWTON_FD_STEP = 1e-5

    # Krylov solves on the cell
    INNER_KRYLOV_TOL = 1e-12
    CORRECTOR_TOL = 1e-10
    KRYLOV_MAX_ITERATIONS = 20_000
    KRYLOV_RESTART = 50
    KRYLOV_REFINEMENTS = 3
    EIG_INNER_MAX_ITERATIONS = 1_000  # inner solves are inexact, the outer residual decides

    # Structural residual checks
    MEAN_TOL = 1e-8
    DIVERGENCE_TOL = 1e-8
    DIVERGENCE_REFERENCE_N = 32      # coarser cell grids get DIVERGENCE_TOL * (32/n)^2

    # Parabolic solvers
    PARABOLIC_KRYLOV_TOL = 1e-10
    DEFAULT_LINEAR_SOLVER = "direct"   # 'direct' (splu, factored once) or 'krylov'
    DEFAULT_SCHEME = "implicit-euler"
    FULL_OSCILLATORY_MIN_EPSILON = 1.0 / 8.0
    RESOLUTION_PER_EPSILON = 8          # h <= eps / 8
    FULL_RESOLUTION_PER_EPSILON = 16    # h <= eps / 16 for the direct solve of the original problem

    # Smoothing operator and cut-offs
    KERNEL_TIME_RADIUS = 0.5           # |s| <= 1/2 in scaled time
    KERNEL_SPACE_RADIUS_SQ = 0.5       # |y|^2 <= 1/2 in scaled space
    KERNEL_MIN_CELLS = 4
    DEFAULT_CUTOFF_SCALE = 0.125

    # Appendix measurements
    APPENDIX_MIN_SAMPLES = 30
    APPENDIX_T = 0.1

    # Rate fitting and reports
    DEGENERATE_ERROR_TOL = 1e-14
    RATE_CONFIDENCE = 0.95
    PROVEN_EXPONENT = 0.25
    ANTICIPATED_EXPONENT = 0.5
    REPORT_CSV = "sweep.csv"
    REPORT_JSON = "sweep.json"
    REPORT_SVG = "sweep.svg"
    APPENDIX_CSV = "appendix_constants.csv"

    # Sweep defaults
    DEFAULT_PIPELINE = "section-2"
    DEFAULT_PRESET = "harmonic-1d"
    DEFAULT_EPSILONS = [1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64]
    DEFAULT_T = 0.3
    DEFAULT_SEED = 20240501
    DEFAULT_WORKERS = 1

    # Grid policies h(eps), tau(h)
    GRID_POLICIES = {
        'standard': {
            'h_divisor': 8,            # h = eps / 8
            'tau_policy': 'h2',        # tau = h^2
            'record_per_eps2': 8,      # record >= 8 levels per eps^2
        },
        'fine': {
            'h_divisor': 16,
            'tau_policy': 'h2',
            'record_per_eps2': 8,
        },
        'fast': {
            'h_divisor': 8,
            'tau_policy': 'h',         # tau = h, accuracy study only
            'record_per_eps2': 8,
        },
    }

    PIPELINES = ['section-1', 'section-2', 'nondivergence']
    DATUM_MODES = ['well-prepared', 'ill-prepared', 'plain']

    @classmethod
    def get_grid_policy(cls, name='standard'):
        """Get grid policy by name"""
        return cls.GRID_POLICIES.get(name, cls.GRID_POLICIES['standard'])

    @classmethod
    def create_directories(cls, out_dir=None):
        """Create necessary directories"""
        for dir_path in [Path(out_dir) if out_dir else cls.RUNS_DIR, cls.CACHE_DIR]:
            ensure_folder(dir_path)
