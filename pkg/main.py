#!/usr/bin/env python3
"""
Periodic Homogenization Lab - Main Entry Point
Cell problems, factorization, homogenized tensors and epsilon sweeps from the command line
"""

# built-in dependencies
import argparse
import json
import os
import sys
from pathlib import Path

# Add current directory to Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

# project dependencies
from config import Config  # noqa: E402
from errors import HomogenizationError  # noqa: E402
from LabKit.logger import Logger  # noqa: E402

logger = Logger()


def check_dependencies():
    """Check if all required dependencies are installed"""
    required_packages = ['numpy', 'scipy', 'pandas', 'matplotlib']
    missing_packages = []
    for package in required_packages:
        try:
            __import__(package)
        except ImportError:
            missing_packages.append(package)

    if missing_packages:
        print("Error: Missing required packages:")
        for package in missing_packages:
            print(f"  - {package}")
        print("\nPlease install missing packages using:")
        print("  pip install -r requirements.txt")
        return False
    return True


def load_config(args):
    """SweepConfig from --config, then command-line overrides"""
    from models import SweepConfig

    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as f:
                cfg = SweepConfig.from_dict(json.load(f))
        except (OSError, json.JSONDecodeError) as err:
            raise ValueError(f"cannot read config {args.config}: {err}") from err
    else:
        cfg = SweepConfig()
    if getattr(args, "preset", None):
        cfg.preset, cfg.import_spec = args.preset, None
    if getattr(args, "pipeline", None):
        cfg.pipeline = args.pipeline
    if getattr(args, "n", None):
        cfg.n_cell = args.n
    if args.out:
        cfg.out_dir = args.out
    if args.workers is not None:
        cfg.workers = args.workers
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _coefficients(cfg, args):
    from harness import load_coefficients

    base_dir = str(Path(args.config).parent) if args.config else None
    return load_coefficients(cfg, base_dir)


def cmd_cell_eig(cfg, args):
    from cell_spectral import find_bloch_parameter
    from factorize import nondivergence_frontend
    from models import GeneralCoefficients, NondivergenceCoefficients

    coeffs = _coefficients(cfg, args)
    if isinstance(coeffs, GeneralCoefficients):
        raise ValueError("cell-eig needs (A, b, c) or (K, q, r) coefficients")
    if isinstance(coeffs, NondivergenceCoefficients):
        coeffs = nondivergence_frontend(coeffs)
    eig = find_bloch_parameter(coeffs)
    print(json.dumps(eig.to_dict(), sort_keys=True, indent=2))


def cmd_factorize(cfg, args):
    from cell_spectral import find_bloch_parameter
    from factorize import build_factorized_model, nondivergence_frontend
    from models import GeneralCoefficients, NondivergenceCoefficients
    from result_store import ResultStore

    coeffs = _coefficients(cfg, args)
    if isinstance(coeffs, GeneralCoefficients):
        raise ValueError("factorize needs (A, b, c) or (K, q, r) coefficients")
    if isinstance(coeffs, NondivergenceCoefficients):
        coeffs = nondivergence_frontend(coeffs)
    fm = build_factorized_model(coeffs, find_bloch_parameter(coeffs))
    path = ResultStore(cfg.out_dir).save_factorized_model(fm)
    logger.info(f"factorized model written to {path}")


def cmd_homogenize(cfg, args):
    from harness import build_cell_models
    from result_store import ResultStore

    models = build_cell_models(_coefficients(cfg, args))
    path = ResultStore(cfg.out_dir).save_effective_model(models.effective)
    print(json.dumps(models.effective.to_dict(), sort_keys=True, indent=2))
    logger.info(f"effective model written to {path}")


def cmd_solve(cfg, args):
    from harness import SweepRunner, cached_cell_models
    from parabolic import spacetime_norm
    from result_store import ModelCache, ResultStore

    models = cached_cell_models(_coefficients(cfg, args), ModelCache())
    domain, f_eps, f0 = SweepRunner(cfg, models).solve_level(args.epsilon)
    store = ResultStore(cfg.out_dir)
    tag = f"eps_{round(1 / args.epsilon)}"
    for name, field in ((f"oscillatory_{tag}", f_eps), (f"homogenized_{tag}", f0)):
        store.save_snapshots(field, name)
        store.save_slice_csv(field, name)
    logger.info(f"eps={args.epsilon:g}, N={domain.N}, steps={domain.steps}: "
                f"L2 error {spacetime_norm(f_eps, 'L2', reference=f0):.6e}")


def cmd_sweep(cfg, args):
    from harness import emit_report, run_sweep
    from result_store import ModelCache

    base_dir = str(Path(args.config).parent) if args.config else None
    report = run_sweep(cfg, ModelCache(), base_dir)
    emit_report(report, cfg.out_dir, plot=cfg.plot)


def cmd_verify_appendix(cfg, args):
    from oscillo_analysis import appendix_constants
    from result_store import ResultStore

    frame = appendix_constants(args.samples, args.epsilons, dim=args.dim, seed=cfg.seed)
    path = ResultStore(cfg.out_dir).save_appendix_csv(frame)
    print(frame.to_string(index=False))
    logger.info(f"appendix constants written to {path} (norm of g taken over one cell)")


COMMANDS = {
    "cell-eig": cmd_cell_eig,
    "factorize": cmd_factorize,
    "homogenize": cmd_homogenize,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "verify-appendix": cmd_verify_appendix,
}


def build_parser():
    parser = argparse.ArgumentParser(
        description='Periodic Homogenization Lab - cell problems and epsilon sweeps'
    )
    parser.add_argument('--config', help='JSON experiment config')
    parser.add_argument('--out', help=f'output directory (default: {Config.RUNS_DIR})')
    parser.add_argument('--workers', type=int, help='concurrent sweep levels')
    parser.add_argument('--seed', type=int, help='random seed')
    parser.add_argument('--debug', action='store_true', help='Enable debug mode with verbose output')
    parser.add_argument('--version', action='store_true', help='Show version information')

    sub = parser.add_subparsers(dest='command')
    for name in ("cell-eig", "factorize", "homogenize", "solve", "sweep"):
        p = sub.add_parser(name)
        p.add_argument('--preset', help='coefficient preset (overrides the config)')
        p.add_argument('--pipeline', choices=Config.PIPELINES)
        p.add_argument('--n', type=int, help='cell grid points per axis')
        if name == "solve":
            p.add_argument('--epsilon', type=float, default=Config.DEFAULT_EPSILONS[0])
    p = sub.add_parser("verify-appendix")
    p.add_argument('--samples', type=int, default=Config.APPENDIX_MIN_SAMPLES)
    p.add_argument('--epsilons', type=float, nargs='+', default=[1.0 / 8, 1.0 / 16, 1.0 / 32])
    p.add_argument('--dim', type=int, default=1)
    return parser


def main(argv=None):
    """Main application entry point"""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.version:
        print(f"{Config.APP_NAME} v{Config.APP_VERSION}")
        return 0

    if args.debug:
        import logging
        logger.set_level(logging.DEBUG)
        logger.debug("Debug mode enabled")

    if args.command is None:
        parser.print_help()
        return 2

    if not check_dependencies():
        return 1

    try:
        cfg = load_config(args)
        Config.create_directories(cfg.out_dir)
        COMMANDS[args.command](cfg, args)
    except KeyboardInterrupt:
        print("\nInterrupted by user")
        return 130
    except (HomogenizationError, ValueError) as e:
        logger.error(f"{args.command} failed: {e}")
        if args.debug:
            import traceback
            traceback.print_exc()
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
