#!/usr/bin/env python3
"""
On-disk persistence: sweep reports, snapshot dumps, exported cell models and the
effective-model cache
"""

# built-in dependencies
import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional

# 3rd party dependencies
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

# project dependencies
from config import Config  # noqa: E402
from errors import ReportWriteError  # noqa: E402
from models import (  # noqa: E402
    CellEigenSolution,
    CellModels,
    EffectiveModel,
    FactorizedModel,
    GeneralCoefficients,
    PeriodicField,
    SpaceTimeField,
    SweepReport,
    TorusGrid,
)
from torus_field import save_field_csv  # noqa: E402
from LabKit.folder_utils import ensure_folder  # noqa: E402
from LabKit.logger import Logger  # noqa: E402

logger = Logger()

CSV_COLUMNS = ["epsilon", "l2_error", "w_eps_h1", "slope_partial", "wall_ms"]


def dump_json(payload: Dict[str, Any]) -> str:
    """Canonical json text: sorted keys, 2-space indent, trailing newline"""
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"


def partial_slopes(points: List[tuple]) -> List[Optional[float]]:
    """Two-point log-log slope between consecutive ladder rows (None on the first row)"""
    slopes: List[Optional[float]] = [None]
    for (eps0, err0), (eps1, err1) in zip(points, points[1:]):
        if err0 > 0 and err1 > 0:
            slopes.append(math.log(err1 / err0) / math.log(eps1 / eps0))
        else:
            slopes.append(None)
    return slopes


class ResultStore:
    """Writes the files of one run below out_dir"""

    def __init__(self, out_dir: str):
        self.out_dir = Path(out_dir)
        try:
            ensure_folder(self.out_dir)
        except OSError as err:
            raise ReportWriteError(self.out_dir, str(err)) from err

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def _write_text(self, name: str, text: str) -> Path:
        target = self.path(name)
        try:
            with open(target, "w", encoding="utf-8", newline="\n") as f:
                f.write(text)
        except OSError as err:
            raise ReportWriteError(target, str(err)) from err
        logger.debug(f"wrote {target}")
        return target

    def save_json(self, name: str, payload: Dict[str, Any]) -> Path:
        return self._write_text(name, dump_json(payload))

    def load_json(self, name: str) -> Dict[str, Any]:
        target = self.path(name)
        try:
            with open(target, "r", encoding="utf-8") as f:
                return json.load(f)
        except (OSError, json.JSONDecodeError) as err:
            raise ValueError(f"cannot read {target}: {err}") from err

    # sweep reports

    def report_frame(self, report: SweepReport) -> pd.DataFrame:
        slopes = partial_slopes(report.errors())
        rows = []
        for record, slope in zip(report.records, slopes):
            rows.append({
                "epsilon": record.epsilon,
                "l2_error": record.l2_error,
                "w_eps_h1": record.w_eps_h1,
                "slope_partial": slope,
                "wall_ms": record.wall_ms,
            })
        return pd.DataFrame(rows, columns=CSV_COLUMNS)

    def save_report_csv(self, report: SweepReport, name: str = Config.REPORT_CSV) -> Path:
        text = self.report_frame(report).to_csv(index=False, float_format="%.17g", lineterminator="\n")
        return self._write_text(name, text)

    def save_report_json(self, report: SweepReport, name: str = Config.REPORT_JSON) -> Path:
        return self.save_json(name, report.to_dict())

    def load_report(self, name: str = Config.REPORT_JSON) -> SweepReport:
        return SweepReport.from_dict(self.load_json(name))

    def save_report_svg(self, report: SweepReport, name: str = Config.REPORT_SVG) -> Path:
        """Log-log plot of the errors, the fitted line and the eps^(1/4) reference"""
        eps = np.array([r.epsilon for r in report.records])
        err = np.array([r.l2_error for r in report.records])
        target = self.path(name)
        with plt.rc_context({"svg.hashsalt": "homoglab", "svg.fonttype": "none"}):
            fig, ax = plt.subplots(figsize=(5.0, 4.0))
            ax.loglog(eps, err, "ko", mfc="none", label="L2 error")
            if report.slope is not None:
                intercept = np.mean(np.log(err) - report.slope * np.log(eps))
                ax.loglog(eps, np.exp(intercept) * eps ** report.slope, "k-",
                          label=f"fit, slope {report.slope:.3f}")
            reference = err[0] * (eps / eps[0]) ** Config.PROVEN_EXPONENT
            ax.loglog(eps, reference, "k:", label=r"$\varepsilon^{1/4}$")
            ax.set_xlabel(r"$\varepsilon$")
            ax.set_ylabel(r"$\|f_\varepsilon - f_0\|_{L^2}$")
            ax.legend(loc="best", frameon=False)
            fig.tight_layout()
            try:
                fig.savefig(target, format="svg", metadata={"Date": None})
            except OSError as err_:
                raise ReportWriteError(target, str(err_)) from err_
            finally:
                plt.close(fig)
        return target

    def save_appendix_csv(self, frame: pd.DataFrame, name: str = Config.APPENDIX_CSV) -> Path:
        return self._write_text(name, frame.to_csv(index=False, float_format="%.17g", lineterminator="\n"))

    # snapshots

    def save_snapshots(self, field: SpaceTimeField, name: str) -> Path:
        """Row-major float64 dump of all recorded levels plus a json manifest"""
        target = self.path(f"{name}.bin")
        try:
            np.ascontiguousarray(field.values, dtype="<f8").tofile(target)
        except OSError as err:
            raise ReportWriteError(target, str(err)) from err
        manifest = {
            "file": target.name,
            "dtype": "float64",
            "byte_order": "little",
            "shape": list(field.values.shape),
            "axes": ["t"] + [f"x{i + 1}" for i in range(field.domain.dim)],
            "times": [float(t) for t in field.times],
            "domain": field.domain.to_dict(),
            "diagnostics": _plain(field.diagnostics),
        }
        self.save_json(f"{name}.json", manifest)
        return target

    def load_snapshots(self, name: str) -> np.ndarray:
        manifest = self.load_json(f"{name}.json")
        return np.fromfile(self.path(manifest["file"]), dtype="<f8").reshape(manifest["shape"])

    def save_slice_csv(self, field: SpaceTimeField, name: str) -> Path:
        """Values along x1 through the box center at every recorded level"""
        domain = field.domain
        center = domain.N // 2
        index = (slice(None), slice(None)) + (center,) * (domain.dim - 1)
        frame = pd.DataFrame(field.values[index], columns=[f"{x:.12g}" for x in domain.nodes])
        frame.insert(0, "t", field.times)
        return self._write_text(f"{name}_slice.csv",
                                frame.to_csv(index=False, float_format="%.17g", lineterminator="\n"))

    # cell models

    def save_effective_model(self, em: EffectiveModel, name: str = "effective_model") -> Path:
        for j, omega in enumerate(em.correctors):
            save_field_csv(omega, str(self.path(f"{name}_corrector_{j + 1}.csv")), name="omega")
        return self.save_json(f"{name}.json", em.to_dict())

    def save_factorized_model(self, fm: FactorizedModel, name: str = "factorized_model") -> Path:
        save_field_csv(fm.sigma, str(self.path(f"{name}_sigma.csv")), name="sigma")
        save_field_csv(fm.M, str(self.path(f"{name}_M.csv")), name="M")
        return self.save_json(f"{name}.json", fm.to_dict())


def _plain(value):
    """json-able copy of a diagnostics tree"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(v) for v in value]
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int)) and not isinstance(value, bool):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


class ModelCache:
    """Effective-model cache: one .npz per content hash"""

    def __init__(self, cache_dir: Optional[str] = None):
        self.cache_dir = Path(cache_dir) if cache_dir else Config.CACHE_DIR

    def _file(self, key: str) -> Path:
        return self.cache_dir / f"{key}.npz"

    def load(self, key: str) -> Optional[CellModels]:
        target = self._file(key)
        if not target.exists():
            logger.debug(f"cache miss {key[:12]}")
            return None
        try:
            with np.load(target, allow_pickle=False) as data:
                models = _unpack(dict(data))
        except (OSError, ValueError, KeyError) as err:
            logger.warn(f"ignoring unreadable cache entry {target}: {err}")
            return None
        logger.info(f"cache hit {key[:12]}")
        return models

    def save(self, key: str, models: CellModels) -> Path:
        target = self._file(key)
        try:
            ensure_folder(self.cache_dir)
            np.savez(target, **_pack(models))
        except OSError as err:
            raise ReportWriteError(target, str(err)) from err
        logger.debug(f"cached effective model as {target}")
        return target


def _pack(models: CellModels) -> Dict[str, np.ndarray]:
    gc, em, eig = models.general, models.effective, models.eig
    meta = {
        "dim": gc.grid.dim,
        "n": gc.grid.n,
        "kappa": gc.kappa,
        "weight": em.weight,
        "em_diagnostics": _plain(em.diagnostics),
        "factorized_residuals": _plain(models.factorized_residuals),
    }
    arrays = {
        "zeta": gc.zeta.values,
        "Theta": gc.Theta.values,
        "correctors": np.stack([omega.values for omega in em.correctors]),
        "tensor_h": np.asarray(em.tensor_h),
        "flux_corrector": em.flux_corrector.values,
    }
    if eig is not None:
        meta.update({"lam": eig.lam, "lower_bound_a": eig.lower_bound_a,
                     "newton_steps": eig.newton_steps, "eig_residuals": _plain(eig.residuals)})
        arrays.update({"theta": np.asarray(eig.theta, dtype=np.float64), "psi": eig.psi.values,
                       "psi_star": eig.psi_star.values})
    arrays["meta"] = np.array(json.dumps(meta, sort_keys=True))
    return arrays


def _unpack(data: Dict[str, np.ndarray]) -> CellModels:
    meta = json.loads(str(data["meta"]))
    grid = TorusGrid(int(meta["dim"]), int(meta["n"]))
    gc = GeneralCoefficients(zeta=PeriodicField.scalar(grid, data["zeta"]),
                             Theta=PeriodicField.matrix(grid, data["Theta"]), kappa=float(meta["kappa"]))
    em = EffectiveModel(
        correctors=tuple(PeriodicField.scalar(grid, omega) for omega in data["correctors"]),
        tensor_h=np.array(data["tensor_h"]),
        flux_corrector=PeriodicField(grid, "tensor3", data["flux_corrector"]),
        weight=meta["weight"],
        diagnostics=meta["em_diagnostics"],
    )
    eig = None
    if "psi" in data:
        eig = CellEigenSolution(theta=np.array(data["theta"]), lam=float(meta["lam"]),
                                psi=PeriodicField.scalar(grid, data["psi"]),
                                psi_star=PeriodicField.scalar(grid, data["psi_star"]),
                                lower_bound_a=float(meta["lower_bound_a"]),
                                residuals=meta["eig_residuals"], newton_steps=int(meta["newton_steps"]))
    return CellModels(general=gc, effective=em, eig=eig,
                      factorized_residuals=meta["factorized_residuals"])
