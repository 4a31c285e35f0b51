"""Pipeline stages: potential, kernels, Marchenko, spectral data, scattering.

Each stage failure is re-raised as StageError naming the stage. Output
files contain no timestamps, so identical configs give identical bytes.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import marchenko, pencil, scatmat
from .config import ConfigError, build_model
from .errors import NlsDirectError
from .marchenko import MarchenkoKernel
from .potential import PotentialGrid, SolitonParams, MultisolitonParams, tabulate
from .volterra import KernelKind, KernelTriangle, dump_triangle, solve_auxiliary

log = logging.getLogger(__name__)


class StageError(RuntimeError):
    """A numerical stage failed; `stage` names it."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


class _stage:
    def __init__(self, name: str, notes: list | None = None):
        self.name = name
        self.notes = notes
        self._ctx = None

    def __enter__(self):
        log.info("stage %s", self.name)
        self._ctx = warnings.catch_warnings(record=True)
        self._caught = self._ctx.__enter__()
        warnings.simplefilter("always")
        return self

    def __exit__(self, et, ev, tb):
        self._ctx.__exit__(None, None, None)
        for w in self._caught:
            msg = f"{self.name}: {w.message}"
            log.warning(msg)
            if self.notes is not None and msg not in self.notes:
                self.notes.append(msg)
        if ev is None or isinstance(ev, (StageError, ConfigError)):
            return False
        if isinstance(ev, (NlsDirectError, ValueError, ArithmeticError, np.linalg.LinAlgError)):
            raise StageError(self.name, ev) from ev
        return False


@dataclass
class Kernels:
    grid: PotentialGrid
    kbar: KernelTriangle
    m: KernelTriangle
    omega_left: MarchenkoKernel
    omega_right: MarchenkoKernel


@dataclass
class PipelineResult:
    kernels: Kernels | None = None
    spectral: pencil.SpectralData | None = None
    scattering: list | None = None
    notes: list = field(default_factory=list)
    files: list = field(default_factory=list)


def make_grid(cfg: dict, nx: int | None = None, notes: list | None = None) -> PotentialGrid:
    with _stage("potential", notes):
        model = build_model(cfg["potential"])
        return tabulate(model, float(cfg["L"]), int(cfg["nx"] if nx is None else nx),
                        float(cfg["truncation_tol"]))


def compute_kernels(grid: PotentialGrid, notes: list | None = None) -> Kernels:
    with _stage("volterra", notes):
        kbar = solve_auxiliary(grid, KernelKind.KBAR)
        m = solve_auxiliary(grid, KernelKind.M)
    with _stage("marchenko", notes):
        om_l = marchenko.recover_left(kbar, grid)
        om_r = marchenko.recover_right(m, grid)
    return Kernels(grid, kbar, m, om_l, om_r)


def _empty_spectral(notes) -> pencil.SpectralData:
    return pencil.SpectralData((), (), (), (), tuple(notes))


def compute_spectral(om_l: MarchenkoKernel, om_r: MarchenkoKernel | None, pcfg: dict,
                     notes: list | None = None) -> pencil.SpectralData:
    """Left identification, right constants on the left nodes, independent right check."""
    local: list = []
    with _stage("pencil", local):
        left_series = pencil.SampleSeries.from_kernel(om_l, pcfg["stride"], pcfg["N"])
        left = pencil.identify(left_series, order=pcfg["order"], tol=pcfg["order_tol"],
                               eps=pcfg["cluster_eps"])
        if not left.terms:
            if notes is not None:
                notes.extend(local)
            return _empty_spectral(local)
        sd = pencil.to_spectral_data(left, match_tol=pcfg["match_tol"])
        diag = {
            "left_order": left.M,
            "left_residual": left.residual,
            "delta": left_series.delta,
            "N": left_series.N,
        }
        right = None
        if om_r is not None:
            right_series = pencil.SampleSeries.from_kernel(om_r, pcfg["stride"], pcfg["N"])
            right = pencil.recover_coefficients(
                pencil.nodes_for_spacing(sd, right_series.delta), right_series)
            diag["right_residual"] = right.residual
            diag.update(_cross_check(sd, right_series, pcfg))
        sd = pencil.to_spectral_data(left, right, match_tol=pcfg["match_tol"])
    if notes is not None:
        notes.extend(local)
    return pencil.SpectralData(sd.exponents, sd.multiplicities, sd.norming_left,
                               sd.norming_right, tuple(sd.warnings) + tuple(local), diag)


def _cross_check(sd: pencil.SpectralData, right_series, pcfg) -> dict:
    """Identify the right kernel on its own and compare exponents with the left ones."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            model = pencil.identify(right_series, tol=pcfg["order_tol"], eps=pcfg["cluster_eps"])
        exps = [complex(-np.log(t.node) / right_series.delta) for t in model.terms]
    except (NlsDirectError, ValueError, np.linalg.LinAlgError) as exc:
        return {"right_independent_error": str(exc)}
    mism = []
    for s in sd.exponents:
        mism.append(min((abs(r - s) / abs(s) for r in exps), default=float("inf")))
    return {
        "right_independent_order": len(exps),
        "right_independent_exponents": [{"re": z.real, "im": z.imag} for z in exps],
        "max_relative_exponent_mismatch": max(mism) if mism else 0.0,
    }


def compute_scattering(k: Kernels, lcfg: dict, notes: list | None = None) -> list:
    with _stage("scattering", notes):
        lam = scatmat.lambda_grid(float(lcfg["min"]), float(lcfg["max"]), int(lcfg["count"]))
        return scatmat.scan(k.grid, k.kbar, k.m, lam)


def write_config(cfg: dict, out: Path) -> Path:
    path = out / "config.json"
    path.write_text(json.dumps(cfg, indent=1, sort_keys=True))
    return path


def write_kernels(k: Kernels, out: Path, emit_triangles: bool) -> list:
    files = [
        k.omega_left.to_csv(out / "omega_left.csv"),
        k.omega_left.to_json(out / "omega_left.json"),
        k.omega_right.to_csv(out / "omega_right.csv"),
        k.omega_right.to_json(out / "omega_right.json"),
    ]
    if emit_triangles:
        files.append(dump_triangle(k.kbar, out / "kernel_kbar.npz"))
        files.append(dump_triangle(k.m, out / "kernel_m.npz"))
    return files


def _report(res: PipelineResult) -> dict:
    doc: dict = {"notes": res.notes}
    if res.kernels is not None:
        k = res.kernels
        doc["grid"] = {"L": k.grid.L, "nx": k.grid.nx, "h": k.grid.h,
                       "truncation": k.grid.truncation}
        doc["omega_left_anchor"] = float(k.omega_left.values[-1])
        doc["omega_right_anchor"] = float(k.omega_right.values[-1])
        doc["stability_left_min"] = float(marchenko.stability_factors(k.kbar).min())
        doc["stability_right_min"] = float(marchenko.stability_factors(k.m).min())
    if res.scattering:
        doc["scattering"] = scatmat.summary(res.scattering)
    if res.spectral is not None:
        doc["bound_state_count"] = len(res.spectral.exponents)
    return doc


def run_pipeline(cfg: dict, out=None, stages=("kernels", "spectral", "scattering")) -> PipelineResult:
    """Run the requested stages and write their outputs under `out` (if given)."""
    res = PipelineResult()
    out_dir = Path(out) if out is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        res.files.append(write_config(cfg, out_dir))
    grid = make_grid(cfg, notes=res.notes)
    res.kernels = compute_kernels(grid, res.notes)
    emit = cfg["emit"]
    if out_dir is not None and (emit["omega"] or "kernels" in stages):
        res.files += write_kernels(res.kernels, out_dir, bool(emit["kernels"]))
    if "spectral" in stages:
        res.spectral = compute_spectral(res.kernels.omega_left, res.kernels.omega_right,
                                        cfg["pencil"], res.notes)
        if out_dir is not None and emit["spectral"]:
            res.files.append(res.spectral.to_json(out_dir / "spectral.json"))
    if "scattering" in stages:
        res.scattering = compute_scattering(res.kernels, cfg["lambda_grid"], res.notes)
        if out_dir is not None and emit["scattering"]:
            res.files.append(scatmat.write_csv(res.scattering, out_dir / "scattering.csv"))
            res.files.append(scatmat.write_json(res.scattering, out_dir / "scattering.json"))
    if out_dir is not None:
        path = out_dir / "report.json"
        path.write_text(json.dumps(_report(res), indent=1, sort_keys=True))
        res.files.append(path)
    return res


def spectral_from_files(left_csv, right_csv, pcfg: dict, out=None) -> pencil.SpectralData:
    """Spectral data from exported Marchenko kernel CSV files."""
    try:
        om_l = MarchenkoKernel.from_csv(left_csv, "left")
        om_r = MarchenkoKernel.from_csv(right_csv, "right") if right_csv else None
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read kernel samples: {exc}") from exc
    notes: list = []
    sd = compute_spectral(om_l, om_r, pcfg, notes)
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        sd.to_json(Path(out) / "spectral.json")
    return sd


REFERENCES = ("test1", "test1-fitted", "test2")


def reference_kernel(cfg: dict, reference: str, ref_nx: int = 4800):
    """Closed-form (or high-resolution fitted) left kernel for a convergence study."""
    model = build_model(cfg["potential"])
    if reference == "test2":
        if not isinstance(model, MultisolitonParams):
            raise ConfigError("reference 'test2' needs a multisoliton potential")
        return marchenko.multisoliton_left_kernel(model)
    if reference in ("test1", "test1-fitted"):
        if not isinstance(model, SolitonParams):
            raise ConfigError(f"reference {reference!r} needs a soliton potential")
        if model.a != model.p:
            raise ConfigError("soliton references need a = p (single-exponential kernel)")
        if reference == "test1":
            return marchenko.soliton_left_kernel(model)
        grid = make_grid(cfg, nx=ref_nx)
        with _stage("reference"):
            om = marchenko.recover_left(solve_auxiliary(grid, KernelKind.KBAR))
        amp = marchenko.fit_amplitude(om, model.a)
        log.info("fitted reference amplitude %.12g at nx=%d", amp, ref_nx)
        rate = model.a
        return lambda a: amp * np.exp(-rate * np.asarray(a, dtype=float))
    raise ConfigError(f"unknown reference {reference!r}; choose from {REFERENCES}")


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    error: float
    ratio: float | None
    order: float | None

    @property
    def ratio_per_doubling(self) -> float | None:
        return None if self.order is None else 2.0 ** self.order


def run_convergence(cfg: dict, n_list, reference: str, out=None, ref_nx: int = 4800) -> list:
    """Relative sup-norm error of the left kernel for each nx in n_list.

    `ratio` is E(previous n)/E(n); `order` is log(ratio)/log(n/previous n),
    and ratio_per_doubling = 2**order compares unequal steps on one scale.
    """
    ref = reference_kernel(cfg, reference, ref_nx)
    rows: list[ConvergenceRow] = []
    for n in n_list:
        grid = make_grid(cfg, nx=int(n))
        with _stage("volterra"):
            kbar = solve_auxiliary(grid, KernelKind.KBAR)
        with _stage("marchenko"):
            om = marchenko.recover_left(kbar, grid)
            err = marchenko.relative_error(om, ref)
        if rows:
            prev = rows[-1]
            ratio = prev.error / err if err > 0 else math.inf
            order = math.log(ratio) / math.log(n / prev.n) if n != prev.n and ratio > 0 else None
        else:
            ratio = order = None
        rows.append(ConvergenceRow(int(n), err, ratio, order))
        log.info("n=%d E=%.4e", n, err)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        write_config(cfg, out)
        write_convergence_csv(rows, out / "convergence.csv")
    return rows


def write_convergence_csv(rows, path) -> Path:
    path = Path(path)
    fmt = lambda v: "" if v is None else repr(float(v))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "error", "ratio", "order", "ratio_per_doubling"])
        for r in rows:
            w.writerow([r.n, fmt(r.error), fmt(r.ratio), fmt(r.order), fmt(r.ratio_per_doubling)])
    return path


def write_table(grid: PotentialGrid, path) -> Path:
    """Two-column text (x, u) with round-trip exact float formatting."""
    path = Path(path)
    with open(path, "w") as fh:
        fh.write("# x u0\n")
        for x, u in zip(grid.x, grid.samples):
            fh.write(f"{float(x)!r} {float(u)!r}\n")
    return path
