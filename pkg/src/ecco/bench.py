"""Method registry, benchmark manifests, hyperparameter sweeps."""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Optional

from .baselines import BaselineConfig, run_baseline
from .control import ControlPolicy
from .problems import catalog
from .solver import RunReport, SolverConfig, ecco_minimize
from .stepper import StepperConfig
from .traces import trace_to_csv

ECCO_METHODS = {"ecco_full": "full_hessian", "ecco_approx": "approximate", "ecco_identity": "identity"}
BASELINE_METHODS = ("gd_fixed", "gd_armijo", "adam", "rmsprop")
METHODS = tuple(ECCO_METHODS) + BASELINE_METHODS

_POLICY_KEYS = {f.name for f in fields(ControlPolicy)} - {"kind"}
_STEPPER_KEYS = {f.name for f in fields(StepperConfig)}
_BASELINE_KEYS = {f.name for f in fields(BaselineConfig)} - {"method", "eps", "max_iters"}

SWEEP_DOMAINS = {
    "eta": lambda v: v > 0,
    "delta": lambda v: v > 0,
    "lr": lambda v: v > 0,
    "beta1": lambda v: 0 <= v < 1,
    "beta2": lambda v: 0 <= v < 1,
    "decay": lambda v: 0 <= v < 1,
    "armijo_c": lambda v: 0 < v < 1,
}

SUMMARY_COLUMNS = ("index", "problem", "start", "method", "status", "iters", "f_final",
                   "grad_norm_final", "n_f", "n_grad", "n_hess", "wall_ms")


def ecco_config(kind: str, params: dict, eps: float = 1e-4, max_iters: int = 100_000,
                seed: int = 0) -> SolverConfig:
    unknown = set(params) - _POLICY_KEYS - _STEPPER_KEYS - {"fd_hessian"}
    if unknown:
        raise ValueError(f"unknown ECCO parameters: {sorted(unknown)}")
    policy = ControlPolicy(kind=kind, **{k: v for k, v in params.items() if k in _POLICY_KEYS})
    stepper = StepperConfig(**{k: v for k, v in params.items() if k in _STEPPER_KEYS})
    return SolverConfig(control=policy, stepper=stepper, eps=eps, max_iters=max_iters, seed=seed,
                        fd_hessian=bool(params.get("fd_hessian", False)))


def run_method(method: str, problem, x0, params: Optional[dict] = None,
               eps: float = 1e-4, max_iters: int = 100_000, seed: int = 0) -> RunReport:
    params = dict(params or {})
    if method in ECCO_METHODS:
        cfg = ecco_config(ECCO_METHODS[method], params, eps, max_iters, seed)
        report = ecco_minimize(problem, x0, cfg)
        report.config_echo["method"] = method
        return report
    if method in BASELINE_METHODS:
        unknown = set(params) - _BASELINE_KEYS
        if unknown:
            raise ValueError(f"unknown {method} parameters: {sorted(unknown)}")
        return run_baseline(problem, x0, BaselineConfig(method=method, eps=eps, max_iters=max_iters, **params))
    raise ValueError(f"unknown method {method!r}; known: {', '.join(METHODS)}")


@dataclass
class ManifestEntry:
    problem: str
    x0: list
    method: str
    dim: Optional[int] = None
    config: dict = field(default_factory=dict)
    stop: dict = field(default_factory=dict)
    seed: int = 0


def load_manifest(path) -> list[ManifestEntry]:
    doc = json.loads(Path(path).read_text())
    return [ManifestEntry(**e) for e in doc.get("entries", [])]


def bundled_manifest_path() -> Path:
    return Path(str(resources.files("ecco") / "data" / "testfuncs.json"))


def _run_entry(args):
    index, entry = args
    row = {"index": index, "problem": entry.problem,
           "start": ",".join(repr(float(v)) for v in entry.x0), "method": entry.method}
    t0 = time.perf_counter()
    try:
        problem = catalog(entry.problem, entry.dim)
        report = run_method(entry.method, problem, entry.x0, entry.config,
                            eps=entry.stop.get("eps", 1e-4),
                            max_iters=entry.stop.get("max_iters", 100_000), seed=entry.seed)
    except Exception as exc:  # noqa: BLE001 - row-level isolation
        row.update(status="error", iters="", f_final="", grad_norm_final="",
                   n_f="", n_grad="", n_hess="", wall_ms="", error=str(exc))
        return row, None
    status = "diverged" if report.diverged else report.status
    row.update(status=status, iters=report.iters, f_final=report.f_final,
               grad_norm_final=report.grad_norm_final, **report.counters.as_dict(),
               wall_ms=round(1000 * (time.perf_counter() - t0), 3))
    return row, trace_to_csv(report.trace)


def run_bench(entries: list[ManifestEntry], workers: int = 1, out_dir: Optional[Path] = None) -> list[dict]:
    """Run every entry; rows come back in manifest order regardless of ``workers``."""
    jobs = list(enumerate(entries))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_entry, jobs))
    else:
        results = [_run_entry(j) for j in jobs]
    if out_dir is not None:
        tdir = Path(out_dir) / "traces"
        tdir.mkdir(parents=True, exist_ok=True)
        for row, csv_text in results:
            if csv_text is not None:
                (tdir / f"{row['index']:03d}_{row['problem']}_{row['method']}.csv").write_text(csv_text)
    return [row for row, _ in results]


def summary_csv(rows: list[dict]) -> str:
    lines = [",".join(SUMMARY_COLUMNS)]
    for row in rows:
        cells = []
        for c in SUMMARY_COLUMNS:
            v = row.get(c, "")
            if isinstance(v, float):
                v = repr(v)
            v = str(v)
            cells.append(f'"{v}"' if "," in v else v)
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def sweep(method: str, problem, x0, parameter: str, values, base: Optional[dict] = None,
          eps: float = 1e-4, max_iters: int = 100_000) -> list[dict]:
    """One run per value of ``parameter``, all else held at ``base``."""
    if parameter not in SWEEP_DOMAINS:
        raise ValueError(f"cannot sweep {parameter!r}; choose from {', '.join(SWEEP_DOMAINS)}")
    rows = []
    for v in values:
        row = {"parameter": parameter, "value": v}
        if not (isinstance(v, (int, float)) and math.isfinite(v) and SWEEP_DOMAINS[parameter](v)):
            row.update(status="error", error=f"{parameter}={v} outside its domain")
            rows.append(row)
            continue
        try:
            rep = run_method(method, problem, x0, {**(base or {}), parameter: v}, eps, max_iters)
        except ValueError as exc:
            row.update(status="error", error=str(exc))
            rows.append(row)
            continue
        row.update(status=rep.status, iters=rep.iters, f_final=rep.f_final,
                   converged=rep.status == "converged", diverged=rep.diverged)
        rows.append(row)
    return rows
