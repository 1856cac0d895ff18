"""Comparison optimizers sharing the solver's report format, and grid search."""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .control import stored_charge_sq
from .core import CountedProblem, ObjectiveProblem
from .solver import IterationRecord, RunReport, _check_start, converged

METHODS = ("gd_fixed", "gd_armijo", "adam", "rmsprop")
MAX_ARMIJO_SHRINKS = 200
DIVERGENCE_FACTOR = 1e12


@dataclass(frozen=True)
class BaselineConfig:
    method: str = "gd_fixed"
    lr: float = 0.01
    armijo_c: float = 1e-4
    armijo_shrink: float = 0.5
    alpha0: float = 1.0
    beta1: float = 0.9
    beta2: float = 0.999
    decay: float = 0.9
    eps_div: float = 1e-8
    eps: float = 1e-4
    max_iters: int = 100_000

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.max_iters < 1 or not self.eps > 0:
            raise ValueError("need max_iters >= 1 and eps > 0")
        if self.method in ("gd_fixed", "adam", "rmsprop") and not self.lr > 0:
            raise ValueError("lr must be positive")
        if self.method == "gd_armijo":
            if not 0 < self.armijo_c < 1 or not 0 < self.armijo_shrink < 1:
                raise ValueError("armijo_c and armijo_shrink must lie in (0, 1)")
            if not self.alpha0 > 0:
                raise ValueError("alpha0 must be positive")
        if self.method == "adam" and not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if self.method == "rmsprop" and not 0 <= self.decay < 1:
            raise ValueError("decay must lie in [0, 1)")


def adam_update(x, g, m, v, k, lr, beta1, beta2, eps_div):
    """One bias-corrected Adam step; ``k`` counts from 1."""
    m = beta1 * m + (1 - beta1) * g
    v = beta2 * v + (1 - beta2) * g * g
    m_hat = m / (1 - beta1**k)
    v_hat = v / (1 - beta2**k)
    return x - lr * m_hat / (np.sqrt(v_hat) + eps_div), m, v


def rmsprop_update(x, g, v, lr, decay, eps_div):
    v = decay * v + (1 - decay) * g * g
    return x - lr * g / (np.sqrt(v) + eps_div), v


def armijo_step(prob, x, f, g, cfg: BaselineConfig):
    """Largest ``alpha0 * shrink^k`` meeting sufficient decrease, or None."""
    gg = float(g @ g)
    a = cfg.alpha0
    for k in range(MAX_ARMIJO_SHRINKS + 1):
        xt = x - a * g
        with np.errstate(all="ignore"):
            ft = prob.value(xt)
        if np.isfinite(ft) and ft <= f - cfg.armijo_c * a * gg:
            return a, xt, ft, k
        a *= cfg.armijo_shrink
    return None


def _diverged(f, f0):
    return not np.isfinite(f) or abs(f) > DIVERGENCE_FACTOR * (1 + abs(f0))


def run_baseline(problem: ObjectiveProblem, x0, cfg: BaselineConfig) -> RunReport:
    x = _check_start(problem, x0)
    prob = CountedProblem(problem)
    f0 = f = prob.value(x)
    g = prob.gradient(x)
    trace = [IterationRecord(0, 0.0, 0.0, f, float(np.linalg.norm(g)), float("nan"),
                             stored_charge_sq(g), x=x.copy(), grad=g.copy())]
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    t = 0.0
    status = "max_iters"
    diverged = False
    it = 0
    while it < cfg.max_iters:
        it += 1
        shrinks = 0
        with np.errstate(all="ignore"):
            if cfg.method == "gd_fixed":
                step = cfg.lr
                x_new = x - cfg.lr * g
            elif cfg.method == "gd_armijo":
                found = armijo_step(prob, x, f, g, cfg)
                if found is None:
                    status = "step_floored"
                    it -= 1
                    break
                step, x_new, _, shrinks = found
            elif cfg.method == "adam":
                step = cfg.lr
                x_new, m, v = adam_update(x, g, m, v, it, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps_div)
            else:
                step = cfg.lr
                x_new, v = rmsprop_update(x, g, v, cfg.lr, cfg.decay, cfg.eps_div)
            f_new = prob.value(x_new) if np.all(np.isfinite(x_new)) else float("inf")
            g_new = prob.gradient(x_new) if np.isfinite(f_new) else np.full_like(x, np.nan)
        f_prev = f
        x, f, g = x_new, float(f_new), g_new
        t += step
        trace.append(IterationRecord(it, t, step, f, float(np.linalg.norm(g)), float("nan"),
                                     stored_charge_sq(g), 0, shrinks, x=x.copy(), grad=g.copy()))
        if _diverged(f, f0):
            diverged = True
            break
        if converged(f_prev, f, cfg.eps):
            status = "converged"
            break
    return RunReport(
        status=status,
        x_final=x,
        f_final=float(f),
        grad_norm_final=float(np.linalg.norm(g)),
        iters=it,
        counters=prob.counters,
        trace=trace,
        config_echo={**asdict(cfg), "problem": problem.name},
        diverged=diverged,
    )


def gd_fixed(problem, x0, cfg: BaselineConfig) -> RunReport:
    return run_baseline(problem, x0, replace(cfg, method="gd_fixed"))


def gd_armijo(problem, x0, cfg: BaselineConfig) -> RunReport:
    return run_baseline(problem, x0, replace(cfg, method="gd_armijo"))


def adam(problem, x0, cfg: BaselineConfig) -> RunReport:
    return run_baseline(problem, x0, replace(cfg, method="adam"))


def rmsprop(problem, x0, cfg: BaselineConfig) -> RunReport:
    return run_baseline(problem, x0, replace(cfg, method="rmsprop"))


# --- grid search ------------------------------------------------------------

def _frange(start, stop, step):
    n = int(round((stop - start) / step))
    return [round(start + i * step, 10) for i in range(n + 1)]


LR_GRID = _frange(0.001, 0.996, 0.005)
# 1.0 is excluded from the moment/decay grids: those updates need values in [0, 1).
BETA_GRID = [b for b in _frange(0.7, 1.0, 0.01) if b < 1]
DECAY_GRID = [d for d in _frange(0.1, 1.0, 0.005) if d < 1]
ARMIJO_GRID = [1e-5, 1e-4, 1e-3, 1e-2]

PRESETS = {
    "gd_paper": ("gd_fixed", {"lr": LR_GRID}),
    "armijo_paper": ("gd_armijo", {"armijo_c": ARMIJO_GRID}),
    "adam_paper": ("adam", {"lr": LR_GRID, "beta1": BETA_GRID, "beta2": BETA_GRID}),
    "rmsprop_paper": ("rmsprop", {"lr": LR_GRID, "decay": DECAY_GRID}),
}


@dataclass
class GridSearchResult:
    best: Optional[BaselineConfig]
    table: list[dict] = field(default_factory=list)

    @property
    def all_diverged(self) -> bool:
        return self.best is None


def grid_search(
    method: str,
    problem: ObjectiveProblem,
    x0,
    grids: dict[str, Sequence[float]],
    budget_per_point: int = 1000,
    base: Optional[BaselineConfig] = None,
) -> GridSearchResult:
    """Run every grid point and keep the lowest final objective.

    Ties go to fewer iterations, then to the earlier point in declared grid
    order. Diverged points never win; if all diverge ``best`` is None.
    """
    if not grids or any(len(v) == 0 for v in grids.values()):
        raise ValueError("grids must be non-empty")
    base = base or BaselineConfig(method=method)
    names = list(grids)
    table = []
    best_key = None
    best_cfg = None
    for idx, values in enumerate(itertools.product(*(grids[k] for k in names))):
        params = dict(zip(names, values))
        cfg = replace(base, method=method, max_iters=budget_per_point, **params)
        rep = run_baseline(problem, x0, cfg)
        table.append({**params, "f_final": rep.f_final, "iters": rep.iters,
                      "status": rep.status, "diverged": rep.diverged})
        if rep.diverged or not np.isfinite(rep.f_final):
            continue
        key = (rep.f_final, rep.iters, idx)
        if best_key is None or key < best_key:
            best_key, best_cfg = key, cfg
    return GridSearchResult(best_cfg, table)
