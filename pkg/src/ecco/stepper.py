"""Forward-Euler steps with an error-aware step-size search.

The search grows the step while the local truncation error stays under
``eta`` and the objective keeps falling, then shrinks until both hold.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import CountedProblem, ObjectiveProblem, Vector


@dataclass(frozen=True)
class StepperConfig:
    eta: float = 0.1
    alpha: float = 0.9
    beta: float = 1.1
    dt_fallback: float = 1e-2
    dt_min: float = 1e-16
    dt_max: float = 1e6
    max_grow: int = 200
    max_shrink: int = 400

    def __post_init__(self):
        if not 0 < self.alpha < 1 < self.beta:
            raise ValueError("need 0 < alpha < 1 < beta")
        if not 0 < self.dt_min < self.dt_fallback < self.dt_max:
            raise ValueError("need 0 < dt_min < dt_fallback < dt_max")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.max_grow < 0 or self.max_shrink < 0:
            raise ValueError("loop caps must be non-negative")


@dataclass(frozen=True)
class StepOutcome:
    dt: float
    x_next: Vector
    f_next: float
    grad_next: Vector
    max_lte: float
    grow_iters: int
    shrink_iters: int
    floored: bool = False


def trial_step(x: Vector, zdiag: Vector, grad: Vector, dt: float) -> Vector:
    """One forward-Euler step of the scaled gradient flow."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    x = np.asarray(x, dtype=np.float64)
    if not (x.shape == np.shape(zdiag) == np.shape(grad)):
        raise ValueError("x, zdiag and grad must have equal lengths")
    with np.errstate(over="ignore", invalid="ignore"):
        return x - dt * np.asarray(zdiag) * np.asarray(grad)


def lte(dt: float, grad_t: Vector, grad_trial: Vector) -> Vector:
    """Elementwise forward-Euler truncation error estimate."""
    grad_t = np.asarray(grad_t, dtype=np.float64)
    grad_trial = np.asarray(grad_trial, dtype=np.float64)
    if grad_t.shape != grad_trial.shape:
        raise ValueError("gradient lengths differ")
    with np.errstate(over="ignore", invalid="ignore"):
        return 0.5 * dt * np.abs(grad_t - grad_trial)


def initial_dt(x0: Vector, grad0: Vector, zdiag0: Vector, cfg: StepperConfig) -> float:
    """Passivity-based first step guess, falling back to ``cfg.dt_fallback``."""
    x0 = np.asarray(x0, dtype=np.float64)
    grad0 = np.asarray(grad0, dtype=np.float64)
    zdiag0 = np.asarray(zdiag0, dtype=np.float64)
    if not (x0.shape == grad0.shape == zdiag0.shape):
        raise ValueError("x0, grad0 and zdiag0 must have equal lengths")
    with np.errstate(all="ignore"):
        num = float(x0 @ grad0)
        den = float(zdiag0 @ grad0)
        cand = num / den if den != 0 else float("nan")
    if np.isfinite(cand) and cfg.dt_min <= cand <= cfg.dt_max:
        return cand
    return cfg.dt_fallback


def _as_counted(problem) -> CountedProblem:
    if isinstance(problem, CountedProblem):
        return problem
    return CountedProblem(problem)


def eatss(
    problem: ObjectiveProblem | CountedProblem,
    x: Vector,
    f_x: float,
    grad_x: Vector,
    zdiag: Vector,
    dt_init: float,
    cfg: StepperConfig,
    batch: Optional[int] = None,
) -> StepOutcome:
    """Largest step under the LTE bound that does not increase the objective.

    ``batch`` selects the minibatch objective; None means the full objective.
    """
    prob = _as_counted(problem)
    dt = min(max(float(dt_init), cfg.dt_min), cfg.dt_max)

    def evaluate(dt):
        xt = trial_step(x, zdiag, grad_x, dt)
        if not np.all(np.isfinite(xt)):
            return xt, np.inf, np.full_like(xt, np.nan), np.inf
        with np.errstate(all="ignore"):
            ft = prob.value(xt, batch)
            gt = prob.gradient(xt, batch)
        if not (np.isfinite(ft) and np.all(np.isfinite(gt))):
            return xt, np.inf, gt, np.inf
        return xt, ft, gt, float(np.max(lte(dt, grad_x, gt)))

    xt, ft, gt, err = evaluate(dt)

    grow = 0
    while err < cfg.eta and ft < f_x and grow < cfg.max_grow and dt < cfg.dt_max:
        dt = min(cfg.beta * dt, cfg.dt_max)
        xt, ft, gt, err = evaluate(dt)
        grow += 1

    shrink = 0
    floored = False
    while err > cfg.eta or ft > f_x or not np.isfinite(ft):
        if shrink >= cfg.max_shrink or dt <= cfg.dt_min:
            floored = True
            break
        dt = max(cfg.alpha * dt, cfg.dt_min)
        xt, ft, gt, err = evaluate(dt)
        shrink += 1

    return StepOutcome(
        dt=dt,
        x_next=xt,
        f_next=float(ft),
        grad_next=gt,
        max_lte=err,
        grow_iters=grow,
        shrink_iters=shrink,
        floored=floored,
    )
