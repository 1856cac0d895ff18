"""Gradient-flow optimization with circuit-derived diagonal control."""

from .baselines import BaselineConfig, adam, gd_armijo, gd_fixed, grid_search, rmsprop
from .control import (
    ControlPolicy,
    ControlState,
    approx_control_diag,
    full_control_diag,
    identity_control,
    normalize_diag,
    stored_charge_sq,
)
from .core import CountedProblem, EvalCounters, ObjectiveProblem, fd_gradient, fd_hessian
from .problems import catalog, demo_quadratic, toy_mlp
from .solver import IterationRecord, RunReport, SolverConfig, converged, ecco_minibatch, ecco_minimize
from .stepper import StepOutcome, StepperConfig, eatss, initial_dt, lte, trial_step

__all__ = [
    "BaselineConfig", "ControlPolicy", "ControlState", "CountedProblem", "EvalCounters",
    "IterationRecord", "ObjectiveProblem", "RunReport", "SolverConfig", "StepOutcome",
    "StepperConfig", "adam", "approx_control_diag", "catalog", "converged", "demo_quadratic",
    "eatss", "ecco_minibatch", "ecco_minimize", "fd_gradient", "fd_hessian", "full_control_diag",
    "gd_armijo", "gd_fixed", "grid_search", "identity_control", "initial_dt", "lte",
    "normalize_diag", "rmsprop", "stored_charge_sq", "toy_mlp", "trial_step",
]
