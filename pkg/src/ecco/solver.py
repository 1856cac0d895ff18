"""Outer loop of the circuit-controlled optimizer and its minibatch variant."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .control import (
    ControlDiagnostics,
    ControlPolicy,
    ControlState,
    approx_control_diag,
    full_control_diag,
    identity_control,
    stored_charge_sq,
)
from .core import CountedProblem, EvalCounters, ObjectiveProblem, Vector, as_vector
from .stepper import StepperConfig, eatss, initial_dt

STATUSES = ("converged", "max_iters", "step_floored")


@dataclass(frozen=True)
class SolverConfig:
    control: ControlPolicy = field(default_factory=ControlPolicy)
    stepper: StepperConfig = field(default_factory=StepperConfig)
    eps: float = 1e-4
    max_iters: int = 100_000
    record_every: int = 1
    seed: int = 0
    fd_hessian: bool = False

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.record_every < 1:
            raise ValueError("record_every must be at least 1")


@dataclass
class IterationRecord:
    """Telemetry for one accepted step (``iter=0`` is the starting point).

    ``x``, ``grad`` and ``zdiag`` are kept in memory only; they are not part
    of the serialized trace.
    """

    iter: int
    t: float
    dt: float
    f: float
    grad_norm: float
    max_lte: float
    charge_sq: float
    grow_iters: int = 0
    shrink_iters: int = 0
    f_full: Optional[float] = None
    x: Optional[Vector] = field(default=None, repr=False, compare=False)
    grad: Optional[Vector] = field(default=None, repr=False, compare=False)
    zdiag: Optional[Vector] = field(default=None, repr=False, compare=False)


@dataclass
class RunReport:
    status: str
    x_final: Vector
    f_final: float
    grad_norm_final: float
    iters: int
    counters: EvalCounters
    trace: list[IterationRecord]
    config_echo: dict
    diverged: bool = False
    nonfinite_control: int = 0

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def converged(f_prev: float, f_curr: float, eps: float) -> bool:
    return abs(f_prev - f_curr) <= eps


def config_echo(cfg: SolverConfig, **extra) -> dict:
    echo = {"method": "ecco", **asdict(cfg)}
    echo.update(extra)
    return echo


def _check_start(problem: ObjectiveProblem, x0) -> Vector:
    x = as_vector(x0)
    if x.size != problem.dim:
        raise ValueError(f"x0 has length {x.size} but {problem.name} has dimension {problem.dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError("x0 must be finite")
    return x


class _Controller:
    """Chooses the control diagonal at each trajectory point."""

    def __init__(self, prob: CountedProblem, cfg: SolverConfig):
        self.prob = prob
        self.policy = cfg.control
        self.state = ControlState()
        self.diagnostics = ControlDiagnostics()
        self.use_fd = False
        if self.policy.kind == "full_hessian" and not prob.has_hessian:
            if not cfg.fd_hessian:
                raise ValueError(
                    f"full_hessian control needs a Hessian; {prob.problem.name} has none "
                    "(enable fd_hessian to difference the gradient)"
                )
            self.use_fd = True

    def __call__(self, x: Vector, grad: Vector) -> Vector:
        kind = self.policy.kind
        if kind == "identity":
            return identity_control(grad.size)
        if kind == "full_hessian":
            hess = self.prob.fd_hessian(x) if self.use_fd else self.prob.hessian(x)
            return full_control_diag(grad, hess, self.policy, self.diagnostics)
        return approx_control_diag(grad, self.state, self.policy, self.diagnostics)

    def accepted(self, grad_before: Vector, dt: float) -> None:
        self.state.update(grad_before, dt)


def _run(problem, x0, cfg: SolverConfig, n_iters: int, batch_of=None, full_every=False) -> RunReport:
    x = _check_start(problem, x0)
    prob = CountedProblem(problem)
    ctrl = _Controller(prob, cfg)

    batch = batch_of(0) if batch_of else None
    f = prob.value(x, batch)
    g = prob.gradient(x, batch)

    def record(it, t, dt, f, g, x, z, lte=0.0, grow=0, shrink=0):
        f_full = prob.value(x) if full_every else None
        trace.append(IterationRecord(
            iter=it, t=t, dt=dt, f=f, grad_norm=float(np.linalg.norm(g)), max_lte=lte,
            charge_sq=stored_charge_sq(g), grow_iters=grow, shrink_iters=shrink,
            f_full=f_full, x=x.copy(), grad=g.copy(), zdiag=None if z is None else z.copy(),
        ))

    trace: list[IterationRecord] = []
    record(0, 0.0, 0.0, f, g, x, None)

    t = 0.0
    dt = None
    status = "max_iters"
    it = 0
    while it < n_iters:
        it += 1
        if batch_of and it > 1:
            batch = batch_of(it - 1)
            f = prob.value(x, batch)
            g = prob.gradient(x, batch)
        z = ctrl(x, g)
        if dt is None:
            dt = initial_dt(x, g, z, cfg.stepper)
        out = eatss(prob, x, f, g, z, dt, cfg.stepper, batch=batch)
        if out.floored:
            status = "step_floored"
            if trace[-1].iter != it - 1:
                record(it - 1, t, dt, f, g, x, z)
            break
        ctrl.accepted(g, out.dt)
        f_prev = f
        x, f, g, dt = out.x_next, out.f_next, out.grad_next, out.dt
        t += dt
        done = converged(f_prev, f, cfg.eps)
        if it % cfg.record_every == 0 or done or it == n_iters:
            record(it, t, dt, f, g, x, z, out.max_lte, out.grow_iters, out.shrink_iters)
        if done:
            status = "converged"
            break

    if batch_of:
        f_final = prob.value(x)
        g_final = prob.gradient(x)
    else:
        f_final, g_final = f, g
    return RunReport(
        status=status,
        x_final=x,
        f_final=float(f_final),
        grad_norm_final=float(np.linalg.norm(g_final)),
        iters=it,
        counters=prob.counters,
        trace=trace,
        config_echo=config_echo(cfg, problem=problem.name),
        nonfinite_control=ctrl.diagnostics.nonfinite,
    )


def ecco_minimize(problem: ObjectiveProblem, x0, cfg: Optional[SolverConfig] = None) -> RunReport:
    """Integrate the controlled gradient flow with error-aware forward Euler.

    Stops when successive objective values differ by at most ``cfg.eps``,
    after ``cfg.max_iters`` steps, or when the step search hits its floor.
    """
    cfg = cfg or SolverConfig()
    return _run(problem, x0, cfg, cfg.max_iters)


def ecco_minibatch(
    problem: ObjectiveProblem,
    x0,
    cfg: Optional[SolverConfig] = None,
    epochs: int = 1,
    batches_per_epoch: int = 1,
) -> RunReport:
    """Same loop with every gradient and objective taken on the current batch.

    One outer iteration consumes one batch; batch ids run ``0, 1, 2, ...``
    offset by ``cfg.seed * epochs * batches_per_epoch`` so distinct seeds see
    distinct batch sequences. Records also carry the full-data objective.
    """
    cfg = cfg or SolverConfig()
    if problem.batch_gradient is None or problem.batch_value is None:
        raise ValueError(f"{problem.name} has no batch sampling")
    if epochs < 1 or batches_per_epoch < 1:
        raise ValueError("epochs and batches_per_epoch must be positive")
    total = epochs * batches_per_epoch
    offset = cfg.seed * total
    n_iters = min(total, cfg.max_iters)
    report = _run(problem, x0, cfg, n_iters, batch_of=lambda k: offset + k, full_every=True)
    report.config_echo.update(epochs=epochs, batches_per_epoch=batches_per_epoch)
    return report
