"""Diagonal trajectory control: the per-component speed factors of the flow.

Each function returns the diagonal of the inverse capacitance matrix, i.e.
the factor multiplying ``-grad`` in ``dx/dt = -Z^{-1} grad f(x)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Matrix, Vector

CONTROL_KINDS = ("identity", "full_hessian", "approximate")


@dataclass(frozen=True)
class ControlPolicy:
    kind: str = "full_hessian"
    delta: float = 1.0
    normalize: bool = True
    cap: float = 10.0

    def __post_init__(self):
        if self.kind not in CONTROL_KINDS:
            raise ValueError(f"unknown control kind {self.kind!r}")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not self.cap > 1:
            raise ValueError("cap must exceed 1")


@dataclass
class ControlState:
    """Lagged gradient and step of the previous accepted move."""

    prev_gradient: Optional[Vector] = None
    prev_dt: Optional[float] = None

    def __post_init__(self):
        if (self.prev_gradient is None) != (self.prev_dt is None):
            raise ValueError("prev_gradient and prev_dt must be given together")
        if self.prev_dt is not None and not self.prev_dt > 0:
            raise ValueError("prev_dt must be positive")

    def update(self, gradient: Vector, dt: float) -> None:
        self.prev_gradient = np.array(gradient, dtype=np.float64)
        self.prev_dt = float(dt)


@dataclass
class ControlDiagnostics:
    nonfinite: int = 0


def identity_control(n: int) -> Vector:
    if n < 1:
        raise ValueError("dimension must be at least 1")
    return np.ones(n)


def normalize_diag(raw: Vector, cap: float) -> Vector:
    """Rescale so the largest entry equals ``cap``; ratios are preserved.

    A non-positive maximum leaves ``raw`` untouched for downstream flooring.
    """
    if not cap > 1:
        raise ValueError("cap must exceed 1")
    raw = np.asarray(raw, dtype=np.float64)
    m = np.max(raw)
    if m <= 0:
        return raw.copy()
    # hugely negative entries may overflow to -inf; flooring maps them to 1 anyway
    with np.errstate(over="ignore"):
        return (raw / m) * cap


def full_control_raw(grad: Vector, hess: Matrix, delta: float = 1.0) -> Vector:
    """``grad_i * (H grad)_i / delta`` before normalization and flooring."""
    grad = np.asarray(grad, dtype=np.float64)
    hess = np.asarray(hess, dtype=np.float64)
    if hess.shape != (grad.size, grad.size):
        raise ValueError(f"Hessian shape {hess.shape} does not match gradient length {grad.size}")
    with np.errstate(over="ignore", invalid="ignore"):
        return grad * (hess @ grad) / delta


def approx_control_raw(grad: Vector, state: ControlState, delta: float = 1.0) -> Optional[Vector]:
    """``-grad_i * a_i / delta`` with ``a`` the backward-difference gradient rate.

    Returns None when no previous gradient is available.
    """
    if state.prev_gradient is None:
        return None
    grad = np.asarray(grad, dtype=np.float64)
    if state.prev_gradient.shape != grad.shape:
        raise ValueError("previous gradient length differs from current gradient")
    with np.errstate(over="ignore", invalid="ignore"):
        rate = (grad - state.prev_gradient) / state.prev_dt
        return -grad * rate / delta


def _finish(raw: Vector, policy: ControlPolicy, diagnostics: Optional[ControlDiagnostics]):
    bad = ~np.isfinite(raw)
    if bad.any():
        if diagnostics is not None:
            diagnostics.nonfinite += int(bad.sum())
        raw = np.where(bad, 0.0, raw)
    if policy.normalize:
        raw = normalize_diag(raw, policy.cap)
    return raw, bad


def full_control_diag(
    grad: Vector,
    hess: Matrix,
    policy: ControlPolicy,
    diagnostics: Optional[ControlDiagnostics] = None,
) -> Vector:
    raw = full_control_raw(grad, hess, policy.delta)
    raw, bad = _finish(raw, policy, diagnostics)
    z = np.maximum(raw, 1.0)
    z[bad] = 1.0
    return z


def approx_control_diag(
    grad: Vector,
    state: ControlState,
    policy: ControlPolicy,
    diagnostics: Optional[ControlDiagnostics] = None,
) -> Vector:
    raw = approx_control_raw(grad, state, policy.delta)
    if raw is None:
        return identity_control(np.asarray(grad).size)
    raw, bad = _finish(raw, policy, diagnostics)
    z = np.sqrt(np.maximum(raw, 1.0))
    z[bad] = 1.0
    return z


def stored_charge_sq(grad: Vector) -> float:
    """Squared charge on the adjoint-circuit capacitors, equal to ``|grad|^2``."""
    grad = np.asarray(grad, dtype=np.float64)
    return float(grad @ grad)
