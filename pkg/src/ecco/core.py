"""Objective contract, evaluation counting and finite-difference oracles."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

Vector = np.ndarray
Matrix = np.ndarray


class OracleError(ArithmeticError):
    """A finite-difference probe produced a non-finite value."""


def as_vector(x, dim: Optional[int] = None) -> Vector:
    """Coerce ``x`` to a 1-D float64 array, optionally checking its length."""
    v = np.array(x, dtype=np.float64).reshape(-1)
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"expected a vector of length {dim}, got {v.shape[0]}")
    return v


@dataclass(frozen=True)
class ObjectiveProblem:
    """An objective with gradient and optional Hessian / minibatch access.

    ``batch_value`` and ``batch_gradient`` take ``(x, batch_id)`` where
    ``batch_id`` is a non-negative integer naming a deterministic sample batch.
    """

    name: str
    dim: int
    value: Callable[[Vector], float]
    gradient: Callable[[Vector], Vector]
    hessian: Optional[Callable[[Vector], Matrix]] = None
    batch_value: Optional[Callable[[Vector, int], float]] = None
    batch_gradient: Optional[Callable[[Vector, int], Vector]] = None
    known_minima: Sequence[tuple[Vector, float]] = ()
    default_starts: Sequence[Vector] = ()
    unimodal: bool = False

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")


@dataclass
class EvalCounters:
    n_f: int = 0
    n_grad: int = 0
    n_hess: int = 0

    def as_dict(self) -> dict:
        return {"n_f": self.n_f, "n_grad": self.n_grad, "n_hess": self.n_hess}


@dataclass
class CountedProblem:
    """Wraps a problem and counts every evaluation issued through it."""

    problem: ObjectiveProblem
    counters: EvalCounters = field(default_factory=EvalCounters)

    @property
    def dim(self) -> int:
        return self.problem.dim

    @property
    def has_hessian(self) -> bool:
        return self.problem.hessian is not None

    def value(self, x: Vector, batch: Optional[int] = None) -> float:
        self.counters.n_f += 1
        if batch is None:
            return float(self.problem.value(x))
        return float(self.problem.batch_value(x, batch))

    def gradient(self, x: Vector, batch: Optional[int] = None) -> Vector:
        self.counters.n_grad += 1
        if batch is None:
            return np.asarray(self.problem.gradient(x), dtype=np.float64)
        return np.asarray(self.problem.batch_gradient(x, batch), dtype=np.float64)

    def hessian(self, x: Vector) -> Matrix:
        self.counters.n_hess += 1
        return np.asarray(self.problem.hessian(x), dtype=np.float64)

    def fd_hessian(self, x: Vector, h: float = 1e-5) -> Matrix:
        # two gradient probes per coordinate
        self.counters.n_grad += 2 * self.dim
        return fd_hessian(self.problem, x, h)


def fd_gradient(problem: ObjectiveProblem, x, h: float = 1e-5) -> Vector:
    """Central-difference gradient of ``problem.value`` at ``x``."""
    if not h > 0:
        raise ValueError("h must be positive")
    x = as_vector(x)
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    g = np.empty_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        with np.errstate(all="ignore"):
            fp = problem.value(xp)
            fm = problem.value(xm)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise OracleError(f"non-finite objective at probe {i} around x={x.tolist()}")
        g[i] = (fp - fm) / (2.0 * h)
    return g


def fd_hessian(problem: ObjectiveProblem, x, h: float = 1e-5) -> Matrix:
    """Symmetrized central differences of the analytic gradient."""
    if not h > 0:
        raise ValueError("h must be positive")
    x = as_vector(x)
    n = x.size
    H = np.empty((n, n))
    for j in range(n):
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        with np.errstate(all="ignore"):
            gp = np.asarray(problem.gradient(xp), dtype=np.float64)
            gm = np.asarray(problem.gradient(xm), dtype=np.float64)
        if not (np.all(np.isfinite(gp)) and np.all(np.isfinite(gm))):
            raise OracleError(f"non-finite gradient at probe {j} around x={x.tolist()}")
        H[:, j] = (gp - gm) / (2.0 * h)
    return 0.5 * (H + H.T)
