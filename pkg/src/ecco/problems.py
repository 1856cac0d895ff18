"""Test-function catalog with analytic derivatives, plus a toy batched MLP.

Extended Wood is the block form
``100(a^2-b)^2 + (a-1)^2 + 90(c^2-d)^2 + (1-c)^2 + 10(b+d-2)^2 + 0.1(b-d)^2``
over consecutive blocks ``(a, b, c, d)``, minimum 0 at the all-ones vector.
"""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

from .core import ObjectiveProblem, as_vector

KNOWN_MIN_GRAD_TOL = 1e-8


# --- closed forms -----------------------------------------------------------

def _rosenbrock(x):
    a, b = x
    return (1 - a) ** 2 + 100 * (b - a * a) ** 2


def _rosenbrock_grad(x):
    a, b = x
    return np.array([-2 * (1 - a) - 400 * a * (b - a * a), 200 * (b - a * a)])


def _rosenbrock_hess(x):
    a, b = x
    return np.array([[2 - 400 * b + 1200 * a * a, -400 * a], [-400 * a, 200.0]])


def _himmelblau(x):
    a, b = x
    return (a * a + b - 11) ** 2 + (a + b * b - 7) ** 2


def _himmelblau_grad(x):
    a, b = x
    u = a * a + b - 11
    v = a + b * b - 7
    return np.array([4 * a * u + 2 * v, 2 * u + 4 * b * v])


def _himmelblau_hess(x):
    a, b = x
    u = a * a + b - 11
    v = a + b * b - 7
    return np.array([[4 * u + 8 * a * a + 2, 4 * a + 4 * b], [4 * a + 4 * b, 2 + 4 * v + 8 * b * b]])


def _booth(x):
    a, b = x
    return (a + 2 * b - 7) ** 2 + (2 * a + b - 5) ** 2


def _booth_grad(x):
    a, b = x
    u = a + 2 * b - 7
    v = 2 * a + b - 5
    return np.array([2 * u + 4 * v, 4 * u + 2 * v])


def _booth_hess(x):
    return np.array([[10.0, 8.0], [8.0, 10.0]])


def _three_hump(x):
    a, b = x
    return 2 * a**2 - 1.05 * a**4 + a**6 / 6 + a * b + b**2


def _three_hump_grad(x):
    a, b = x
    return np.array([4 * a - 4.2 * a**3 + a**5 + b, a + 2 * b])


def _three_hump_hess(x):
    a, _ = x
    return np.array([[4 - 12.6 * a**2 + 5 * a**4, 1.0], [1.0, 2.0]])


def _rastrigin(x):
    return 10.0 * x.size + float(np.sum(x * x - 10 * np.cos(2 * np.pi * x)))


def _rastrigin_grad(x):
    return 2 * x + 20 * np.pi * np.sin(2 * np.pi * x)


def _rastrigin_hess(x):
    return np.diag(2 + 40 * np.pi**2 * np.cos(2 * np.pi * x))


def _wood_blocks(x):
    return x[0::4], x[1::4], x[2::4], x[3::4]


def _wood(x):
    a, b, c, d = _wood_blocks(x)
    return float(np.sum(
        100 * (a * a - b) ** 2 + (a - 1) ** 2 + 90 * (c * c - d) ** 2 + (1 - c) ** 2
        + 10 * (b + d - 2) ** 2 + 0.1 * (b - d) ** 2
    ))


def _wood_grad(x):
    a, b, c, d = _wood_blocks(x)
    g = np.empty_like(x)
    p = a * a - b
    q = c * c - d
    s = b + d - 2
    r = b - d
    g[0::4] = 400 * a * p + 2 * (a - 1)
    g[1::4] = -200 * p + 20 * s + 0.2 * r
    g[2::4] = 360 * c * q - 2 * (1 - c)
    g[3::4] = -180 * q + 20 * s - 0.2 * r
    return g


def _wood_hess(x):
    a, b, c, d = _wood_blocks(x)
    n = x.size
    H = np.zeros((n, n))
    i = np.arange(0, n, 4)
    H[i, i] = 1200 * a * a - 400 * b + 2
    H[i, i + 1] = H[i + 1, i] = -400 * a
    H[i + 1, i + 1] = 200 + 20 + 0.2
    H[i + 1, i + 3] = H[i + 3, i + 1] = 20 - 0.2
    H[i + 2, i + 2] = 1080 * c * c - 360 * d + 2
    H[i + 2, i + 3] = H[i + 3, i + 2] = -360 * c
    H[i + 3, i + 3] = 180 + 20 + 0.2
    return H


def _demo(x):
    return 2.5 * x[0] ** 2 + x[0]


def _demo_grad(x):
    return np.array([5 * x[0] + 1])


def _demo_hess(x):
    return np.array([[5.0]])


# --- assembly ---------------------------------------------------------------

def _newton_polish(grad, hess, x, steps=5):
    x = np.array(x, dtype=np.float64)
    for _ in range(steps):
        g = grad(x)
        if np.linalg.norm(g) <= 1e-13:
            break
        x = x - np.linalg.solve(hess(x), g)
    return x


def _make(name, dim, f, g, h, minima, starts, unimodal=False) -> ObjectiveProblem:
    known = []
    for point in minima:
        m = _newton_polish(g, h, point)
        gn = float(np.linalg.norm(g(m)))
        if gn > KNOWN_MIN_GRAD_TOL:
            raise RuntimeError(f"{name}: declared minimum {m.tolist()} has gradient norm {gn:.3e}")
        known.append((m, float(f(m))))
    return ObjectiveProblem(
        name=name,
        dim=dim,
        value=lambda x: float(f(np.asarray(x, dtype=np.float64))),
        gradient=lambda x: g(np.asarray(x, dtype=np.float64)),
        hessian=lambda x: h(np.asarray(x, dtype=np.float64)),
        known_minima=tuple(known),
        default_starts=tuple(as_vector(s) for s in starts),
        unimodal=unimodal,
    )


def _three_hump_minima():
    out = [(0.0, 0.0)]
    a = math.sqrt((4.2 + math.sqrt(4.2**2 - 14)) / 2)
    out += [(a, -a / 2), (-a, a / 2)]
    return out


def rosenbrock(n: Optional[int] = None) -> ObjectiveProblem:
    _check_fixed("rosenbrock", n, 2)
    return _make("rosenbrock", 2, _rosenbrock, _rosenbrock_grad, _rosenbrock_hess,
                 [(1.0, 1.0)], [(-2, -2), (0, 0), (-5, -5)], unimodal=True)


def himmelblau(n: Optional[int] = None) -> ObjectiveProblem:
    _check_fixed("himmelblau", n, 2)
    minima = [(3.0, 2.0), (-2.805118, 3.131312), (-3.779310, -3.283186), (3.584428, -1.848126)]
    return _make("himmelblau", 2, _himmelblau, _himmelblau_grad, _himmelblau_hess,
                 minima, [(1, 1), (20, 20), (-5, -5)])


def booth(n: Optional[int] = None) -> ObjectiveProblem:
    _check_fixed("booth", n, 2)
    return _make("booth", 2, _booth, _booth_grad, _booth_hess,
                 [(1.0, 3.0)], [(5, 5), (5, -5), (-2, -2)], unimodal=True)


def three_hump(n: Optional[int] = None) -> ObjectiveProblem:
    _check_fixed("three_hump", n, 2)
    return _make("three_hump", 2, _three_hump, _three_hump_grad, _three_hump_hess,
                 _three_hump_minima(), [(1, 1), (0, -1), (-1, -1)], unimodal=True)


def rastrigin(n: Optional[int] = None) -> ObjectiveProblem:
    n = 2 if n is None else n
    if n < 1:
        raise ValueError("rastrigin needs n >= 1")
    return _make("rastrigin", n, _rastrigin, _rastrigin_grad, _rastrigin_hess,
                 [np.zeros(n)], [np.full(n, 0.5)])


def extended_wood(n: Optional[int] = None) -> ObjectiveProblem:
    n = 8 if n is None else n
    if n < 4 or n % 4:
        raise ValueError(f"extended_wood needs n to be a positive multiple of 4, got {n}")
    return _make("extended_wood", n, _wood, _wood_grad, _wood_hess,
                 [np.ones(n)], [np.full(n, 2.0), np.full(n, 10.0)], unimodal=True)


def demo_quadratic(n: Optional[int] = None) -> ObjectiveProblem:
    """``f(x) = 2.5 x^2 + x`` with its minimum ``f(-0.2) = -0.1``."""
    _check_fixed("demo_quadratic", n, 1)
    return _make("demo_quadratic", 1, _demo, _demo_grad, _demo_hess,
                 [(-0.2,)], [(1.0,)], unimodal=True)


def _check_fixed(name, n, dim):
    if n is not None and n != dim:
        raise ValueError(f"{name} is defined only for n={dim}, got {n}")


CATALOG: dict[str, Callable[[Optional[int]], ObjectiveProblem]] = {
    "rosenbrock": rosenbrock,
    "himmelblau": himmelblau,
    "booth": booth,
    "three_hump": three_hump,
    "rastrigin": rastrigin,
    "extended_wood": extended_wood,
    "demo_quadratic": demo_quadratic,
}

# The 15 (problem, start) cells of the test-function comparison.
TEST_CELLS: tuple[tuple[str, Optional[int], tuple[float, ...]], ...] = (
    ("rosenbrock", None, (-2.0, -2.0)),
    ("rosenbrock", None, (0.0, 0.0)),
    ("rosenbrock", None, (-5.0, -5.0)),
    ("himmelblau", None, (1.0, 1.0)),
    ("himmelblau", None, (20.0, 20.0)),
    ("himmelblau", None, (-5.0, -5.0)),
    ("booth", None, (5.0, 5.0)),
    ("booth", None, (5.0, -5.0)),
    ("booth", None, (-2.0, -2.0)),
    ("three_hump", None, (1.0, 1.0)),
    ("three_hump", None, (0.0, -1.0)),
    ("three_hump", None, (-1.0, -1.0)),
    ("rastrigin", 2, (0.5, 0.5)),
    ("extended_wood", 8, (2.0,) * 8),
    ("extended_wood", 8, (10.0,) * 8),
)


def catalog(name: str, n: Optional[int] = None) -> ObjectiveProblem:
    try:
        factory = CATALOG[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; known: {', '.join(sorted(CATALOG))}") from None
    return factory(n)


# --- toy MLP ----------------------------------------------------------------

class ToyMLP:
    """2-8-2 perceptron (tanh hidden, softmax output) on two Gaussian clusters.

    Parameters are packed as ``[W1 (2x8), b1 (8), W2 (8x2), b2 (2)]``, 42 in
    total. The loss is mean cross-entropy.
    """

    n_in, n_hidden, n_out = 2, 8, 2

    def __init__(self, seed: int = 7, n_samples: int = 400, batch_size: Optional[int] = 50):
        if batch_size is not None and n_samples < 4 * batch_size:
            raise ValueError("n_samples must be at least 4 * batch_size")
        self.seed = seed
        self.batch_size = batch_size
        rng = np.random.default_rng(seed)
        half = n_samples // 2
        centers = np.array([[-2.0, -2.0], [2.0, 2.0]])
        X = np.concatenate([rng.normal(centers[0], 0.5, (half, 2)),
                            rng.normal(centers[1], 0.5, (n_samples - half, 2))])
        y = np.concatenate([np.zeros(half, dtype=int), np.ones(n_samples - half, dtype=int)])
        self.X = X
        self.y = y
        self.n_samples = n_samples
        self.dim = self.n_in * self.n_hidden + self.n_hidden + self.n_hidden * self.n_out + self.n_out

    @property
    def batches_per_epoch(self) -> int:
        if self.batch_size is None:
            return 1
        return self.n_samples // self.batch_size

    def unpack(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        i, h, o = self.n_in, self.n_hidden, self.n_out
        k = 0
        W1 = theta[k:k + i * h].reshape(i, h); k += i * h
        b1 = theta[k:k + h]; k += h
        W2 = theta[k:k + h * o].reshape(h, o); k += h * o
        b2 = theta[k:k + o]
        return W1, b1, W2, b2

    def init_params(self, seed: Optional[int] = None) -> np.ndarray:
        rng = np.random.default_rng(self.seed if seed is None else seed)
        return rng.normal(0.0, 0.5, self.dim)

    def _forward(self, theta, X):
        W1, b1, W2, b2 = self.unpack(theta)
        H = np.tanh(X @ W1 + b1)
        Z = H @ W2 + b2
        Z = Z - Z.max(axis=1, keepdims=True)
        logp = Z - np.log(np.exp(Z).sum(axis=1, keepdims=True))
        return H, logp

    def _loss(self, theta, idx):
        _, logp = self._forward(theta, self.X[idx])
        return float(-np.mean(logp[np.arange(idx.size), self.y[idx]]))

    def _grad(self, theta, idx):
        X = self.X[idx]
        y = self.y[idx]
        W1, b1, W2, b2 = self.unpack(theta)
        H, logp = self._forward(theta, X)
        m = idx.size
        dZ = np.exp(logp)
        dZ[np.arange(m), y] -= 1.0
        dZ /= m
        gW2 = H.T @ dZ
        gb2 = dZ.sum(axis=0)
        dA = (dZ @ W2.T) * (1.0 - H * H)
        gW1 = X.T @ dA
        gb1 = dA.sum(axis=0)
        return np.concatenate([gW1.ravel(), gb1, gW2.ravel(), gb2])

    def batch_indices(self, batch_id: int) -> np.ndarray:
        """Sorted sample indices of batch ``batch_id``; epochs reshuffle by seed."""
        if self.batch_size is None:
            return np.arange(self.n_samples)
        epoch, pos = divmod(int(batch_id), self.batches_per_epoch)
        perm = np.random.default_rng((self.seed, epoch)).permutation(self.n_samples)
        return np.sort(perm[pos * self.batch_size:(pos + 1) * self.batch_size])

    def predict(self, theta, X=None) -> np.ndarray:
        _, logp = self._forward(theta, self.X if X is None else X)
        return np.argmax(logp, axis=1)

    def accuracy(self, theta) -> float:
        return float(np.mean(self.predict(theta) == self.y))

    def problem(self) -> ObjectiveProblem:
        full = np.arange(self.n_samples)
        return ObjectiveProblem(
            name="toy_mlp",
            dim=self.dim,
            value=lambda th: self._loss(th, full),
            gradient=lambda th: self._grad(th, full),
            batch_value=lambda th, b: self._loss(th, self.batch_indices(b)),
            batch_gradient=lambda th, b: self._grad(th, self.batch_indices(b)),
            default_starts=(self.init_params(),),
        )


def toy_mlp(seed: int = 7, n_samples: int = 400, batch_size: Optional[int] = 50) -> ObjectiveProblem:
    return ToyMLP(seed, n_samples, batch_size).problem()
