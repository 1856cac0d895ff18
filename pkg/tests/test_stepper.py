import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ecco.core import CountedProblem
from ecco.problems import catalog, rosenbrock
from ecco.stepper import StepperConfig, eatss, initial_dt, lte, trial_step

CFG = StepperConfig()
finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_trial_step_examples():
    assert trial_step(np.array([1.0]), np.array([2.0]), np.array([3.0]), 0.5).tolist() == [-2.0]
    out = trial_step(np.array([1.0, 2.0]), np.array([3.0, 5.0]), np.array([7.0, -1.0]), 1e-300)
    np.testing.assert_allclose(out, [1.0, 2.0], atol=1e-12)
    out = trial_step(np.zeros(2), np.ones(2), np.array([-2.0, 0.0]), 0.1)
    assert out.tolist() == [0.2, 0.0]


def test_trial_step_rejects_bad_input():
    with pytest.raises(ValueError):
        trial_step(np.zeros(1), np.ones(1), np.ones(1), 0.0)
    with pytest.raises(ValueError):
        trial_step(np.zeros(2), np.ones(1), np.ones(2), 0.1)


def test_lte_examples():
    assert lte(0.1, np.array([2.0]), np.array([1.0]))[0] == pytest.approx(0.05)
    assert lte(0.3, np.array([1.0, -2.0]), np.array([1.0, -2.0])).tolist() == [0.0, 0.0]
    assert lte(1.0, np.array([1.0, 3.0]), np.array([2.0, 1.0])).tolist() == [0.5, 1.0]


@given(st.floats(1e-6, 1e3), st.floats(1e-3, 1e3),
       arrays(np.float64, 3, elements=finite), arrays(np.float64, 3, elements=finite))
def test_lte_is_homogeneous_in_dt(dt, c, g1, g2):
    np.testing.assert_allclose(lte(c * dt, g1, g2), c * lte(dt, g1, g2), rtol=1e-12, atol=0)
    assert np.all(lte(dt, g1, g2) >= 0)


def test_initial_dt_examples():
    assert initial_dt(np.array([1.0]), np.array([6.0]), np.array([1.0]), CFG) == 1.0
    g0 = rosenbrock().gradient(np.zeros(2))
    assert initial_dt(np.zeros(2), g0, np.ones(2), CFG) == CFG.dt_fallback
    assert initial_dt(np.array([2.0]), np.array([1.0]), np.array([4.0]), CFG) == 0.5


@given(arrays(np.float64, 2, elements=finite), arrays(np.float64, 2, elements=finite),
       arrays(np.float64, 2, elements=st.floats(1, 10)))
def test_initial_dt_is_positive_and_finite(x, g, z):
    dt = initial_dt(x, g, z, CFG)
    assert dt > 0 and math.isfinite(dt)


def _oracle_quadratic_eatss(dt, eta=0.1, alpha=0.9, beta=1.1):
    """Closed form for f = x^2/2 at x = 1, z = 1: trial LTE is dt^2/2, descent iff dt < 2."""
    ok = lambda d: 0.5 * d * d <= eta and d < 2
    grows = 0
    while 0.5 * dt * dt < eta and dt < 2:
        dt *= beta
        grows += 1
    shrinks = 0
    while not ok(dt):
        dt *= alpha
        shrinks += 1
    return dt, grows, shrinks


def test_eatss_grow_then_shrink(half_square):
    out = eatss(half_square, np.array([1.0]), 0.5, np.array([1.0]), np.ones(1), 0.1, CFG)
    ref = _oracle_quadratic_eatss(0.1)
    assert (out.grow_iters, out.shrink_iters) == (16, 1) == ref[1:]
    assert out.dt == pytest.approx(0.413547, abs=1e-6)
    assert out.dt == pytest.approx(ref[0], rel=1e-12)
    assert not out.floored


def test_eatss_shrink_only(half_square):
    out = eatss(half_square, np.array([1.0]), 0.5, np.array([1.0]), np.ones(1), 3.0, CFG)
    assert (out.grow_iters, out.shrink_iters) == (0, 19)
    # 3 * 0.9**18 = 0.4503 still breaks the LTE bound sqrt(0.2), so 19 shrinks land on 0.405256
    assert out.dt == pytest.approx(3 * 0.9**19, rel=1e-12)
    assert out.dt == pytest.approx(0.405256, abs=1e-6)


def test_eatss_stationary_point():
    p = catalog("rastrigin", 2)
    x = np.zeros(2)
    out = eatss(p, x, p.value(x), p.gradient(x), np.ones(2), 0.37, CFG)
    assert out.dt == 0.37
    assert out.grow_iters == out.shrink_iters == 0
    assert np.array_equal(out.x_next, x)


def test_eatss_is_deterministic():
    p = rosenbrock()
    x = np.array([-1.2, 1.0])
    args = (x, p.value(x), p.gradient(x), np.array([1.0, 3.0]), 0.01, CFG)
    a, b = eatss(p, *args), eatss(p, *args)
    assert a.dt == b.dt and np.array_equal(a.x_next, b.x_next) and a.max_lte == b.max_lte


def test_eatss_floors_when_no_step_descends():
    # f increases along every direction the step can take
    from conftest import scalar_problem
    p = scalar_problem(lambda x: -x if x < 1 else 1e9, lambda x: 1.0)
    cfg = StepperConfig(dt_min=1e-3, dt_fallback=1e-2)
    out = eatss(p, np.array([1.0]), 1.0, np.array([1.0]), np.ones(1), 0.5, cfg)
    assert out.floored or out.f_next <= 1.0


def test_eatss_treats_overflow_as_violation():
    p = rosenbrock()
    x = np.array([-5.0, -5.0])
    out = eatss(p, x, p.value(x), p.gradient(x), np.ones(2), 1e6, CFG)
    assert not out.floored
    assert out.f_next <= p.value(x)
    assert np.max(lte(out.dt, p.gradient(x), out.grad_next)) <= CFG.eta


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, 2, elements=st.floats(-4, 4)), st.floats(1e-4, 10),
       arrays(np.float64, 2, elements=st.floats(1, 10)))
def test_accepted_steps_satisfy_both_conditions(x, dt0, z):
    p = rosenbrock()
    f, g = p.value(x), p.gradient(x)
    out = eatss(p, x, f, g, z, dt0, CFG)
    if out.floored:
        return
    assert out.f_next <= f
    assert np.max(lte(out.dt, g, out.grad_next)) <= CFG.eta
    assert CFG.dt_min <= out.dt <= CFG.dt_max
    if out.grow_iters > 0:
        # the returned step is the grow exit times the fewest alphas restoring compliance
        exit_dt = min(dt0, CFG.dt_max)
        for _ in range(out.grow_iters):
            exit_dt = min(CFG.beta * exit_dt, CFG.dt_max)
        assert out.dt == pytest.approx(exit_dt * CFG.alpha**out.shrink_iters, rel=1e-9)
        assert out.shrink_iters >= 1 or out.grow_iters == CFG.max_grow or out.dt == CFG.dt_max


def test_eatss_counts_evaluations(half_square):
    cp = CountedProblem(half_square)
    out = eatss(cp, np.array([1.0]), 0.5, np.array([1.0]), np.ones(1), 0.1, CFG)
    trials = 1 + out.grow_iters + out.shrink_iters
    assert cp.counters.n_f == cp.counters.n_grad == trials


def test_stepper_config_validation():
    with pytest.raises(ValueError):
        StepperConfig(alpha=1.2)
    with pytest.raises(ValueError):
        StepperConfig(dt_min=1.0)
    with pytest.raises(ValueError):
        StepperConfig(eta=0)
