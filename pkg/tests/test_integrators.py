import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circpursuit import DomainError, IntegratorSettings, StepUnderflowError, solve
from circpursuit.integrators import _B, _E, _P

ADAPTIVE = IntegratorSettings(rtol=1e-10, atol=1e-12)


def oscillator(t, y):
    return np.array([y[1], -y[0]])


def test_tableau_consistency():
    assert _B.sum() == pytest.approx(1.0, abs=1e-15)
    # Error weights are b5 - b4 with the FSAL stage appended; they sum to zero.
    assert _E.sum() == pytest.approx(0.0, abs=1e-15)
    # At x = 1 the continuous extension reproduces the 5th-order weights.
    assert _P.sum(axis=1)[:6] == pytest.approx(_B, abs=1e-14)
    assert _P.sum(axis=1)[6] == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("method", ["fixed-rk4", "adaptive-rk45"])
def test_oscillator_against_exact(method):
    s = IntegratorSettings(method=method, dt=1e-3, rtol=1e-10, atol=1e-12)
    sol = solve(oscillator, 0.0, [1.0, 0.0], 10.0, s)
    assert sol.status == "horizon"
    assert sol.t[-1] == 10.0
    assert sol.y[-1] == pytest.approx([math.cos(10.0), -math.sin(10.0)], abs=1e-9)


@pytest.mark.parametrize("method", ["fixed-rk4", "adaptive-rk45"])
def test_dense_output_between_steps(method):
    s = IntegratorSettings(method=method, dt=1e-2, rtol=1e-10, atol=1e-12)
    sol = solve(oscillator, 0.0, [1.0, 0.0], 6.0, s)
    t = np.linspace(0.0, 6.0, 997)
    y = sol.dense(t)
    assert np.max(np.abs(y[:, 0] - np.cos(t))) < 1e-7
    # Nodes are reproduced exactly up to rounding.
    assert np.max(np.abs(sol.dense(sol.t[:-1]) - sol.y[:-1])) < 1e-13


def test_rk4_is_fourth_order():
    def end_error(dt):
        sol = solve(oscillator, 0.0, [1.0, 0.0], 2.0, IntegratorSettings(method="fixed-rk4", dt=dt))
        return abs(sol.y[-1, 0] - math.cos(2.0))

    errs = [end_error(dt) for dt in (0.1, 0.05, 0.025)]
    for a, b in zip(errs, errs[1:]):
        assert a / b == pytest.approx(16.0, rel=0.2)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(0.05, 0.95))
def test_event_is_located_and_final_sample_is_past_it(rate, level):
    # y' = -rate y crosses `level` at t = ln(1/level)/rate.
    sol = solve(lambda t, y: -rate * y, 0.0, [1.0], 100.0, ADAPTIVE, event=lambda t, y: y[0] - level)
    assert sol.status == "event"
    assert sol.t[-1] == pytest.approx(math.log(1 / level) / rate, abs=1e-8)
    assert sol.y[-1, 0] <= level


def test_divergence_and_nonfinite():
    blow = IntegratorSettings(divergence_limit=1e3)
    sol = solve(lambda t, y: y * y, 0.0, [1.0], 2.0, blow)
    assert sol.status == "divergence"
    assert sol.t[-1] < 1.0
    sol = solve(lambda t, y: np.array([math.nan if t > 0.5 else 1.0]), 0.0, [0.0], 2.0,
                IntegratorSettings(method="fixed-rk4", dt=0.1))
    assert sol.status == "nonfinite"


def test_step_underflow_carries_partial_solution():
    def fun(t, y):
        return np.array([math.nan if t > 0.5 else 1.0])

    with pytest.raises(StepUnderflowError) as info:
        solve(fun, 0.0, [0.0], 2.0, IntegratorSettings())
    partial = info.value.trajectory
    assert partial.status == "failed"
    assert 0.4 < partial.t[-1] <= 0.5


def test_zero_span_returns_initial_sample():
    sol = solve(oscillator, 1.0, [1.0, 0.0], 1.0, ADAPTIVE)
    assert sol.t.tolist() == [1.0] and sol.y.shape == (1, 2)


def test_max_steps():
    sol = solve(oscillator, 0.0, [1.0, 0.0], 10.0, IntegratorSettings(method="fixed-rk4", dt=0.1, max_steps=5))
    assert len(sol.t) == 6 and "max_steps" in sol.message


def test_settings_validation():
    with pytest.raises(DomainError):
        IntegratorSettings(method="euler")
    with pytest.raises(DomainError):
        IntegratorSettings(dt=0.0)
    with pytest.raises(DomainError):
        IntegratorSettings(r_engage=1e-5)
