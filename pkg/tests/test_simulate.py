import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circpursuit import (
    REFERENCE_PURSUER,
    REFERENCE_TARGET,
    IntegratorSettings,
    Scenario,
    SingularStateError,
    TargetParams,
    ThrustState,
    circular_pursuit_inputs,
    derived_coeffs,
    dimensional_circular,
    equilibria_planar,
    integrate,
    phase_portrait,
    run_scenario,
)

C = derived_coeffs(REFERENCE_PURSUER, REFERENCE_TARGET)
TIGHT = IntegratorSettings(rtol=1e-10, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.0, 0.95))
def test_speed_ratio_follows_riccati_solution(eta, frac):
    # dk/dpsi = eta C1 - C2 k^2 has k = kappa tanh(C2 kappa psi + atanh(k0 / kappa)).
    kappa = math.sqrt(eta * C.C1 / C.C2)
    k0 = frac * kappa
    traj = integrate("thrust", (3.0, 0.0, k0), (eta, C), TIGHT, horizon=30.0)
    exact = kappa * np.tanh(C.C2 * kappa * traj.psi + math.atanh(k0 / kappa))
    assert np.max(np.abs(traj.states[:, 2] - exact)) < 1e-8


@pytest.mark.parametrize("k", [0.5, 0.95])
def test_planar_converges_to_stable_equilibrium(k):
    traj = integrate("planar", (1.5, 0.0), k, TIGHT, horizon=80.0)
    eq = max(equilibria_planar(k), key=lambda s: s.r)
    assert traj.termination == "horizon"
    assert traj.states[-1] == pytest.approx([eq.r, eq.phi], abs=1e-6)


def test_planar_engagement_when_faster_than_target():
    traj = integrate("planar", (1.0, 0.0), 1.2, horizon=50.0)
    assert traj.termination == "engagement"
    assert traj.r[-1] <= 1e-3
    assert traj.r[-2] > 1e-3


def test_singular_start_rejected():
    with pytest.raises(SingularStateError):
        integrate("planar", (1e-4, 0.0), 0.5)


def test_scenario_segments_and_validation():
    s = Scenario(schedule=[(10.0, 0.66)], horizon=200.0, target=TargetParams(100.0, 0.5))
    assert s.segments() == [(0.0, 5.0, 0.0), (5.0, 100.0, 0.66)]
    assert Scenario(schedule=[(0.0, 0.65)], horizon=0.0).segments() == [(0.0, 0.0, 0.65)]
    with pytest.raises(ValueError):
        Scenario(schedule=[(5.0, 0.5), (5.0, 0.6)])
    with pytest.raises(ValueError):
        Scenario(schedule=[(0.0, 1.5)])


def test_scenario_is_continuous_across_switch():
    traj = run_scenario(Scenario(schedule=[(10.0, 0.66)], horizon=30.0))
    assert traj.termination == "horizon"
    assert np.all(np.diff(traj.psi) > 0)
    i = int(np.searchsorted(traj.psi, 10.0))
    assert traj.psi[i] == pytest.approx(10.0)
    assert traj.eta[i - 1] == 0.0 and traj.eta[i] == 0.66
    assert traj.rhs[i, 2] == pytest.approx(0.66 * C.C1)
    # k is zero until the throttle opens.
    assert np.all(traj.states[: i + 1, 2] == 0.0)


def test_zero_horizon_gives_single_sample():
    traj = run_scenario(Scenario(horizon=0.0))
    assert len(traj) == 1 and traj.termination == "horizon"
    assert traj.dimensional[0, 1] == 100.0


def test_constant_throttle_final_range_below_5m():
    traj = run_scenario(Scenario(schedule=[(0.0, 0.65)], horizon=200.0))
    assert traj.termination == "horizon"
    assert traj.dimensional[-1, 1] < 5.0


def test_dimensional_channel():
    traj = run_scenario(Scenario(schedule=[(0.0, 0.6)], horizon=20.0))
    a, w = REFERENCE_TARGET.a, REFERENCE_TARGET.omega
    d = traj.dimensional
    assert d[:, 0] == pytest.approx(traj.psi / w)
    assert d[:, 1] == pytest.approx(a * traj.r)
    assert d[:, 2] == pytest.approx(a * w * traj.states[:, 2])
    assert d[:, 3] == pytest.approx(a * w ** 2 * (0.6 * C.C1 - C.C2 * traj.states[:, 2] ** 2))


def test_resample_uniform_grid():
    traj = run_scenario(Scenario(schedule=[(0.0, 0.65)], horizon=20.0))
    out = traj.resample(0.3)
    steps = np.diff(out.psi)
    assert steps[:-1] == pytest.approx(0.3)
    assert out.psi[-1] == traj.psi[-1]
    assert out.states[-1].tolist() == traj.states[-1].tolist()
    assert np.all(np.abs(out.phi) <= math.pi)
    # Interpolated states agree with a tight reference run.
    ref = run_scenario(Scenario(schedule=[(0.0, 0.65)], horizon=20.0, settings=TIGHT))
    assert np.max(np.abs(out.states - ref.at(out.psi))) < 1e-5


def test_general_model_matches_planar():
    target = TargetParams(100.0, 1.0)
    planar = integrate("planar", (1.5, 0.3), 0.7, TIGHT, horizon=15.0)
    general = integrate("general", (150.0, 0.3), circular_pursuit_inputs(target, 0.7), TIGHT, horizon=15.0)
    psi, r, phi = dimensional_circular(general, target)
    ref = planar.at(psi)
    assert np.max(np.abs(r - ref[:, 0])) < 1e-7
    assert np.max(np.abs(np.angle(np.exp(1j * (phi - ref[:, 1]))))) < 1e-7


def test_phase_portrait_grid_order_and_workers():
    grid = ((0.5, 1.5), (-0.5, 0.5), 2, 3)
    serial = phase_portrait("planar", 0.5, grid, horizon=5.0)
    parallel = phase_portrait("planar", 0.5, grid, horizon=5.0, workers=3)
    assert [t.states[0].tolist() for t in serial] == [
        [r, p] for r in (0.5, 1.5) for p in (-0.5, 0.0, 0.5)]
    for a, b in zip(serial, parallel):
        assert np.array_equal(a.states, b.states)


def test_phase_portrait_single_point_at_equilibrium():
    eq = max(equilibria_planar(0.5), key=lambda s: s.r)
    (traj,) = phase_portrait("planar", 0.5, ((eq.r, eq.r), (eq.phi, eq.phi), 1, 1), horizon=10.0)
    assert np.max(np.abs(traj.states - traj.states[0])) < 1e-12


def test_phase_portrait_records_failures():
    trajs = phase_portrait("planar", 0.5, ((0.0, 1.0), (0.0, 0.0), 2, 1), horizon=5.0)
    assert trajs[0].termination == "failed"
    assert trajs[0].error
    assert len(trajs[0].psi) == 1
    assert trajs[1].termination == "horizon"


def test_thrust_phase_portrait():
    trajs = phase_portrait("thrust", 0.6, ((0.5, 1.0), (0.0, 0.5), 2, 2), horizon=5.0, coeffs=C, k0=0.3)
    assert all(t.states[0, 2] == 0.3 for t in trajs)
