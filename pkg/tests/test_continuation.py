import math

import numpy as np
import pytest

from circpursuit import (
    REFERENCE_PURSUER,
    REFERENCE_TARGET,
    BracketLostError,
    ContinuationSettings,
    NoConvergenceError,
    PlanarState,
    SingularStartError,
    ThrustState,
    classify,
    continue_branch,
    derived_coeffs,
    detect_events,
    eig,
    equilibria_thrust,
    jacobian_planar,
    refine_event,
)

C = derived_coeffs(REFERENCE_PURSUER, REFERENCE_TARGET)


@pytest.fixture(scope="module")
def planar_branch():
    return continue_branch("planar", (PlanarState(1.0, 0.0), 0.0), param_range=(0.0, 1.0))


@pytest.fixture(scope="module")
def thrust_branch():
    start = max(equilibria_thrust(0.05, C), key=lambda s: s.r)
    return continue_branch("thrust", (start, 0.05), param_range=(0.05, 0.99), coeffs=C)


def test_planar_branch_follows_closed_form(planar_branch):
    for p in planar_branch.points:
        k = p.param
        assert p.state.r == pytest.approx(math.sqrt(1 - k * k), abs=1e-9)
        assert p.state.phi == pytest.approx(math.asin(k), abs=1e-9)


def test_planar_branch_arclength_and_termination(planar_branch):
    s = np.array([p.arclength for p in planar_branch.points])
    assert np.all(np.diff(s) > 0)
    assert planar_branch.termination == "singular-clip"
    assert planar_branch.points[-1].state.r == pytest.approx(1e-3, rel=1e-6)
    assert planar_branch.limit_point == (1.0, 0.0)


def test_planar_branch_stability(planar_branch):
    kinds = [p.eq_class.kind for p in planar_branch.points]
    assert kinds[0] == "center"
    assert all(k in ("stable-focus", "stable-node") for k in kinds[1:])
    for p in planar_branch.points:
        assert p.eq_class.kind == classify(eig(jacobian_planar(p.state))).kind


def test_planar_type_change_event(planar_branch):
    (event,) = planar_branch.events
    assert event.kind == "type-change"
    assert event.param == pytest.approx(2 / math.sqrt(5), abs=1e-6)
    assert event.state.r == pytest.approx(1 / math.sqrt(5), abs=1e-6)
    i, j = event.interval
    assert planar_branch.points[i].param < event.param < planar_branch.points[j].param


def test_thrust_branch_follows_closed_form(thrust_branch):
    for p in thrust_branch.points:
        assert p.state.k == pytest.approx(math.sqrt(p.param * C.C1 / C.C2), abs=1e-9)
        assert p.state.r == pytest.approx(math.sqrt(max(0.0, 1 - p.state.k ** 2)), abs=1e-9)
    assert all(p.eq_class.stable for p in thrust_branch.points)
    kinds = [e.kind for e in thrust_branch.events]
    assert kinds == ["type-change"]
    assert thrust_branch.events[0].param == pytest.approx(0.8 * C.C2 / C.C1, abs=1e-6)


def test_thrust_fold_at_zero_throttle():
    start = max(equilibria_thrust(0.05, C), key=lambda s: s.r)
    branch = continue_branch("thrust", (start, 0.05), ContinuationSettings(direction=-1),
                             param_range=(-1.0, 0.05), coeffs=C)
    folds = [e for e in branch.events if e.kind == "fold"]
    assert len(folds) == 1
    assert abs(folds[0].param) < 1e-6
    # Beyond the fold the branch continues along negative k.
    assert branch.points[-1].state.k < 0


def test_negative_branch_classes_are_reported():
    branch = continue_branch("planar", (PlanarState(-1.0, math.pi), 0.0), param_range=(0.0, 1.0))
    kinds = {p.eq_class.kind for p in branch.points[1:]}
    assert kinds <= {"unstable-focus", "unstable-node"}
    assert [e.kind for e in branch.events] == ["type-change"]


def test_boundary_point_is_exact():
    branch = continue_branch("planar", (PlanarState(1.0, 0.0), 0.0), param_range=(0.0, 0.5))
    assert branch.termination == "boundary"
    assert branch.points[-1].param == 0.5


def test_zero_length_range_gives_single_point():
    branch = continue_branch("planar", (PlanarState(0.9, 0.4), 0.3), param_range=(0.3, 0.3))
    assert len(branch.points) == 1
    assert branch.points[0].state.r == pytest.approx(math.sqrt(1 - 0.09))


def test_max_points():
    branch = continue_branch("planar", (PlanarState(1.0, 0.0), 0.0),
                             ContinuationSettings(max_points=5), param_range=(0.0, 1.0))
    assert branch.termination == "max-points"
    assert len(branch.points) == 5


def test_start_errors():
    with pytest.raises(SingularStartError):
        continue_branch("planar", (PlanarState(1.0, 0.0), 2.0), param_range=(0.0, 1.0))
    with pytest.raises(SingularStartError):
        continue_branch("planar", (PlanarState(1e-4, 0.0), 0.5))
    with pytest.raises(ValueError):
        continue_branch("thrust", (ThrustState(1.0, 0.0, 0.0), 0.0))


def test_no_convergence_carries_partial_branch():
    settings = ContinuationSettings(newton_tol=1e-300, h_min=1e-3, h0=1e-2)
    with pytest.raises(NoConvergenceError) as info:
        continue_branch("planar", (PlanarState(1.0, 0.0), 0.0), settings, param_range=(0.0, 1.0))
    assert info.value.branch is not None
    assert info.value.branch.termination == "no-convergence"


def test_refine_event_matches_attached(planar_branch):
    brackets = detect_events(planar_branch)
    assert [b[2] for b in brackets] == ["type-change"]
    param, state = refine_event(brackets[0], planar_branch)
    assert param == pytest.approx(planar_branch.events[0].param, abs=1e-9)
    with pytest.raises(BracketLostError):
        refine_event((0, 1, "type-change"), planar_branch)


def test_settings_validation():
    with pytest.raises(ValueError):
        ContinuationSettings(h0=1.0, h_max=0.1)
    with pytest.raises(ValueError):
        ContinuationSettings(direction=0)
