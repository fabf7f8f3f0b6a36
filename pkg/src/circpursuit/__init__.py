"""Equilibria, bifurcations and trajectories of circular pursuit.

A pursuer chases a target moving on a circle. The planar model tracks the
range r and included angle phi for a fixed speed ratio k; the thrust model
adds k as a state driven by throttle and drag.
"""

from .continuation import (
    Branch,
    BranchPoint,
    ContinuationSettings,
    Event,
    continue_branch,
    detect_events,
    polish,
    refine_event,
)
from .errors import (
    BracketLostError,
    ConfigError,
    ContinuationError,
    DomainError,
    IntegrationError,
    NoConvergenceError,
    PursuitError,
    SingularStartError,
    SingularStateError,
    StepUnderflowError,
)
from .integrators import DenseOutput, IntegratorSettings, Solution, solve
from .models import (
    DEGENERATE_TOL,
    R_MIN,
    REFERENCE_PURSUER,
    REFERENCE_TARGET,
    Coeffs,
    EquilibriumSet,
    GeneralInputs,
    GeneralState,
    PlanarState,
    PursuerPhysical,
    TargetParams,
    ThrustState,
    TrajectoryPoint,
    circular_pursuit_inputs,
    critical_speed_ratio,
    critical_throttle,
    derived_coeffs,
    dimensionalize,
    engagement_throttle,
    equilibria_planar,
    equilibria_thrust,
    jacobian_planar,
    jacobian_thrust,
    max_engagement_speed,
    rhs_circular,
    rhs_general,
    rhs_planar,
    rhs_thrust,
)
from .simulate import Scenario, Trajectory, dimensional_circular, integrate, phase_portrait, run_scenario
from .spectral import EquilibriumClass, Spectrum, classify, cubic_roots, eig, eig_2x2, eig_3x3, focus_node_indicator

__version__ = "0.1.0"
