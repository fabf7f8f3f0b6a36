"""Circular pursuit models: state types, vector fields, Jacobians and closed forms.

Three models are provided:

* ``planar``  -- nondimensional pursuit of a target on a circle, state (r, phi),
  with the speed ratio k as a parameter.
* ``thrust``  -- the planar model augmented with pursuer speed dynamics driven by
  a throttle eta, state (r, phi, k).
* ``general`` -- dimensional line-of-sight kinematics for arbitrary pursuer and
  target velocities, state (R, gamma). Used as an independent reference.

Time in the nondimensional models is psi = omega * t and distance is r = R / a.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_finite, check_positive, check_throttle, wrap_angle
from .errors import DomainError, SingularStateError

# |r| below this is treated as engagement proximity; the fields are singular at r = 0.
R_MIN = 1e-3

# Speed ratios with ||k| - 1| below this are reported as the degenerate
# (coincident) equilibrium at r = 0, phi = +-pi/2.
DEGENERATE_TOL = 2e-4


@dataclass(frozen=True)
class PlanarState:
    r: float
    phi: float

    def __post_init__(self):
        object.__setattr__(self, "r", check_finite("r", self.r))
        object.__setattr__(self, "phi", wrap_angle(check_finite("phi", self.phi)))

    @property
    def non_physical(self):
        return self.r < 0 or self.phi < 0

    def as_array(self):
        return np.array([self.r, self.phi])


@dataclass(frozen=True)
class ThrustState:
    r: float
    phi: float
    k: float

    def __post_init__(self):
        object.__setattr__(self, "r", check_finite("r", self.r))
        object.__setattr__(self, "phi", wrap_angle(check_finite("phi", self.phi)))
        object.__setattr__(self, "k", check_finite("k", self.k))

    @property
    def non_physical(self):
        return self.r < 0 or self.phi < 0 or self.k < 0

    @property
    def planar(self):
        return PlanarState(self.r, self.phi)

    def as_array(self):
        return np.array([self.r, self.phi, self.k])


@dataclass(frozen=True)
class GeneralState:
    R: float
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "R", check_finite("R", self.R))
        object.__setattr__(self, "gamma", wrap_angle(check_finite("gamma", self.gamma)))

    def as_array(self):
        return np.array([self.R, self.gamma])


@dataclass(frozen=True)
class GeneralInputs:
    """Pursuer and target speeds (m/s) and headings (rad) at one instant."""

    v1: float
    v2: float
    alpha1: float
    alpha2: float

    def __post_init__(self):
        if self.v1 < 0 or self.v2 < 0:
            raise DomainError("speeds must be non-negative")


@dataclass(frozen=True)
class TargetParams:
    a: float
    omega: float

    def __post_init__(self):
        object.__setattr__(self, "a", check_positive("a", self.a))
        object.__setattr__(self, "omega", check_positive("omega", self.omega))

    @property
    def speed(self):
        """Tangential speed a * omega of the target."""
        return self.a * self.omega


@dataclass(frozen=True)
class PursuerPhysical:
    m: float
    T_max: float
    S: float
    C_D: float
    rho: float = 1.225
    # g drops out of C1 and C2; kept so a parameter set is complete.
    g: float = 9.81

    def __post_init__(self):
        for name in ("m", "T_max", "S", "C_D", "rho", "g"):
            object.__setattr__(self, name, check_positive(name, getattr(self, name)))


@dataclass(frozen=True)
class Coeffs:
    C1: float
    C2: float

    def __post_init__(self):
        object.__setattr__(self, "C1", check_positive("C1", self.C1))
        object.__setattr__(self, "C2", check_positive("C2", self.C2))


REFERENCE_PURSUER = PursuerPhysical(m=15118.35, T_max=49817.6, S=37.16, C_D=0.1423, rho=1.225, g=9.81)
REFERENCE_TARGET = TargetParams(a=100.0, omega=1.0)


class EquilibriumSet(list):
    """List of equilibrium states with a flag for the coincident |k| = 1 case."""

    def __init__(self, states=(), degenerate=False):
        super().__init__(states)
        self.degenerate = degenerate


def _check_r(r, r_min):
    if not abs(r) >= r_min:
        raise SingularStateError(r, r_min)


# Unchecked array forms, shared by the integrators and the continuation code.

def planar_field(y, k):
    r, phi = y[0], y[1]
    return np.array([math.sin(phi) - k, math.cos(phi) / r - 1.0])


def thrust_field(y, eta, c):
    r, phi, k = y[0], y[1], y[2]
    return np.array([math.sin(phi) - k, math.cos(phi) / r - 1.0, eta * c.C1 - c.C2 * k * k])


def planar_jacobian_array(r, phi):
    cphi, sphi = math.cos(phi), math.sin(phi)
    return np.array([[0.0, cphi], [-cphi / (r * r), -sphi / r]])


def thrust_jacobian_array(r, phi, k, c):
    cphi, sphi = math.cos(phi), math.sin(phi)
    return np.array([
        [0.0, cphi, -1.0],
        [-cphi / (r * r), -sphi / r, 0.0],
        [0.0, 0.0, -2.0 * c.C2 * k],
    ])


def general_field(y, u):
    R, gamma = y[0], y[1]
    dR = u.v2 * math.cos(u.alpha2 - gamma) - u.v1 * math.cos(u.alpha1 - gamma)
    dgamma = (u.v2 * math.sin(u.alpha2 - gamma) - u.v1 * math.sin(u.alpha1 - gamma)) / R
    return np.array([dR, dgamma])


def rhs_planar(state, k, r_min=R_MIN):
    """Return (dr/dpsi, dphi/dpsi) of the planar model at speed ratio ``k``."""
    _check_r(state.r, r_min)
    return planar_field((state.r, state.phi), float(k))


def rhs_thrust(state, eta, c, r_min=R_MIN):
    """Return (dr/dpsi, dphi/dpsi, dk/dpsi) of the thrust model."""
    eta = check_throttle(eta)
    _check_r(state.r, r_min)
    return thrust_field((state.r, state.phi, state.k), eta, c)


def rhs_general(state, u, R_min=R_MIN):
    """Return (dR/dt, dgamma/dt) of the line-of-sight kinematics for inputs ``u``."""
    _check_r(state.R, R_min)
    return general_field((state.R, state.gamma), u)


def rhs_circular(R, phi, v1, target):
    """Dimensional circular-pursuit rates (dR/dt, dphi/dt) for pursuer speed ``v1``."""
    v2 = target.speed
    return np.array([v2 * math.sin(phi) - v1, v2 * math.cos(phi) / R - target.omega])


def circular_pursuit_inputs(target, k, psi0=0.0):
    """Inputs for the general model that reduce it to circular pursuit.

    The target starts at angle ``psi0`` on the circle and moves counterclockwise;
    the pursuer always points along the line of sight. Returns a callable
    ``inputs(t, y)`` with ``y = (R, gamma)``.
    """
    v2 = target.speed
    v1 = k * v2

    def inputs(t, y):
        return GeneralInputs(v1=v1, v2=v2, alpha1=y[1], alpha2=psi0 + target.omega * t + 0.5 * math.pi)

    return inputs


def derived_coeffs(p, t):
    """Nondimensional thrust and drag coefficients (C1, C2) for a pursuer chasing ``t``."""
    C1 = p.T_max / (p.m * t.a * t.omega ** 2)
    C2 = p.rho * t.a * p.S * p.C_D / (2.0 * p.m)
    return Coeffs(C1, C2)


def jacobian_planar(state, r_min=R_MIN):
    _check_r(state.r, r_min)
    return planar_jacobian_array(state.r, state.phi)


def jacobian_thrust(state, c, r_min=R_MIN):
    _check_r(state.r, r_min)
    return thrust_jacobian_array(state.r, state.phi, state.k, c)


def equilibria_planar(k, degenerate_tol=DEGENERATE_TOL):
    """Equilibria of the planar model at speed ratio ``k``.

    For |k| < 1 there are two: r = +sqrt(1 - k^2) with phi = arcsin k, and
    r = -sqrt(1 - k^2) with phi = pi - arcsin k. Within ``degenerate_tol`` of
    |k| = 1 they merge into the single state (0, +-pi/2) and the returned set
    is flagged ``degenerate``. Beyond that there are none.
    """
    k = float(k)
    if abs(abs(k) - 1.0) <= degenerate_tol:
        return EquilibriumSet([PlanarState(0.0, math.copysign(0.5 * math.pi, k))], degenerate=True)
    if abs(k) > 1.0:
        return EquilibriumSet()
    phi = math.asin(k)
    r = math.cos(phi)
    return EquilibriumSet([PlanarState(r, phi), PlanarState(-r, math.pi - phi)])


def equilibria_thrust(eta, c, degenerate_tol=DEGENERATE_TOL):
    """Equilibria of the thrust model at throttle ``eta``.

    The speed equation fixes k* = +-sqrt(eta C1 / C2); each admissible k* is
    combined with the planar equilibria at that speed ratio.
    """
    eta = float(eta)
    if eta < 0:
        return EquilibriumSet()
    k_abs = math.sqrt(eta * c.C1 / c.C2)
    speeds = [k_abs] if k_abs == 0.0 else [k_abs, -k_abs]
    out = EquilibriumSet()
    for k in speeds:
        planar = equilibria_planar(k, degenerate_tol)
        out.degenerate = out.degenerate or planar.degenerate
        out.extend(ThrustState(s.r, s.phi, k) for s in planar)
    return out


def critical_speed_ratio():
    """Speed ratio 2/sqrt(5) where the positive planar equilibrium turns from focus to node."""
    return 2.0 / math.sqrt(5.0)


def critical_throttle(c):
    """Throttle at which the steady speed ratio equals the critical value 2/sqrt(5)."""
    return c.C2 * 0.8 / c.C1


def engagement_throttle(c):
    """Throttle at which the steady speed ratio reaches 1 (C2 / C1)."""
    return c.C2 / c.C1


def max_engagement_speed(p):
    """Largest target speed a*omega (m/s) for which full throttle sustains k = 1.

    Steady k = 1 needs eta = C2/C1 = rho S C_D (a omega)^2 / (2 T_max) <= 1.
    """
    return math.sqrt(2.0 * p.T_max / (p.rho * p.S * p.C_D))


@dataclass(frozen=True)
class TrajectoryPoint:
    psi: float
    state: object
    rhs: np.ndarray = field(repr=False)
    k: float | None = None


def dimensionalize(point, target, pursuer=None):
    """Convert a nondimensional sample to (t [s], R [m], V [m/s], accel [m/s^2]).

    ``point`` needs ``psi``, ``state`` (with ``r`` and optionally ``k``) and ``rhs``.
    For planar states the speed ratio is taken from ``point.k`` if present.
    """
    a, omega = target.a, target.omega
    state = point.state
    k = getattr(state, "k", None)
    if k is None:
        k = point.k
    if k is None:
        raise DomainError("speed ratio is required to dimensionalize a planar sample")
    dk = point.rhs[2] if len(point.rhs) > 2 else 0.0
    return point.psi / omega, a * state.r, k * a * omega, a * omega ** 2 * dk
