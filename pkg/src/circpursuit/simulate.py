"""Time-domain simulation: single runs, throttle-step scenarios and phase portraits."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive, check_throttle, wrap_angle
from .errors import IntegrationError, PursuitError, SingularStateError, StepUnderflowError
from .integrators import DenseOutput, IntegratorSettings, solve
from .models import (
    R_MIN,
    REFERENCE_PURSUER,
    REFERENCE_TARGET,
    Coeffs,
    GeneralState,
    PlanarState,
    ThrustState,
    TrajectoryPoint,
    derived_coeffs,
    general_field,
    planar_field,
    thrust_field,
)

MODELS = ("planar", "thrust", "general")
TERMINATIONS = ("horizon", "engagement", "singular", "divergence", "failed")

# Index of the angle component in each model's state vector.
_ANGLE_INDEX = {"planar": 1, "thrust": 1, "general": 1}


@dataclass
class Trajectory:
    """Sampled solution of one of the models.

    ``psi`` is nondimensional time for the planar and thrust models and time in
    seconds for the general model. Stored angles are wrapped to (-pi, pi];
    ``dense`` interpolates the unwrapped solution and :meth:`at` re-wraps it.
    ``dimensional`` has columns (t_sec, R_m, V_mps, accel_mps2) when a target
    was supplied.
    """

    model: str
    psi: np.ndarray
    states: np.ndarray
    rhs: np.ndarray
    termination: str
    eta: np.ndarray | None = None
    k: float | None = None
    dimensional: np.ndarray | None = None
    dense: DenseOutput | None = field(default=None, repr=False)
    error: str | None = None
    coeffs: Coeffs | None = field(default=None, repr=False)
    target: object = field(default=None, repr=False)

    def __len__(self):
        return len(self.psi)

    def __iter__(self):
        for i in range(len(self.psi)):
            yield self.point(i)

    def point(self, i):
        s = self.states[i]
        if self.model == "thrust":
            state = ThrustState(*s)
        elif self.model == "planar":
            state = PlanarState(*s)
        else:
            state = GeneralState(*s)
        return TrajectoryPoint(float(self.psi[i]), state, self.rhs[i], self.k)

    @property
    def final(self):
        return self.point(len(self.psi) - 1)

    @property
    def r(self):
        return self.states[:, 0]

    @property
    def phi(self):
        return self.states[:, 1]

    def at(self, psi):
        """Interpolated states at ``psi`` (inside the sampled range), angles wrapped."""
        if self.dense is None or len(self.dense.t0) == 0:
            psi = np.asarray(psi, dtype=float)
            out = np.broadcast_to(self.states[0], psi.shape + self.states.shape[1:]).copy()
            return out
        y = self.dense(psi)
        idx = _ANGLE_INDEX[self.model]
        y[..., idx] = wrap_angle(y[..., idx])
        return y

    def resample(self, dt, target=None):
        """Trajectory on a uniform grid of step ``dt``; the final sample is always kept."""
        check_positive("dt", dt)
        start, end = self.psi[0], self.psi[-1]
        n = int(math.floor((end - start) / dt + 1e-9))
        grid = start + dt * np.arange(n + 1)
        if end - grid[-1] > 1e-9 * max(1.0, abs(end)):
            grid = np.append(grid, end)
        else:
            grid[-1] = end
        states = self.at(grid)
        states[0] = self.states[0]
        states[-1] = self.states[-1]
        # Sample-wise quantities follow the segment the grid point falls in.
        seg = np.clip(np.searchsorted(self.psi, grid, side="right") - 1, 0, len(self.psi) - 1)
        eta = None if self.eta is None else self.eta[seg]
        rhs = np.array([self._field(y, None if eta is None else eta[i]) for i, y in enumerate(states)])
        rhs[0] = self.rhs[0]
        rhs[-1] = self.rhs[-1]
        target = target or self.target
        out = Trajectory(self.model, grid, states, rhs, self.termination, eta, self.k,
                         None, self.dense, self.error, self.coeffs, target)
        if target is not None:
            out.dimensional = _dimensional(out, target)
        return out

    def _field(self, y, eta):
        if self.model == "planar":
            return planar_field(y, self.k)
        if self.model == "thrust":
            return thrust_field(y, eta, self.coeffs)
        # The general model's inputs are not retained; rates are unavailable after resampling.
        return np.full(len(y), np.nan)


def _dimensional(traj, target):
    a, omega = target.a, target.omega
    if traj.model == "thrust":
        k = traj.states[:, 2]
        dk = traj.rhs[:, 2]
    elif traj.model == "planar":
        k = np.full(len(traj.psi), traj.k)
        dk = np.zeros(len(traj.psi))
    else:
        return None
    return np.column_stack([traj.psi / omega, a * traj.states[:, 0], k * a * omega, a * omega ** 2 * dk])


def _as_vector(model, x0):
    if hasattr(x0, "as_array"):
        return x0.as_array()
    y = np.asarray(x0, dtype=float)
    expected = 3 if model == "thrust" else 2
    if y.shape != (expected,):
        raise ValueError(f"{model} state must have {expected} components")
    return y


def integrate(model, x0, params, settings=None, horizon=50.0, t0=0.0, target=None):
    """Integrate one model from ``x0`` over ``[t0, t0 + horizon]``.

    ``params`` is the speed ratio k for ``planar``, a tuple ``(eta, coeffs)`` for
    ``thrust`` and an inputs callable ``(t, y) -> GeneralInputs`` for ``general``
    (see :func:`circular_pursuit_inputs`). With ``target`` given, the
    dimensional channel is filled in.

    The run stops at the horizon, when |r| (or R) drops to ``settings.r_engage``
    (``engagement`` for r > 0, ``singular`` otherwise), or when the state
    exceeds the divergence limit.
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    settings = settings or IntegratorSettings()
    y0 = _as_vector(model, x0)
    if not abs(y0[0]) >= R_MIN:
        raise SingularStateError(y0[0], R_MIN)

    eta = None
    coeffs = None
    k = None
    if model == "planar":
        k = float(params)

        def fun(t, y):
            return planar_field(y, k)
    elif model == "thrust":
        eta, coeffs = params
        eta = check_throttle(eta)

        def fun(t, y):
            return thrust_field(y, eta, coeffs)
    else:
        inputs = params

        def fun(t, y):
            return general_field(y, inputs(t, y))

    r_engage = settings.r_engage

    def event(t, y):
        return abs(y[0]) - r_engage

    def build(sol, termination):
        states = sol.y.copy()
        states[:, 1] = wrap_angle(states[:, 1])
        traj = Trajectory(
            model=model,
            psi=sol.t,
            states=states,
            rhs=sol.f,
            termination=termination,
            eta=None if eta is None else np.full(len(sol.t), eta),
            k=k,
            dense=sol.dense,
            error=sol.message or None,
            coeffs=coeffs,
            target=target,
        )
        if target is not None:
            traj.dimensional = _dimensional(traj, target)
        return traj

    try:
        sol = solve(fun, t0, y0, t0 + horizon, settings, event=event)
    except StepUnderflowError as exc:
        raise StepUnderflowError(str(exc), build(exc.trajectory, "failed")) from None
    if sol.status == "event":
        termination = "engagement" if sol.y[-1, 0] > 0 else "singular"
    elif sol.status == "nonfinite":
        termination = "singular"
    else:
        termination = sol.status
    return build(sol, termination)


@dataclass
class Scenario:
    """Thrust-model engagement with a piecewise-constant throttle.

    ``schedule`` lists ``(t_switch [s], eta)`` pairs; the throttle is 0 before
    the first switch. ``horizon`` is in seconds.
    """

    initial: ThrustState = field(default_factory=lambda: ThrustState(1.0, 0.0, 0.0))
    schedule: list = field(default_factory=lambda: [(0.0, 0.65)])
    horizon: float = 200.0
    target: object = REFERENCE_TARGET
    pursuer: object = REFERENCE_PURSUER
    settings: IntegratorSettings = field(default_factory=IntegratorSettings)
    model: str = "thrust"

    def __post_init__(self):
        self.schedule = [(float(t), check_throttle(e)) for t, e in self.schedule]
        times = [t for t, _ in self.schedule]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("throttle switch times must be strictly increasing")
        if self.horizon < 0:
            raise ValueError("horizon must be non-negative")
        if self.model != "thrust":
            raise ValueError("scenarios are defined for the thrust model only")

    @property
    def coeffs(self):
        return derived_coeffs(self.pursuer, self.target)

    def segments(self):
        """(psi_start, psi_end, eta) for each constant-throttle interval up to the horizon."""
        omega = self.target.omega
        end = omega * self.horizon
        knots = [(0.0, 0.0)] + [(omega * t, e) for t, e in self.schedule]
        out = []
        for i, (start, eta) in enumerate(knots):
            stop = knots[i + 1][0] if i + 1 < len(knots) else end
            start, stop = max(start, 0.0), min(stop, end)
            if stop > start:
                out.append((start, stop, eta))
        if not out:
            # Zero horizon: a single sample under the throttle in force at t = 0.
            eta0 = [e for t, e in knots if t <= 0.0][-1]
            out.append((0.0, 0.0, eta0))
        return out


def _join(parts):
    """Concatenate consecutive trajectory segments.

    The sample at a switch is taken from the later segment, so the throttle
    (and the rates) there are those in force from the switch onwards.
    """
    first = parts[0]
    psi, states, rhs, eta = [], [], [], []
    for i, p in enumerate(parts):
        end = len(p.psi) - 1 if i + 1 < len(parts) else len(p.psi)
        psi.append(p.psi[:end])
        states.append(p.states[:end])
        rhs.append(p.rhs[:end])
        eta.append(p.eta[:end])
    dense_parts = [p.dense for p in parts if p.dense is not None and len(p.dense.t0)]
    traj = Trajectory(
        model=first.model,
        psi=np.concatenate(psi),
        states=np.concatenate(states),
        rhs=np.concatenate(rhs),
        termination=parts[-1].termination,
        eta=np.concatenate(eta),
        dense=DenseOutput.concatenate(dense_parts) if dense_parts else first.dense,
        error=parts[-1].error,
        coeffs=first.coeffs,
    )
    return traj


def run_scenario(s):
    """Simulate a throttle schedule, restarting the integration at every switch."""
    coeffs = s.coeffs
    y = s.initial.as_array()
    parts = []
    for start, stop, eta in s.segments():
        try:
            part = integrate("thrust", y, (eta, coeffs), s.settings, horizon=stop - start, t0=start)
        except IntegrationError as exc:
            if parts:
                exc.trajectory = _join(parts + ([exc.trajectory] if exc.trajectory is not None else []))
            raise
        y = part.states[-1]
        parts.append(part)
        if part.termination != "horizon":
            break
    traj = _join(parts)
    traj.target = s.target
    traj.dimensional = _dimensional(traj, s.target)
    return traj


def phase_portrait(model, param, grid, settings=None, horizon=60.0, coeffs=None, k0=0.0, workers=1):
    """Forward trajectories from every node of an (r, phi) grid.

    ``grid`` is ``((r_lo, r_hi), (phi_lo, phi_hi), n, m)`` with ``n`` points in r
    and ``m`` in phi; results are ordered r-major. ``param`` is the speed ratio
    for ``planar`` or the throttle for ``thrust`` (with ``coeffs`` and initial
    speed ratio ``k0``). Failures are recorded on the trajectory
    (``termination == "failed"``) instead of aborting the batch.
    """
    (r_lo, r_hi), (p_lo, p_hi), n, m = grid
    starts = [(r, p) for r in np.linspace(r_lo, r_hi, n) for p in np.linspace(p_lo, p_hi, m)]
    if model == "planar":
        params = param
    elif model == "thrust":
        params = (param, coeffs)
    else:
        raise ValueError("phase portraits are available for the planar and thrust models")

    def run(start):
        x0 = np.array(start if model == "planar" else (*start, k0), dtype=float)
        try:
            return integrate(model, x0, params, settings, horizon=horizon)
        except PursuitError as exc:
            partial = getattr(exc, "trajectory", None)
            if partial is None:
                x = x0.copy()
                x[1] = wrap_angle(x[1])
                partial = Trajectory(model, np.array([0.0]), x[None, :], np.full((1, len(x0)), np.nan),
                                     "failed", k=param if model == "planar" else None)
            partial.termination = "failed"
            partial.error = str(exc)
            return partial

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, starts))
    return [run(s) for s in starts]


def dimensional_circular(traj_general, target):
    """Rescale a general-model circular-pursuit run to (psi, r, phi)."""
    psi = target.omega * traj_general.psi
    r = traj_general.states[:, 0] / target.a
    phi = wrap_angle(traj_general.states[:, 1] - psi)
    return psi, r, phi
