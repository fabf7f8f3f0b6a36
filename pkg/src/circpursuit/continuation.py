"""Pseudo-arclength continuation of equilibrium branches.

The branch is followed in the extended space y = (state, parameter). Each step
predicts along the unit tangent (null vector of the extended Jacobian) and
corrects with Newton's method on the equilibrium residual plus the arclength
constraint. Stability is evaluated at every accepted point from the model's
true Jacobian, and sign changes of three indicators are reported as events:

* ``fold``             -- parameter component of the tangent
* ``stability-change`` -- largest real part of the spectrum
* ``type-change``      -- focus/node discriminant

The corrector works with the residual (sin phi - k, cos phi - r), which has the
same zeros as the planar vector field for r != 0 but stays bounded as r -> 0.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BracketLostError, NoConvergenceError, SingularStartError, SingularStateError
from .models import PlanarState, ThrustState, engagement_throttle, planar_jacobian_array, thrust_jacobian_array
from .spectral import classify, eig_2x2, eig_3x3

EVENT_KINDS = ("fold", "stability-change", "type-change")
REFINE_PARAM_TOL = 1e-6
# Terminal points are placed just outside |r| = r_min so stability stays defined there.
_CLIP_MARGIN = 1.0 + 1e-9


@dataclass
class ContinuationSettings:
    h0: float = 0.01
    h_min: float = 1e-6
    h_max: float = 0.05
    newton_tol: float = 1e-10
    max_newton_iters: int = 10
    max_points: int = 5000
    r_min: float = 1e-3
    direction: int = 1

    def __post_init__(self):
        if not (0 < self.h_min <= self.h0 <= self.h_max):
            raise ValueError("need 0 < h_min <= h0 <= h_max")
        if self.newton_tol <= 0:
            raise ValueError("newton_tol must be positive")
        if self.direction not in (1, -1):
            raise ValueError("direction must be +1 or -1")


@dataclass
class BranchPoint:
    state: object
    param: float
    spectrum: object
    eq_class: object
    arclength: float
    # Unwrapped (state, param) vector and unit tangent in the extended space.
    vector: np.ndarray = field(repr=False)
    tangent: np.ndarray = field(repr=False)

    @property
    def stable(self):
        return self.eq_class.stable


@dataclass
class Event:
    interval: tuple
    kind: str
    param: float
    state: object
    arclength: float
    spectrum: object = None
    eq_class: object = None


@dataclass
class Branch:
    model: str
    points: list = field(default_factory=list)
    events: list = field(default_factory=list)
    termination: str = ""
    # Closed-form limit (param, r) where the branch runs into r = 0, if it did.
    limit_point: tuple | None = None

    @property
    def params(self):
        return np.array([p.param for p in self.points])

    @property
    def states(self):
        return np.array([p.vector[:-1] for p in self.points])


class _Problem:
    """Residual, extended Jacobian and stability for one model."""

    def __init__(self, model, coeffs=None):
        if model not in ("planar", "thrust"):
            raise ValueError(f"unknown model {model!r}")
        if model == "thrust" and coeffs is None:
            raise ValueError("the thrust model needs coeffs")
        self.model = model
        self.coeffs = coeffs
        self.n = 2 if model == "planar" else 3

    def residual(self, y):
        if self.model == "planar":
            r, phi, k = y
            return np.array([math.sin(phi) - k, math.cos(phi) - r])
        r, phi, k, eta = y
        c = self.coeffs
        return np.array([math.sin(phi) - k, math.cos(phi) - r, eta * c.C1 - c.C2 * k * k])

    def jacobian(self, y):
        if self.model == "planar":
            r, phi, k = y
            return np.array([
                [0.0, math.cos(phi), -1.0],
                [-1.0, -math.sin(phi), 0.0],
            ])
        r, phi, k, eta = y
        c = self.coeffs
        return np.array([
            [0.0, math.cos(phi), -1.0, 0.0],
            [-1.0, -math.sin(phi), 0.0, 0.0],
            [0.0, 0.0, -2.0 * c.C2 * k, c.C1],
        ])

    def spectrum(self, y, r_min):
        if not abs(y[0]) >= r_min:
            raise SingularStateError(y[0], r_min)
        if self.model == "planar":
            return eig_2x2(planar_jacobian_array(y[0], y[1]))
        return eig_3x3(thrust_jacobian_array(y[0], y[1], y[2], self.coeffs))

    def state(self, y):
        if self.model == "planar":
            return PlanarState(y[0], y[1])
        return ThrustState(y[0], y[1], y[2])


def _tangent(J, reference=None):
    """Unit null vector of the n x (n+1) matrix J, oriented along ``reference``."""
    q, _ = np.linalg.qr(J.T, mode="complete")
    t = q[:, -1]
    if reference is not None and np.dot(t, reference) < 0:
        t = -t
    return t


def _newton(problem, y, constraint, tol, max_iters):
    """Solve residual(y) = 0 together with one scalar ``constraint`` = (value, gradient)."""
    for it in range(1, max_iters + 1):
        g = problem.residual(y)
        cval, cgrad = constraint(y)
        F = np.append(g, cval)
        A = np.vstack([problem.jacobian(y), cgrad])
        try:
            dy = np.linalg.solve(A, -F)
        except np.linalg.LinAlgError:
            return None, it
        y = y + dy
        if not np.all(np.isfinite(y)):
            return None, it
        if np.linalg.norm(problem.residual(y)) < tol and np.linalg.norm(dy) < 1e3 * tol + 1e-8:
            return y, it
    return None, max_iters


def _arclength_constraint(y0, t0, h):
    return lambda y: (np.dot(t0, y - y0) - h, t0)


def _fixed_component(index, value, size):
    grad = np.zeros(size)
    grad[index] = 1.0
    return lambda y: (y[index] - value, grad)


def _indicators(spectrum, tangent):
    return {
        "fold": tangent[-1],
        "stability-change": spectrum.max_real,
        "type-change": spectrum.discriminant,
    }


def _make_point(problem, y, tangent, arclength, r_min):
    spectrum = problem.spectrum(y, r_min)
    return BranchPoint(
        state=problem.state(y),
        param=float(y[-1]),
        spectrum=spectrum,
        eq_class=classify(spectrum),
        arclength=float(arclength),
        vector=y,
        tangent=tangent,
    )


def polish(model, state, param, settings=None, coeffs=None):
    """Newton-correct ``state`` onto the equilibrium set at fixed ``param``."""
    settings = settings or ContinuationSettings()
    problem = _Problem(model, coeffs)
    y = np.append(np.asarray(state, dtype=float), float(param))
    y, _ = _newton(problem, y, _fixed_component(problem.n, float(param), problem.n + 1),
                   settings.newton_tol, max(settings.max_newton_iters, 20))
    return y


def continue_branch(model, start, settings=None, param_range=(-math.inf, math.inf), coeffs=None,
                    detect=True):
    """Follow an equilibrium branch from ``start = (state, param)``.

    ``state`` is a PlanarState/ThrustState or an array. The parameter is k for
    the planar model and eta for the thrust model. The branch ends when the
    parameter reaches either end of ``param_range`` (the final point is placed
    exactly on the bound), when |r| would drop below ``settings.r_min`` (final
    point placed at |r| = r_min, termination ``singular-clip``), or after
    ``settings.max_points`` points.

    Raises SingularStartError if the start cannot be polished onto the branch
    and NoConvergenceError (carrying the partial branch) if the corrector fails
    at the minimum step.
    """
    settings = settings or ContinuationSettings()
    problem = _Problem(model, coeffs)
    state, param = start
    x0 = state.as_array() if hasattr(state, "as_array") else np.asarray(state, dtype=float)
    lo, hi = param_range
    if not lo <= param <= hi:
        raise SingularStartError(f"start parameter {param} lies outside {param_range}")
    if not abs(x0[0]) >= settings.r_min:
        raise SingularStartError(f"start has |r| = {abs(x0[0]):.3e} < r_min")
    y = polish(model, x0, param, settings, coeffs)
    if y is None or not abs(y[0]) >= settings.r_min:
        raise SingularStartError("initial Newton polish did not converge onto an equilibrium")

    t = _tangent(problem.jacobian(y))
    # Orient towards increasing parameter (or decreasing for direction -1); at a
    # fold, fall back to the largest state component.
    ref = t[-1] if abs(t[-1]) > 1e-12 else t[np.argmax(np.abs(t[:-1]))]
    if ref * settings.direction < 0:
        t = -t

    branch = Branch(model)
    branch.points.append(_make_point(problem, y, t, 0.0, settings.r_min))
    size = problem.n + 1
    h = settings.h0
    s = 0.0

    if lo == hi:
        branch.termination = "boundary"
        return branch

    while True:
        if len(branch.points) >= settings.max_points:
            branch.termination = "max-points"
            break
        y_prev, t_prev = y, t
        while True:
            y_new, iters = _newton(problem, y_prev + h * t_prev, _arclength_constraint(y_prev, t_prev, h),
                                   settings.newton_tol, settings.max_newton_iters)
            if y_new is not None:
                break
            h *= 0.5
            if h < settings.h_min:
                branch.termination = "no-convergence"
                if detect:
                    _attach_events(branch, problem, settings)
                raise NoConvergenceError("corrector failed at the minimum step size", branch)

        t_new = _tangent(problem.jacobian(y_new), t_prev)

        clips = []
        if y_new[-1] > hi or y_new[-1] < lo:
            bound = hi if y_new[-1] > hi else lo
            clips.append(("boundary", _fixed_component(problem.n, bound, size)))
        r_prev = y_prev[0]
        if abs(y_new[0]) < settings.r_min or np.sign(y_new[0]) != np.sign(r_prev):
            clips.append(("singular-clip", _fixed_component(0, math.copysign(settings.r_min * _CLIP_MARGIN, r_prev), size)))
        if clips:
            candidates = []
            for reason, constraint in clips:
                yc, _ = _newton(problem, y_prev + 0.5 * h * t_prev, constraint,
                                settings.newton_tol, max(settings.max_newton_iters, 20))
                if yc is None:
                    continue
                sc = float(np.dot(t_prev, yc - y_prev))
                if sc >= 0:
                    candidates.append((sc, reason, yc))
            if not candidates:
                branch.termination = "no-convergence"
                if detect:
                    _attach_events(branch, problem, settings)
                raise NoConvergenceError("could not place the terminal point on the clip constraint", branch)
            sc, reason, yc = min(candidates, key=lambda c: c[0])
            if sc > 0:
                tc = _tangent(problem.jacobian(yc), t_prev)
                branch.points.append(_make_point(problem, yc, tc, s + sc, settings.r_min))
            branch.termination = reason
            if reason == "singular-clip":
                branch.limit_point = _limit_point(problem, yc)
            break

        s += h
        y, t = y_new, t_new
        branch.points.append(_make_point(problem, y, t, s, settings.r_min))
        if iters <= 3:
            h = min(1.3 * h, settings.h_max)

    if detect:
        _attach_events(branch, problem, settings)
    return branch


def _limit_point(problem, y):
    """Closed-form point where the branch meets r = 0: k = +-1, and eta = C2/C1 for the thrust model."""
    k = math.copysign(1.0, y[2] if problem.model == "thrust" else math.sin(y[1]))
    if problem.model == "planar":
        return (k, 0.0)
    return (engagement_throttle(problem.coeffs), 0.0)


def detect_events(branch):
    """Brackets ``(i, i + 1, kind)`` where an event indicator changes sign strictly."""
    out = []
    pts = branch.points
    for i in range(len(pts) - 1):
        a = _indicators(pts[i].spectrum, pts[i].tangent)
        b = _indicators(pts[i + 1].spectrum, pts[i + 1].tangent)
        for kind in EVENT_KINDS:
            if a[kind] * b[kind] < 0:
                out.append((i, i + 1, kind))
    return out


def _attach_events(branch, problem, settings):
    events = []
    for bracket in detect_events(branch):
        param, state, extra = _refine(bracket, branch, problem, settings)
        events.append(Event(interval=bracket[:2], kind=bracket[2], param=param, state=state, **extra))
    branch.events = sorted(events, key=lambda e: e.arclength)


def refine_event(bracket, branch, settings=None, coeffs=None):
    """Locate an event inside ``bracket = (i, i + 1, kind)`` by bisection along the branch.

    Every bisection iterate is Newton-corrected onto the branch; iteration stops
    once the parameter interval is below 1e-6. Returns ``(param, state)``.
    """
    settings = settings or ContinuationSettings()
    problem = _Problem(branch.model, coeffs)
    param, state, _ = _refine(bracket, branch, problem, settings)
    return param, state


def _refine(bracket, branch, problem, settings):
    i, j, kind = bracket
    left, right = branch.points[i], branch.points[j]
    y_l, t_l = left.vector, left.tangent
    y_r = right.vector.copy()
    # Unwrap phi of the right end relative to the left end.
    y_r[1] = y_l[1] + math.remainder(y_r[1] - y_l[1], 2.0 * math.pi)
    s_r = float(np.dot(t_l, y_r - y_l))

    def indicator(y, tangent):
        return _indicators(problem.spectrum(y, settings.r_min), tangent)[kind]

    f_lo = indicator(y_l, t_l)
    f_hi = indicator(y_r, right.tangent)
    if not f_lo * f_hi < 0 or s_r <= 0:
        raise BracketLostError(f"{kind} indicator does not change sign across the bracket")

    s_lo, s_hi = 0.0, s_r
    p_lo, p_hi = y_l[-1], y_r[-1]
    y_mid, t_mid = y_l, t_l
    for _ in range(200):
        if abs(p_hi - p_lo) <= REFINE_PARAM_TOL and s_hi - s_lo <= REFINE_PARAM_TOL:
            break
        s_mid = 0.5 * (s_lo + s_hi)
        guess = y_l + (s_mid / s_r) * (y_r - y_l)
        y_mid, _ = _newton(problem, guess, _arclength_constraint(y_l, t_l, s_mid),
                           settings.newton_tol, max(settings.max_newton_iters, 20))
        if y_mid is None:
            raise BracketLostError(f"corrector failed while refining {kind}")
        t_mid = _tangent(problem.jacobian(y_mid), t_l)
        f_mid = indicator(y_mid, t_mid)
        if f_mid == 0:
            s_lo = s_hi = s_mid
            break
        if f_mid * f_lo < 0:
            s_hi, p_hi = s_mid, y_mid[-1]
        else:
            s_lo, p_lo, f_lo = s_mid, y_mid[-1], f_mid
    spectrum = problem.spectrum(y_mid, settings.r_min)
    extra = dict(arclength=left.arclength + float(np.dot(t_l, y_mid - y_l)), spectrum=spectrum,
                 eq_class=classify(spectrum))
    return float(y_mid[-1]), problem.state(y_mid), extra
