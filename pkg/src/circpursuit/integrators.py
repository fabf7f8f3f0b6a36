"""Explicit Runge-Kutta integrators with dense output and terminal event location.

Two methods are available: classical fixed-step RK4 (cubic Hermite dense output)
and the adaptive Dormand-Prince 5(4) pair (its native quartic continuous
extension). Both return a :class:`Solution` holding the accepted steps and a
piecewise-polynomial interpolant over them.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StepUnderflowError

EVENT_TIME_TOL = 1e-9
MIN_STEP = 1e-12

# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# Difference between the 5th- and 4th-order weights (7th stage is f(y_new)).
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# Continuous extension: y(t0 + x h) = y0 + h * K^T @ P @ [x, x^2, x^3, x^4].
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


@dataclass
class IntegratorSettings:
    method: str = "adaptive-rk45"
    dt: float = 0.01
    rtol: float = 1e-7
    atol: float = 1e-9
    max_steps: int = 1_000_000
    r_engage: float = 1e-3
    divergence_limit: float = 1e6

    def __post_init__(self):
        from .models import R_MIN

        if self.method not in ("fixed-rk4", "adaptive-rk45"):
            raise DomainError(f"unknown integration method {self.method!r}")
        if self.dt <= 0 or self.rtol <= 0 or self.atol <= 0:
            raise DomainError("dt, rtol and atol must be positive")
        if self.r_engage < R_MIN:
            raise DomainError(f"r_engage must be >= r_min = {R_MIN}")
        if self.max_steps < 1:
            raise DomainError("max_steps must be positive")


class DenseOutput:
    """Piecewise polynomial y(t) over consecutive steps.

    On step i, y(t) = sum_j coeffs[i, j] * x**j with x = (t - t0[i]) / h[i].
    """

    def __init__(self, t0, h, coeffs):
        self.t0 = np.asarray(t0, dtype=float)
        self.h = np.asarray(h, dtype=float)
        self.coeffs = np.asarray(coeffs, dtype=float)

    @property
    def t_min(self):
        return self.t0[0] if len(self.t0) else None

    @property
    def t_max(self):
        return self.t0[-1] + self.h[-1] if len(self.t0) else None

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        idx = np.clip(np.searchsorted(self.t0, t, side="right") - 1, 0, len(self.t0) - 1)
        x = (t - self.t0[idx]) / self.h[idx]
        c = self.coeffs[idx]  # (m, deg+1, n)
        powers = x[:, None] ** np.arange(c.shape[1])[None, :]
        y = np.einsum("mj,mjn->mn", powers, c)
        return y[0] if scalar else y

    @staticmethod
    def concatenate(parts):
        parts = [p for p in parts if len(p.t0)]
        deg = max(p.coeffs.shape[1] for p in parts)
        coeffs = []
        for p in parts:
            c = p.coeffs
            if c.shape[1] < deg:
                c = np.concatenate([c, np.zeros((c.shape[0], deg - c.shape[1], c.shape[2]))], axis=1)
            coeffs.append(c)
        return DenseOutput(
            np.concatenate([p.t0 for p in parts]),
            np.concatenate([p.h for p in parts]),
            np.concatenate(coeffs),
        )


@dataclass
class Solution:
    t: np.ndarray
    y: np.ndarray
    f: np.ndarray
    dense: DenseOutput
    status: str  # "horizon", "event", "divergence", "nonfinite"
    message: str = ""


def _hermite_coeffs(y0, y1, f0, f1, h):
    d = y1 - y0
    return np.array([y0, h * f0, 3.0 * d - h * (2.0 * f0 + f1), -2.0 * d + h * (f0 + f1)])


def _rk4_step(fun, t, y, f0, h):
    k2 = fun(t + 0.5 * h, y + 0.5 * h * f0)
    k3 = fun(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = fun(t + h, y + h * k3)
    return y + (h / 6.0) * (f0 + 2.0 * k2 + 2.0 * k3 + k4)


def _dopri_step(fun, t, y, f0, h):
    K = np.empty((7, y.size))
    K[0] = f0
    for s in range(1, 6):
        dy = np.dot(_A[s], K[:s]) * h
        K[s] = fun(t + _C[s] * h, y + dy)
    y_new = y + h * np.dot(_B, K[:6])
    K[6] = fun(t + h, y_new)
    err = h * np.dot(_E, K)
    return y_new, K[6], err, K


def _dopri_coeffs(y0, K, h):
    Q = K.T @ _P  # (n, 4)
    return np.vstack([y0, h * Q.T])


def _initial_step(fun, t0, y0, f0, rtol, atol, span):
    scale = atol + rtol * np.abs(y0)
    d0 = np.max(np.abs(y0) / scale)
    d1 = np.max(np.abs(f0) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = y0 + h0 * f0
    f1 = fun(t0 + h0, y1)
    d2 = np.max(np.abs(f1 - f0) / scale) / h0 if np.all(np.isfinite(f1)) else np.inf
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, span)


def _all_finite(*arrays):
    return all(np.all(np.isfinite(a)) for a in arrays)


def solve(fun, t0, y0, t_end, settings, event=None):
    """Integrate ``y' = fun(t, y)`` from ``t0`` to ``t_end``.

    ``event(t, y)`` is an optional terminal event: integration stops the first
    time it drops from positive to <= 0. The crossing is located by bisection
    on the dense output to ``EVENT_TIME_TOL`` and the returned final sample is
    the right end of the final bracket, so ``event`` is <= 0 there.

    Raises StepUnderflowError (with the partial solution attached) when the
    adaptive step drops below ``MIN_STEP``.
    """
    y0 = np.asarray(y0, dtype=float)
    f0 = fun(t0, y0)
    ts, ys, fs = [t0], [y0], [f0]
    dense_t0, dense_h, dense_c = [], [], []
    adaptive = settings.method == "adaptive-rk45"
    span = t_end - t0
    status = "horizon"

    def result(status, message=""):
        n = y0.size
        deg = 5 if adaptive else 4
        dense = DenseOutput(
            np.array(dense_t0), np.array(dense_h),
            np.array(dense_c) if dense_c else np.zeros((0, deg, n)),
        )
        return Solution(np.array(ts), np.array(ys), np.array(fs), dense, status, message)

    if span <= 0:
        return result("horizon")

    g_old = event(t0, y0) if event is not None else None
    t, y, f = t0, y0, f0
    if adaptive:
        h = _initial_step(fun, t0, y0, f0, settings.rtol, settings.atol, span)
    else:
        h = settings.dt

    steps = 0
    while t < t_end:
        if steps >= settings.max_steps:
            return result("horizon", "max_steps reached")
        h_try = min(h, t_end - t)
        # Avoid a sliver of a final step.
        if t_end - (t + h_try) < 1e-12 * max(1.0, abs(t_end)):
            h_try = t_end - t

        if adaptive:
            while True:
                if h_try < MIN_STEP:
                    raise StepUnderflowError(
                        f"step size {h_try:.2e} fell below {MIN_STEP:.0e} at t = {t:.6g}",
                        result("failed"),
                    )
                with np.errstate(all="ignore"):
                    y_new, f_new, err, K = _dopri_step(fun, t, y, f, h_try)
                if not _all_finite(y_new, f_new, err):
                    h_try *= 0.25
                    continue
                scale = settings.atol + settings.rtol * np.maximum(np.abs(y), np.abs(y_new))
                err_norm = np.max(np.abs(err) / scale)
                if err_norm <= 1.0:
                    factor = 5.0 if err_norm == 0 else min(5.0, 0.9 * err_norm ** -0.2)
                    h = h_try * max(1.0, factor)
                    coeffs = _dopri_coeffs(y, K, h_try)
                    break
                h_try *= max(0.2, 0.9 * err_norm ** -0.2)
        else:
            with np.errstate(all="ignore"):
                y_new = _rk4_step(fun, t, y, f, h_try)
                f_new = fun(t + h_try, y_new)
            if not _all_finite(y_new, f_new):
                return result("nonfinite", f"non-finite state at t = {t + h_try:.6g}")
            coeffs = _hermite_coeffs(y, y_new, f, f_new, h_try)

        t_new = t + h_try if t + h_try < t_end else t_end
        dense_t0.append(t)
        dense_h.append(h_try)
        dense_c.append(coeffs)
        steps += 1

        if event is not None:
            g_new = event(t_new, y_new)
            if g_old > 0 and g_new <= 0:
                piece = DenseOutput([t], [h_try], [coeffs])
                lo, hi = t, t_new
                while hi - lo > EVENT_TIME_TOL:
                    mid = 0.5 * (lo + hi)
                    if event(mid, piece(mid)) > 0:
                        lo = mid
                    else:
                        hi = mid
                y_ev = piece(hi)
                if event(hi, y_ev) > 0:
                    # Interpolant and step end disagree; fall back to the step end.
                    hi, y_ev = t_new, y_new
                with np.errstate(all="ignore"):
                    f_ev = fun(hi, y_ev)
                ts.append(hi)
                ys.append(y_ev)
                fs.append(f_ev)
                return result("event")
            g_old = g_new

        t, y, f = t_new, y_new, f_new
        ts.append(t)
        ys.append(y)
        fs.append(f)

        if np.max(np.abs(y)) > settings.divergence_limit:
            return result("divergence")

    return result(status)
