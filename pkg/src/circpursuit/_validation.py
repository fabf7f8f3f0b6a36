import math

import numpy as np

from .errors import DomainError


def check_positive(name, value):
    value = float(value)
    if not (math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be finite and > 0, got {value!r}")
    return value


def check_finite(name, value):
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return value


def check_throttle(eta):
    eta = float(eta)
    if not (0.0 <= eta <= 1.0):
        raise DomainError(f"throttle must lie in [0, 1], got {eta!r}")
    return eta


def wrap_angle(angle):
    """Wrap an angle (scalar or array) into (-pi, pi]."""
    wrapped = angle - 2.0 * np.pi * np.ceil((np.asarray(angle) - np.pi) / (2.0 * np.pi))
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped
