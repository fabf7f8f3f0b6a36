"""Eigenvalues of small real matrices and equilibrium-type classification.

Both solvers work from the characteristic polynomial in closed form, so complex
eigenvalues always come out as exact conjugate pairs.
"""

import math
from dataclasses import dataclass

import numpy as np

# Relative threshold under which the cubic discriminant counts as zero (repeated root).
CUBIC_DISC_TOL = 1e-12
# |Re lambda| < ZERO_RE_TOL * max(1, ||J||) is treated as zero.
ZERO_RE_TOL = 1e-9

KINDS = ("stable-node", "unstable-node", "stable-focus", "unstable-focus", "saddle", "center", "degenerate")


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of a Jacobian together with its invariants.

    ``discriminant`` is tau^2 - 4*Delta for 2x2 matrices and the discriminant of
    the monic characteristic cubic for 3x3 ones. In both cases it is positive
    when all eigenvalues are real and distinct and negative when a complex pair
    is present. ``norm`` is the Frobenius norm of the matrix.
    """

    eigenvalues: tuple
    trace: float
    det: float
    discriminant: float
    norm: float

    @property
    def max_real(self):
        return max(ev.real for ev in self.eigenvalues)

    @property
    def has_complex_pair(self):
        return any(ev.imag != 0.0 for ev in self.eigenvalues)


@dataclass(frozen=True)
class EquilibriumClass:
    kind: str
    margin: float

    @property
    def stable(self):
        return self.kind in ("stable-node", "stable-focus")


def _quadratic_roots(b, c):
    """Roots of x^2 + b x + c, returned as a conjugate pair or sorted reals."""
    disc = b * b - 4.0 * c
    if disc < 0.0:
        re = -0.5 * b
        im = 0.5 * math.sqrt(-disc)
        return complex(re, im), complex(re, -im)
    sq = math.sqrt(disc)
    # Avoid cancellation: compute the larger-magnitude root first.
    q = -0.5 * (b + math.copysign(sq, b)) if b != 0.0 else -0.5 * sq
    if q == 0.0:
        return 0.0, 0.0
    x1, x2 = q, c / q
    return tuple(sorted((x1, x2), reverse=True))


def _pow2_scale(J):
    """Power of two close to max |J_ij|; dividing by it is exact and keeps products in range."""
    m = float(np.max(np.abs(J)))
    if m == 0.0 or not math.isfinite(m):
        return 1.0
    return math.ldexp(1.0, math.frexp(m)[1])


def eig_2x2(J):
    J = np.asarray(J, dtype=float)
    a, b, c, d = J[0, 0], J[0, 1], J[1, 0], J[1, 1]
    tau = a + d
    delta = a * d - b * c
    disc = tau * tau - 4.0 * delta
    sc = _pow2_scale(J)
    roots = _quadratic_roots(-tau / sc, delta / sc / sc)
    return Spectrum(
        eigenvalues=tuple(complex(x) * sc for x in roots),
        trace=float(tau),
        det=float(delta),
        discriminant=float(disc),
        norm=float(np.linalg.norm(J)),
    )


def char_poly_3x3(J):
    """Coefficients (c2, c1, c0) of det(lambda I - J) = lambda^3 + c2 lambda^2 + c1 lambda + c0."""
    J = np.asarray(J, dtype=float)
    tr = J[0, 0] + J[1, 1] + J[2, 2]
    minors = (
        J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        + J[0, 0] * J[2, 2] - J[0, 2] * J[2, 0]
        + J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1]
    )
    det = (
        J[0, 0] * (J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1])
        - J[0, 1] * (J[1, 0] * J[2, 2] - J[1, 2] * J[2, 0])
        + J[0, 2] * (J[1, 0] * J[2, 1] - J[1, 1] * J[2, 0])
    )
    return -tr, minors, -det


def _polish(x, c2, c1, c0, iters=3):
    for _ in range(iters):
        p = ((x + c2) * x + c1) * x + c0
        dp = (3.0 * x + 2.0 * c2) * x + c1
        if dp == 0.0:
            break
        step = p / dp
        # Roots are O(1) after scaling; a large step means Newton is heading for another root.
        if abs(step) > 1e-6:
            break
        x_new = x - step
        if abs(((x_new + c2) * x_new + c1) * x_new + c0) >= abs(p):
            break
        x = x_new
    return x


def cubic_roots(c2, c1, c0):
    """Roots of x^3 + c2 x^2 + c1 x + c0 and the cubic discriminant.

    Coefficients are first rescaled so the largest root magnitude is O(1). The
    three-real case uses the trigonometric form; otherwise one real root is
    taken from Cardano's formula and the remaining pair from the deflated
    quadratic.
    """
    s = max(abs(c2), math.sqrt(abs(c1)), abs(c0) ** (1.0 / 3.0))
    if s == 0.0:
        return (0.0, 0.0, 0.0), 0.0
    b, c, d = c2 / s, c1 / s / s, c0 / s / s / s
    disc_scaled = 18.0 * b * c * d - 4.0 * b ** 3 * d + b * b * c * c - 4.0 * c ** 3 - 27.0 * d * d
    disc = disc_scaled * s ** 6

    # Depressed cubic t^3 + p t + q with x = t - b/3.
    p = c - b * b / 3.0
    q = 2.0 * b ** 3 / 27.0 - b * c / 3.0 + d
    shift = -b / 3.0

    if abs(disc_scaled) <= CUBIC_DISC_TOL:
        # Repeated root: double root -3q/(2p) and simple root 3q/p (triple if p == 0).
        if abs(p) <= CUBIC_DISC_TOL:
            roots = [shift] * 3
        else:
            double = -1.5 * q / p
            roots = [3.0 * q / p + shift, double + shift, double + shift]
        roots = [_polish(x, b, c, d) for x in roots]
        out = tuple(sorted((x * s for x in roots), reverse=True))
        return out, disc

    if disc_scaled > 0.0:
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * m)
        theta = math.acos(max(-1.0, min(1.0, arg))) / 3.0
        roots = [m * math.cos(theta - 2.0 * math.pi * j / 3.0) + shift for j in range(3)]
        roots = [_polish(x, b, c, d) for x in roots]
        out = tuple(sorted((x * s for x in roots), reverse=True))
        return out, disc

    sq = math.sqrt(q * q / 4.0 + p ** 3 / 27.0)
    u = -0.5 * q + math.copysign(sq, -0.5 * q)
    cu = math.copysign(abs(u) ** (1.0 / 3.0), u)
    t = cu - p / (3.0 * cu) if cu != 0.0 else 0.0
    x1 = _polish(t + shift, b, c, d)
    # Deflate: x^2 + (b + x1) x + (c + x1 (b + x1)); use -d/x1 for the product when better conditioned.
    qb = b + x1
    qc = -d / x1 if abs(x1) > 1e-3 else c + x1 * qb
    pair = _quadratic_roots(qb, qc)
    if isinstance(pair[0], complex):
        z = complex(pair[0].real * s, abs(pair[0].imag) * s)
        return (x1 * s, z, z.conjugate()), disc
    # Rounding put the pair on the real axis; the discriminant decided otherwise.
    re = -0.5 * qb * s
    return (x1 * s, complex(re, 0.0), complex(re, 0.0)), disc


def _rescale(x, sc, power):
    # Repeated products saturate to inf instead of raising like sc ** power can.
    x = float(x)
    for _ in range(power):
        x *= sc
    return x


def eig_3x3(J):
    J = np.asarray(J, dtype=float)
    sc = _pow2_scale(J)
    c2, c1, c0 = char_poly_3x3(J / sc)
    roots, disc = cubic_roots(c2, c1, c0)
    return Spectrum(
        eigenvalues=tuple(complex(x) * sc for x in roots),
        trace=float(-c2 * sc),
        det=_rescale(-c0, sc, 3),
        discriminant=_rescale(disc, sc, 6),
        norm=float(np.linalg.norm(J)),
    )


def eig(J):
    J = np.asarray(J, dtype=float)
    if J.shape == (2, 2):
        return eig_2x2(J)
    if J.shape == (3, 3):
        return eig_3x3(J)
    raise ValueError(f"only 2x2 and 3x3 matrices are supported, got shape {J.shape}")


def classify(s):
    """Classify the equilibrium type from its spectrum.

    Repeated real roots fold into "node" with a margin near zero.
    """
    tol = ZERO_RE_TOL * max(1.0, s.norm)
    res = [ev.real for ev in s.eigenvalues]
    margin = min(min(abs(x) for x in res), abs(s.discriminant))
    if any(abs(x) < tol for x in res):
        zero = [ev for ev in s.eigenvalues if abs(ev.real) < tol]
        others = [ev for ev in s.eigenvalues if abs(ev.real) >= tol]
        if all(ev.imag != 0.0 for ev in zero) and all(ev.real < 0 for ev in others):
            return EquilibriumClass("center", min(abs(x) for x in res))
        return EquilibriumClass("degenerate", min(abs(x) for x in res))
    if all(x < 0 for x in res):
        kind = "stable-focus" if s.has_complex_pair else "stable-node"
    elif all(x > 0 for x in res):
        kind = "unstable-focus" if s.has_complex_pair else "unstable-node"
    else:
        kind = "saddle"
    return EquilibriumClass(kind, margin)


def focus_node_indicator(s):
    """Positive when all eigenvalues are real (node-like), negative when a complex pair exists."""
    return s.discriminant
