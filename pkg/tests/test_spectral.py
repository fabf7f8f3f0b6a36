import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from circpursuit.spectral import classify, cubic_roots, eig, eig_2x2, eig_3x3

entries = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


def _sorted(z):
    return sorted(np.asarray(z, dtype=complex), key=lambda x: (round(x.real, 6), x.imag))


def _close(ours, ref, J):
    scale = max(1.0, np.linalg.norm(J))
    # Match by nearest neighbour so near-degenerate orderings do not matter.
    ref = list(ref)
    worst = 0.0
    for z in ours:
        j = min(range(len(ref)), key=lambda i: abs(ref[i] - z))
        worst = max(worst, abs(ref.pop(j) - z))
    return worst / scale


@settings(max_examples=300, deadline=None)
@given(arrays(float, (2, 2), elements=entries))
def test_eig_2x2_matches_numpy(J):
    s = eig_2x2(J)
    assert _close(s.eigenvalues, np.linalg.eigvals(J), J) < 1e-6
    assert s.trace == pytest.approx(np.trace(J), abs=1e-9)
    assert s.det == pytest.approx(J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0], abs=1e-9)


@settings(max_examples=300, deadline=None)
@given(arrays(float, (3, 3), elements=entries))
def test_eig_3x3_matches_numpy(J):
    s = eig_3x3(J)
    # Repeated roots are ill-conditioned for any solver; compare at sqrt-eps scale.
    assert _close(s.eigenvalues, np.linalg.eigvals(J), J) < 1e-5


@settings(max_examples=200, deadline=None)
@given(arrays(float, (3, 3), elements=entries))
def test_trace_and_determinant_are_eigen_sum_and_product(J):
    s = eig(J)
    ev = np.array(s.eigenvalues)
    scale = max(1.0, np.linalg.norm(J))
    assert abs(ev.sum().real - np.trace(J)) <= 1e-8 * scale
    with np.errstate(all="ignore"):
        det = np.linalg.det(J)
    assert abs(np.prod(ev).real - det) <= 1e-7 * scale ** 3


@settings(max_examples=200, deadline=None)
@given(arrays(float, (3, 3), elements=entries))
def test_complex_eigenvalues_come_in_exact_conjugate_pairs(J):
    ev = eig(J).eigenvalues
    complex_ = [z for z in ev if z.imag != 0]
    assert len(complex_) in (0, 2)
    if complex_:
        assert complex_[0] == complex_[1].conjugate()


def test_cubic_roots_three_real():
    roots, disc = cubic_roots(-6.0, 11.0, -6.0)  # (x-1)(x-2)(x-3)
    assert sorted(z.real for z in roots) == pytest.approx([1, 2, 3], abs=1e-13)
    assert disc > 0


def test_cubic_roots_complex_pair():
    roots, disc = cubic_roots(-1.0, 1.0, -1.0)  # (x-1)(x^2+1)
    assert disc < 0
    assert _close(roots, [1, 1j, -1j], np.eye(3)) < 1e-13


def test_cubic_roots_triple():
    roots, _ = cubic_roots(-3.0, 3.0, -1.0)
    assert all(abs(z - 1) < 1e-5 for z in roots)


@pytest.mark.parametrize("J, kind", [
    ([[-1, 0], [0, -2]], "stable-node"),
    ([[1, 0], [0, 2]], "unstable-node"),
    ([[-1, 2], [-2, -1]], "stable-focus"),
    ([[1, 2], [-2, 1]], "unstable-focus"),
    ([[1, 0], [0, -1]], "saddle"),
    ([[0, 1], [-1, 0]], "center"),
    ([[0, 0], [0, -1]], "degenerate"),
    ([[-1, 0, 0], [0, -2, 0], [0, 0, -3]], "stable-node"),
    ([[-1, 2, 0], [-2, -1, 0], [0, 0, -0.1]], "stable-focus"),
    ([[-1, 2, 0], [-2, -1, 0], [0, 0, 0.1]], "saddle"),
    ([[0, 1, 0], [-1, 0, 0], [0, 0, -1]], "center"),
])
def test_classify(J, kind):
    assert classify(eig(J)).kind == kind


def test_planar_equilibrium_spectrum_closed_form():
    # At a planar equilibrium the trace is -k/r and the determinant is 1.
    k = 0.6
    r, phi = math.sqrt(1 - k * k), math.asin(k)
    J = [[0, math.cos(phi)], [-math.cos(phi) / r ** 2, -math.sin(phi) / r]]
    s = eig(J)
    assert s.trace == pytest.approx(-k / r)
    assert s.det == pytest.approx(1.0, abs=1e-14)


def test_eig_rejects_other_shapes():
    with pytest.raises(ValueError):
        eig(np.eye(4))


@pytest.mark.parametrize("scale", [1e-280, 1e-150, 1e150])
def test_extreme_scales_are_handled_exactly(scale):
    J = np.array([[-1.0, 2.0, 0.5], [-2.0, -1.0, 0.0], [0.3, 0.0, -0.1]])
    ref = eig(J).eigenvalues
    scaled = eig(J * scale).eigenvalues
    for a, b in zip(ref, scaled):
        assert abs(b / scale - a) <= 1e-12
