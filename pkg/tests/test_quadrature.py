import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dipole_phase.core import Trajectory
from dipole_phase.errors import NonConvergence, NonFiniteSample
from dipole_phase.quadrature import (
    Axis,
    IntegrationRegion,
    cubature,
    gauss_line_integral,
    integrate_3d,
    integrate_line,
    line_integral,
)

inf = math.inf
R3 = IntegrationRegion.box([(-inf, inf)] * 3)


def gauss3(p):
    return np.exp(-np.sum(p * p, axis=1))


def test_unit_cube_volume():
    r = integrate_3d(lambda p: np.ones(len(p)), IntegrationRegion.box([(0, 1)] * 3))
    assert r.converged and abs(r.value - 1.0) <= 1e-12


def test_gaussian_over_r3():
    r = integrate_3d(gauss3, R3)
    assert abs(r.value - math.pi**1.5) <= 1e-6 * math.pi**1.5
    assert abs(r.value - math.pi**1.5) <= 10 * r.error_estimate


def test_reduced_sheet_kernel_against_1d_reference():
    # y collapsed; inner x integral of a/(x^2+a^2+z^2)^(3/2) is 2a/(a^2+z^2),
    # whose z integral over [0, inf) is pi. Reference by 1-D Gauss-Kronrod.
    region = IntegrationRegion((Axis(-inf, inf), Axis.point(0.0), Axis(0.0, inf)))
    r = integrate_3d(lambda p: 1.0 / (p[:, 0] ** 2 + 1.0 + p[:, 2] ** 2) ** 1.5, region)
    ref = integrate_3d(
        lambda p: 2.0 / (1.0 + p[:, 2] ** 2),
        IntegrationRegion((Axis.point(0.0), Axis.point(0.0), Axis(0.0, inf))),
        rel_tol=1e-12,
    )
    assert abs(ref.value - math.pi) < 1e-10
    assert abs(r.value - ref.value) <= 1e-6 * math.pi


def test_collapsed_region_is_a_point_evaluation():
    region = IntegrationRegion((Axis.point(1.0), Axis.point(2.0), Axis.point(3.0)))
    (r,) = cubature(lambda p: p[:, 0] * p[:, 1] * p[:, 2], region)
    assert r.value == 6.0


def test_vector_integrand_components():
    res = cubature(lambda p: np.stack([gauss3(p), 2 * gauss3(p)], axis=1), R3)
    assert len(res) == 2
    assert abs(res[1].value - 2 * res[0].value) <= res[1].error_estimate + 2 * res[0].error_estimate


def test_budget_exhaustion_returns_best_estimate():
    with pytest.raises(NonConvergence) as info:
        integrate_3d(lambda p: 1.0 / np.sqrt(np.abs(p[:, 0] - 0.31) + 1e-300), IntegrationRegion.box([(0, 1)] * 3), max_evals=5000)
    r = info.value.result
    assert r is not None and not r.converged and math.isfinite(r.value)
    (raw,) = cubature(
        lambda p: 1.0 / np.sqrt(np.abs(p[:, 0] - 0.31) + 1e-300), IntegrationRegion.box([(0, 1)] * 3), max_evals=5000
    )
    assert not raw.converged


def test_non_finite_sample_rejected():
    with pytest.raises(NonFiniteSample):
        integrate_3d(lambda p: np.full(len(p), np.nan), IntegrationRegion.box([(0, 1)] * 3))


def test_singular_point_guard():
    with pytest.raises(NonFiniteSample):
        # the centre of the box is a rule node
        integrate_3d(lambda p: np.ones(len(p)), IntegrationRegion.box([(-1, 1)] * 3), singular_points=np.zeros((1, 3)))


def test_bad_tolerances():
    with pytest.raises(ValueError):
        integrate_3d(gauss3, R3, rel_tol=0.0)


def test_region_validation():
    with pytest.raises(ValueError):
        Axis(1.0, 0.0)
    with pytest.raises(ValueError):
        IntegrationRegion((Axis(0, 1), Axis(0, 1)))


coef = st.floats(-3.0, 3.0, allow_nan=False)
centre = st.floats(-1.0, 1.0, allow_nan=False)


def _bump(c):
    return lambda p: np.exp(-np.sum((p - c) ** 2, axis=1)) * (1.0 + 0.3 * p[:, 0])


@settings(max_examples=15, deadline=None)
@given(coef, coef, st.tuples(centre, centre, centre))
def test_linearity(alpha, beta, c):
    f, g = gauss3, _bump(np.array(c))
    box = IntegrationRegion.box([(-2, 2), (-3, 1), (-2, 3)])
    If, Ig = integrate_3d(f, box), integrate_3d(g, box)
    Ic = integrate_3d(lambda p: alpha * f(p) + beta * g(p), box)
    bound = abs(alpha) * If.error_estimate + abs(beta) * Ig.error_estimate + Ic.error_estimate
    assert abs(Ic.value - (alpha * If.value + beta * Ig.value)) <= bound + 1e-14


@settings(max_examples=15, deadline=None)
@given(st.floats(-1.5, 1.5, allow_nan=False), st.integers(0, 2), st.tuples(centre, centre, centre))
def test_region_additivity(cut, axis, c):
    f = _bump(np.array(c))
    bounds = [(-2.0, 2.0)] * 3
    left, right = list(bounds), list(bounds)
    left[axis], right[axis] = (-2.0, cut), (cut, 2.0)
    whole = integrate_3d(f, IntegrationRegion.box(bounds))
    a = integrate_3d(f, IntegrationRegion.box(left))
    b = integrate_3d(f, IntegrationRegion.box(right))
    assert abs(a.value + b.value - whole.value) <= a.error_estimate + b.error_estimate + whole.error_estimate


@settings(max_examples=10, deadline=None)
@given(st.tuples(centre, centre, centre), st.floats(0.5, 2.0))
def test_error_honesty_gaussians(c, width):
    # exact value of a shifted Gaussian over R^3 is (pi w^2)^(3/2)
    c = np.array(c)
    r = integrate_3d(lambda p: np.exp(-np.sum((p - c) ** 2, axis=1) / width**2), R3)
    exact = (math.pi * width**2) ** 1.5
    assert abs(r.value - exact) <= 10 * r.error_estimate


def test_determinism():
    f = _bump(np.array([0.2, -0.1, 0.4]))
    a = integrate_3d(f, R3, rel_tol=1e-8)
    b = integrate_3d(f, R3, rel_tol=1e-8)
    assert a.value == b.value and a.error_estimate == b.error_estimate and a.evaluations == b.evaluations


def test_determinism_across_thread_counts(monkeypatch):
    f = _bump(np.array([0.2, -0.1, 0.4]))
    monkeypatch.setenv("DIPOLE_PHASE_THREADS", "1")
    a = integrate_3d(f, R3, rel_tol=1e-8)
    monkeypatch.setenv("DIPOLE_PHASE_THREADS", "4")
    b = integrate_3d(f, R3, rel_tol=1e-8)
    assert a.value == b.value


def test_line_exact_gradient_loop():
    loop = Trajectory(np.array([[0, 0, 0], [1, 0.5, 0], [2, 2, 1], [-1, 1, 3]], dtype=float), closed=True)
    v = integrate_line(lambda p: np.stack([p[:, 1] * p[:, 2], p[:, 0] * p[:, 2], p[:, 0] * p[:, 1]], 1), loop)
    assert abs(v) <= 1e-9


def test_line_winding():
    theta = np.linspace(0, 2 * np.pi, 256, endpoint=False)
    circle = Trajectory(np.stack([np.cos(theta), np.sin(theta), 0 * theta], 1), closed=True)

    def f(p):
        r2 = p[:, 0] ** 2 + p[:, 1] ** 2
        return np.stack([-p[:, 1] / r2, p[:, 0] / r2, 0 * r2], 1)

    assert abs(integrate_line(f, circle) - 2 * math.pi) <= 1e-6
    assert abs(gauss_line_integral(f, circle).value - 2 * math.pi) <= 1e-6


def test_line_constant_field_exact():
    r = line_integral(lambda p: np.tile([0.0, 0.0, 1.5], (len(p), 1)), Trajectory.line((1, 2, -3), (1, 2, 5)))
    assert r.value == 12.0


def test_gauss_line_matches_romberg():
    traj = Trajectory(np.array([[0, 0, 0], [1, 2, 0], [3, 1, 1]], dtype=float))

    def f(p):
        return np.stack([np.sin(p[:, 0]), np.cos(p[:, 1]) * p[:, 2], np.exp(-p[:, 0])], 1)

    a = line_integral(f, traj, n_refine=10, rel_tol=1e-12)
    b = gauss_line_integral(f, traj, rel_tol=1e-13)
    assert a.converged and b.converged
    assert abs(a.value - b.value) <= 1e-10


def test_line_nonconvergence():
    with pytest.raises(NonConvergence):
        integrate_line(
            lambda p: np.stack([np.sin(1e4 * p[:, 0]) * 0, np.zeros(len(p)), np.sin(1e3 * p[:, 2]) + 1], 1),
            Trajectory.line((0, 0, 0), (0, 0, 1)),
            n_refine=3,
        )
