import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dipole_phase.core import CONST
from dipole_phase.errors import NonConvergence, OverlapViolation, SingularPoint
from dipole_phase.fieldmom import (
    PointCharge,
    SlabFieldConfig,
    bfield,
    bfield_array,
    curl_pi_check,
    efield_charge,
    field_momentum,
    field_momentum_thin_sheet,
    grad_d_dot_pi,
)
from dipole_phase.phase import hydrogen_dipole
from dipole_phase.quadrature import Axis, IntegrationRegion, cubature

q = CONST.e
a = 1.0
SLAB = SlabFieldConfig.from_flux(1.0, a / 100)
SHEET = SlabFieldConfig.from_flux(1.0, a / 100, thin_sheet=True)
SCALE = q * SLAB.n_B / (2 * CONST.c)


def test_flux_density_derived():
    cfg = SlabFieldConfig(250.0, 0.004)
    assert cfg.n_B == 250.0 * 0.004
    with pytest.raises(AttributeError):
        cfg.n_B = 3.0
    with pytest.raises(ValueError):
        SlabFieldConfig(1.0, 0.0)


@pytest.mark.parametrize(
    "point, inside",
    [((5, -0.005, 3), True), ((-7, -0.005, 3), True), ((0, -0.005, -1), False), ((0, 0.005, 3), False), ((0, -0.01, 0), True), ((0, 0.0, 1), False)],
)
def test_bfield_branches(point, inside):
    B = bfield(point, SLAB)
    np.testing.assert_array_equal(B, [SLAB.B0, 0, 0] if inside else [0, 0, 0])


def test_bfield_rejects_thin_sheet():
    with pytest.raises(ValueError):
        bfield_array(np.zeros((1, 3)), SHEET)


def test_coulomb_field():
    ch = PointCharge(1.0, (0, 0, 0))
    np.testing.assert_allclose(efield_charge(ch, (1, 0, 0)), [1, 0, 0])
    np.testing.assert_allclose(efield_charge(ch, (0, 2, 0)), [0, 0.25, 0])
    with pytest.raises(SingularPoint):
        efield_charge(ch, (0, 0, 1e-13))
    with pytest.raises(ValueError):
        PointCharge(0.0, (0, 0, 0))


def test_gauss_law_sphere():
    ch = PointCharge(2.5, (0.3, -0.2, 0.1))
    r = 3.0

    def flux(p):
        # p = (theta, 0, phi)
        th, ph = p[:, 0], p[:, 2]
        n = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], 1)
        pts = np.asarray(ch.position) + r * n
        E = np.array([efield_charge(ch, x) for x in pts])
        return np.sum(E * n, axis=1) * r * r * np.sin(th)

    region = IntegrationRegion((Axis(0, math.pi), Axis.point(0.0), Axis(0, 2 * math.pi)))
    (res,) = cubature(flux, region, rel_tol=1e-9)
    assert abs(res.value - 4 * math.pi * ch.q) <= 1e-6


def test_thin_sheet_closed_form_asymptotes():
    ch = PointCharge(q, (0, a, 0))
    top = q * 1.0 / (2 * CONST.c)
    assert math.isclose(field_momentum_thin_sheet(ch, a, 1e12, 1.0), top, rel_tol=1e-9)
    assert abs(field_momentum_thin_sheet(ch, a, -1e12, 1.0)) <= 1e-9 * top
    assert math.isclose(field_momentum_thin_sheet(ch, a, a, 1.0), 3 * q / (8 * CONST.c), rel_tol=1e-14)
    with pytest.raises(ValueError):
        field_momentum_thin_sheet(ch, 0.0, 1.0, 1.0)


def test_thin_sheet_closed_form_from_independent_quadrature():
    # oracle re-derivation: integrate the x'-reduced kernel 2a/(a^2+(z'-Z)^2)
    # in z' by brute-force trapezoid on a stretched grid
    for Z in (-3.0, 0.0, 1.0, 4.0):
        u = np.linspace(-math.pi / 2, math.pi / 2, 400_001)[1:-1]
        zp = Z + a * np.tan(u)
        w = a / np.cos(u) ** 2
        vals = np.where(zp >= 0, 2 * a / (a * a + (zp - Z) ** 2), 0.0) * w
        integral = np.trapezoid(vals, u)
        ref = q * 1.0 / (4 * math.pi * CONST.c) * integral
        assert math.isclose(field_momentum_thin_sheet(PointCharge(q, (0, a, Z)), a, Z, 1.0), ref, rel_tol=1e-4)


@pytest.mark.parametrize("Z", [-10.0, -3.0, 0.0, 1.0, 6.0])
def test_quadrature_matches_thin_sheet_oracle(Z):
    ch = PointCharge(q, (0, a, Z))
    fm = field_momentum(ch, SLAB)
    oracle = field_momentum_thin_sheet(ch, a, Z, SLAB.n_B)
    assert abs(fm.pi[2] - oracle) <= 5e-3 * abs(oracle)
    th = field_momentum(ch, SHEET)
    assert abs(th.pi[2] - oracle) <= max(1e-6 * abs(oracle), 10 * th.error_estimate[2])


def test_zero_point_value_thin_limit():
    fm = field_momentum(PointCharge(q, (0, a, 0)), SLAB)
    assert math.isclose(fm.pi[2], q * SLAB.n_B / (4 * CONST.c), rel_tol=1e-2)


def test_far_limits():
    hi = field_momentum(PointCharge(q, (0, a, 2000 * a)), SLAB)
    lo = field_momentum(PointCharge(q, (0, a, -2000 * a)), SLAB)
    assert abs(hi.pi[2] - SCALE) <= 1e-2 * SCALE
    assert math.hypot(lo.pi[0], lo.pi[2]) <= 1e-3 * SCALE


def test_symmetry_and_linearity():
    ch = PointCharge(q, (0, a, 0.4))
    base = field_momentum(ch, SLAB)
    assert abs(base.pi[0]) <= max(base.error_estimate[0], 0.0) or base.pi[0] == 0.0
    dq = field_momentum(PointCharge(2 * q, ch.position), SLAB)
    dB = field_momentum(ch, SlabFieldConfig(2 * SLAB.B0, SLAB.y0))
    for other in (dq, dB):
        assert np.all(np.abs(other.pi - 2 * base.pi) <= other.error_estimate + 2 * base.error_estimate + 1e-300)


def test_pi_y_tagged_and_cutoff_dependent():
    ch = PointCharge(q, (0, a, 0.4))
    short = field_momentum(ch, SLAB, z_cutoff=1e3)
    long = field_momentum(ch, SLAB, z_cutoff=1e5)
    assert short.cutoff_dependent == (False, True, False)
    assert long.pi[1] > short.pi[1]
    assert math.isclose(long.pi[2], short.pi[2], rel_tol=1e-5)


def test_overlap_rejected():
    with pytest.raises(OverlapViolation):
        field_momentum(PointCharge(q, (0, -0.005, 1.0)), SLAB)
    with pytest.raises(OverlapViolation):
        field_momentum(PointCharge(q, (0, 0.0, 1.0)), SHEET)


def test_nonconvergence_carries_partial():
    with pytest.raises(NonConvergence) as info:
        field_momentum(PointCharge(q, (0, a, 0.3)), SLAB, rel_tol=1e-12, max_evals=20_000)
    assert info.value.result is not None
    assert np.all(np.isfinite(info.value.result.pi))


def test_gradient_against_oracle_derivative():
    d = hydrogen_dipole()
    for Z in (-2.0, 0.0, 0.7, 3.0):
        g = grad_d_dot_pi(PointCharge(q, (0, a, Z)), d, SHEET, (0, a, Z))
        oracle = d[2] * SHEET.n_B / (2 * math.pi * CONST.c) * a / (a * a + Z * Z)
        assert abs(g.value[2] - oracle) <= 1e-6 * abs(oracle)
        assert abs(g.value[0]) <= 1e-6 * abs(oracle)


def test_gradient_zero_dipole_and_decay():
    R = (0, a, 0.0)
    g0 = grad_d_dot_pi(PointCharge(q, R), np.zeros(3), SHEET, R)
    np.testing.assert_array_equal(g0.value, 0.0)
    d = hydrogen_dipole()
    peak = grad_d_dot_pi(PointCharge(q, R), d, SHEET, R).value[2]
    far = grad_d_dot_pi(PointCharge(q, (0, a, -50 * a)), d, SHEET, (0, a, -50 * a)).value[2]
    assert abs(far) <= 1e-3 * abs(peak)
    assert abs(far) <= 1.01 * abs(peak) / (1 + 50**2)


def test_gradient_stencil_must_avoid_slab():
    with pytest.raises(OverlapViolation):
        grad_d_dot_pi(PointCharge(q, (0, a, 0)), hydrogen_dipole(), SHEET, (0, 0.01, 1.0), step=0.02)


CURL_SLAB = SlabFieldConfig(1.0, 1.0)


@pytest.mark.parametrize("point", [(0, 0.5, 1), (0, -0.5, -0.5), (0.3, -0.2, 0.5), (0, -0.5, 5)])
def test_curl_identity(point):
    (c,) = curl_pi_check(PointCharge(q, (0, 0, 0)), CURL_SLAB, [point])
    assert c.passed, (c.residual, c.bound)
    assert np.linalg.norm(c.expected) == (abs(q) / CONST.c if CURL_SLAB.contains(c.point)[0] else 0.0)


def test_curl_linear_in_q():
    p = [(0, -0.4, 2.0)]
    (c1,) = curl_pi_check(PointCharge(q, (0, 0, 0)), CURL_SLAB, p)
    (c2,) = curl_pi_check(PointCharge(2 * q, (0, 0, 0)), CURL_SLAB, p)
    np.testing.assert_allclose(c2.curl, 2 * c1.curl, rtol=1e-12)
    assert math.isclose(c2.bound, 2 * c1.bound, rel_tol=1e-12)


def test_curl_rejects_points_near_faces():
    with pytest.raises(ValueError):
        curl_pi_check(PointCharge(q, (0, 0, 0)), CURL_SLAB, [(0, -0.001, 1.0)])


@settings(max_examples=8, deadline=None)
@given(st.floats(-8, 8), st.floats(0.5, 3.0), st.floats(-2, 2))
def test_pi_z_between_asymptotes(Z, y, x):
    fm = field_momentum(PointCharge(q, (x, y, Z)), SHEET)
    assert -1e-6 * SCALE <= fm.pi[2] <= SCALE * (1 + 1e-6)
