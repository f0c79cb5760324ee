import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dipole_phase.core import CONST
from dipole_phase.errors import OverlapViolation
from dipole_phase.fieldmom import PointCharge, SlabFieldConfig, bfield
from dipole_phase.gauge import (
    QUADRATIC,
    STEP,
    GaugeChoice,
    curl_fd,
    gauge_compare,
    gauge_phase,
    predicted_shift,
    vector_potential,
    vector_potential_array,
)
from dipole_phase.phase import geometric_phase_endpoint, hydrogen_dipole, phi_g_sheet

a = 1.0
CFG = SlabFieldConfig.from_flux(1.0, a / 100)
D = hydrogen_dipole()
STEP_G = GaugeChoice(STEP)


def test_step_gauge_values():
    np.testing.assert_allclose(vector_potential((0, a, 2.0), CFG, STEP_G), [0, 0, CFG.n_B])
    np.testing.assert_array_equal(vector_potential((0, a, -2.0), CFG, STEP_G), [0, 0, 0])
    np.testing.assert_allclose(vector_potential((0, -0.5 * CFG.y0, 1.0), CFG, STEP_G), [0, 0, 0.5 * CFG.n_B])


def test_unknown_gauge():
    with pytest.raises(ValueError):
        GaugeChoice("coulomb")


off_surface = st.tuples(
    st.floats(-3, 3),
    st.one_of(st.floats(-2, -0.011), st.floats(-0.009, -0.001), st.floats(0.001, 2)),
    st.one_of(st.floats(-3, -0.001), st.floats(0.001, 3)),
)


@settings(max_examples=40)
@given(off_surface, st.floats(-5, 5))
def test_curl_a_is_b_in_both_gauges(p, lam):
    h = 1e-5
    fields = [lambda r, g=g: vector_potential_array(r, CFG, g) for g in (STEP_G, GaugeChoice(QUADRATIC, lam))]
    c1, c2 = (curl_fd(f, p, h) for f in fields)
    np.testing.assert_allclose(c1, c2, atol=1e-9 * CFG.B0 * (1 + abs(lam)))
    np.testing.assert_allclose(c1, bfield(p, CFG), rtol=1e-6, atol=1e-6 * CFG.B0)


def test_step_gauge_phase_is_twice_lcfi_phi_g():
    r = gauge_phase(D, CFG, STEP_G, (0, a, -20 * a), (0, a, 20 * a))
    assert abs(r.phi - 3 * CONST.e * CONST.a0 * CFG.n_B / CONST.hbar_c) <= 1e-12 * r.phi
    assert abs(r.phi - 2 * phi_g_sheet(CFG.n_B)) <= 1e-12 * r.phi


@pytest.mark.parametrize("z_i, z_f", [(-20.0, 30.0), (-5.0, 2.0), (-20.0, 20.0)])
@pytest.mark.parametrize("lam", [0.5, -2.0, 1e-3])
def test_shift_matches_prediction(z_i, z_f, lam):
    Ri, Rf = (0, a, z_i), (0, a, z_f)
    g = GaugeChoice(QUADRATIC, lam)
    diff = gauge_phase(D, CFG, g, Ri, Rf).phi - gauge_phase(D, CFG, STEP_G, Ri, Rf).phi
    pred = D[2] * 2 * lam * (z_f**2 - z_i**2) / CONST.hbar_c
    assert pred == predicted_shift(D, g, Ri, Rf)
    assert abs(diff - pred) <= 1e-9 * max(abs(pred), abs(gauge_phase(D, CFG, g, Ri, Rf).phi))


def test_zero_for_coincident_endpoints():
    for g in (STEP_G, GaugeChoice(QUADRATIC, 3.0)):
        assert gauge_phase(D, CFG, g, (0, a, 2.0), (0, a, 2.0)).phi == 0.0


def test_endpoint_margins():
    with pytest.raises(OverlapViolation):
        gauge_phase(D, CFG, STEP_G, (0, a, 0.0), (0, a, 3.0))
    with pytest.raises(OverlapViolation):
        gauge_phase(D, CFG, STEP_G, (0, -0.005, 3.0), (0, a, 3.0))


def test_compare_report():
    ch = PointCharge(CONST.e, (0, a, 0))
    Ri, Rf = (0, a, -20 * a), (0, a, 30 * a)
    rep = gauge_compare(ch, D, CFG, Ri, Rf, lams=(0.5, -1.0))
    for s in rep["shifted"]:
        assert abs(s["difference"]) > 0
        assert abs(s["difference"] - s["predicted_difference"]) <= 1e-9 * abs(s["predicted_difference"])
    assert rep["zero_gauge"] == 0.0
    lcfi = geometric_phase_endpoint(ch, D, CFG, Ri, Rf, rel_tol=1e-8)
    assert rep["lcfi"] == lcfi.phi
