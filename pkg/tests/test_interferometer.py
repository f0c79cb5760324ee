import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dipole_phase.interferometer import (
    DipoleState,
    eigenbasis_transform,
    evolve,
    evolve_dual,
    fringe,
    measure,
    sigma_x,
)

phis = st.floats(-50.0, 50.0, allow_nan=False)


def _same_ray(s, t, tol=1e-12):
    return abs(1.0 - abs(s.overlap(t))) <= tol


def test_ground_to_eigen():
    e = eigenbasis_transform(DipoleState.ground(), "to_eigen")
    np.testing.assert_allclose(e.amps, [1 / math.sqrt(2), 1 / math.sqrt(2)], atol=1e-15)


def test_plus_state_in_hydrogen_basis():
    plus = DipoleState([1.0, 0.0], "eigen")
    h = eigenbasis_transform(plus, "to_computational")
    np.testing.assert_allclose(h.amps, [1 / math.sqrt(2), 1 / math.sqrt(2)], atol=1e-15)


@given(phis, phis)
def test_round_trip(theta, phi):
    s = DipoleState([math.cos(theta), math.sin(theta) * complex(math.cos(phi), math.sin(phi))])
    back = eigenbasis_transform(eigenbasis_transform(s, "to_eigen"), "to_computational")
    assert np.max(np.abs(back.amps - s.amps)) <= 1e-14


@given(phis)
def test_evolve_matches_closed_form(phi):
    s = evolve(DipoleState.ground(), phi)
    np.testing.assert_allclose(s.amps, [math.cos(phi), 1j * math.sin(phi)], atol=1e-13)


def test_evolve_special_values():
    g = DipoleState.ground()
    assert _same_ray(evolve(g, 0.0), g)
    s = evolve(g, math.pi / 2)
    np.testing.assert_allclose(s.amps, [0, 1j], atol=1e-15)


def test_measure_values():
    p = measure(evolve(DipoleState.ground(), 0.1205))
    assert math.isclose(p["p_210"], math.sin(0.1205) ** 2, rel_tol=1e-12)
    assert math.isclose(p["p_210"], 0.01445, rel_tol=2e-3)
    assert measure(DipoleState.ground()) == {"p_200": 1.0, "p_210": 0.0}
    q = measure(evolve(DipoleState.ground(), math.pi / 4))
    assert abs(q["p_200"] - 0.5) < 1e-12 and abs(q["p_210"] - 0.5) < 1e-12


@given(st.lists(phis, min_size=1, max_size=40))
def test_unitarity_chain(seq):
    s = DipoleState.ground()
    for phi in seq:
        s = evolve(s, phi)
        assert abs(s.norm() - 1.0) <= 1e-12
    p = measure(s)
    assert abs(p["p_200"] + p["p_210"] - 1.0) <= 1e-12


@given(phis, phis)
def test_composition(a, b):
    g = DipoleState.ground()
    assert _same_ray(evolve(evolve(g, a), b), evolve(g, a + b))


def test_fringe_sweep():
    grid = np.linspace(-3, 3, 100)
    fr = fringe(grid)
    assert np.max(np.abs(fr["p_210"] - np.sin(grid) ** 2)) <= 1e-12


def test_dual_evolution():
    sym = DipoleState.spin_symmetric()
    assert _same_ray(evolve_dual(sym, 0.0), sym)
    for phi in (0.1, 0.7, 2.3):
        assert abs(sigma_x(evolve_dual(sym, phi)) - math.cos(2 * phi)) <= 1e-12
    assert abs(sym.overlap(evolve_dual(sym, math.pi / 2))) <= 1e-15


def test_basis_guards():
    with pytest.raises(ValueError):
        DipoleState([1.0, 1.0])
    with pytest.raises(ValueError):
        DipoleState([1.0, 0.0], "qubit")
    with pytest.raises(ValueError):
        evolve(DipoleState.spin_symmetric(), 0.1)
    with pytest.raises(ValueError):
        evolve_dual(DipoleState.ground(), 0.1)
    with pytest.raises(ValueError):
        DipoleState.ground().overlap(DipoleState.spin_symmetric())
