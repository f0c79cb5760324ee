"""Two-level states of the 2s/2p dipole and of the spin-1/2 dual.

Amplitudes are stored in the computational basis ({|200>, |210>} or
{|up>, |down>}) unless the basis tag says ``eigen``, in which case they are
over {|+>, |->} with |+-> = (|200> +- |210>)/sqrt(2). The dynamical phase
is dropped throughout; only the geometric phase acts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HYDROGEN = "hydrogen"
EIGEN = "eigen"
SPIN = "spin"
BASES = (HYDROGEN, EIGEN, SPIN)

NORM_TOL = 1e-12

# columns are |+> and |-> written in the computational basis
_H = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)


@dataclass(frozen=True)
class DipoleState:
    """Normalised two-component amplitude vector with a basis tag."""

    amps: np.ndarray
    basis: str = HYDROGEN

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex).reshape(-1)
        if amps.shape != (2,):
            raise ValueError("a two-level state has exactly two amplitudes")
        if self.basis not in BASES:
            raise ValueError(f"unknown basis {self.basis!r}; expected one of {BASES}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalised (|psi|^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @classmethod
    def ground(cls) -> "DipoleState":
        """The prepared state |200>."""
        return cls(np.array([1.0, 0.0]), HYDROGEN)

    @classmethod
    def spin_symmetric(cls) -> "DipoleState":
        """(|up> + |down>)/sqrt(2)."""
        return cls(np.array([1.0, 1.0]) / math.sqrt(2.0), SPIN)

    def overlap(self, other: "DipoleState") -> complex:
        """<self|other>; both states must share a basis tag."""
        if self.basis != other.basis:
            raise ValueError(f"cannot overlap {self.basis} and {other.basis} states")
        return complex(np.vdot(self.amps, other.amps))

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amps, self.amps).real))


def eigenbasis_transform(state: DipoleState, direction: str = "to_eigen") -> DipoleState:
    """Change between {|200>, |210>} and {|+>, |->}.

    ``direction`` is ``"to_eigen"`` or ``"to_computational"``. The map is
    real symmetric and its own inverse.
    """
    if direction == "to_eigen":
        if state.basis != HYDROGEN:
            raise ValueError("to_eigen expects a hydrogen-basis state")
        return DipoleState(_H @ state.amps, EIGEN)
    if direction == "to_computational":
        if state.basis != EIGEN:
            raise ValueError("to_computational expects an eigen-basis state")
        return DipoleState(_H @ state.amps, HYDROGEN)
    raise ValueError(f"unknown direction {direction!r}")


def _phase_diag(phi: float) -> np.ndarray:
    return np.array([np.exp(1j * phi), np.exp(-1j * phi)])


def evolve(state: DipoleState, phi_g: float) -> DipoleState:
    """Multiply the |+> and |-> components by exp(+i phi_g) and exp(-i phi_g).

    Works in either hydrogen or eigen basis and returns a state in the
    basis it was given.
    """
    if state.basis == SPIN:
        raise ValueError("use evolve_dual for spin states")
    if state.basis == EIGEN:
        return DipoleState(_phase_diag(phi_g) * state.amps, EIGEN)
    eig = eigenbasis_transform(state, "to_eigen")
    return eigenbasis_transform(evolve(eig, phi_g), "to_computational")


def measure(state: DipoleState) -> dict[str, float]:
    """Populations of |200> and |210>."""
    if state.basis == SPIN:
        raise ValueError("measure reads out the hydrogen basis")
    if state.basis == EIGEN:
        state = eigenbasis_transform(state, "to_computational")
    p = np.abs(state.amps) ** 2
    return {"p_200": float(p[0]), "p_210": float(p[1])}


def evolve_dual(state: DipoleState, phi_g_m: float) -> DipoleState:
    """exp(+i phi) on |up>, exp(-i phi) on |down>."""
    if state.basis != SPIN:
        raise ValueError("evolve_dual expects a spin-basis state")
    return DipoleState(_phase_diag(phi_g_m) * state.amps, SPIN)


def sigma_x(state: DipoleState) -> float:
    """<sigma_x> = 2 Re(conj(a_up) a_down)."""
    a, b = state.amps
    return float(2.0 * (np.conj(a) * b).real)


def fringe(phis) -> dict[str, np.ndarray]:
    """Readout of |200> evolved by each phase in ``phis``."""
    phis = np.asarray(phis, dtype=float).reshape(-1)
    p200 = np.empty_like(phis)
    p210 = np.empty_like(phis)
    psi0 = DipoleState.ground()
    for k, phi in enumerate(phis):
        m = measure(evolve(psi0, phi))
        p200[k], p210[k] = m["p_200"], m["p_210"]
    return {"phi_g": phis, "p_200": p200, "p_210": p210}
