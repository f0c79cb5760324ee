"""Potential-based phase of the dipole in two concrete gauges.

The phase ``(d . [A(R_f) - A(R_i)]) / (hbar c)`` depends on the gauge,
whereas the field-momentum phase never looks at A. This module makes that
difference concrete for the slab field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CONST, as_vec3
from .errors import OverlapViolation
from .fieldmom import PointCharge, SlabFieldConfig
from .phase import PhaseResult, geometric_phase_endpoint

STEP = "step-gauge"
QUADRATIC = "quadratic-shifted"
GAUGES = (STEP, QUADRATIC)
GAUGE = "gauge-endpoint"


@dataclass(frozen=True)
class GaugeChoice:
    """``id`` is ``step-gauge`` or ``quadratic-shifted``.

    ``lam`` (Gauss/cm^2) sets the pure-gauge addition
    ``grad(2 lam z^3 / 3) = (0, 0, 2 lam z^2)`` of the shifted gauge; it is
    ignored by the step gauge.
    """

    id: str = STEP
    lam: float = 0.0

    def __post_init__(self):
        if self.id not in GAUGES:
            raise ValueError(f"unknown gauge {self.id!r}; expected one of {GAUGES}")
        if not np.isfinite(self.lam):
            raise ValueError("lam must be finite")


def _g(y, cfg: SlabFieldConfig):
    # B0 * g(y): integral of B_x across the slab up to height y
    y = np.asarray(y, dtype=float)
    if cfg.thin_sheet:
        return np.where(y >= 0.0, cfg.n_B, 0.0)
    return cfg.B0 * np.clip(y + cfg.y0, 0.0, cfg.y0)


def vector_potential_array(pts, cfg: SlabFieldConfig, gauge: GaugeChoice) -> np.ndarray:
    """A at (N, 3) points, in Gauss cm."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 3)
    A = np.zeros_like(pts)
    A[:, 2] = _g(pts[:, 1], cfg) * (pts[:, 2] >= 0.0)
    if gauge.id == QUADRATIC:
        A[:, 2] += 2.0 * gauge.lam * pts[:, 2] ** 2
    return A


def vector_potential(r, cfg: SlabFieldConfig, gauge: GaugeChoice) -> np.ndarray:
    """A at one point.

    Step gauge: ``A = (0, 0, B0 g(y) Theta(z))`` with ``g`` rising linearly
    from 0 at ``y = -y0`` to ``y0`` at ``y = 0``. The shifted gauge adds
    ``(0, 0, 2 lam z^2)``, a pure gradient.
    """
    return vector_potential_array(as_vec3(r, "r")[None, :], cfg, gauge)[0]


def curl_fd(field, r, h: float) -> np.ndarray:
    """Central-difference curl of a vectorised field at ``r``."""
    r = as_vec3(r, "r")
    offs = np.vstack([np.eye(3) * h, -np.eye(3) * h])
    vals = np.asarray(field(r + offs))
    D = (vals[:3] - vals[3:]) / (2.0 * h)  # D[i, j] = d_i A_j
    return np.array([D[1, 2] - D[2, 1], D[2, 0] - D[0, 2], D[0, 1] - D[1, 0]])


def _check_endpoint(cfg: SlabFieldConfig, R: np.ndarray, name: str):
    if cfg.distance(R[None, :])[0] < cfg.margin:
        raise OverlapViolation(f"{name} lies inside the slab")
    if abs(R[2]) < cfg.margin:
        raise OverlapViolation(f"{name} sits on the z = 0 jump of the step gauge")


def gauge_phase(d, cfg: SlabFieldConfig, gauge: GaugeChoice, R_i, R_f) -> PhaseResult:
    """``d . [A(R_f) - A(R_i)] / (hbar c)`` in the chosen gauge."""
    d = as_vec3(d, "d")
    R_i = as_vec3(R_i, "R_i")
    R_f = as_vec3(R_f, "R_f")
    _check_endpoint(cfg, R_i, "R_i")
    _check_endpoint(cfg, R_f, "R_f")
    if np.array_equal(R_i, R_f):
        return PhaseResult(0.0, GAUGE)
    A = vector_potential_array(np.array([R_i, R_f]), cfg, gauge)
    return PhaseResult(float(np.dot(d, A[1] - A[0]) / CONST.hbar_c), GAUGE)


def predicted_shift(d, gauge: GaugeChoice, R_i, R_f) -> float:
    """Extra phase of a gauge over the step gauge: ``d_z 2 lam (z_f^2 - z_i^2) / (hbar c)``.

    Vanishes for paths symmetric about ``z = 0``.
    """
    if gauge.id == STEP:
        return 0.0
    d = as_vec3(d, "d")
    z_i, z_f = as_vec3(R_i)[2], as_vec3(R_f)[2]
    return float(d[2] * 2.0 * gauge.lam * (z_f * z_f - z_i * z_i) / CONST.hbar_c)


def gauge_compare(charge: PointCharge, d, cfg: SlabFieldConfig, R_i, R_f, lams=(0.5,), rel_tol=1e-8) -> dict:
    """Potential phase in each gauge next to the field-momentum phase.

    The ``zero_gauge`` entry is the potential phase after subtracting its
    own endpoint difference of ``d . A``, i.e. the value in a gauge with
    ``grad(d . A) = 0`` along the path; it is zero by construction.
    """
    step = gauge_phase(d, cfg, GaugeChoice(STEP), R_i, R_f)
    shifted = []
    for lam in lams:
        g = GaugeChoice(QUADRATIC, lam)
        ph = gauge_phase(d, cfg, g, R_i, R_f)
        shifted.append(
            {
                "lam": float(lam),
                "phase": ph.phi,
                "difference": ph.phi - step.phi,
                "predicted_difference": predicted_shift(d, g, R_i, R_f),
            }
        )
    lcfi = geometric_phase_endpoint(charge, d, cfg, R_i, R_f, rel_tol=rel_tol)
    return {
        "step": step.phi,
        "shifted": shifted,
        "zero_gauge": step.phi - step.phi,
        "lcfi": lcfi.phi,
        "lcfi_error": lcfi.error_estimate,
    }
