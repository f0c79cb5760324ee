"""Geometric, topological and dual phases of a moving dipole.

Phases are in radians and never wrapped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CONST, Trajectory, as_vec3
from .errors import NonConvergence, OpenPathError, OverlapViolation
from .fieldmom import (
    PointCharge,
    SlabFieldConfig,
    _default_cutoff,
    _prefactor,
    bfield_array,
    grad_d_dot_pi,
    momentum_integrals,
)
from .quadrature import gauss_line_integral, line_integral

ENDPOINT = "endpoint"
PATH = "path-integral"
LOOP = "loop"
CLOSED_FORM = "closed-form"


@dataclass(frozen=True)
class PhaseResult:
    phi: float
    method: str
    error_estimate: float = 0.0
    evaluations: int = 0

    def __post_init__(self):
        if not self.error_estimate >= 0:
            raise ValueError("error estimate must be non-negative")


def hydrogen_dipole(sign: int = 1) -> np.ndarray:
    """d of the |+> (sign=1) or |-> (sign=-1) 2s/2p eigenstate, along z."""
    return np.array([0.0, 0.0, sign * CONST.hydrogen_dz])


def geometric_phase_endpoint(
    charge: PointCharge,
    d,
    cfg: SlabFieldConfig,
    R_i,
    R_f,
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-15,
    max_evals: int = 10_000_000,
) -> PhaseResult:
    """``[d . Pi_q(R_f) - d . Pi_q(R_i)] / (hbar q)``.

    Both endpoint momenta are integrated on one mesh, so the difference
    (and its error estimate) comes straight from the cubature and swapping
    the endpoints negates the result exactly. Only the components of Pi
    that ``d`` actually touches are computed; for ``d`` along z the result
    is free of the Pi_y cutoff.
    """
    d = as_vec3(d, "d")
    R_i = as_vec3(R_i, "R_i")
    R_f = as_vec3(R_f, "R_f")
    ends = np.array([R_i, R_f])
    if np.any(cfg.distance(ends) < cfg.margin):
        raise OverlapViolation("phase endpoints must lie outside the slab")
    if np.array_equal(R_i, R_f) or not np.any(d[1:]):
        return PhaseResult(0.0, ENDPOINT)
    cutoff = _default_cutoff(cfg, ends)
    pref = _prefactor(charge.q, cfg) / (CONST.hbar * charge.q)
    phi, err, evals = 0.0, 0.0, 0
    for j in (1, 2):
        if d[j] == 0.0:
            continue
        (r,) = momentum_integrals(
            cfg, ends, [[-1.0, 1.0]], j, rel_tol, abs_tol, max_evals, z_cutoff=cutoff if j == 1 else None
        )
        if not r.converged:
            raise NonConvergence("endpoint phase quadrature did not converge", r)
        phi += d[j] * pref * r.value
        err += abs(d[j] * pref) * r.error_estimate
        evals += r.evaluations
    return PhaseResult(float(phi), ENDPOINT, float(err), evals)


def geometric_phase_path(
    charge: PointCharge,
    d,
    cfg: SlabFieldConfig,
    traj: Trajectory,
    refinement: int = 6,
    order: int = 10,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-8,
    grad_rel_tol: float = 1e-8,
) -> PhaseResult:
    """``(1/(hbar q)) int grad(d . Pi_q) . dR`` along ``traj``.

    The gradient at every node comes from :func:`grad_d_dot_pi`; the line
    integral is composite Gauss-Legendre with up to ``2**refinement`` panels
    per segment. Every sample and stencil must avoid the slab. ``abs_tol``
    is in radians.
    """
    d = as_vec3(d, "d")
    if np.any(cfg.distance(traj.vertices) < cfg.margin):
        raise OverlapViolation("trajectory vertex inside the slab")
    _check_path_clear(cfg, traj)
    evals = [0]

    def grad(pts):
        out = np.empty_like(pts)
        for k, p in enumerate(pts):
            g = grad_d_dot_pi(charge, d, cfg, p, rel_tol=grad_rel_tol)
            out[k] = g.value / CONST.hbar
            evals[0] += g.evaluations
        return out

    res = gauss_line_integral(grad, traj, order, refinement, rel_tol, abs_tol)
    if not res.converged:
        raise NonConvergence(f"path phase did not converge (last change {res.error_estimate:.3g} rad)", res)
    return PhaseResult(float(res.value), PATH, float(res.error_estimate), evals[0])


def _check_path_clear(cfg: SlabFieldConfig, traj: Trajectory):
    for a, b in zip(*traj.segments()):
        if cfg.segment_hits(a, b):
            raise OverlapViolation(f"segment {a.tolist()} -> {b.tolist()} passes through the slab")


# ---------------------------------------------------------------- HMW


def _slab_crossings(cfg: SlabFieldConfig, a: np.ndarray, b: np.ndarray) -> list[float]:
    """Parameters in (0, 1) where a -> b crosses a slab face plane.

    Computed from the lexicographically ordered endpoints so that a segment
    and its reverse are cut at bit-identical points.
    """
    flip = tuple(b) < tuple(a)
    p, q = (b, a) if flip else (a, b)
    ts = []
    for axis, level in ((1, 0.0), (1, -cfg.y0), (2, 0.0)):
        dp = q[axis] - p[axis]
        if dp != 0.0:
            t = (level - p[axis]) / dp
            if 0.0 < t < 1.0:
                ts.append(t)
    ts = sorted(set(ts))
    pts = [p + t * (q - p) for t in ts]
    if flip:
        pts = pts[::-1]
    return pts


def _split_at_faces(cfg: SlabFieldConfig, loop: Trajectory) -> Trajectory:
    starts, ends = loop.segments()
    verts = []
    for a, b in zip(starts, ends):
        verts.append(a)
        verts.extend(_slab_crossings(cfg, a, b))
    return Trajectory(np.array(verts), closed=True)


def hmw_phase(d, field, loop: Trajectory, n_refine: int = 6, n_start: int = 4) -> PhaseResult:
    """He-McKellar-Wilkens loop phase ``(1/(hbar c)) oint (B x d) . dR``.

    ``field`` is a finite-thickness :class:`SlabFieldConfig` (the loop is
    then cut at the slab faces, making the integrand piecewise constant)
    or any vectorised callable returning B at (N, 3) points.
    """
    d = as_vec3(d, "d")
    if not loop.closed:
        raise OpenPathError("the HMW phase needs a closed loop")
    if isinstance(field, SlabFieldConfig):
        if field.thin_sheet:
            raise ValueError("thin-sheet HMW phase is distributional; use hmw_phase_thin_sheet")
        cfg = field
        loop = _split_at_faces(cfg, loop)

        def B(pts):
            return bfield_array(pts, cfg)

    else:
        B = field

    def integrand(pts):
        return np.cross(B(pts), d) / CONST.hbar_c

    res = line_integral(integrand, loop, n_refine, n_start, rel_tol=1e-12, abs_tol=1e-300)
    if not res.converged:
        raise NonConvergence("HMW loop integral did not converge", res)
    return PhaseResult(float(res.value), LOOP, float(res.error_estimate), res.evaluations)


def hmw_phase_thin_sheet(d, cfg: SlabFieldConfig, loop: Trajectory) -> PhaseResult:
    """Closed-form HMW phase for the thin sheet ``B = n_B delta(y) x_hat, z >= 0``.

    Each crossing of the half-plane ``y = 0, z > 0`` contributes
    ``-sign(dy) n_B d_z / (hbar c)``.
    """
    d = as_vec3(d, "d")
    if not loop.closed:
        raise OpenPathError("the HMW phase needs a closed loop")
    phi = 0.0
    starts, ends = loop.segments()
    for a, b in zip(starts, ends):
        if (a[1] > 0) != (b[1] > 0):
            t = a[1] / (a[1] - b[1])
            if a[2] + t * (b[2] - a[2]) > 0:
                phi -= math.copysign(1.0, b[1] - a[1]) * cfg.n_B * d[2]
    return PhaseResult(float(phi / CONST.hbar_c), CLOSED_FORM)


# ---------------------------------------------------------------- closed forms


def phi_g_sheet(n_B: float) -> float:
    """``3 e a0 n_B / (2 hbar c)`` for n_B in Gauss cm."""
    return CONST.hydrogen_dz * n_B / (2.0 * CONST.hbar_c)


def relative_phase(n_B: float) -> float:
    """Phase between |+> and |->, twice :func:`phi_g_sheet`."""
    return 2.0 * phi_g_sheet(n_B)


def phi_g_dual(n_E: float, mu: float) -> float:
    """``-n_E mu / (2 hbar c)``; n_E in statvolt, mu in erg/Gauss."""
    return -n_E * mu / (2.0 * CONST.hbar_c)


@dataclass(frozen=True)
class SheetScenario:
    """Flux densities of a sheet and moments of the particle passing it."""

    n_E: float = 0.0  # statvolt
    n_B: float = 0.0  # Gauss cm
    d_z: float = 0.0  # esu cm
    mu_z: float = 0.0  # erg/Gauss

    def dual(self) -> "SheetScenario":
        """Apply E -> B, B -> -E, d -> mu, mu -> -d."""
        return SheetScenario(n_E=self.n_B, n_B=-self.n_E, d_z=self.mu_z, mu_z=-self.d_z)


def sheet_phase(sc: SheetScenario) -> float:
    """Phase picked up passing the sheet: electric dipole term plus its dual.

    ``(n_B d_z - n_E mu_z) / (2 hbar c)``; invariant under
    :meth:`SheetScenario.dual`.
    """
    return (sc.n_B * sc.d_z - sc.n_E * sc.mu_z) / (2.0 * CONST.hbar_c)
