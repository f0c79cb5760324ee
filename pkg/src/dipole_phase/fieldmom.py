"""Slab field, Coulomb field and the field momentum of a charge.

The field momentum of a point charge ``q`` at ``R`` in the slab field is

    Pi_q(R) = 1/(4 pi c) * integral of E_q(r') x B(r') d^3 r'

over the slab ``x' in R, -y0 <= y' < 0, z' >= 0`` where ``B = B0 x``. The
integrand that is actually handed to the cubature engine is the geometric
kernel ``((r' - R)/|r' - R|^3 x x_hat)_j``; the prefactor ``q B0/(4 pi c)``
is applied afterwards, so ``abs_tol`` is measured on the geometric integral
(cm for the slab, dimensionless for the thin sheet).

Finite differences (gradient, curl) are built *inside* the integrand: the
stencil combination ``sum_k w_k kernel(r', R_k)`` is integrated on one
adaptive mesh, so quadrature noise does not get amplified by ``1/step``.

Pi_y grows like ``log`` of the z' extent of the slab and is therefore
computed with an explicit cutoff. The divergent piece does not depend on
``R``, so gradients and phases are unaffected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CONST, as_vec3
from .errors import NonConvergence, NonFiniteSample, OverlapViolation, SingularPoint
from .quadrature import Axis, IntegrationRegion, QuadratureResult, cubature

MAGNETIC = "magnetic"
ELECTRIC_DUAL = "electric-dual"

SLAB_DIRECTION = np.array([1.0, 0.0, 0.0])
OVERLAP_MARGIN = 1e-6  # in units of the slab thickness y0
CUTOFF_FACTOR = 1e4


@dataclass(frozen=True)
class SlabFieldConfig:
    """Semi-infinite slab carrying a uniform field ``B0 x_hat``.

    ``thin_sheet`` collapses the slab onto the half-plane ``y' = 0, z' >= 0``
    at fixed surface density ``n_B = B0 y0``. For ``kind="electric-dual"``
    the slab carries an electric field ``E0 = B0`` (statvolt/cm) instead and
    ``n_B`` is read as the electric flux density ``n_E``.
    """

    B0: float
    y0: float
    thin_sheet: bool = False
    kind: str = MAGNETIC

    def __post_init__(self):
        if not math.isfinite(self.B0):
            raise ValueError("B0 must be finite")
        if not (self.y0 > 0 and math.isfinite(self.y0)):
            raise ValueError("y0 must be positive and finite")
        if self.kind not in (MAGNETIC, ELECTRIC_DUAL):
            raise ValueError(f"unknown slab kind {self.kind!r}")

    @classmethod
    def from_flux(cls, n_B: float, y0: float, thin_sheet: bool = False, kind: str = MAGNETIC):
        return cls(n_B / y0, y0, thin_sheet, kind)

    @property
    def n_B(self) -> float:
        return self.B0 * self.y0

    @property
    def margin(self) -> float:
        return OVERLAP_MARGIN * self.y0

    def distance(self, pts) -> np.ndarray:
        """Distance from each point to the (closed) slab, or to the sheet."""
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        y, z = p[:, 1], p[:, 2]
        dz = np.maximum(-z, 0.0)
        if self.thin_sheet:
            return np.hypot(y, dz)
        dy = np.maximum(np.maximum(-self.y0 - y, y), 0.0)
        return np.hypot(dy, dz)

    def contains(self, pts) -> np.ndarray:
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        y, z = p[:, 1], p[:, 2]
        if self.thin_sheet:
            return np.zeros(len(p), dtype=bool)
        return (z >= 0.0) & (y >= -self.y0) & (y < 0.0)

    def segment_hits(self, p0, p1) -> bool:
        """Whether the segment p0 -> p1 comes within ``margin`` of the slab.

        Exact slab-method clip against the margin-inflated region
        ``-y0 - m <= y <= m, z >= -m`` (``y0 = 0`` for the thin sheet).
        """
        p0 = np.asarray(p0, dtype=float)
        p1 = np.asarray(p1, dtype=float)
        m = self.margin
        depth = 0.0 if self.thin_sheet else self.y0
        lo_t, hi_t = 0.0, 1.0
        for axis, lo, hi in ((1, -depth - m, m), (2, -m, math.inf)):
            a, d = p0[axis], p1[axis] - p0[axis]
            if d == 0.0:
                if not lo <= a <= hi:
                    return False
                continue
            t0, t1 = (lo - a) / d, (hi - a) / d
            if t0 > t1:
                t0, t1 = t1, t0
            lo_t, hi_t = max(lo_t, t0), min(hi_t, t1)
            if lo_t > hi_t:
                return False
        return True

    def boundary_distance(self, pts) -> np.ndarray:
        """Distance to the nearest face of the slab (from inside or outside)."""
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        inside = self.contains(p)
        inner = np.minimum(np.minimum(-p[:, 1], p[:, 1] + self.y0), p[:, 2])
        return np.where(inside, inner, self.distance(p))


@dataclass(frozen=True)
class PointCharge:
    q: float
    position: np.ndarray

    def __post_init__(self):
        if self.q == 0 or not math.isfinite(self.q):
            raise ValueError("charge must be finite and non-zero")
        object.__setattr__(self, "position", as_vec3(self.position, "charge position"))

    def at(self, R) -> "PointCharge":
        return PointCharge(self.q, R)


def bfield_array(pts, cfg: SlabFieldConfig) -> np.ndarray:
    """Vectorised :func:`bfield` for an (N, 3) array."""
    if cfg.thin_sheet:
        raise ValueError("the thin-sheet field is a distribution; use the surface form or the closed-form oracle")
    p = np.atleast_2d(np.asarray(pts, dtype=float))
    out = np.zeros_like(p)
    if cfg.kind == MAGNETIC:
        out[cfg.contains(p), 0] = cfg.B0
    return out


def bfield(r_prime, cfg: SlabFieldConfig) -> np.ndarray:
    """Magnetic field of the slab: ``(B0, 0, 0)`` iff ``z' >= 0`` and ``-y0 <= y' < 0``."""
    return bfield_array(as_vec3(r_prime, "r_prime")[None, :], cfg)[0]


def efield_charge(charge: PointCharge, r_prime) -> np.ndarray:
    """Coulomb field ``q (r' - R)/|r' - R|^3`` in statvolt/cm."""
    diff = as_vec3(r_prime, "r_prime") - charge.position
    r = float(np.linalg.norm(diff))
    if r < 1e-12:
        raise SingularPoint(f"field requested {r:.3g} cm from the charge")
    return charge.q * diff / r**3


# ---------------------------------------------------------------- kernels


def _default_cutoff(cfg: SlabFieldConfig, positions: np.ndarray) -> float:
    dist = cfg.distance(positions)
    scale = max(cfg.y0, float(np.max(dist)), float(np.max(np.abs(positions[:, 1]))))
    return max(CUTOFF_FACTOR * scale, 10.0 * float(np.max(np.abs(positions[:, 2]))))


def _graded(coords, reach: float) -> tuple[float, ...]:
    """Stencil coordinates plus cuts at geometrically growing distance.

    Keeps the cells around an integrable singularity roughly cubical; an
    elongated cell with the singular point on a corner can hide it from
    every rule node.
    """
    lo, hi = coords[0], coords[-1]
    mid = 0.5 * (lo + hi)
    delta = max(0.5 * (hi - lo), 1e-3 * reach)
    cuts = set(coords)
    r = 2.0 * delta
    while r < 4.0 * reach:
        cuts.update((mid - r, mid + r))
        r *= 2.0
    return tuple(sorted(cuts))


def _region(cfg, positions, component, z_cutoff, overlap) -> IntegrationRegion:
    dist = cfg.distance(positions)
    s = max(float(np.max(dist)), cfg.y0) if overlap else max(float(np.min(dist)), cfg.y0 if not cfg.thin_sheet else 0.0)
    if s <= 0.0:
        s = cfg.y0
    xs, ys, zs = (sorted(set(positions[:, k].tolist())) for k in range(3))
    x_center = 0.5 * (xs[0] + xs[-1])
    x_bp = _graded(xs, s) if overlap else (x_center,)
    z_hi = math.inf if (component != 1 and z_cutoff is None) else z_cutoff
    z_mid = 0.5 * (zs[0] + zs[-1])
    if overlap:
        z_bp = _graded(zs, s)
    elif z_mid > 0:
        z_bp = (z_mid - 2 * s, z_mid, z_mid + 2 * s)
    else:
        z_bp = ()
    if cfg.thin_sheet:
        y_ax = Axis.point(0.0)
    else:
        y_ax = Axis(-cfg.y0, 0.0, breakpoints=_graded(ys, s) if overlap else ())
    return IntegrationRegion(
        (
            Axis(-math.inf, math.inf, scale=s, center=x_center, breakpoints=x_bp),
            y_ax,
            Axis(0.0, z_hi, scale=s, breakpoints=z_bp),
        )
    )


def _prefactor(q: float, cfg: SlabFieldConfig) -> float:
    """Multiplies the geometric integral to give Pi in g cm/s."""
    strength = cfg.n_B if cfg.thin_sheet else cfg.B0
    return q * strength / (4.0 * math.pi * CONST.c)


def _kernel(positions: np.ndarray, weights: np.ndarray, component: int):
    """Integrand ``sum_k W[:, k] * ((r' - R_k)/|r' - R_k|^3 x x_hat)_component``."""

    def f(pts):
        if component == 0:
            return np.zeros((len(pts), weights.shape[0]))
        diff = pts[:, None, :] - positions[None, :, :]
        r2 = np.einsum("nkj,nkj->nk", diff, diff)
        if np.any(r2 < 1e-24):
            raise NonFiniteSample("field-momentum integrand sampled on the charge")
        inv3 = r2 ** -1.5
        # (v x x_hat) = (0, v_z, -v_y)
        c = diff[:, :, 2] * inv3 if component == 1 else -diff[:, :, 1] * inv3
        return c @ weights.T

    return f


def _shifted_problem(cfg, positions, weights, component, z_cutoff):
    """Overlap case for finite-difference rows (weights summing to zero).

    Substituting ``u = r' - delta_k`` with ``delta_k = R_k - R_ref`` turns
    ``int_slab K(r' - R_k)`` into ``int_{slab - delta_k} K(u - R_ref)``. The
    weighted sum then carries the factor ``g(u) = sum_k w_k chi(u + delta_k)``,
    which vanishes wherever all shifted slabs cover ``u``, in particular
    around ``R_ref``. What remains are layers of thickness ~step at the
    faces, away from the singularity.
    """
    ref = positions.mean(axis=0)
    delta = positions - ref
    z_hi = math.inf if (component != 1 and z_cutoff is None) else float(z_cutoff)
    s = cfg.y0
    y_bp = tuple(sorted({-cfg.y0 - dy for dy in delta[:, 1]} | {-dy for dy in delta[:, 1]}))
    z_bp = {-dz for dz in delta[:, 2]}
    if math.isfinite(z_hi):
        z_bp |= {z_hi - dz for dz in delta[:, 2]}
    z_bp = tuple(sorted(z_bp))
    region = IntegrationRegion(
        (
            Axis(-math.inf, math.inf, scale=s, center=float(ref[0])),
            Axis(y_bp[0], y_bp[-1], breakpoints=y_bp),
            Axis(z_bp[0], z_hi if math.isinf(z_hi) else z_bp[-1], scale=max(s, abs(float(ref[2]))), breakpoints=z_bp),
        )
    )

    def f(pts):
        out = np.zeros((len(pts), weights.shape[0]))
        if component == 0:
            return out
        y = pts[:, 1:2] + delta[None, :, 1]
        z = pts[:, 2:3] + delta[None, :, 2]
        inside = (z >= 0.0) & (y >= -cfg.y0) & (y < 0.0) & (z <= z_hi)
        g = inside.astype(float) @ weights.T  # (N, m)
        live = np.any(g != 0.0, axis=1)
        if not np.any(live):
            return out
        v = pts[live] - ref
        r2 = np.einsum("nj,nj->n", v, v)
        if np.any(r2 < 1e-24):
            raise NonFiniteSample("field-momentum integrand sampled on the charge")
        c = (v[:, 2] if component == 1 else -v[:, 1]) * r2 ** -1.5
        out[live] = c[:, None] * g[live]
        return out

    return f, region


def momentum_integrals(
    cfg: SlabFieldConfig,
    positions,
    weights,
    component: int,
    rel_tol: float = 1e-6,
    abs_tol: float = 1e-12,
    max_evals: int = 10_000_000,
    z_cutoff: float | None = None,
    allow_overlap: bool = False,
    norm: str = "individual",
) -> list[QuadratureResult]:
    """Geometric integrals of weighted kernel combinations, one per row of ``weights``.

    Multiply by :func:`_prefactor` to obtain momenta. With
    ``allow_overlap`` the charge positions may sit inside the slab. Rows
    that are finite-difference stencils (weights summing to zero) then use
    the shifted-slab form of :func:`_shifted_problem`, which has no
    singularity at all; other rows fall back to cutting the region on a
    graded grid so each singular point sits on a cell corner.
    """
    if cfg.kind != MAGNETIC:
        raise ValueError("field momentum is defined for the magnetic slab only")
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    dist = cfg.distance(positions)
    close = dist < cfg.margin
    if np.any(close) and not allow_overlap:
        bad = positions[np.argmax(close)]
        raise OverlapViolation(f"point {bad.tolist()} is inside the slab or within {cfg.margin:.3g} cm of it")
    if allow_overlap and cfg.thin_sheet and np.any(close):
        raise OverlapViolation("cannot evaluate on the thin sheet itself")
    overlap = bool(np.any(close))
    if overlap and np.all(np.abs(weights.sum(axis=1)) <= 1e-12 * np.abs(weights).sum(axis=1)):
        f, region = _shifted_problem(cfg, positions, weights, component, z_cutoff)
        return cubature(f, region, rel_tol, abs_tol, max_evals, norm=norm)
    region = _region(cfg, positions, component, z_cutoff, overlap)
    return cubature(_kernel(positions, weights, component), region, rel_tol, abs_tol, max_evals, norm=norm)


# ---------------------------------------------------------------- public API


@dataclass(frozen=True)
class FieldMomentum:
    """Pi_q with per-component quadrature results.

    ``pi[1]`` (the y component) depends on ``z_cutoff``; see module notes.
    """

    pi: np.ndarray
    components: tuple[QuadratureResult, QuadratureResult, QuadratureResult]
    z_cutoff: float
    cutoff_dependent: tuple[bool, bool, bool] = (False, True, False)

    @property
    def error_estimate(self) -> np.ndarray:
        return np.array([c.error_estimate for c in self.components])

    @property
    def evaluations(self) -> int:
        return sum(c.evaluations for c in self.components)


def field_momentum(
    charge: PointCharge,
    cfg: SlabFieldConfig,
    rel_tol: float = 1e-6,
    abs_tol: float = 1e-12,
    max_evals: int = 10_000_000,
    z_cutoff: float | None = None,
) -> FieldMomentum:
    """Field momentum of ``charge`` in the slab field (g cm/s).

    Raises OverlapViolation if the charge is inside (or within the margin
    of) the slab, and NonConvergence, carrying the partial FieldMomentum,
    if any component misses its tolerance.
    """
    R = charge.position[None, :]
    cutoff = _default_cutoff(cfg, R) if z_cutoff is None else float(z_cutoff)
    pref = _prefactor(charge.q, cfg)
    results = []
    for j in range(3):
        (r,) = momentum_integrals(cfg, R, [[1.0]], j, rel_tol, abs_tol, max_evals, z_cutoff=cutoff if j == 1 else None)
        results.append(QuadratureResult(pref * r.value, abs(pref) * r.error_estimate, r.evaluations, r.converged))
    fm = FieldMomentum(np.array([r.value for r in results]), tuple(results), cutoff)
    if not all(r.converged for r in results):
        raise NonConvergence("field momentum quadrature did not converge", fm)
    return fm


def field_momentum_thin_sheet(charge: PointCharge, a: float, Z: float, n_B: float) -> float:
    """Closed-form ``Pi_z`` for the thin sheet at ``R = (x, a, Z)``.

    Integrating the kernel over x' gives ``2a/(a^2 + (z' - Z)^2)``; the z'
    integral over ``[0, inf)`` then gives ``2 (pi/2 + arctan(Z/a))``, so
    ``Pi_z = q n_B/(2 pi c) (pi/2 + arctan(Z/a))``.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    return charge.q * n_B / (2.0 * math.pi * CONST.c) * (0.5 * math.pi + math.atan(Z / a))


def _stencil(R: np.ndarray, h: float):
    """12 stencil points (+-h, +-2h on each axis) and the weight rows
    for fine and coarse central differences: rows 0-2 fine, 3-5 coarse."""
    pts, W = [], np.zeros((6, 12))
    for i in range(3):
        e = np.zeros(3)
        e[i] = 1.0
        base = 4 * i
        pts += [R + h * e, R - h * e, R + 2 * h * e, R - 2 * h * e]
        W[i, base], W[i, base + 1] = 1 / (2 * h), -1 / (2 * h)
        W[3 + i, base + 2], W[3 + i, base + 3] = 1 / (4 * h), -1 / (4 * h)
    return np.array(pts), W


@dataclass(frozen=True)
class Jacobian:
    """``d_i Pi_j`` (rows i = derivative axis, columns j = component)."""

    value: np.ndarray
    quad_error: np.ndarray
    stencil_error: np.ndarray
    evaluations: int
    converged: bool

    @property
    def error_estimate(self) -> np.ndarray:
        return self.quad_error + self.stencil_error


def momentum_jacobian(
    charge: PointCharge,
    cfg: SlabFieldConfig,
    R,
    step: float,
    components=(1, 2),
    rel_tol: float = 1e-7,
    abs_tol: float = 1e-14,
    max_evals: int = 10_000_000,
    z_cutoff: float | None = None,
    allow_overlap: bool = False,
) -> Jacobian:
    """Richardson-extrapolated central-difference Jacobian of Pi_q at ``R``.

    Columns not listed in ``components`` are left at zero; column 0 is
    identically zero for a field along x.
    """
    R = as_vec3(R, "R")
    if not step > 0:
        raise ValueError("step must be positive")
    pts, W = _stencil(R, step)
    if not allow_overlap:
        for i in range(3):
            if cfg.segment_hits(pts[4 * i + 3], pts[4 * i + 2]):
                raise OverlapViolation(f"finite-difference stencil along axis {i} at {R.tolist()} crosses the slab")
    cutoff = _default_cutoff(cfg, R[None, :]) if z_cutoff is None else z_cutoff
    pref = _prefactor(charge.q, cfg)
    J = np.zeros((3, 3))
    qerr = np.zeros((3, 3))
    serr = np.zeros((3, 3))
    evals, ok = 0, True
    for j in components:
        res = momentum_integrals(
            cfg,
            pts,
            W,
            j,
            rel_tol,
            abs_tol,
            max_evals,
            z_cutoff=cutoff if (j == 1 or z_cutoff is not None) else None,
            allow_overlap=allow_overlap,
            norm="max",
        )
        fine = np.array([r.value for r in res[:3]])
        coarse = np.array([r.value for r in res[3:]])
        efine = np.array([r.error_estimate for r in res[:3]])
        ecoarse = np.array([r.error_estimate for r in res[3:]])
        J[:, j] = pref * (4.0 * fine - coarse) / 3.0
        qerr[:, j] = abs(pref) * (4.0 * efine + ecoarse) / 3.0
        serr[:, j] = abs(pref) * np.abs(fine - coarse) / 3.0
        evals += res[0].evaluations
        ok = ok and all(r.converged for r in res)
    return Jacobian(J, qerr, serr, evals, ok)


@dataclass(frozen=True)
class Gradient:
    value: np.ndarray
    error_estimate: np.ndarray
    evaluations: int


def grad_d_dot_pi(
    charge: PointCharge,
    d,
    cfg: SlabFieldConfig,
    R,
    step: float | None = None,
    rel_tol: float = 1e-7,
    abs_tol: float = 1e-14,
    max_evals: int = 10_000_000,
) -> Gradient:
    """``(1/q) grad_R (d . Pi_q)`` by Richardson-extrapolated central differences.

    ``step`` defaults to 1/200 of the distance from ``R`` to the slab.
    Every stencil point must be outside the slab (OverlapViolation
    otherwise).
    """
    d = as_vec3(d, "d")
    R = as_vec3(R, "R")
    if step is None:
        step = float(cfg.distance(R[None, :])[0]) / 200.0
        if step <= 0:
            raise OverlapViolation("R lies on the slab")
    if not np.any(d[1:]):
        return Gradient(np.zeros(3), np.zeros(3), 0)
    comps = tuple(j for j in (1, 2) if d[j] != 0.0)
    jac = momentum_jacobian(charge, cfg, R, step, comps, rel_tol, abs_tol, max_evals)
    if not jac.converged:
        raise NonConvergence("gradient quadrature did not converge", jac)
    value = jac.value @ d / charge.q
    err = jac.error_estimate @ np.abs(d) / abs(charge.q)
    return Gradient(value, err, jac.evaluations)


@dataclass(frozen=True)
class CurlCheck:
    point: np.ndarray
    curl: np.ndarray
    expected: np.ndarray
    residual: float
    error_estimate: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.bound


def curl_pi_check(
    charge: PointCharge,
    cfg: SlabFieldConfig,
    sample_points,
    step: float | None = None,
    rel_tol: float = 1e-5,
    abs_tol: float = 1e-14,
    max_evals: int = 10_000_000,
    rel_bound: float = 1e-3,
) -> list[CurlCheck]:
    """Compare the finite-difference curl of Pi_q with ``(q/c) B``.

    Points may lie inside the slab (the charge then sits in the field
    region; the integrable singularity is handled by cutting the region at
    the stencil). Every stencil must keep ``3 * step`` from the slab faces.
    One ``z'`` cutoff is shared by all components so the truncated slab is a
    consistent divergence-free source. The bound is
    ``max(rel_bound * |q B0|/c, propagated error)``.
    """
    if cfg.thin_sheet:
        raise ValueError("curl check needs a finite-thickness slab")
    pts = np.atleast_2d(np.asarray(sample_points, dtype=float))
    if step is None:
        step = cfg.y0 / 200.0
    if np.any(cfg.boundary_distance(pts) < 3.0 * step + 2.0 * step):
        raise ValueError("sample stencils must stay 3*step away from the slab faces")
    cutoff = _default_cutoff(cfg, pts)
    scale = abs(charge.q * cfg.B0) / CONST.c
    out = []
    for p in pts:
        jac = momentum_jacobian(
            charge, cfg, p, step, (1, 2), rel_tol, abs_tol, max_evals, z_cutoff=cutoff, allow_overlap=True
        )
        if not jac.converged:
            raise NonConvergence(f"curl quadrature did not converge at {p.tolist()}", out)
        J, E = jac.value, jac.error_estimate
        curl = np.array([J[1, 2] - J[2, 1], J[2, 0] - J[0, 2], J[0, 1] - J[1, 0]])
        cerr = np.array([E[1, 2] + E[2, 1], E[2, 0] + E[0, 2], E[0, 1] + E[1, 0]])
        expected = charge.q / CONST.c * bfield(p, cfg)
        residual = float(np.linalg.norm(curl - expected))
        err = float(np.linalg.norm(cerr))
        out.append(CurlCheck(p, curl, expected, residual, err, max(rel_bound * scale, err)))
    return out
