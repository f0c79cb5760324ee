"""Adaptive cubature over (semi-)infinite boxes and line integrals.

The volume engine is a globally adaptive Genz-Malik scheme (degree 7 rule
with an embedded degree 5 rule for the error estimate) for two or three
active axes, and Gauss-Kronrod 7/15 for one. Infinite ends are handled by
rational maps ``x = c + s t/(1 - t^2)`` (two-sided) or ``x = lo + s t/(1 - t)``
(one-sided), with the Jacobian folded into the integrand. Neither rule
samples the box boundary, so the map singularities at ``t = +-1`` are never
touched.

Integrands are vectorised: ``f(points)`` receives an ``(N, 3)`` array and
returns ``(N,)`` or ``(N, m)``. Each refinement pass splits a batch of the
worst boxes at once, so the integrand sees large arrays.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import Trajectory, segment_sample
from .errors import NonConvergence, NonFiniteSample

SINGULAR_RADIUS = 1e-12  # cm
_MAX_BATCH = 4096
_PARALLEL_MIN_POINTS = 20_000


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int
    converged: bool


@dataclass(frozen=True)
class Axis:
    """One axis of an integration region.

    ``scale`` and ``center`` parameterise the rational map used when an end
    is infinite. ``breakpoints`` are physical coordinates where the initial
    box is cut (peaks, kinks, integrable singularities). A collapsed axis
    (``lower == upper``, built with :meth:`point`) contributes no measure:
    the integrand is simply evaluated at that coordinate.
    """

    lower: float
    upper: float
    scale: float = 1.0
    center: float | None = None
    breakpoints: tuple[float, ...] = ()

    def __post_init__(self):
        if math.isnan(self.lower) or math.isnan(self.upper):
            raise ValueError("axis bounds must not be NaN")
        if self.lower == self.upper:
            if not math.isfinite(self.lower):
                raise ValueError("a collapsed axis needs a finite coordinate")
        elif not self.lower < self.upper:
            raise ValueError(f"axis lower bound {self.lower} >= upper bound {self.upper}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError("axis scale must be positive and finite")

    @classmethod
    def point(cls, value: float) -> "Axis":
        return cls(float(value), float(value))

    @property
    def collapsed(self) -> bool:
        return self.lower == self.upper

    @property
    def kind(self) -> str:
        lo_inf, hi_inf = math.isinf(self.lower), math.isinf(self.upper)
        if lo_inf and hi_inf:
            return "both"
        if hi_inf:
            return "upper"
        if lo_inf:
            return "lower"
        return "finite"

    @property
    def _c(self) -> float:
        return 0.0 if self.center is None else float(self.center)

    def t_bounds(self) -> tuple[float, float]:
        return {
            "finite": (self.lower, self.upper),
            "upper": (0.0, 1.0),
            "lower": (-1.0, 0.0),
            "both": (-1.0, 1.0),
        }[self.kind]

    def to_t(self, x: float) -> float:
        kind, s = self.kind, self.scale
        if kind == "finite":
            return x
        if kind == "upper":
            u = x - self.lower
            return u / (s + u)
        if kind == "lower":
            u = x - self.upper
            return u / (s - u)
        u = x - self._c
        return 2.0 * u / (s + math.sqrt(s * s + 4.0 * u * u))

    def from_t(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Physical coordinate and Jacobian dx/dt."""
        kind, s = self.kind, self.scale
        if kind == "finite":
            return t, np.ones_like(t)
        if kind == "upper":
            om = 1.0 - t
            return self.lower + s * t / om, s / (om * om)
        if kind == "lower":
            op = 1.0 + t
            return self.upper + s * t / op, s / (op * op)
        om = 1.0 - t * t
        return self._c + s * t / om, s * (1.0 + t * t) / (om * om)

    def t_cuts(self) -> list[float]:
        lo, hi = self.t_bounds()
        cuts = sorted({self.to_t(float(b)) for b in self.breakpoints if self.lower < b < self.upper})
        out = [lo]
        for t in cuts:
            if t - out[-1] > 1e-12 * max(1.0, abs(t)):
                out.append(t)
        if hi - out[-1] <= 1e-12 * max(1.0, abs(hi)):
            out.pop()
        out.append(hi)
        return out


@dataclass(frozen=True)
class IntegrationRegion:
    axes: tuple[Axis, Axis, Axis]

    def __post_init__(self):
        if len(self.axes) != 3:
            raise ValueError("an integration region has exactly three axes")

    @classmethod
    def box(cls, bounds, scale: float = 1.0) -> "IntegrationRegion":
        """Region from ``[(lo, hi)] * 3``; infinite ends allowed."""
        return cls(tuple(Axis(float(lo), float(hi), scale=scale) for lo, hi in bounds))

    @property
    def active(self) -> list[int]:
        return [i for i, ax in enumerate(self.axes) if not ax.collapsed]


# ---------------------------------------------------------------- rules


@dataclass(frozen=True)
class _Rule:
    nodes: np.ndarray  # (P, n) on [-1, 1]^n
    w_hi: np.ndarray  # weights summing to 1
    w_lo: np.ndarray
    # indices into nodes for the fourth-difference split criterion
    centre: int
    inner: np.ndarray | None  # (n, 2): +-lambda2 along each axis
    outer: np.ndarray | None  # (n, 2): +-lambda3 along each axis


def _genz_malik(n: int) -> _Rule:
    l2 = math.sqrt(9.0 / 70.0)
    l3 = math.sqrt(9.0 / 10.0)
    l4 = math.sqrt(9.0 / 10.0)
    l5 = math.sqrt(9.0 / 19.0)
    w = [
        (12824 - 9120 * n + 400 * n * n) / 19683,
        980 / 6561,
        (1820 - 400 * n) / 19683,
        200 / 19683,
        6859 / 19683 / 2**n,
    ]
    wl = [
        (729 - 950 * n + 50 * n * n) / 729,
        245 / 486,
        (265 - 100 * n) / 1458,
        25 / 729,
        0.0,
    ]
    nodes, hi, lo = [np.zeros(n)], [w[0]], [wl[0]]
    inner = np.zeros((n, 2), dtype=int)
    outer = np.zeros((n, 2), dtype=int)
    for lam, k, idx in ((l2, 1, inner), (l3, 2, outer)):
        for i in range(n):
            for j, sgn in enumerate((1.0, -1.0)):
                p = np.zeros(n)
                p[i] = sgn * lam
                idx[i, j] = len(nodes)
                nodes.append(p)
                hi.append(w[k])
                lo.append(wl[k])
    for i, j in itertools.combinations(range(n), 2):
        for si, sj in itertools.product((1.0, -1.0), repeat=2):
            p = np.zeros(n)
            p[i], p[j] = si * l4, sj * l4
            nodes.append(p)
            hi.append(w[3])
            lo.append(wl[3])
    for signs in itertools.product((1.0, -1.0), repeat=n):
        nodes.append(l5 * np.array(signs))
        hi.append(w[4])
        lo.append(wl[4])
    return _Rule(np.array(nodes), np.array(hi), np.array(lo), 0, inner, outer)


def _gauss_kronrod_15() -> _Rule:
    xk = np.array(
        [
            0.991455371120812639206854697526329,
            0.949107912342758524526189684047851,
            0.864864423359769072789712788640926,
            0.741531185599394439863864773280788,
            0.586087235467691130294144845693013,
            0.405845151377397166906606412076961,
            0.207784955007898467600689403773245,
            0.0,
        ]
    )
    wk = np.array(
        [
            0.022935322010529224963732008058970,
            0.063092092629978553290700663189204,
            0.104790010322250183839876322541518,
            0.140653259715525918745189590510238,
            0.169004726639267902826583426598550,
            0.190350578064785409913256402421014,
            0.204432940075298892414161999234649,
            0.209482141084727828012999174891714,
        ]
    )
    wg = np.array(
        [
            0.129484966168869693270611432679082,
            0.279705391489276667901467771423780,
            0.381830050505118944950369775488975,
            0.417959183673469387755102040816327,
        ]
    )
    x = np.concatenate([-xk[:-1], xk[::-1]])
    w_hi = np.concatenate([wk[:-1], wk[::-1]]) / 2.0
    w_lo = np.zeros(15)
    gauss_pos = [1, 3, 5, 7, 9, 11, 13]
    w_lo[gauss_pos] = np.concatenate([wg[:-1], wg[::-1]]) / 2.0
    return _Rule(x[:, None], w_hi, w_lo, 7, None, None)


_RULES: dict[int, _Rule] = {}


def _rule(n: int) -> _Rule:
    if n not in _RULES:
        _RULES[n] = _gauss_kronrod_15() if n == 1 else _genz_malik(n)
    return _RULES[n]


def thread_count() -> int:
    """Worker cap from ``DIPOLE_PHASE_THREADS`` (0 or unset means auto)."""
    raw = os.environ.get("DIPOLE_PHASE_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return max(1, n)


# ---------------------------------------------------------------- engine


class _Evaluator:
    def __init__(self, f, region: IntegrationRegion, singular_points):
        self.f = f
        self.region = region
        self.active = region.active
        self.fixed = np.array([ax.lower if ax.collapsed else 0.0 for ax in region.axes])
        self.singular = None if singular_points is None else np.atleast_2d(np.asarray(singular_points, float))
        self.rule = _rule(len(self.active))
        self.threads = thread_count()
        self.m = None

    def _call(self, pts: np.ndarray) -> np.ndarray:
        if self.threads > 1 and len(pts) >= _PARALLEL_MIN_POINTS:
            chunks = np.array_split(pts, self.threads)
            with ThreadPoolExecutor(self.threads) as ex:
                parts = list(ex.map(self.f, chunks))
            out = np.concatenate([np.asarray(p, float).reshape(len(c), -1) for p, c in zip(parts, chunks)])
        else:
            out = np.asarray(self.f(pts), dtype=float).reshape(len(pts), -1)
        return out

    def __call__(self, centers: np.ndarray, halfw: np.ndarray):
        """Rule values, error estimates and split axes for a batch of boxes."""
        rule = self.rule
        B, n = centers.shape
        t = centers[:, None, :] + halfw[:, None, :] * rule.nodes[None, :, :]  # (B,P,n)
        P = t.shape[1]
        pts = np.broadcast_to(self.fixed, (B, P, 3)).copy()
        jac = np.ones((B, P))
        for k, ax_i in enumerate(self.active):
            x, dxdt = self.region.axes[ax_i].from_t(t[:, :, k])
            pts[:, :, ax_i] = x
            jac *= dxdt
        flat = pts.reshape(-1, 3)
        if self.singular is not None:
            d = np.linalg.norm(flat[:, None, :] - self.singular[None, :, :], axis=2)
            if np.any(d < SINGULAR_RADIUS):
                raise NonFiniteSample("integrand sampled within 1e-12 cm of a singular point")
        fv = self._call(flat)
        if not np.all(np.isfinite(fv)):
            raise NonFiniteSample("integrand returned a non-finite value")
        m = fv.shape[1]
        self.m = m
        g = fv.reshape(B, P, m) * jac[:, :, None]
        vol = np.prod(2.0 * halfw, axis=1)
        hi = vol[:, None] * np.einsum("p,bpm->bm", rule.w_hi, g)
        lo = vol[:, None] * np.einsum("p,bpm->bm", rule.w_lo, g)
        err = np.abs(hi - lo)
        if n == 1:
            axis = np.zeros(B, dtype=int)
        else:
            g0 = g[:, rule.centre, :]
            d_in = g[:, rule.inner[:, 0], :] + g[:, rule.inner[:, 1], :] - 2.0 * g0[:, None, :]
            d_out = g[:, rule.outer[:, 0], :] + g[:, rule.outer[:, 1], :] - 2.0 * g0[:, None, :]
            fourth = np.abs(d_in - d_out / 7.0)  # (B, n, m)
            norm = np.max(np.abs(g), axis=1)[:, None, :] + 1e-300
            score = np.sum(fourth / norm, axis=2)
            # ties go to the widest axis
            score = score + 1e-12 * halfw / np.max(halfw, axis=1, keepdims=True)
            axis = np.argmax(score, axis=1)
        return hi, err, axis, B * P


def cubature(
    f,
    region: IntegrationRegion,
    rel_tol: float = 1e-6,
    abs_tol: float = 1e-12,
    max_evals: int = 10_000_000,
    norm: str = "individual",
    singular_points=None,
) -> list[QuadratureResult]:
    """Adaptive integral of a (possibly vector-valued) integrand.

    ``norm="individual"`` requires every component to meet
    ``max(abs_tol, rel_tol*|I_k|)``; ``norm="max"`` measures the relative
    part against the largest component, which is what finite-difference
    combinations with exactly-zero entries need.

    Non-convergence is not raised here: results come back flagged
    ``converged=False`` with the best estimate.
    """
    if not (rel_tol > 0 and abs_tol > 0):
        raise ValueError("tolerances must be positive")
    if norm not in ("individual", "max"):
        raise ValueError(f"unknown norm {norm!r}")
    ev = _Evaluator(f, region, singular_points)
    active_axes = [region.axes[i] for i in ev.active]
    if not active_axes:
        vals = ev._call(ev.fixed[None, :])[0]
        return [QuadratureResult(float(v), 0.0, 1, True) for v in vals]

    cells = list(itertools.product(*[list(zip(ax.t_cuts()[:-1], ax.t_cuts()[1:])) for ax in active_axes]))
    lo = np.array([[c[0] for c in cell] for cell in cells])
    hi_b = np.array([[c[1] for c in cell] for cell in cells])
    C = 0.5 * (lo + hi_b)
    H = 0.5 * (hi_b - lo)
    V, E, S, evals = ev(C, H)
    m = V.shape[1]

    converged = False
    while True:
        total = np.array([math.fsum(V[:, k]) for k in range(m)])
        err_tot = E.sum(axis=0)
        if norm == "max":
            tol = np.full(m, max(abs_tol, rel_tol * float(np.max(np.abs(total)))))
        else:
            tol = np.maximum(abs_tol, rel_tol * np.abs(total))
        bad = err_tot > tol
        if not np.any(bad):
            converged = True
            break
        per_box = 2 * len(ev.rule.nodes)
        budget_boxes = (max_evals - evals) // per_box
        if budget_boxes < 1:
            break
        share = E[:, bad] / err_tot[bad]
        prio = np.max(share, axis=1)
        order = np.argsort(-prio, kind="stable")
        cum = np.cumsum(prio[order])
        count = int(np.searchsorted(cum, 0.5) + 1)
        count = max(1, min(count, _MAX_BATCH, int(budget_boxes), len(order)))
        pick = np.sort(order[:count])

        keep = np.ones(len(V), dtype=bool)
        keep[pick] = False
        pc, ph, ps = C[pick], H[pick].copy(), S[pick]
        rows = np.arange(len(pick))
        ph[rows, ps] *= 0.5
        left, right = pc.copy(), pc.copy()
        left[rows, ps] -= ph[rows, ps]
        right[rows, ps] += ph[rows, ps]
        nc = np.concatenate([left, right])
        nh = np.concatenate([ph, ph])
        nv, ne, ns, n_ev = ev(nc, nh)
        evals += n_ev
        C = np.concatenate([C[keep], nc])
        H = np.concatenate([H[keep], nh])
        V = np.concatenate([V[keep], nv])
        E = np.concatenate([E[keep], ne])
        S = np.concatenate([S[keep], ns])

    total = [math.fsum(V[:, k]) for k in range(m)]
    err_tot = E.sum(axis=0)
    return [QuadratureResult(float(total[k]), float(err_tot[k]), int(evals), converged) for k in range(m)]


def integrate_3d(f, region: IntegrationRegion, rel_tol=1e-6, abs_tol=1e-12, max_evals=10_000_000, singular_points=None):
    """Scalar integral of ``f`` over ``region``; see :func:`cubature`.

    Raises NonConvergence, with the unconverged result attached, when the
    budget runs out.
    """
    res = cubature(f, region, rel_tol, abs_tol, max_evals, singular_points=singular_points)
    if len(res) != 1:
        raise ValueError(f"integrate_3d expects a scalar integrand, got {len(res)} components")
    if not res[0].converged:
        raise NonConvergence(f"cubature budget of {max_evals} evaluations exhausted", res[0])
    return res[0]


# ---------------------------------------------------------------- lines


def line_integral(f, traj: Trajectory, n_refine: int = 8, n_start: int = 8, rel_tol=1e-10, abs_tol=1e-15):
    """Romberg-extrapolated midpoint rule for ``int f . dl`` along ``traj``.

    Level ``k`` uses ``n_start * 2**k`` midpoints per segment. Stops when
    successive diagonal Romberg entries agree to the tolerance; otherwise
    returns ``converged=False`` after ``n_refine`` levels.
    """
    if n_refine < 2:
        raise ValueError("n_refine must be at least 2")
    table: list[list[float]] = []
    evals = 0
    est, err = 0.0, math.inf
    for k in range(n_refine):
        pts, dl = segment_sample(traj, n_start * 2**k)
        vals = np.asarray(f(pts), dtype=float).reshape(len(pts), 3)
        if not np.all(np.isfinite(vals)):
            raise NonFiniteSample("line integrand returned a non-finite value")
        evals += len(pts)
        row = [math.fsum(np.einsum("ij,ij->i", vals, dl))]
        for j in range(1, k + 1):
            row.append(row[j - 1] + (row[j - 1] - table[k - 1][j - 1]) / (4**j - 1))
        table.append(row)
        if k >= 1:
            est = row[k]
            err = abs(row[k] - table[k - 1][k - 1])
            if err <= max(abs_tol, rel_tol * abs(est)):
                return QuadratureResult(est, err, evals, True)
    return QuadratureResult(est, err, evals, False)


def gauss_line_integral(f, traj: Trajectory, order: int = 10, max_level: int = 6, rel_tol=1e-10, abs_tol=1e-15):
    """Composite Gauss-Legendre ``int f . dl`` along ``traj``.

    Level ``k`` cuts every segment into ``2**k`` panels of ``order`` nodes.
    For integrands analytic near the path the error falls geometrically with
    the level, so this needs far fewer samples than :func:`line_integral`
    when ``f`` is expensive. The error estimate is the change from the
    previous level.
    """
    if order < 1 or max_level < 1:
        raise ValueError("order and max_level must be positive")
    x, w = np.polynomial.legendre.leggauss(order)
    starts, ends = traj.segments()
    delta = ends - starts
    prev, evals = None, 0
    err = math.inf
    for k in range(max_level + 1):
        n = 2**k
        lo = np.arange(n) / n
        frac = (lo[:, None] + (x[None, :] + 1.0) / (2 * n)).reshape(-1)
        wts = np.tile(w / (2 * n), n)
        pts = (starts[:, None, :] + frac[None, :, None] * delta[:, None, :]).reshape(-1, 3)
        dl = np.repeat(delta, len(frac), axis=0) * np.tile(wts, len(starts))[:, None]
        vals = np.asarray(f(pts), dtype=float).reshape(len(pts), 3)
        if not np.all(np.isfinite(vals)):
            raise NonFiniteSample("line integrand returned a non-finite value")
        evals += len(pts)
        est = math.fsum(np.einsum("ij,ij->i", vals, dl))
        if prev is not None:
            err = abs(est - prev)
            if err <= max(abs_tol, rel_tol * abs(est)):
                return QuadratureResult(est, err, evals, True)
        prev = est
    return QuadratureResult(prev, err, evals, False)


def integrate_line(f, traj: Trajectory, n_refine: int = 8, n_start: int = 8, rel_tol=1e-10, abs_tol=1e-15) -> float:
    """Value of :func:`line_integral`; raises NonConvergence if refinement stalls."""
    res = line_integral(f, traj, n_refine, n_start, rel_tol, abs_tol)
    if not res.converged:
        raise NonConvergence(f"line integral did not converge (last change {res.error_estimate:.3g})", res)
    return res.value
