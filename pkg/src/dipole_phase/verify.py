"""Invariant battery behind ``dipole-phase verify``.

Each check returns one or more :class:`Check` rows. The battery runs at
default tolerances and is sized to finish in a few minutes.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import gauge, interferometer as itf, phase
from .core import CONST, Trajectory, triple_product
from .errors import DipolePhaseError
from .fieldmom import (
    PointCharge,
    SlabFieldConfig,
    bfield_array,
    curl_pi_check,
    field_momentum,
    field_momentum_thin_sheet,
    grad_d_dot_pi,
)
from .quadrature import IntegrationRegion, gauss_line_integral, integrate_3d, integrate_line, line_integral


@dataclass
class Check:
    name: str
    module: str
    passed: bool
    value: float
    bound: float
    detail: str = ""
    seconds: float = field(default=0.0)


def _row(name, module, value, bound, detail=""):
    value = float(value)
    return Check(name, module, bool(value <= bound), value, float(bound), detail)


def _rel(x, ref):
    return abs(x - ref) / abs(ref)


# ---------------------------------------------------------------- core


def check_core():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(200):
        a, b, c = rng.normal(size=(3, 3))
        t1, t2 = triple_product(a, b, c), triple_product(b, c, a)
        worst = max(worst, abs(t1 - t2) / max(abs(t1), 1e-300))
    const = 3 * CONST.e * CONST.a0 / (2 * CONST.hbar_c)
    return [
        _row("triple product cyclic identity", "core", worst, 1e-13),
        Check("phase constant in [0.1199, 0.1211]", "core", 0.1199 <= const <= 0.1211, const, 0.1211),
    ]


# ---------------------------------------------------------------- quadrature


def _gauss3(p):
    return np.exp(-np.sum(p * p, axis=1))


def check_quadrature():
    rows = []
    inf = math.inf
    r = integrate_3d(lambda p: np.ones(len(p)), IntegrationRegion.box([(0, 1)] * 3), rel_tol=1e-10)
    rows.append(_row("unit cube volume", "quadrature", abs(r.value - 1.0), 1e-10))

    full = IntegrationRegion.box([(-inf, inf)] * 3)
    g = integrate_3d(_gauss3, full)
    ref = math.pi**1.5
    rows.append(_row("gaussian over R^3", "quadrature", _rel(g.value, ref), 1e-6))
    rows.append(_row("error honesty: gaussian", "quadrature", abs(g.value - ref), 10 * g.error_estimate))

    from .quadrature import Axis

    region = IntegrationRegion((Axis(-inf, inf), Axis.point(0.0), Axis(0.0, inf)))
    k = integrate_3d(lambda p: 1.0 / (p[:, 0] ** 2 + 1.0 + p[:, 2] ** 2) ** 1.5, region)
    rows.append(_row("reduced thin-sheet kernel = pi", "quadrature", _rel(k.value, math.pi), 1e-6))
    rows.append(_row("error honesty: kernel", "quadrature", abs(k.value - math.pi), 10 * k.error_estimate))

    def h(p):
        return 1.0 / (1.0 + np.sum((p - 0.3) ** 2, axis=1)) ** 3

    f = integrate_3d(_gauss3, full)
    hh = integrate_3d(h, full)
    comb = integrate_3d(lambda p: 2.0 * _gauss3(p) - 3.0 * h(p), full)
    err = 2 * f.error_estimate + 3 * hh.error_estimate + comb.error_estimate
    rows.append(_row("linearity", "quadrature", abs(comb.value - (2 * f.value - 3 * hh.value)), max(err, 1e-12)))

    left = integrate_3d(_gauss3, IntegrationRegion.box([(-inf, 0.4), (-inf, inf), (-inf, inf)]))
    right = integrate_3d(_gauss3, IntegrationRegion.box([(0.4, inf), (-inf, inf), (-inf, inf)]))
    rows.append(
        _row(
            "region additivity",
            "quadrature",
            abs(left.value + right.value - f.value),
            max(left.error_estimate + right.error_estimate + f.error_estimate, 1e-12),
        )
    )
    again = integrate_3d(_gauss3, full)
    rows.append(Check("determinism (bit-identical)", "quadrature", again.value == f.value, 0.0, 0.0))

    sq = Trajectory(np.array([[0, 0, 0], [1, 0, 0.5], [1, 2, 1], [0, 1, -1]], dtype=float), closed=True)
    v = integrate_line(lambda p: np.stack([p[:, 1] * p[:, 2], p[:, 0] * p[:, 2], p[:, 0] * p[:, 1]], 1), sq)
    rows.append(_row("line: exact gradient round a loop", "quadrature", abs(v), 1e-9))
    theta = np.linspace(0, 2 * np.pi, 400, endpoint=False)
    circle = Trajectory(np.stack([np.cos(theta), np.sin(theta), 0 * theta], 1), closed=True)
    w = gauss_line_integral(
        lambda p: np.stack([-p[:, 1], p[:, 0], 0 * p[:, 0]], 1) / (p[:, 0] ** 2 + p[:, 1] ** 2)[:, None], circle
    )
    rows.append(_row("line: winding number 2 pi", "quadrature", abs(w.value - 2 * np.pi), 1e-6))
    c = line_integral(lambda p: np.tile([0.0, 0.0, 2.5], (len(p), 1)), Trajectory.line((0, 0, -1), (0, 0, 3)))
    rows.append(_row("line: constant field", "quadrature", abs(c.value - 10.0), 1e-12))
    return rows


# ---------------------------------------------------------------- fieldmom


def check_fieldmom():
    rows = []
    q, a = CONST.e, 1.0
    cfg = SlabFieldConfig.from_flux(1.0, a / 100)
    scale = q * cfg.n_B / (2 * CONST.c)

    worst = 0.0
    for Z in np.linspace(-10, 10, 21):
        ch = PointCharge(q, (0.0, a, Z))
        fm = field_momentum(ch, cfg)
        worst = max(worst, _rel(fm.pi[2], field_momentum_thin_sheet(ch, a, Z, cfg.n_B)))
    rows.append(_row("thin-sheet oracle, 21 points Z/a in [-10, 10]", "fieldmom", worst, 5e-3))

    hi = field_momentum(PointCharge(q, (0.0, a, 2000 * a)), cfg)
    lo = field_momentum(PointCharge(q, (0.0, a, -2000 * a)), cfg)
    rows.append(_row("asymptote Pi_z(Z = +2000a) -> n_B q/2c", "fieldmom", _rel(hi.pi[2], scale), 1e-2))
    rows.append(_row("asymptote |Pi_x, Pi_z|(Z = -2000a) -> 0", "fieldmom", np.hypot(lo.pi[0], lo.pi[2]) / scale, 1e-3))

    ch = PointCharge(q, (0.0, a, 0.7))
    base = field_momentum(ch, cfg)
    rows.append(_row("symmetry Pi_x = 0 on x = 0", "fieldmom", abs(base.pi[0]), max(base.error_estimate[0], 1e-300)))
    dq = field_momentum(PointCharge(2 * q, ch.position), cfg)
    rows.append(
        _row("linearity in q (Pi_z)", "fieldmom", abs(dq.pi[2] - 2 * base.pi[2]), dq.error_estimate[2] + 2 * base.error_estimate[2])
    )
    dB = field_momentum(ch, SlabFieldConfig(2 * cfg.B0, cfg.y0))
    rows.append(
        _row("linearity in B0 (Pi_z)", "fieldmom", abs(dB.pi[2] - 2 * base.pi[2]), dB.error_estimate[2] + 2 * base.error_estimate[2])
    )

    thin = SlabFieldConfig.from_flux(1.0, a / 100, thin_sheet=True)
    d = phase.hydrogen_dipole()
    Z = 0.5
    g = grad_d_dot_pi(PointCharge(q, (0, a, Z)), d, thin, (0, a, Z))
    oracle = d[2] * thin.n_B / (2 * math.pi * CONST.c) * a / (a * a + Z * Z)
    rows.append(_row("gradient vs oracle derivative", "fieldmom", _rel(g.value[2], oracle), 1e-6))

    slab = SlabFieldConfig(1.0, 1.0)
    inside = [(0, -0.5, 5), (0.3, -0.2, 0.5), (0, -0.5, 0.5), (-1, -0.7, 2), (0.5, -0.4, 20)]
    outside = [(0, 0.5, 1), (0, -1.5, 2), (0, -0.5, -0.5), (1, 1, -1), (0, 0.3, 0.3)]
    checks = curl_pi_check(PointCharge(q, (0, 0, 0)), slab, inside + outside)
    for c in checks:
        where = "inside" if slab.contains(c.point)[0] else "outside"
        rows.append(_row(f"curl identity {where} at {tuple(c.point.tolist())}", "fieldmom", c.residual, c.bound))
    return rows


# ---------------------------------------------------------------- phase


def check_phase():
    rows = []
    q, a, L = CONST.e, 1.0, 2.0
    cfg = SlabFieldConfig.from_flux(1.0, a / 100, thin_sheet=True)
    ch = PointCharge(q, (0, a, 0))
    d = phase.hydrogen_dipole()
    Ri, Rm, Rf = (0, a, -L), (0, a, 0.3), (0, a, L)

    pe = phase.geometric_phase_endpoint(ch, d, cfg, Ri, Rf)
    straight = phase.geometric_phase_path(ch, d, cfg, Trajectory.line(Ri, Rf))
    detour = phase.geometric_phase_path(
        ch, d, cfg, Trajectory(np.array([Ri, (0, 2 * a, -L), (0, 2 * a, L), Rf], dtype=float))
    )
    loop = phase.geometric_phase_path(ch, d, cfg, Trajectory.rectangle_yz(0, a, 2 * a, -L, L))
    rows.append(_row("path independence (straight vs detour)", "phase", abs(straight.phi - detour.phi), 1e-6))
    rows.append(_row("closed field-free loop", "phase", abs(loop.phi), 1e-6))
    rows.append(
        _row(
            "endpoint vs path",
            "phase",
            abs(pe.phi - straight.phi),
            max(pe.error_estimate + straight.error_estimate, 1e-9),
        )
    )
    back = phase.geometric_phase_endpoint(ch, d, cfg, Rf, Ri)
    rows.append(_row("antisymmetry under R_i <-> R_f", "phase", abs(back.phi + pe.phi), 0.0))
    p1 = phase.geometric_phase_endpoint(ch, d, cfg, Ri, Rm)
    p2 = phase.geometric_phase_endpoint(ch, d, cfg, Rm, Rf)
    rows.append(
        _row(
            "additivity through a midpoint",
            "phase",
            abs(p1.phi + p2.phi - pe.phi),
            p1.error_estimate + p2.error_estimate + pe.error_estimate,
        )
    )
    p3 = phase.geometric_phase_endpoint(ch, d, SlabFieldConfig.from_flux(3.0, a / 100, thin_sheet=True), Ri, Rf)
    rows.append(_row("scaling in n_B", "phase", abs(p3.phi - 3 * pe.phi), p3.error_estimate + 3 * pe.error_estimate))
    neg = phase.geometric_phase_endpoint(ch, -d, cfg, Ri, Rf)
    rows.append(_row("sign flip with d_z", "phase", abs(neg.phi + pe.phi), 0.0))
    far = phase.geometric_phase_endpoint(ch, d, cfg, (0, a, -2000 * a), (0, a, 2000 * a))
    rows.append(_row("far-path phase -> phi_g", "phase", _rel(far.phi, phase.phi_g_sheet(cfg.n_B)), 1e-2))

    slab = SlabFieldConfig.from_flux(1.0, a / 100)
    clear = phase.hmw_phase(d, slab, Trajectory.rectangle_yz(0, a, 3 * a, -a, a))
    rows.append(_row("HMW: non-overlapping loop", "phase", abs(clear.phi), 1e-9))
    cross = Trajectory.rectangle_yz(0, -a, a, -a, a)
    h = phase.hmw_phase(d, slab, cross)
    from .core import segment_sample

    pts, dl = segment_sample(cross, 100_003)
    brute = np.sum(np.cross(bfield_array(pts, slab), d) * dl) / CONST.hbar_c
    rows.append(_row("HMW: crossing loop vs brute force", "phase", _rel(h.phi, brute), 1e-2))
    rows.append(_row("HMW: |phase| = n_B d_z / hbar c", "phase", _rel(abs(h.phi), slab.n_B * d[2] / CONST.hbar_c), 1e-2))
    hr = phase.hmw_phase(d, slab, cross.reversed())
    rows.append(_row("HMW: reversal negates", "phase", abs(hr.phi + h.phi), 0.0))
    hx = phase.hmw_phase((CONST.hydrogen_dz, 0, 0), slab, cross)
    rows.append(_row("HMW: d parallel to B", "phase", abs(hx.phi), 0.0))

    rows.append(_row("phi_g(1 Gauss cm) = 0.1205", "phase", _rel(phase.phi_g_sheet(1.0), 0.1205), 5e-3))
    mu = -1.913 * CONST.mu_N
    rows.append(
        _row("neutron dual phase per Volt = 5.1e-10", "phase", _rel(abs(phase.phi_g_dual(CONST.volt_to_statvolt, mu)), 5.1e-10), 2e-2)
    )
    sc = phase.SheetScenario(n_B=1.0, d_z=CONST.hydrogen_dz)
    rows.append(_row("duality: sheet phase invariant", "phase", abs(phase.sheet_phase(sc.dual()) - phase.sheet_phase(sc)), 0.0))
    return rows


# ---------------------------------------------------------------- interferometer


def check_interferometer():
    rows = []
    rng = np.random.default_rng(11)
    worst = 0.0
    s = itf.DipoleState.ground()
    for phi in rng.uniform(-10, 10, 200):
        s = itf.evolve(s, phi)
        worst = max(worst, abs(s.norm() - 1.0))
    e = itf.eigenbasis_transform(s, "to_eigen")
    back = itf.eigenbasis_transform(e, "to_computational")
    worst = max(worst, abs(e.norm() - 1.0), float(np.max(np.abs(back.amps - s.amps))))
    rows.append(_row("unitarity over 200 evolutions and a basis round trip", "interferometer", worst, 1e-12))

    a, b = rng.uniform(-3, 3, 2)
    s0 = itf.DipoleState.ground()
    lhs = itf.evolve(itf.evolve(s0, a), b)
    rhs = itf.evolve(s0, a + b)
    rows.append(_row("composition of evolutions", "interferometer", 1.0 - abs(lhs.overlap(rhs)), 1e-12))

    phis = np.linspace(0, 2 * np.pi, 101)
    fr = itf.fringe(phis)
    dev = float(np.max(np.abs(fr["p_210"] - np.sin(phis) ** 2)))
    dev = max(dev, float(np.max(np.abs(fr["p_200"] + fr["p_210"] - 1.0))))
    rows.append(_row("fringe p_210 = sin^2(phi_g), 101 points", "interferometer", dev, 1e-12))

    sym = itf.DipoleState.spin_symmetric()
    sx = itf.sigma_x(itf.evolve_dual(sym, 0.37))
    rows.append(_row("dual: <sigma_x> = cos(2 phi)", "interferometer", abs(sx - math.cos(0.74)), 1e-12))
    return rows


# ---------------------------------------------------------------- gauge


def check_gauge():
    rows = []
    q, a = CONST.e, 1.0
    cfg = SlabFieldConfig.from_flux(1.0, a / 100)
    d = phase.hydrogen_dipole()
    # asymmetric: the z^2 shift cancels on paths symmetric about z = 0
    Ri, Rf = (0, a, -20 * a), (0, a, 30 * a)
    pts = [(0.2, -0.005, 1.0), (0, 2.0, 3.0), (1, -2.0, -1.0), (0, -0.003, 7.0)]
    worst = 0.0
    for lam in (0.0, 0.5, -3.0):
        g = gauge.GaugeChoice(gauge.QUADRATIC, lam)
        for p in pts:
            c1 = gauge.curl_fd(lambda r: gauge.vector_potential_array(r, cfg, gauge.GaugeChoice()), p, 1e-4)
            c2 = gauge.curl_fd(lambda r: gauge.vector_potential_array(r, cfg, g), p, 1e-4)
            worst = max(worst, float(np.max(np.abs(c1 - c2))) / cfg.B0)
    rows.append(_row("curl A identical in both gauges", "gauge", worst, 1e-9))
    inner = gauge.curl_fd(lambda r: gauge.vector_potential_array(r, cfg, gauge.GaugeChoice()), pts[0], 1e-4)
    rows.append(_row("curl A = B inside the slab", "gauge", float(np.max(np.abs(inner - [cfg.B0, 0, 0]))) / cfg.B0, 1e-6))

    step = gauge.gauge_phase(d, cfg, gauge.GaugeChoice(), Ri, Rf)
    rows.append(_row("step gauge = 3 e a0 n_B / hbar c", "gauge", _rel(step.phi, 2 * phase.phi_g_sheet(cfg.n_B)), 1e-12))
    rep = gauge.gauge_compare(PointCharge(q, (0, a, 0)), d, cfg, Ri, Rf, lams=(0.5, -2.0))
    worst = max(_rel(s["difference"], s["predicted_difference"]) for s in rep["shifted"])
    rows.append(_row("shifted gauge differs by the predicted amount", "gauge", worst, 1e-9))
    smallest = min(abs(s["difference"]) for s in rep["shifted"])
    rows.append(Check("gauge dependence witness (difference > 0)", "gauge", smallest > 0, smallest, 0.0))
    l1 = phase.geometric_phase_endpoint(PointCharge(q, (0, a, 0)), d, cfg, Ri, Rf)
    rows.append(_row("LCFI phase independent of the gauge", "gauge", abs(l1.phi - rep["lcfi"]), l1.error_estimate))
    return rows


# ---------------------------------------------------------------- cli


def check_cli():
    from .cli import dump_json

    doc = {
        "command": "phase",
        "inputs": {"B0": 100.0, "y0": 0.01},
        "results": {"phi_g": {"value": 0.1205, "error_estimate": 0.0, "unit": "rad", "method": "closed-form"}},
        "errors": [],
        "meta": {"evaluations": 0},
    }
    text = dump_json(doc)
    return [Check("JSON round trip byte-identical", "cli", dump_json(json.loads(text)) == text, 0.0, 0.0)]


BATTERY = (check_core, check_quadrature, check_fieldmom, check_phase, check_interferometer, check_gauge, check_cli)


def run_battery(progress=None) -> list[Check]:
    """Run every check; a check that raises is recorded as failed."""
    rows: list[Check] = []
    for fn in BATTERY:
        t0 = time.perf_counter()
        try:
            out = fn()
        except DipolePhaseError as exc:
            out = [Check(fn.__name__, fn.__name__.removeprefix("check_"), False, math.nan, 0.0, f"{type(exc).__name__}: {exc}")]
        dt = time.perf_counter() - t0
        for r in out:
            r.seconds = dt / len(out)
        rows.extend(out)
        if progress is not None:
            progress(fn.__name__, out, dt)
    return rows


def format_table(rows: list[Check]) -> str:
    w = max(len(r.name) for r in rows)
    lines = [f"{'module':<15} {'check':<{w}}  {'value':>11}  {'bound':>11}  result"]
    for r in rows:
        lines.append(f"{r.module:<15} {r.name:<{w}}  {r.value:11.3e}  {r.bound:11.3e}  {'PASS' if r.passed else 'FAIL'}")
    n_fail = sum(not r.passed for r in rows)
    lines.append(f"{len(rows) - n_fail}/{len(rows)} checks passed")
    return "\n".join(lines)
