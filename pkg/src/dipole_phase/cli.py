"""Command-line front end: ``dipole-phase <subcommand> [--config FILE] [--key value ...]``.

Config files hold one ``key = value`` per line with ``#`` comments. Any key
can also be given as ``--key value`` and the flag wins. Inputs use Gauss,
cm and Volt; everything is converted to Gaussian-CGS before it reaches the
library.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import __version__, gauge, interferometer as itf, phase
from .core import CONST, CONSTANTS_VERSION, Trajectory
from .errors import ConfigError, DipolePhaseError, NonConvergence
from .fieldmom import PointCharge, SlabFieldConfig, field_momentum, field_momentum_thin_sheet
from .quadrature import thread_count

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGENCE, EXIT_INVARIANT = 0, 1, 2, 3

COMMANDS = ("momentum", "phase", "interfere", "hmw", "dual", "gauge-compare", "verify")


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _vec(text: str) -> tuple[float, float, float]:
    parts = [float(p) for p in text.replace(",", " ").split()]
    if len(parts) != 3:
        raise ValueError(f"expected three numbers, got {text!r}")
    return tuple(parts)


def _count(text: str) -> int:
    v = float(text)
    if v != int(v):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(v)


@dataclass
class ScenarioConfig:
    # field
    B0: float = 100.0  # Gauss
    y0: float = 0.01  # cm
    thin_sheet: bool = False
    # geometry
    a: float = 1.0  # cm
    x: float = 0.0  # cm
    z_i: float = -20.0  # cm
    z_f: float = 20.0  # cm
    Z: float = 0.0  # cm, single momentum point
    # dipole
    dipole: str = "hydrogen-2s2p"
    dipole_sign: int = 1
    d: tuple = (0.0, 0.0, 0.0)  # esu cm, used when dipole = custom
    # numerics
    rel_tol: float = 1e-6
    abs_tol: float = 1e-12
    max_evals: int = 10_000_000
    path: bool = True
    # gauge
    gauge: str = gauge.QUADRATIC
    lam: float = 0.5  # Gauss/cm^2
    # dual
    n_E_volt: float = 1.0  # E0 y0 in Volt
    mu_nuclear: float = -1.913  # in nuclear magnetons
    # hmw loop (defaults: crossing loop of half-size a around the origin)
    loop_y_lo: float = math.nan
    loop_y_hi: float = math.nan
    loop_z_lo: float = math.nan
    loop_z_hi: float = math.nan
    # sweep
    sweep_axis: str = "none"
    sweep_min: float = 0.0
    sweep_max: float = 26.0
    sweep_points: int = 101
    # output
    format: str = "json"
    output: str = "-"

    @property
    def n_B(self) -> float:
        return self.B0 * self.y0

    def slab(self, n_B: float | None = None) -> SlabFieldConfig:
        if n_B is None:
            return SlabFieldConfig(self.B0, self.y0, self.thin_sheet)
        return SlabFieldConfig.from_flux(n_B, self.y0, self.thin_sheet)

    def dipole_vector(self) -> np.ndarray:
        if self.dipole == "custom":
            return np.array(self.d, dtype=float)
        return phase.hydrogen_dipole(self.dipole_sign)

    def sweep_values(self) -> np.ndarray:
        return np.linspace(self.sweep_min, self.sweep_max, self.sweep_points)


_PARSERS = {float: float, int: _count, bool: _bool, str: str, tuple: _vec}
_TYPES = {f.name: type(f.default) for f in fields(ScenarioConfig)}


def _validate(cfg: ScenarioConfig, origin: dict[str, str]):
    def bad(key, msg):
        raise ConfigError(f"{origin.get(key, 'default')}: {key}: {msg}")

    if not cfg.a > 0:
        bad("a", "must be > 0 (the path must stay outside the slab)")
    if not cfg.z_i < cfg.z_f:
        bad("z_f", "z_i must be < z_f")
    if not cfg.y0 > 0:
        bad("y0", "must be > 0")
    if not (2 <= cfg.sweep_points <= 1_000_000):
        bad("sweep_points", "must lie in [2, 1e6]")
    if not cfg.sweep_min < cfg.sweep_max:
        bad("sweep_max", "sweep_min must be < sweep_max")
    for k in ("rel_tol", "abs_tol"):
        if not getattr(cfg, k) > 0:
            bad(k, "must be > 0")
    if cfg.max_evals < 1:
        bad("max_evals", "must be positive")
    if cfg.dipole not in ("hydrogen-2s2p", "custom"):
        bad("dipole", "must be hydrogen-2s2p or custom")
    if cfg.dipole_sign not in (1, -1):
        bad("dipole_sign", "must be +1 or -1")
    if cfg.gauge not in gauge.GAUGES:
        bad("gauge", f"must be one of {', '.join(gauge.GAUGES)}")
    if cfg.sweep_axis not in ("none", "z", "n_B"):
        bad("sweep_axis", "must be none, z or n_B")
    if cfg.format not in ("json", "csv"):
        bad("format", "must be json or csv")
    for k in ("B0", "x", "z_i", "z_f", "Z", "lam", "n_E_volt", "mu_nuclear", "sweep_min", "sweep_max"):
        if not math.isfinite(getattr(cfg, k)):
            bad(k, "must be finite")


def parse_config_text(text: str, source: str = "<config>") -> dict[str, tuple[object, str]]:
    """Parse ``key = value`` lines into ``{key: (value, "source:line")}``."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _TYPES:
            raise ConfigError(f"{where}: unknown key {key!r}")
        try:
            out[key] = (_PARSERS[_TYPES[key]](value), where)
        except ValueError as exc:
            raise ConfigError(f"{where}: {key}: {exc}") from None
    return out


def build_config(file_text: str | None, source: str, overrides: dict[str, str]) -> ScenarioConfig:
    """File values first, then command-line overrides, then validation."""
    values, origin = {}, {}
    if file_text is not None:
        for k, (v, where) in parse_config_text(file_text, source).items():
            values[k], origin[k] = v, where
    for k, raw in overrides.items():
        try:
            values[k] = _PARSERS[_TYPES[k]](raw)
        except ValueError as exc:
            raise ConfigError(f"--{k}: {exc}") from None
        origin[k] = f"--{k}"
    cfg = ScenarioConfig(**values)
    _validate(cfg, origin)
    return cfg


# ---------------------------------------------------------------- output


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def dump_json(doc: dict) -> str:
    return json.dumps(_clean(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if math.isfinite(v) else ""
    return v


def _entry(value, err, unit, method):
    return {"value": value, "error_estimate": err, "unit": unit, "method": method}


class Run:
    """Collects results, errors and evaluation counts for one command."""

    def __init__(self, command: str, cfg: ScenarioConfig):
        self.command = command
        self.cfg = cfg
        self.results: dict[str, dict] = {}
        self.errors: list[dict] = []
        self.evaluations = 0
        self.rows: list[dict] | None = None  # CSV sweep rows
        self.row_columns: list[str] | None = None
        self.exit_code = EXIT_OK

    def add(self, name, value, err, unit, method):
        self.results[name] = _entry(value, err, unit, method)

    def fail(self, exc: Exception, code: int, partial=()):
        self.errors.append({"type": type(exc).__name__, "message": str(exc), "partial_results": list(partial)})
        self.exit_code = max(self.exit_code, code)

    def document(self) -> dict:
        inputs = asdict(self.cfg)
        return {
            "command": self.command,
            "inputs": inputs,
            "results": self.results,
            "errors": self.errors,
            "meta": {
                "constants_version": CONSTANTS_VERSION,
                "evaluations": self.evaluations,
                "threads": thread_count(),
                "version": __version__,
            },
        }

    def render(self) -> str:
        if self.cfg.format == "json":
            return dump_json(self.document())
        buf = io.StringIO()
        if self.rows is not None:
            w = csv.DictWriter(buf, fieldnames=self.row_columns, lineterminator="\n")
            w.writeheader()
            for r in self.rows:
                w.writerow({k: _cell(v) for k, v in r.items()})
        else:
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["quantity", "value", "error_estimate", "unit", "method"])
            for name, e in self.results.items():
                w.writerow([name, e["value"], e["error_estimate"], e["unit"], e["method"]])
        for err in self.errors:
            buf.write(f"# error: {err['type']}: {err['message']}\n")
        return buf.getvalue()


# ---------------------------------------------------------------- commands


def _charge(cfg: ScenarioConfig, Z: float) -> PointCharge:
    return PointCharge(CONST.e, (cfg.x, cfg.a, Z))


def cmd_momentum(run: Run):
    cfg = run.cfg
    slab = cfg.slab()
    zs = cfg.sweep_values() if cfg.sweep_axis == "z" else np.array([cfg.Z])
    rows = []
    for Z in zs:
        ch = _charge(cfg, float(Z))
        try:
            if cfg.thin_sheet:
                pz = field_momentum_thin_sheet(ch, cfg.a, float(Z), cfg.n_B)
                pi, err, method = np.array([0.0, math.nan, pz]), np.zeros(3), phase.CLOSED_FORM
            else:
                fm = field_momentum(ch, slab, cfg.rel_tol, cfg.abs_tol, cfg.max_evals)
                pi, err, method = fm.pi, fm.error_estimate, "cubature"
                run.evaluations += fm.evaluations
        except NonConvergence as exc:
            fm = exc.result
            pi, err, method = fm.pi, fm.error_estimate, "cubature-unconverged"
            run.evaluations += fm.evaluations
            run.fail(exc, EXIT_NONCONVERGENCE, [f"Pi at Z={float(Z)!r}"])
        rows.append(
            {"sweep_value": float(Z), "Pi_x": pi[0], "Pi_y": pi[1], "Pi_z": pi[2], "error_estimate": float(np.max(err))}
        )
    if len(zs) == 1:
        r = rows[0]
        for k, label in (("Pi_x", 0), ("Pi_y", 1), ("Pi_z", 2)):
            m = method + ("; cutoff-dependent" if k == "Pi_y" else "")
            run.add(k, r[k], float(err[label]), "g cm/s", m)
        run.add("Pi_z_thin_sheet_oracle", field_momentum_thin_sheet(_charge(cfg, cfg.Z), cfg.a, cfg.Z, cfg.n_B), 0.0, "g cm/s", phase.CLOSED_FORM)
    else:
        for k in ("Pi_x", "Pi_y", "Pi_z"):
            m = method + ("; cutoff-dependent" if k == "Pi_y" else "")
            run.add(k, [r[k] for r in rows], [r["error_estimate"] for r in rows], "g cm/s", m)
        run.add("sweep_value", [r["sweep_value"] for r in rows], 0.0, "cm", "input")
    run.rows, run.row_columns = rows, ["sweep_value", "Pi_x", "Pi_y", "Pi_z", "error_estimate"]


def cmd_phase(run: Run):
    cfg = run.cfg
    slab = cfg.slab()
    d = cfg.dipole_vector()
    ch = _charge(cfg, 0.0)
    Ri, Rf = (cfg.x, cfg.a, cfg.z_i), (cfg.x, cfg.a, cfg.z_f)
    pg = phase.phi_g_sheet(cfg.n_B)
    run.add("phi_g", pg, 0.0, "rad", phase.CLOSED_FORM)
    run.add("relative_phase", phase.relative_phase(cfg.n_B), 0.0, "rad", phase.CLOSED_FORM)
    try:
        pe = phase.geometric_phase_endpoint(ch, d, slab, Ri, Rf, rel_tol=min(cfg.rel_tol, 1e-8), max_evals=cfg.max_evals)
        run.add("phi_endpoint", pe.phi, pe.error_estimate, "rad", pe.method)
        run.evaluations += pe.evaluations
    except NonConvergence as exc:
        r = exc.result
        run.add("phi_endpoint", None, r.error_estimate if r is not None else None, "rad", "endpoint-unconverged")
        run.fail(exc, EXIT_NONCONVERGENCE, ["phi_endpoint"])
    if cfg.path:
        try:
            pp = phase.geometric_phase_path(ch, d, slab, Trajectory.line(Ri, Rf))
            run.add("phi_path", pp.phi, pp.error_estimate, "rad", pp.method)
            run.evaluations += pp.evaluations
        except NonConvergence as exc:
            r = exc.result
            run.add("phi_path", getattr(r, "value", None), getattr(r, "error_estimate", None), "rad", "path-integral-unconverged")
            run.fail(exc, EXIT_NONCONVERGENCE, ["phi_path"])


def cmd_interfere(run: Run):
    cfg = run.cfg
    nbs = cfg.sweep_values() if cfg.sweep_axis in ("n_B", "none") else None
    if nbs is None:
        raise ConfigError(f"interfere sweeps n_B; sweep_axis = {cfg.sweep_axis!r} is not supported")
    phis = np.array([phase.phi_g_sheet(nb) for nb in nbs])
    fr = itf.fringe(phis)
    run.rows = [
        {"sweep_value": float(nb), "phi_g": float(p), "p_200": float(a), "p_210": float(b), "error_estimate": 0.0}
        for nb, p, a, b in zip(nbs, phis, fr["p_200"], fr["p_210"])
    ]
    run.row_columns = ["sweep_value", "phi_g", "p_200", "p_210", "error_estimate"]
    zeros = [0.0] * len(nbs)
    run.add("sweep_value", nbs, zeros, "Gauss cm", "input")
    run.add("phi_g", phis, zeros, "rad", phase.CLOSED_FORM)
    run.add("p_200", fr["p_200"], zeros, "1", "two-level evolution")
    run.add("p_210", fr["p_210"], zeros, "1", "two-level evolution")
    k = int(np.argmax(fr["p_210"]))
    run.add("n_B_full_transfer", math.pi / 2 / phase.phi_g_sheet(1.0), 0.0, "Gauss cm", phase.CLOSED_FORM)
    run.add("n_B_at_max_p_210", float(nbs[k]), float(nbs[1] - nbs[0]), "Gauss cm", "sweep grid")


def _loop(cfg: ScenarioConfig) -> Trajectory:
    def pick(v, default):
        return default if math.isnan(v) else v

    return Trajectory.rectangle_yz(
        cfg.x,
        pick(cfg.loop_y_lo, -cfg.a),
        pick(cfg.loop_y_hi, cfg.a),
        pick(cfg.loop_z_lo, -cfg.a),
        pick(cfg.loop_z_hi, cfg.a),
    )


def cmd_hmw(run: Run):
    cfg = run.cfg
    d = cfg.dipole_vector()
    try:
        loop = _loop(cfg)
    except ValueError as exc:
        raise ConfigError(f"hmw loop: {exc}") from None
    slab = cfg.slab()
    if cfg.thin_sheet:
        r = phase.hmw_phase_thin_sheet(d, slab, loop)
        rr = phase.hmw_phase_thin_sheet(d, slab, loop.reversed())
    else:
        r = phase.hmw_phase(d, slab, loop)
        rr = phase.hmw_phase(d, slab, loop.reversed())
        run.evaluations += r.evaluations + rr.evaluations
    run.add("hmw_phase", r.phi, r.error_estimate, "rad", r.method)
    run.add("hmw_phase_reversed", rr.phi, rr.error_estimate, "rad", rr.method)
    run.add("n_B_d_z_over_hbar_c", cfg.n_B * d[2] / CONST.hbar_c, 0.0, "rad", phase.CLOSED_FORM)


def cmd_dual(run: Run):
    cfg = run.cfg
    n_E = cfg.n_E_volt * CONST.volt_to_statvolt
    mu = cfg.mu_nuclear * CONST.mu_N
    pm = phase.phi_g_dual(n_E, mu)
    run.add("phi_g_m", pm, 0.0, "rad", phase.CLOSED_FORM)
    run.add("phi_g_m_per_volt", pm / cfg.n_E_volt if cfg.n_E_volt else phase.phi_g_dual(CONST.volt_to_statvolt, mu), 0.0, "rad/V", phase.CLOSED_FORM)
    psi = itf.evolve_dual(itf.DipoleState.spin_symmetric(), pm)
    run.add("sigma_x", itf.sigma_x(psi), 0.0, "1", "two-level evolution")
    sc = phase.SheetScenario(n_E=n_E, mu_z=mu)
    run.add("sheet_phase", phase.sheet_phase(sc), 0.0, "rad", phase.CLOSED_FORM)
    run.add("sheet_phase_of_dual", phase.sheet_phase(sc.dual()), 0.0, "rad", "duality map")


def cmd_gauge_compare(run: Run):
    cfg = run.cfg
    slab = cfg.slab()
    d = cfg.dipole_vector()
    Ri, Rf = (cfg.x, cfg.a, cfg.z_i), (cfg.x, cfg.a, cfg.z_f)
    lam = cfg.lam if cfg.gauge == gauge.QUADRATIC else 0.0
    try:
        rep = gauge.gauge_compare(_charge(cfg, 0.0), d, slab, Ri, Rf, lams=(lam,), rel_tol=min(cfg.rel_tol, 1e-8))
    except NonConvergence as exc:
        run.fail(exc, EXIT_NONCONVERGENCE, ["lcfi_phase"])
        return
    s = rep["shifted"][0]
    run.add("step_gauge_phase", rep["step"], 0.0, "rad", gauge.GAUGE)
    run.add("shifted_gauge_phase", s["phase"], 0.0, "rad", gauge.GAUGE)
    run.add("gauge_difference", s["difference"], 0.0, "rad", gauge.GAUGE)
    run.add("predicted_difference", s["predicted_difference"], 0.0, "rad", phase.CLOSED_FORM)
    run.add("zero_gauge_phase", rep["zero_gauge"], 0.0, "rad", "endpoint difference removed")
    run.add("lcfi_phase", rep["lcfi"], rep["lcfi_error"], "rad", phase.ENDPOINT)


def cmd_verify(run: Run, progress=True):
    from .verify import format_table, run_battery

    def note(name, rows, dt):
        bad = sum(not r.passed for r in rows)
        print(f"  {name}: {len(rows) - bad}/{len(rows)} passed in {dt:.1f} s", file=sys.stderr)

    rows = run_battery(note if progress else None)
    for r in rows:
        run.add(f"{r.module}: {r.name}", r.value, r.bound, "1", "PASS" if r.passed else "FAIL")
    print(format_table(rows), file=sys.stderr)
    failed = [r for r in rows if not r.passed]
    if failed:
        run.errors.append(
            {"type": "InvariantViolation", "message": f"{len(failed)} checks failed", "partial_results": [r.name for r in failed]}
        )
        run.exit_code = EXIT_INVARIANT


HANDLERS = {
    "momentum": cmd_momentum,
    "phase": cmd_phase,
    "interfere": cmd_interfere,
    "hmw": cmd_hmw,
    "dual": cmd_dual,
    "gauge-compare": cmd_gauge_compare,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dipole-phase", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="key = value config file")
    for f in fields(ScenarioConfig):
        names = [f"--{f.name}"]
        if "_" in f.name:
            names.append(f"--{f.name.replace('_', '-')}")
        p.add_argument(*names, dest=f.name, default=argparse.SUPPRESS, metavar="VALUE")
    return p


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    path = args.pop("config", None)
    try:
        text = None
        if path is not None:
            try:
                with open(path, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
        cfg = build_config(text, path or "<config>", {k: str(v) for k, v in args.items()})
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    run = Run(command, cfg)
    try:
        HANDLERS[command](run)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergence as exc:
        run.fail(exc, EXIT_NONCONVERGENCE)
    except DipolePhaseError as exc:
        run.fail(exc, EXIT_CONFIG)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)

    out = run.render()
    if cfg.output == "-":
        sys.stdout.write(out)
    else:
        with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(out)
    return run.exit_code


if __name__ == "__main__":
    sys.exit(main())
