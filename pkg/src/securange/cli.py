"""Command line front end: experiments driven by sectioned config files.

Commands:

    attack-demo   one spoofing scenario end to end, verdict plus trace
    residual-mc   offset x noise Monte-Carlo sweep of fit residuals
    coverage      constellation availability scan over ground stations
    selfcheck     fast internal consistency checks

Exit codes: 0 on success, 1 on configuration errors (the diagnostic
names the offending file, line, or key), 2 on experiment-level failures
such as an infeasible delay plan.  Malformed input never produces a
traceback.

Every run writes ``manifest.cfg`` into the output directory: the fully
resolved configuration plus the seed, in the same sectioned key=value
format the loader reads.  Feeding that manifest back through
``--config`` reproduces the result tables byte for byte.  Precedence is
flags over file values over built-in defaults.  The output directory
defaults to ``results``, or to ``SECURANGE_OUTPUT_DIR`` when that
environment variable is set.  All table formats are documented in
FORMATS.md at the repository root.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import textconfig
from .attacks import AttackScenario, bundled_scenario, load_scenario
from .channel import AttackScript
from .errors import ConfigError, DegenerateInput, InvalidSpec, SimulationError
from .experiments import (
    COVERAGE_HEADER,
    COVERAGE_MODES,
    RESIDUAL_MC_HEADER,
    CoverageRun,
    MonteCarloGrid,
    run_attack_demo,
    run_coverage,
    run_residual_mc,
)
from .geodesy import GeodeticPoint, ecef_to_geodetic, geodetic_to_ecef
from .orbits import (
    bundled_constellation,
    bundled_stations,
    orbital_period,
    station_from_section,
)
from .protocol import run_session
from .solvers import ellipsoidal_multilaterate, sum_jacobian, sum_residuals

DEFAULT_SEED = 42
DEFAULT_OUTPUT_DIR = "results"
OUTPUT_DIR_ENV = "SECURANGE_OUTPUT_DIR"

POSITIONS_HEADER = ("role", "label", "latitude_deg", "longitude_deg",
                    "altitude_m")
TRACE_HEADER = ("kind", "source", "destination", "depart_true_s",
                "arrive_true_s", "path_length_m", "injected_delay_s")

_RUN_KEYS = ("command", "seed", "threads", "output_dir", "scenario")
_GRID_KEYS = ("offsets_m", "sigmas_m", "trials_per_cell",
              "delay_scale_s_per_m", "vertical")
_COVERAGE_KEYS = ("modes", "leo", "gnss", "dt_values_s", "time_step_s",
                  "horizon_s", "elevation_mask_deg", "origin_s")

_SECTIONS_BY_COMMAND = {
    "attack-demo": {"run", "scenario"},
    "residual-mc": {"run", "grid", "scenario"},
    "coverage": {"run", "coverage", "station"},
}


@dataclass(frozen=True)
class RunManifest:
    """Resolved identity of one run, recorded next to its outputs."""

    command: str
    config_path: str | None
    output_dir: str
    seed: int
    verbosity: int
    threads: int = 1


# ---------------------------------------------------------------------------
# config resolution


def _resolve_run(args, command: str):
    """Merge defaults, config file [run] section, and flags.

    Returns (sections, manifest, scenario_name); sections is the parsed
    config file (empty list when no --config was given).
    """
    path = args.config
    sections = []
    if path is not None:
        sections = textconfig.load_text_config(path)
        textconfig.check_sections(sections, _SECTIONS_BY_COMMAND[command],
                                  path)

    seed = DEFAULT_SEED
    threads = 1
    file_out = None
    scenario_name = None
    run_sec = textconfig.one_section(sections, "run", path, required=False)
    if run_sec is not None:
        allowed = _RUN_KEYS if command != "coverage" else _RUN_KEYS[:-1]
        textconfig.check_keys(run_sec, allowed, path=path)
        file_command = run_sec.get("command")
        if file_command is not None and file_command != command:
            raise ConfigError(
                f"config [run] names command {file_command!r}, "
                f"but {command!r} was invoked", path, run_sec.line)
        seed = textconfig.get_int(run_sec, "seed", path, default=DEFAULT_SEED)
        threads = textconfig.get_int(run_sec, "threads", path, default=1)
        file_out = run_sec.get("output_dir")
        scenario_name = run_sec.get("scenario")

    if args.seed is not None:
        seed = args.seed
    if getattr(args, "threads", None) is not None:
        threads = args.threads
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}", path)
    out = (args.out or file_out or os.environ.get(OUTPUT_DIR_ENV)
           or DEFAULT_OUTPUT_DIR)
    if getattr(args, "scenario", None) is not None:
        scenario_name = args.scenario

    manifest = RunManifest(command=command,
                           config_path=None if path is None else str(path),
                           output_dir=str(out), seed=seed,
                           verbosity=args.verbose, threads=threads)
    return sections, manifest, scenario_name


def _resolve_scenario(args, sections, path, scenario_name) -> AttackScenario:
    # a --scenario flag beats an inline [scenario] section, which beats
    # a scenario name carried in [run]
    if getattr(args, "scenario", None) is None and any(
            sec.name == "scenario" for sec in sections):
        return load_scenario(path)
    if scenario_name is not None:
        try:
            return bundled_scenario(scenario_name)
        except FileNotFoundError as exc:
            raise ConfigError(str(exc), path) from None
    raise ConfigError(
        "no scenario selected: pass --scenario NAME or provide a "
        "[scenario] section in the config", path)


def _resolve_grid(sections, path, seed: int) -> MonteCarloGrid:
    defaults = MonteCarloGrid()
    sec = textconfig.one_section(sections, "grid", path, required=False)
    if sec is None:
        return MonteCarloGrid(base_seed=seed)
    textconfig.check_keys(sec, _GRID_KEYS, path=path)
    try:
        return MonteCarloGrid(
            spoof_offsets_m=tuple(textconfig.get_float_list(
                sec, "offsets_m", path,
                default=list(defaults.spoof_offsets_m))),
            noise_sigmas_m=tuple(textconfig.get_float_list(
                sec, "sigmas_m", path,
                default=list(defaults.noise_sigmas_m))),
            trials_per_cell=textconfig.get_int(
                sec, "trials_per_cell", path,
                default=defaults.trials_per_cell),
            base_seed=seed,
            delay_scale_s_per_m=textconfig.get_float(
                sec, "delay_scale_s_per_m", path,
                default=defaults.delay_scale_s_per_m),
            vertical=textconfig.get_bool(
                sec, "vertical", path, default=defaults.vertical),
        )
    except DegenerateInput as exc:
        raise ConfigError(str(exc), path, sec.line) from None


@dataclass(frozen=True)
class _CoveragePlan:
    stations: tuple
    leo_name: str
    leo_spec: object
    gnss_names: tuple
    gnss_specs: tuple
    modes: tuple
    dt_values_s: tuple
    time_step_s: float
    horizon_s: float  # always resolved; the default is one orbit period
    elevation_mask_deg: float
    origin_s: float


def _load_spec(name: str, path):
    try:
        return bundled_constellation(name)
    except InvalidSpec as exc:
        raise ConfigError(str(exc), path) from None


def _resolve_coverage(sections, path) -> _CoveragePlan:
    sec = textconfig.one_section(sections, "coverage", path, required=False)
    station_secs = [s for s in sections if s.name == "station"]
    if station_secs:
        stations = tuple(station_from_section(s, path) for s in station_secs)
    else:
        stations = tuple(bundled_stations())

    modes = ("two-leo", "vm-three-leo")
    leo_name = "oneweb"
    gnss_names = ("gps", "galileo")
    dt_values = ()
    step = 60.0
    horizon = None
    mask = 10.0
    origin = 0.0
    if sec is not None:
        textconfig.check_keys(sec, _COVERAGE_KEYS, path=path)
        modes = tuple(textconfig.get_list(sec, "modes", path,
                                          default=list(modes)))
        leo_name = textconfig.get_str(sec, "leo", path, default=leo_name)
        gnss_names = tuple(textconfig.get_list(sec, "gnss", path,
                                               default=list(gnss_names)))
        dt_values = tuple(textconfig.get_float_list(sec, "dt_values_s", path,
                                                    default=[]))
        step = textconfig.get_float(sec, "time_step_s", path, default=step)
        horizon = textconfig.get_float(sec, "horizon_s", path, default=None) \
            if "horizon_s" in sec.entries else None
        mask = textconfig.get_float(sec, "elevation_mask_deg", path,
                                    default=mask)
        origin = textconfig.get_float(sec, "origin_s", path, default=origin)

    for mode in modes:
        if mode not in COVERAGE_MODES:
            raise ConfigError(
                f"unknown coverage mode {mode!r}; expected one of "
                f"{', '.join(COVERAGE_MODES)}", path,
                None if sec is None else sec.line)
    if "single-leo-dt" in modes and not dt_values:
        raise ConfigError("single-leo-dt mode needs dt_values_s", path,
                          None if sec is None else sec.line)
    if step <= 0.0:
        raise ConfigError(f"time_step_s must be positive, got {step}", path,
                          None if sec is None else sec.line)

    leo_spec = _load_spec(leo_name, path)
    gnss_specs = tuple(_load_spec(name, path) for name in gnss_names)
    if horizon is None:
        horizon = orbital_period(leo_spec.semi_major_axis_m)
    return _CoveragePlan(stations=stations, leo_name=leo_name,
                         leo_spec=leo_spec, gnss_names=gnss_names,
                         gnss_specs=gnss_specs, modes=modes,
                         dt_values_s=dt_values, time_step_s=step,
                         horizon_s=horizon, elevation_mask_deg=mask,
                         origin_s=origin)


# ---------------------------------------------------------------------------
# deterministic writers


def _write_text(path: Path, text: str, manifest: RunManifest | None = None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    if manifest is not None and manifest.verbosity > 0:
        print(f"wrote {path}")


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header, rows, manifest: RunManifest | None = None):
    lines = [",".join(header)]
    lines.extend(",".join(_cell(v) for v in row) for row in rows)
    _write_text(path, "\n".join(lines) + "\n", manifest)


def _scenario_entries(sc: AttackScenario) -> dict:
    entries = {
        "name": sc.name,
        "true_latitude_deg": sc.true_point.latitude_deg,
        "true_longitude_deg": sc.true_point.longitude_deg,
        "true_altitude_m": sc.true_point.altitude_m,
        "fake_latitude_deg": sc.fake_point.latitude_deg,
        "fake_longitude_deg": sc.fake_point.longitude_deg,
        "fake_altitude_m": sc.fake_point.altitude_m,
        "backward_delay_s": sc.backward_delay_s,
        "epoch_s": sc.epoch_s,
        "elevation_mask_deg": sc.elevation_mask_deg,
        "leo_constellation": sc.leo_constellation,
        "gnss_constellations": list(sc.gnss_constellations),
        "anchor_separation_s": sc.anchor_separation_s,
        "noise_sigma_m": sc.noise_sigma_m,
    }
    if sc.scheme is not None:
        entries["scheme"] = sc.scheme
        entries["feed_delay_s"] = sc.feed_delay_s
        entries["gs_latitude_deg"] = sc.gs_point.latitude_deg
        entries["gs_longitude_deg"] = sc.gs_point.longitude_deg
        entries["gs_altitude_m"] = sc.gs_point.altitude_m
    return entries


def _grid_entries(grid: MonteCarloGrid) -> dict:
    return {
        "offsets_m": list(grid.spoof_offsets_m),
        "sigmas_m": list(grid.noise_sigmas_m),
        "trials_per_cell": grid.trials_per_cell,
        "delay_scale_s_per_m": grid.delay_scale_s_per_m,
        "vertical": grid.vertical,
    }


def _coverage_entries(plan: _CoveragePlan) -> dict:
    return {
        "modes": list(plan.modes),
        "leo": plan.leo_name,
        "gnss": list(plan.gnss_names),
        "dt_values_s": list(plan.dt_values_s),
        "time_step_s": plan.time_step_s,
        "horizon_s": plan.horizon_s,
        "elevation_mask_deg": plan.elevation_mask_deg,
        "origin_s": plan.origin_s,
    }


def _station_entries(station) -> dict:
    return {
        "name": station.name,
        "latitude_deg": station.location.latitude_deg,
        "longitude_deg": station.location.longitude_deg,
        "altitude_m": station.location.altitude_m,
    }


def _write_manifest(out_dir: Path, manifest: RunManifest, body_sections):
    run_entries = {"command": manifest.command, "seed": manifest.seed,
                   "threads": manifest.threads}
    header = (
        "# run manifest: resolved configuration echo.  Feed this file back\n"
        "# through --config to reproduce the result tables byte for byte.\n"
        f"# source config: {manifest.config_path or '(none)'}\n"
        f"# output dir: {manifest.output_dir}\n"
        f"# verbosity: {manifest.verbosity}\n\n"
    )
    text = header + textconfig.format_text_config(
        [("run", run_entries), *body_sections])
    _write_text(out_dir / "manifest.cfg", text, manifest)


def _ensure_out(manifest: RunManifest) -> Path:
    out = Path(manifest.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# attack-demo serialization


def _none_if_nan(value: float):
    return None if math.isnan(value) else value


def _point_payload(vec) -> dict:
    point = ecef_to_geodetic(vec)
    return {
        "ecef_m": [float(c) for c in vec.as_array()],
        "latitude_deg": point.latitude_deg,
        "longitude_deg": point.longitude_deg,
        "altitude_m": point.altitude_m,
    }


def _verdict_payload(report) -> dict | None:
    if report is None:
        return None
    checks = {}
    if report.containment is not None:
        checks["containment"] = {
            "passed": report.containment.passed,
            "n_triangles": len(report.containment.verdicts),
            "n_containing": sum(
                1 for v in report.containment.verdicts if v.contains),
        }
    if report.residual is not None:
        checks["sum-residual"] = {
            "passed": report.residual.passed,
            "max_abs_m": report.residual.max_abs_m,
            "threshold_m": report.residual.threshold_m,
        }
    if report.clock is not None:
        checks["clock"] = {
            "passed": report.clock.passed,
            "mismatch_s": report.clock.mismatch_s,
            "tolerance_s": report.clock.tolerance_s,
        }
    if report.drift is not None:
        checks["drift"] = {
            "passed": report.drift.passed,
            "drift": report.drift.drift,
            "bound": report.drift.bound,
        }
    if report.key_window is not None:
        checks["key-window"] = {
            "passed": all(report.key_window),
            "windows_ok": list(report.key_window),
        }
    if report.sync_ok is not None:
        checks["loose-sync"] = {"passed": report.sync_ok}
    return {
        "accepted": report.accepted(),
        "failing": list(report.failing_checks()),
        "checks": checks,
    }


def _demo_json(result) -> str:
    payload = {
        "scenario": result.scenario_name,
        "mode": result.mode,
        "feasible": result.feasible,
        "seed": result.seed,
        "n_gnss": result.n_gnss,
        "noise_sigma_m": result.noise_sigma_m,
        "worst_margin_s": _none_if_nan(result.worst_margin_s),
        "sum_error_m": _none_if_nan(result.sum_error_m),
        "solved": {
            "converged": result.solved_converged,
            "max_residual_m": _none_if_nan(result.solved_max_residual_m),
        },
        "distances_m": dict(sorted(result.distances_m.items())),
        "positions": {role: _point_payload(vec)
                      for role, vec in result.positions.items()},
        "verdict": _verdict_payload(result.report),
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _position_role(label: str) -> str:
    if label in ("anchor1", "anchor2"):
        return "anchor"
    if label in ("true", "fake", "baseline", "solved", "gs"):
        return label
    return "gnss"


def _position_rows(result):
    rows = []
    for label, vec in result.positions.items():
        point = ecef_to_geodetic(vec)
        rows.append((_position_role(label), label, point.latitude_deg,
                     point.longitude_deg, point.altitude_m))
    return rows


def _trace_rows(result):
    return [(e.kind, e.source, e.destination, e.depart_true_s,
             e.arrive_true_s, e.path_length_m, e.injected_delay_s)
            for e in result.events]


def _report_text(result) -> str:
    if result.report is None:
        return "no verification run: the spoofing plan was infeasible\n"
    return result.report.as_text()


# ---------------------------------------------------------------------------
# commands


def _cmd_attack_demo(args) -> int:
    sections, manifest, scenario_name = _resolve_run(args, "attack-demo")
    scenario = _resolve_scenario(args, sections, args.config, scenario_name)
    out = _ensure_out(manifest)
    _write_manifest(out, manifest,
                    [("scenario", _scenario_entries(scenario))])
    result = run_attack_demo(scenario, seed=manifest.seed)
    _write_text(out / "attack_demo.json", _demo_json(result), manifest)
    _write_text(out / "integrity_report.txt", _report_text(result), manifest)
    _write_csv(out / "attack_positions.csv", POSITIONS_HEADER,
               _position_rows(result), manifest)
    _write_csv(out / "attack_trace.csv", TRACE_HEADER, _trace_rows(result),
               manifest)
    if not result.feasible:
        print(f"{result.scenario_name}: spoofing plan infeasible "
              f"(worst margin {result.worst_margin_s:.3e} s)",
              file=sys.stderr)
        return 2
    if result.report.accepted():
        print(f"{result.scenario_name}: accept")
    else:
        failing = ", ".join(result.report.failing_checks())
        print(f"{result.scenario_name}: reject ({failing})")
    return 0


def _cmd_residual_mc(args) -> int:
    sections, manifest, scenario_name = _resolve_run(args, "residual-mc")
    scenario = _resolve_scenario(args, sections, args.config, scenario_name)
    grid = _resolve_grid(sections, args.config, manifest.seed)
    out = _ensure_out(manifest)
    _write_manifest(out, manifest, [("grid", _grid_entries(grid)),
                                    ("scenario", _scenario_entries(scenario))])
    samples = run_residual_mc(grid, scenario, threads=manifest.threads)
    _write_csv(out / "residual_mc.csv", RESIDUAL_MC_HEADER,
               [(s.offset_m, s.sigma_m, s.trial, s.max_residual_m,
                 s.converged) for s in samples], manifest)
    n_cells = len(grid.spoof_offsets_m) * len(grid.noise_sigmas_m)
    print(f"residual_mc.csv: {len(samples)} rows "
          f"({n_cells} cells x {grid.trials_per_cell} trials)")
    return 0


def _cmd_coverage(args) -> int:
    sections, manifest, _ = _resolve_run(args, "coverage")
    plan = _resolve_coverage(sections, args.config)
    out = _ensure_out(manifest)
    _write_manifest(out, manifest,
                    [("coverage", _coverage_entries(plan)),
                     *[("station", _station_entries(st))
                       for st in plan.stations]])
    for mode in plan.modes:
        run = CoverageRun(
            stations=plan.stations, leo_spec=plan.leo_spec,
            gnss_specs=plan.gnss_specs, mode=mode,
            dt_values_s=plan.dt_values_s if mode == "single-leo-dt" else (),
            time_step_s=plan.time_step_s, horizon_s=plan.horizon_s,
            elevation_mask_deg=plan.elevation_mask_deg,
            origin_s=plan.origin_s)
        rows = run_coverage(run)
        _write_csv(out / f"coverage_{mode}.csv", COVERAGE_HEADER,
                   [(r.station, r.mode, r.dt_s, r.availability_pct)
                    for r in rows], manifest)
        print(f"coverage_{mode}.csv: {len(rows)} rows")
    return 0


# ---------------------------------------------------------------------------
# selfcheck


def _random_site(rng) -> GeodeticPoint:
    return GeodeticPoint(float(rng.uniform(-60.0, 60.0)),
                         float(rng.uniform(-180.0, 180.0)),
                         float(rng.uniform(0.0, 2000.0)))


def _nearby_sat(rng, site: GeodeticPoint, spread_deg: float, alt_m: float):
    lat = max(-89.0, min(89.0, site.latitude_deg
                         + float(rng.uniform(-spread_deg, spread_deg))))
    lon = site.longitude_deg + float(rng.uniform(-spread_deg, spread_deg))
    return geodetic_to_ecef(GeodeticPoint(lat, lon, alt_m))


def _random_geometry(rng):
    site = _random_site(rng)
    ue = geodetic_to_ecef(site)
    leo = _nearby_sat(rng, site, 8.0, 1.2e6)
    gnss = [(f"sat-{k}", _nearby_sat(rng, site, 40.0, 2.0e7))
            for k in range(4)]
    return ue, leo, gnss


def _check_sum_monotonicity(rng) -> str:
    for _ in range(25):
        ue, leo, gnss = _random_geometry(rng)
        benign = run_session(ue, leo, gnss)
        script = AttackScript(
            forward_delay=float(rng.uniform(0.0, 1e-3)),
            backward_delay=float(rng.uniform(0.0, 1e-3)),
            gnss_delays={sid: float(rng.uniform(0.0, 1e-3))
                         for sid, _ in gnss[:2]})
        attacked = run_session(ue, leo, gnss, script=script)
        for ref, hit in zip(benign.constraints, attacked.constraints):
            if hit.measured_sum_m < ref.measured_sum_m - 1e-9:
                raise AssertionError(
                    f"delay shrank a sum by "
                    f"{ref.measured_sum_m - hit.measured_sum_m:.3e} m")
    return "25 random delay scripts, every sum nondecreasing"


def _check_round_trip(rng) -> str:
    worst = 0.0
    for _ in range(3):
        ue, leo, gnss = _random_geometry(rng)
        session = run_session(ue, leo, gnss)
        solution = ellipsoidal_multilaterate(session.constraints)
        if not solution.converged:
            raise AssertionError("solver failed to converge on clean sums")
        worst = max(worst, solution.position.distance_to(ue))
    if worst > 1e-3:
        raise AssertionError(f"round-trip error {worst:.3e} m exceeds 1e-3")
    return f"3 geometries, worst position error {worst:.2e} m"


def _check_jacobian(rng) -> str:
    ue, leo, gnss = _random_geometry(rng)
    session = run_session(ue, leo, gnss)
    x = ue.as_array() + rng.uniform(-1000.0, 1000.0, size=3)
    analytic = sum_jacobian(session.constraints, x)
    step = 0.1
    numeric = np.empty_like(analytic)
    for k in range(3):
        offset = np.zeros(3)
        offset[k] = step
        numeric[:, k] = (sum_residuals(session.constraints, x + offset)
                         - sum_residuals(session.constraints, x - offset)
                         ) / (2.0 * step)
    rel = float(np.max(np.abs(analytic - numeric))
                / max(1.0, float(np.max(np.abs(analytic)))))
    if rel > 1e-6:
        raise AssertionError(f"jacobian mismatch {rel:.3e} exceeds 1e-6")
    return f"max relative error {rel:.2e}"


def _cmd_selfcheck(args) -> int:
    seed = args.seed if args.seed is not None else DEFAULT_SEED
    rng = np.random.default_rng(seed)
    checks = (("sum-monotonicity", _check_sum_monotonicity),
              ("solver-round-trip", _check_round_trip),
              ("jacobian", _check_jacobian))
    lines = [f"seed: {seed}"]
    ok = True
    for name, fn in checks:
        try:
            detail = fn(rng)
            lines.append(f"{name}: ok ({detail})")
        except AssertionError as exc:
            lines.append(f"{name}: FAIL ({exc})")
            ok = False
    for line in lines:
        print(line)
    if args.out is not None:
        manifest = RunManifest(command="selfcheck", config_path=None,
                               output_dir=str(args.out), seed=seed,
                               verbosity=args.verbose)
        out = _ensure_out(manifest)
        _write_manifest(out, manifest, [])
        _write_text(out / "selfcheck.txt", "\n".join(lines) + "\n", manifest)
    return 0 if ok else 2


# ---------------------------------------------------------------------------
# entry


class _Parser(argparse.ArgumentParser):
    """Argument errors are configuration errors: exit 1, not 2."""

    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="securange",
                     description="secure-positioning experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario=False, threads=False):
        p.add_argument("--config", metavar="PATH",
                       help="sectioned key=value config file")
        p.add_argument("--out", metavar="DIR",
                       help=f"output directory (default {DEFAULT_OUTPUT_DIR!r}"
                            f" or ${OUTPUT_DIR_ENV})")
        p.add_argument("--seed", type=int, metavar="N",
                       help=f"random seed (default {DEFAULT_SEED})")
        p.add_argument("-v", "--verbose", action="count", default=0,
                       help="also report each file written")
        if scenario:
            p.add_argument("--scenario", metavar="NAME",
                           help="bundled scenario name")
        if threads:
            p.add_argument("--threads", type=int, metavar="N",
                           help="worker threads (default 1)")

    p = sub.add_parser("attack-demo",
                       help="run one spoofing scenario end to end")
    common(p, scenario=True)
    p.set_defaults(func=_cmd_attack_demo)

    p = sub.add_parser("residual-mc",
                       help="offset x noise Monte-Carlo residual sweep")
    common(p, scenario=True, threads=True)
    p.set_defaults(func=_cmd_residual_mc)

    p = sub.add_parser("coverage",
                       help="availability scan over ground stations")
    common(p)
    p.set_defaults(func=_cmd_coverage)

    p = sub.add_parser("selfcheck",
                       help="fast internal consistency checks")
    p.add_argument("--out", metavar="DIR",
                   help="optionally record the check report here")
    p.add_argument("--seed", type=int, metavar="N",
                   help=f"random seed (default {DEFAULT_SEED})")
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.set_defaults(func=_cmd_selfcheck)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except InvalidSpec as exc:
        # a bad constellation or station description is a config problem
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


def entrypoint():
    try:
        code = main()
    except SystemExit:
        raise
    except Exception as exc:  # the console script must never traceback
        print(f"internal error: {exc}", file=sys.stderr)
        code = 2
    sys.exit(code)


if __name__ == "__main__":
    entrypoint()
