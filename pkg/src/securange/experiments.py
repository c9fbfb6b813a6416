"""Experiment campaigns built on the protocol, solver, and check layers.

Three runners: a single-scenario attack demonstration, a residual
Monte-Carlo sweep over spoof offsets and noise levels, and coverage
scans measuring how often an acceptance triangle can be formed.  Every
runner is deterministic given its configuration: trial randomness
derives from (base_seed, cell, trial) tuples, never from global state,
so identical configs reproduce identical tables regardless of thread
count or execution order.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .attacks import (
    AttackScenario,
    plan_spoof,
    run_scheme,
    scenario_snapshot,
    victim_pseudoranges,
)
from .channel import BENIGN, NoiseModel
from .errors import DegenerateInput, InfeasiblePlan, NonConvergence
from .geodesy import (
    EcefVector,
    points_in_spherical_triangles,
    subsatellite_point,
)
from .integrity import (
    MIN_SOLID_ANGLE_SR,
    IntegrityReport,
    clock_check,
    containment_check,
    residual_check,
)
from .orbits import (
    ConstellationSpec,
    bundled_constellation,
    generate_walker,
    max_tof_bound,
    orbital_period,
    propagate_grid,
)
from .protocol import check_key_window, loose_sync_check, run_session
from .solvers import ellipsoidal_multilaterate, spherical_multilaterate

# Offset presets: the headline values and the alternate set used by the
# residual distribution figures.
TEXT_OFFSETS_M = (25.0, 50.0, 100.0)
FIGURE_OFFSETS_M = (50.0, 100.0, 200.0)
NOISE_SIGMAS_M = (50.0, 100.0, 200.0)

RESIDUAL_MC_HEADER = ("offset_m", "sigma_m", "trial", "max_residual_m",
                      "converged")
COVERAGE_HEADER = ("station", "mode", "dt_s", "availability_pct")

COVERAGE_MODES = ("two-leo", "single-leo-dt", "vm-three-leo")


@dataclass(frozen=True)
class MonteCarloGrid:
    """Offset x noise sweep; offset 0 rows are the benign control.

    The modeled attacker budgets return-leg delay in proportion to the
    displacement (delay_scale_s_per_m), with the default calibrated so
    the largest default offset matches the reference scenario's 1 ms.
    A fixed delay would swamp the sweep: the residual floor it leaves
    is independent of the offset, so the offset axis would measure
    nothing.  Proportional delay keeps the recorded residuals growing
    with both axes of the grid.
    """

    spoof_offsets_m: tuple = TEXT_OFFSETS_M
    noise_sigmas_m: tuple = NOISE_SIGMAS_M
    trials_per_cell: int = 200
    base_seed: int = 42
    delay_scale_s_per_m: float = 1e-5
    vertical: bool = False  # displace the fake target radially instead

    def __post_init__(self):
        if self.trials_per_cell < 1:
            raise DegenerateInput("trials_per_cell must be at least 1")
        if any(v < 0.0 for v in self.spoof_offsets_m):
            raise DegenerateInput("spoof offsets must be nonnegative")
        if any(v < 0.0 for v in self.noise_sigmas_m):
            raise DegenerateInput("noise sigmas must be nonnegative")
        if self.delay_scale_s_per_m < 0.0:
            raise DegenerateInput("delay scale must be nonnegative")

    def cells(self) -> list:
        return [(off, sig) for off in self.spoof_offsets_m
                for sig in self.noise_sigmas_m]


@dataclass(frozen=True)
class ResidualSample:
    offset_m: float
    sigma_m: float
    trial: int
    max_residual_m: float  # nan when the solver did not converge
    converged: bool


@dataclass(frozen=True)
class AttackDemoResult:
    """Everything the demonstration run produces.

    mode is "displacement" (a delay schedule steers the baseline fix to
    the fake target) or "takeover" (a ground reference node is fed a
    delayed timing signal).  An infeasible displacement plan yields
    feasible=False with no solve and no report.
    """

    scenario_name: str
    mode: str
    feasible: bool
    worst_margin_s: float
    n_gnss: int
    noise_sigma_m: float
    seed: int
    positions: dict  # role -> EcefVector
    distances_m: dict  # label -> meters
    solved_converged: bool
    solved_max_residual_m: float
    sum_error_m: float  # takeover only: mean sum shift against honest
    report: IntegrityReport | None
    events: tuple


def _noise(sigma_m: float, seed: int) -> NoiseModel | None:
    return NoiseModel(sigma_m, seed=seed) if sigma_m > 0.0 else None


def _solve_sums(constraints):
    """Ellipsoidal solve that keeps the last iterate on failure."""
    try:
        sol = ellipsoidal_multilaterate(constraints)
        return sol, True
    except NonConvergence as exc:
        return exc.best, False


def run_attack_demo(scenario: AttackScenario, seed: int = 42
                    ) -> AttackDemoResult:
    if scenario.scheme is not None:
        return _takeover_demo(scenario, seed)
    return _displacement_demo(scenario, seed)


def _displacement_demo(scenario: AttackScenario, seed: int
                       ) -> AttackDemoResult:
    anchor1, anchor2, gnss = scenario_snapshot(scenario)
    true_pos = scenario.true_position()
    fake_pos = scenario.fake_position()
    plan = plan_spoof(true_pos, fake_pos, gnss,
                      backward_delay_s=scenario.backward_delay_s)
    if not plan.feasible:
        return AttackDemoResult(
            scenario_name=scenario.name, mode="displacement",
            feasible=False, worst_margin_s=plan.worst_margin_s(),
            n_gnss=len(gnss), noise_sigma_m=scenario.noise_sigma_m,
            seed=seed, positions={"true": true_pos, "fake": fake_pos},
            distances_m={}, solved_converged=False,
            solved_max_residual_m=math.nan, sum_error_m=math.nan,
            report=None, events=(),
        )

    session = run_session(
        true_pos, anchor1, gnss, script=plan.script(),
        broadcast_noise=_noise(scenario.noise_sigma_m, seed))
    baseline = spherical_multilaterate(victim_pseudoranges(session))
    solved, converged = _solve_sums(session.constraints)

    leo_spec = bundled_constellation(scenario.leo_constellation)
    report = IntegrityReport(
        containment=containment_check(solved.position, [anchor1, anchor2],
                                      gnss),
        residual=residual_check(session.constraints, solved.position),
        clock=clock_check(session.exchange, solved.position, anchor1,
                          sigma_m=scenario.noise_sigma_m),
        key_window=tuple(check_key_window(session.constraints)),
        sync_ok=loose_sync_check(
            session.exchange,
            max_tof_bound(leo_spec, scenario.elevation_mask_deg)),
    )

    positions = {
        "true": true_pos,
        "fake": fake_pos,
        "anchor1": anchor1,
        "anchor2": anchor2,
        "baseline": baseline.position,
        "solved": solved.position,
    }
    positions.update(dict(gnss))
    distances = {
        "true_to_fake": true_pos.distance_to(fake_pos),
        "baseline_to_fake": baseline.position.distance_to(fake_pos),
        "baseline_to_true": baseline.position.distance_to(true_pos),
        "solved_to_fake": solved.position.distance_to(fake_pos),
        "solved_to_true": solved.position.distance_to(true_pos),
    }
    return AttackDemoResult(
        scenario_name=scenario.name, mode="displacement", feasible=True,
        worst_margin_s=plan.worst_margin_s(), n_gnss=len(gnss),
        noise_sigma_m=scenario.noise_sigma_m, seed=seed,
        positions=positions, distances_m=distances,
        solved_converged=converged,
        solved_max_residual_m=solved.max_abs_residual_m(),
        sum_error_m=math.nan, report=report, events=tuple(session.events),
    )


def _takeover_demo(scenario: AttackScenario, seed: int) -> AttackDemoResult:
    _, _, gnss = scenario_snapshot(scenario)
    true_pos = scenario.true_position()
    gs_pos = scenario.gs_position()
    honest = run_scheme(true_pos, gs_pos, gnss, scheme=scenario.scheme)
    fed = run_scheme(true_pos, gs_pos, gnss, scheme=scenario.scheme,
                     feed_delay_s=scenario.feed_delay_s)
    sum_error = float(np.mean(
        [f.measured_sum_m - h.measured_sum_m
         for f, h in zip(fed.constraints, honest.constraints)]))
    baseline = spherical_multilaterate(victim_pseudoranges(fed))
    solved, converged = _solve_sums(fed.constraints)

    # no orbiting anchor pair here, so the triangle check is out; the
    # sum-residual and clock checks carry the verdict
    report = IntegrityReport(
        residual=residual_check(fed.constraints, solved.position),
        clock=clock_check(fed.exchange, solved.position, gs_pos,
                          sigma_m=scenario.noise_sigma_m),
        key_window=tuple(check_key_window(fed.constraints)),
    )

    positions = {
        "true": true_pos,
        "gs": gs_pos,
        "baseline": baseline.position,
        "solved": solved.position,
    }
    positions.update(dict(gnss))
    distances = {
        "baseline_to_true": baseline.position.distance_to(true_pos),
        "solved_to_true": solved.position.distance_to(true_pos),
    }
    return AttackDemoResult(
        scenario_name=scenario.name, mode="takeover", feasible=True,
        worst_margin_s=math.nan, n_gnss=len(gnss),
        noise_sigma_m=scenario.noise_sigma_m, seed=seed,
        positions=positions, distances_m=distances,
        solved_converged=converged,
        solved_max_residual_m=solved.max_abs_residual_m(),
        sum_error_m=sum_error, report=report, events=tuple(fed.events),
    )


def _horizontal_frame(position: EcefVector):
    up = subsatellite_point(position)
    east = np.cross([0.0, 0.0, 1.0], up)
    east /= np.linalg.norm(east)
    north = np.cross(up, east)
    return up, east, north


def _mc_trial(grid, scenario, anchor, gnss, offset_m, sigma_m, cell_index,
              trial) -> ResidualSample:
    rng = np.random.default_rng((grid.base_seed, cell_index, trial))
    bearing = rng.uniform(0.0, 2.0 * math.pi)
    up_sign = 1.0 if rng.uniform() < 0.5 else -1.0
    noise_seed = int(rng.integers(2 ** 31))

    true_pos = scenario.true_position()
    script = BENIGN
    if offset_m > 0.0:
        up, east, north = _horizontal_frame(true_pos)
        if grid.vertical:
            direction = up_sign * up
        else:
            direction = math.sin(bearing) * east + math.cos(bearing) * north
        fake = EcefVector.from_array(true_pos.as_array()
                                     + offset_m * direction)
        plan = plan_spoof(
            true_pos, fake, gnss,
            backward_delay_s=offset_m * grid.delay_scale_s_per_m)
        if not plan.feasible:
            raise InfeasiblePlan(
                f"cell ({offset_m} m, {sigma_m} m) trial {trial}: "
                f"worst margin {plan.worst_margin_s():.3e} s")
        script = plan.script()

    session = run_session(true_pos, anchor, gnss, script=script,
                          broadcast_noise=_noise(sigma_m, noise_seed))
    try:
        sol = ellipsoidal_multilaterate(session.constraints)
    except NonConvergence:
        return ResidualSample(offset_m, sigma_m, trial, math.nan, False)
    check = residual_check(session.constraints, sol.position)
    return ResidualSample(offset_m, sigma_m, trial, float(check.max_abs_m),
                          True)


def run_residual_mc(grid: MonteCarloGrid, scenario: AttackScenario,
                    threads: int = 1) -> list:
    """One ResidualSample per (cell, trial), in grid order.

    Offset-zero cells run the benign protocol under the same noise and
    serve as the control; positive offsets plan and execute the full
    delay schedule with the grid's displacement-proportional return-leg
    delay.  The scenario supplies the geometry and epoch only.  An
    infeasible plan aborts the campaign; a solver failure only flags
    its row.
    """
    anchor, _, gnss = scenario_snapshot(scenario)
    work = [(ci, off, sig, t)
            for ci, (off, sig) in enumerate(grid.cells())
            for t in range(grid.trials_per_cell)]

    def one(item):
        ci, off, sig, t = item
        return _mc_trial(grid, scenario, anchor, gnss, off, sig, ci, t)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, work))
    return [one(item) for item in work]


def residual_medians(samples) -> dict:
    """(offset_m, sigma_m) -> median max-residual over converged trials."""
    cells = {}
    for s in samples:
        if s.converged:
            cells.setdefault((s.offset_m, s.sigma_m), []).append(
                s.max_residual_m)
    return {k: float(np.median(v)) for k, v in cells.items()}


@dataclass(frozen=True)
class CoverageRun:
    """One availability scan over a time window.

    Modes: "two-leo" needs two distinct responders plus a broadcast
    third vertex at the same instant; "single-leo-dt" reuses one
    responder at t and t + dt (a row per dt value); "vm-three-leo"
    needs three distinct responders and no broadcast segment at all.
    """

    stations: tuple
    leo_spec: ConstellationSpec
    gnss_specs: tuple
    mode: str
    dt_values_s: tuple = ()
    time_step_s: float = 60.0
    horizon_s: float | None = None  # default: one responder orbit period
    elevation_mask_deg: float = 10.0
    origin_s: float = 0.0

    def __post_init__(self):
        if self.mode not in COVERAGE_MODES:
            raise DegenerateInput(
                f"unknown coverage mode {self.mode!r}; expected one of "
                f"{', '.join(COVERAGE_MODES)}")
        if self.mode == "single-leo-dt" and not self.dt_values_s:
            raise DegenerateInput(
                "single-leo-dt mode needs at least one dt value")
        if self.time_step_s <= 0.0:
            raise DegenerateInput("time step must be positive")

    def horizon(self) -> float:
        if self.horizon_s is not None:
            return self.horizon_s
        return orbital_period(self.leo_spec.semi_major_axis_m)


@dataclass(frozen=True)
class AvailabilityResult:
    station: str
    mode: str
    dt_s: float | None
    availability_pct: float


@lru_cache(maxsize=32)
def _pair_rows(k: int):
    return np.triu_indices(k, 1)


@lru_cache(maxsize=32)
def _triple_rows(k: int):
    idx = np.array(list(itertools.combinations(range(k), 3)), dtype=int)
    return idx.reshape(-1, 3)


def _solid_angles(a, b, c) -> np.ndarray:
    num = np.abs(np.einsum("ij,ij->i", a, np.cross(b, c)))
    den = (1.0 + np.einsum("ij,ij->i", a, b)
           + np.einsum("ij,ij->i", b, c)
           + np.einsum("ij,ij->i", c, a))
    return 2.0 * np.arctan2(num, den)


def _contains_any(u: np.ndarray, a, b, c) -> bool:
    """True when some non-sliver triangle row contains u."""
    if len(a) == 0:
        return False
    keep = _solid_angles(a, b, c) >= MIN_SOLID_ANGLE_SR
    if not keep.any():
        return False
    a, b, c = a[keep], b[keep], c[keep]
    inside = points_in_spherical_triangles(
        np.broadcast_to(u, a.shape), a, b, c)
    return bool(inside.any())


def _epoch_two_leo(u, anchors, thirds) -> bool:
    k, m = len(anchors), len(thirds)
    if k < 2 or m < 1:
        return False
    i, j = _pair_rows(k)
    a = anchors[np.repeat(i, m)]
    b = anchors[np.repeat(j, m)]
    c = np.tile(thirds, (len(i), 1))
    return _contains_any(u, a, b, c)


def _epoch_vm(u, anchors) -> bool:
    k = len(anchors)
    if k < 3:
        return False
    idx = _triple_rows(k)
    return _contains_any(u, anchors[idx[:, 0]], anchors[idx[:, 1]],
                         anchors[idx[:, 2]])


def _epoch_single_dt(u, first, second, thirds) -> bool:
    # first[s] and second[s] are the same vehicle at t and t + dt
    k, m = len(first), len(thirds)
    if k < 1 or m < 1:
        return False
    a = first[np.repeat(np.arange(k), m)]
    b = second[np.repeat(np.arange(k), m)]
    c = np.tile(thirds, (k, 1))
    return _contains_any(u, a, b, c)


def _visibility(station_ecef: np.ndarray, grid: np.ndarray,
                mask_deg: float) -> np.ndarray:
    """(n_sats, n_times) bool: at or above the elevation mask."""
    if grid.shape[0] == 0:
        return np.zeros(grid.shape[:2], dtype=bool)
    los = grid - station_ecef
    los_norm = np.linalg.norm(los, axis=-1)
    sin_elev = (np.einsum("j,itj->it", station_ecef, los)
                / (np.linalg.norm(station_ecef) * los_norm))
    return np.degrees(np.arcsin(np.clip(sin_elev, -1.0, 1.0))) >= mask_deg


def _units(grid: np.ndarray) -> np.ndarray:
    if grid.shape[0] == 0:
        return grid
    return grid / np.linalg.norm(grid, axis=-1, keepdims=True)


def run_coverage(run: CoverageRun) -> list:
    """AvailabilityResult rows, stations in input order.

    Availability is the percentage of sampled epochs at which at least
    one acceptance triangle (non-sliver, ground projection containing
    the station) can be formed from the visible satellites.
    """
    times = run.origin_s + np.arange(0.0, run.horizon(), run.time_step_s)
    n_epochs = times.size
    leo_sats = generate_walker(run.leo_spec)
    leo_grid = (propagate_grid(leo_sats, times) if leo_sats
                else np.empty((0, n_epochs, 3)))
    leo_units = _units(leo_grid)

    need_thirds = run.mode in ("two-leo", "single-leo-dt")
    if need_thirds:
        gnss_sats = [s for spec in run.gnss_specs
                     for s in generate_walker(spec)]
        gnss_grid = (propagate_grid(gnss_sats, times) if gnss_sats
                     else np.empty((0, n_epochs, 3)))
        gnss_units = _units(gnss_grid)

    later = {}
    if run.mode == "single-leo-dt":
        for dt in run.dt_values_s:
            later[dt] = (propagate_grid(leo_sats, times + dt) if leo_sats
                         else np.empty((0, n_epochs, 3)))

    results = []
    for station in run.stations:
        s_ecef = station.position().as_array()
        u = s_ecef / np.linalg.norm(s_ecef)
        leo_vis = _visibility(s_ecef, leo_grid, run.elevation_mask_deg)
        if need_thirds:
            gnss_vis = _visibility(s_ecef, gnss_grid,
                                   run.elevation_mask_deg)

        if run.mode == "two-leo":
            hits = sum(
                _epoch_two_leo(u, leo_units[leo_vis[:, t], t],
                               gnss_units[gnss_vis[:, t], t])
                for t in range(n_epochs))
            results.append(AvailabilityResult(
                station.name, run.mode, None, 100.0 * hits / n_epochs))
        elif run.mode == "vm-three-leo":
            hits = sum(
                _epoch_vm(u, leo_units[leo_vis[:, t], t])
                for t in range(n_epochs))
            results.append(AvailabilityResult(
                station.name, run.mode, None, 100.0 * hits / n_epochs))
        else:
            for dt in run.dt_values_s:
                later_units = _units(later[dt])
                later_vis = _visibility(s_ecef, later[dt],
                                        run.elevation_mask_deg)
                hits = 0
                for t in range(n_epochs):
                    # the vehicle must clear the mask at both instants
                    both = leo_vis[:, t] & later_vis[:, t]
                    if _epoch_single_dt(u, leo_units[both, t],
                                        later_units[both, t],
                                        gnss_units[gnss_vis[:, t], t]):
                        hits += 1
                results.append(AvailabilityResult(
                    station.name, run.mode, dt, 100.0 * hits / n_epochs))
    return results
