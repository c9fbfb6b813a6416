"""Integrity check tests.

Geometry is constructed directly on the sphere (angular offsets from a
base point) so that which triangles must contain which projections is
known by construction, independent of any solver.
"""

import math

import numpy as np
import pytest

from securange.channel import AttackScript, NoiseModel
from securange.constants import SPEED_OF_LIGHT
from securange.errors import InsufficientSamples
from securange.geodesy import GeodeticPoint, geodetic_to_ecef
from securange.integrity import (
    ClockVerdict,
    IntegrityReport,
    clock_check,
    containment_check,
    drift_check,
    residual_check,
)
from securange.protocol import SumConstraint, run_exchange
from securange.solvers import sum_residuals
from securange.timing import ClockModel

C = SPEED_OF_LIGHT


def at_angles(lat_deg, lon_deg, radius_m):
    p = geodetic_to_ecef(GeodeticPoint(lat_deg, lon_deg, 0.0))
    arr = p.as_array()
    return type(p).from_array(radius_m * arr / np.linalg.norm(arr))


LEO_R = 6_371_000.0 + 1_200_000.0
MEO_R = 6_371_000.0 + 20_200_000.0


class TestContainment:
    def test_fix_inside_wide_triangle(self):
        fix = geodetic_to_ecef(GeodeticPoint(10.0, 20.0, 0.0))
        anchors = [at_angles(18.0, 20.0, LEO_R), at_angles(6.0, 12.0, LEO_R)]
        gnss = [("g0", at_angles(4.0, 30.0, MEO_R))]
        result = containment_check(fix, anchors, gnss)
        assert result.passed
        assert result.verdicts[0].contains
        assert not result.verdicts[0].degenerate

    def test_fix_outside_every_triangle(self):
        fix = geodetic_to_ecef(GeodeticPoint(-30.0, 20.0, 0.0))
        anchors = [at_angles(18.0, 20.0, LEO_R), at_angles(6.0, 12.0, LEO_R)]
        gnss = [("g0", at_angles(4.0, 30.0, MEO_R)),
                ("g1", at_angles(14.0, 28.0, MEO_R))]
        result = containment_check(fix, anchors, gnss)
        assert not result.passed
        assert result.n_containing() == 0

    def test_any_single_containing_triangle_passes(self):
        fix = geodetic_to_ecef(GeodeticPoint(10.0, 20.0, 0.0))
        anchors = [at_angles(18.0, 20.0, LEO_R), at_angles(6.0, 12.0, LEO_R)]
        gnss = [("far", at_angles(50.0, -60.0, MEO_R)),
                ("good", at_angles(4.0, 30.0, MEO_R))]
        result = containment_check(fix, anchors, gnss)
        assert result.passed
        assert result.n_containing() == 1

    def test_sliver_triangle_recorded_degenerate(self):
        # third vertex nearly on the anchor great circle: solid angle
        # below the floor, so the triangle must not vote
        fix = geodetic_to_ecef(GeodeticPoint(12.0, 20.0, 0.0))
        anchors = [at_angles(18.0, 20.0, LEO_R), at_angles(6.0, 20.0, LEO_R)]
        gnss = [("thin", at_angles(12.0, 20.0 + 1e-8, MEO_R))]
        result = containment_check(fix, anchors, gnss)
        assert not result.passed
        assert result.verdicts[0].degenerate

    def test_three_anchor_triangle(self):
        fix = geodetic_to_ecef(GeodeticPoint(10.0, 20.0, 0.0))
        anchors = [at_angles(18.0, 20.0, LEO_R),
                   at_angles(6.0, 12.0, LEO_R),
                   at_angles(6.0, 28.0, LEO_R)]
        assert containment_check(fix, anchors).passed
        outside = geodetic_to_ecef(GeodeticPoint(30.0, 20.0, 0.0))
        assert not containment_check(outside, anchors).passed

    def test_shape_validation(self):
        fix = geodetic_to_ecef(GeodeticPoint(0.0, 0.0, 0.0))
        anchors = [at_angles(5.0, 0.0, LEO_R)]
        with pytest.raises(ValueError):
            containment_check(fix, anchors)


class TestResidualCheck:
    def _scene(self):
        truth = geodetic_to_ecef(GeodeticPoint(48.0, 2.0, 100.0))
        leo = at_angles(50.0, 4.0, LEO_R)
        gnss = [at_angles(44.0, -3.0, MEO_R), at_angles(52.0, 10.0, MEO_R),
                at_angles(41.0, 6.0, MEO_R)]
        cons = [SumConstraint(f"g{i}", g, leo,
                              truth.distance_to(g) + truth.distance_to(leo))
                for i, g in enumerate(gnss)]
        return truth, cons

    def test_consistent_fix_passes(self):
        truth, cons = self._scene()
        verdict = residual_check(cons, truth)
        assert verdict.passed
        assert verdict.max_abs_m < 1e-6

    def test_inflated_sums_fail(self):
        truth, cons = self._scene()
        inflated = [SumConstraint(c.gnss_id, c.gnss_position, c.leo_position,
                                  c.measured_sum_m + 200.0) for c in cons]
        verdict = residual_check(inflated, truth)
        assert not verdict.passed
        assert abs(verdict.max_abs_m - 200.0) < 1e-6

    def test_threshold_is_configurable(self):
        truth, cons = self._scene()
        inflated = [SumConstraint(c.gnss_id, c.gnss_position, c.leo_position,
                                  c.measured_sum_m + 200.0) for c in cons]
        assert residual_check(inflated, truth, threshold_m=300.0).passed

    def test_matches_solver_residual_route(self):
        truth, cons = self._scene()
        direct = np.max(np.abs(sum_residuals(cons, truth)))
        assert residual_check(cons, truth).max_abs_m == direct


class TestClockCheck:
    def _geometry(self):
        ue = geodetic_to_ecef(GeodeticPoint(48.0, 2.0, 50.0))
        leo = at_angles(51.0, 5.0, LEO_R)
        return ue, leo

    def test_benign_exchange_passes(self):
        ue, leo = self._geometry()
        exchange, _, _ = run_exchange(ue, leo)
        verdict = clock_check(exchange, ue, leo)
        assert verdict.passed
        assert abs(verdict.mismatch_s) < 1e-12

    def test_return_delay_shows_up_in_full(self):
        ue, leo = self._geometry()
        delay = 1e-3
        exchange, _, _ = run_exchange(
            ue, leo, script=AttackScript(backward_delay=delay))
        verdict = clock_check(exchange, ue, leo)
        assert not verdict.passed
        assert abs(verdict.mismatch_s - delay) < 1e-6

    def test_noise_tolerance_calibration(self):
        # two one-way draws at sigma make the round trip noise
        # sqrt(2)*sigma/c; with sigma large enough to drown the fixed
        # slack, the 2*sigma/c allowance passes about 84 percent of
        # benign exchanges
        ue, leo = self._geometry()
        sigma = 3000.0
        noise = NoiseModel(sigma, seed=77)
        passes = 0
        trials = 500
        for _ in range(trials):
            exchange, _, _ = run_exchange(ue, leo, noise=noise)
            if clock_check(exchange, ue, leo, sigma_m=sigma).passed:
                passes += 1
        rate = passes / trials
        assert 0.80 <= rate <= 0.89

    def test_position_error_detected(self):
        # handing the check a fix 5 km short of the true receiver
        ue, leo = self._geometry()
        exchange, _, _ = run_exchange(ue, leo)
        toward = leo.as_array() - ue.as_array()
        toward /= np.linalg.norm(toward)
        wrong = type(ue).from_array(ue.as_array() + 5_000.0 * toward)
        assert not clock_check(exchange, wrong, leo).passed


class TestDriftCheck:
    def test_honest_oscillator_passes(self):
        samples = [(t, 1e-6 * t + 3e-4) for t in range(0, 600, 60)]
        verdict = drift_check(samples)
        assert verdict.passed
        assert abs(verdict.drift - 1e-6) < 1e-9

    def test_slewed_offset_fails(self):
        samples = [(t, 5e-4 * t) for t in range(0, 600, 60)]
        assert not drift_check(samples).passed

    def test_too_few_samples(self):
        with pytest.raises(InsufficientSamples):
            drift_check([(0.0, 0.0)])


class TestReport:
    def _passing(self):
        return ClockVerdict(True, 0.0, 1e-7)

    def test_empty_report_rejects(self):
        assert not IntegrityReport().accepted()

    def test_all_enabled_must_pass(self):
        good = IntegrityReport(clock=self._passing(), sync_ok=True,
                               key_window=(True, True))
        assert good.accepted()
        bad = IntegrityReport(clock=self._passing(), sync_ok=True,
                              key_window=(True, False))
        assert not bad.accepted()

    def test_skipped_checks_do_not_vote(self):
        report = IntegrityReport(clock=ClockVerdict(False, 1e-3, 1e-7))
        assert not report.accepted()
        only_sync = IntegrityReport(sync_ok=True)
        assert only_sync.accepted()

    def test_text_rendering_is_stable(self):
        report = IntegrityReport(clock=self._passing(), sync_ok=True)
        text = report.as_text()
        assert text == report.as_text()
        lines = text.splitlines()
        assert lines[0] == "verdict: accept"
        assert lines[1] == "containment: skipped"
        assert any(line.startswith("clock: pass") for line in lines)
        assert lines[-1] == "loose-sync: pass"
        assert text.endswith("\n")


class TestVacuousContainment:
    def test_empty_gnss_list_fails_without_error(self):
        fix = geodetic_to_ecef(GeodeticPoint(10.0, 20.0, 0.0))
        anchors = [at_angles(18.0, 20.0, LEO_R), at_angles(6.0, 12.0, LEO_R)]
        result = containment_check(fix, anchors, [])
        assert not result.passed
        assert result.verdicts == ()
        assert result.n_containing() == 0


class TestRejectReasons:
    def test_failing_checks_are_named(self):
        report = IntegrityReport(
            clock=ClockVerdict(False, 1e-3, 1e-7), sync_ok=True,
            key_window=(True, False))
        assert report.failing_checks() == ("clock", "key-window")
        text = report.as_text()
        assert text.splitlines()[0] == "verdict: reject (clock, key-window)"

    def test_all_skipped_report_says_so(self):
        text = IntegrityReport().as_text()
        assert text.splitlines()[0] == "verdict: reject (no checks enabled)"
        assert IntegrityReport().failing_checks() == ()

    def test_accepting_report_names_nothing(self):
        report = IntegrityReport(sync_ok=True)
        assert report.failing_checks() == ()
        assert report.as_text().splitlines()[0] == "verdict: accept"


def tangent_basis(p):
    u = p.as_array() / np.linalg.norm(p.as_array())
    east = np.cross([0.0, 0.0, 1.0], u)
    east /= np.linalg.norm(east)
    north = np.cross(u, east)
    return u, east, north


def star_vertex(fix, bearing_deg, offset_deg, radius_m):
    """Point offset_deg along bearing_deg from fix, lifted to radius_m.

    Three of these at bearings spread less than 180 degrees apart bound
    a spherical triangle containing fix by construction."""
    u, east, north = tangent_basis(fix)
    b = math.radians(bearing_deg)
    t = math.radians(offset_deg)
    step = math.sin(b) * east + math.cos(b) * north
    d = math.cos(t) * u + math.sin(t) * step
    return type(fix).from_array(radius_m * d / np.linalg.norm(d))


class TestSoundness:
    """Benign noise-free sessions with guaranteed containment must pass
    every check, whatever the geometry."""

    TRIALS = 1000

    def test_benign_accept_rate_is_one(self):
        from securange.protocol import run_session

        failures = []
        for trial in range(self.TRIALS):
            rng = np.random.default_rng(10_000 + trial)
            fix = geodetic_to_ecef(GeodeticPoint(
                rng.uniform(-55.0, 55.0), rng.uniform(-180.0, 180.0),
                rng.uniform(0.0, 2000.0)))
            bearings = np.array([0.0, 120.0, 240.0]) + rng.uniform(
                -25.0, 25.0, 3) + rng.uniform(0.0, 360.0)
            offs = rng.uniform(6.0, 14.0, 3)
            a0 = star_vertex(fix, bearings[0], offs[0], LEO_R)
            a1 = star_vertex(fix, bearings[1], offs[1], LEO_R)
            g0 = star_vertex(fix, bearings[2], offs[2], MEO_R)

            session = run_session(fix, a0, [("g0", g0)])
            report = IntegrityReport(
                containment=containment_check(fix, [a0, a1], [("g0", g0)]),
                residual=residual_check(session.constraints, fix),
                clock=clock_check(session.exchange, fix, a0),
                drift=drift_check(
                    [(60.0 * k, rng.uniform(-1e-6, 1e-6) * 60.0 * k)
                     for k in range(6)]),
                key_window=(True,),
                sync_ok=True,
            )
            if not report.accepted():
                failures.append((trial, report.failing_checks()))
        assert failures == []


class TestDetection:
    """Executed spoof plans that move the fix leave sum residuals far
    above threshold, across random geometry, offset, and noise."""

    TRIALS = 1000

    def _scene(self, rng):
        fix = geodetic_to_ecef(GeodeticPoint(
            rng.uniform(-55.0, 55.0), rng.uniform(-180.0, 180.0),
            rng.uniform(0.0, 2000.0)))
        leo = star_vertex(fix, rng.uniform(0.0, 360.0),
                          rng.uniform(2.0, 10.0), LEO_R)
        # six or more constraints, as two open GNSS constellations give:
        # with only four, three position unknowns can dive below the
        # surface and absorb the uniform return-delay credit almost
        # exactly, leaving residuals under threshold
        n = int(rng.integers(6, 11))
        spread = np.arange(n) * (360.0 / n) + rng.uniform(0.0, 360.0)
        gnss = [(f"g{i}", star_vertex(fix, spread[i] + rng.uniform(-30.0, 30.0),
                                      rng.uniform(10.0, 40.0), MEO_R))
                for i in range(n)]
        return fix, leo, gnss

    def test_spoofed_sessions_always_flagged(self):
        from securange.attacks import plan_spoof
        from securange.channel import NoiseModel
        from securange.errors import NonConvergence
        from securange.protocol import run_session
        from securange.solvers import SolverConfig, ellipsoidal_multilaterate

        worst = math.inf
        for trial in range(self.TRIALS):
            rng = np.random.default_rng(40_000 + trial)
            fix, leo, gnss = self._scene(rng)
            _, east, north = tangent_basis(fix)
            d = 10.0 ** rng.uniform(math.log10(200.0), 4.0)
            b = rng.uniform(0.0, 2.0 * math.pi)
            fake = type(fix).from_array(
                fix.as_array() + d * (math.sin(b) * east + math.cos(b) * north))
            plan = plan_spoof(fix, fake, gnss,
                              backward_delay_s=rng.uniform(4e-4, 2e-3))
            assert plan.feasible

            sigma = rng.uniform(0.0, 50.0)
            session = run_session(
                fix, leo, gnss, script=plan.script(),
                exchange_noise=NoiseModel(sigma, seed=trial),
                broadcast_noise=NoiseModel(sigma, seed=trial + 1))
            try:
                sol = ellipsoidal_multilaterate(
                    session.constraints,
                    config=SolverConfig(initial_guess=fake))
            except NonConvergence:
                continue  # no fix at all still means no accepted fix
            verdict = residual_check(session.constraints, sol.position)
            assert not verdict.passed, f"trial {trial} slipped through"
            worst = min(worst, verdict.max_abs_m)
        # headroom, not a squeaker: worst trial still far above threshold
        assert worst > 500.0
