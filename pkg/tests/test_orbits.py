import math

import numpy as np
import pytest

from securange.constants import EARTH_RADIUS_MEAN, MU_EARTH, OMEGA_EARTH, SPEED_OF_LIGHT
from securange.errors import ConfigError, InvalidSpec
from securange.geodesy import EcefVector, GeodeticPoint, ecef_to_geodetic, elevation_angle
from securange.orbits import (
    ConstellationSpec,
    GroundStation,
    OrbitElements,
    bundled_constellation,
    bundled_stations,
    generate_walker,
    load_constellation,
    load_stations,
    max_tof_bound,
    orbital_period,
    propagate,
    propagate_grid,
    visible_satellites,
)


def kepler_period(a):
    """Oracle: closed-form circular period."""
    return 2.0 * math.pi * math.sqrt(a ** 3 / MU_EARTH)


class TestPropagate:
    def test_radius_is_constant(self):
        elements = OrbitElements(7_578_137.0, 87.4, 40.0, 10.0)
        for t in (0.0, 123.0, 4000.0, 90_000.0):
            assert propagate(elements, t).norm() == pytest.approx(7_578_137.0, abs=1e-6)

    def test_period_1200km_shell(self):
        a = EARTH_RADIUS_MEAN + 1_200_000.0
        period = kepler_period(a)
        assert period == pytest.approx(6556.0, abs=1.0)

    def test_inertial_return_after_one_period(self):
        """After one period the satellite repeats in the inertial frame,
        so un-rotating the Earth's turn must reproduce the ECEF start."""
        elements = OrbitElements(7_578_137.0, 87.4, 30.0, 55.0)
        period = kepler_period(7_578_137.0)
        start = propagate(elements, 0.0).as_array()
        end = propagate(elements, period).as_array()
        theta = OMEGA_EARTH * period
        unrot = np.array(
            [
                math.cos(theta) * end[0] - math.sin(theta) * end[1],
                math.sin(theta) * end[0] + math.cos(theta) * end[1],
                end[2],
            ]
        )
        assert np.allclose(unrot, start, atol=1e-3)

    def test_equatorial_orbit_stays_equatorial(self):
        elements = OrbitElements(EARTH_RADIUS_MEAN + 715_000.0, 0.0, 0.0, 0.0)
        for t in np.linspace(0.0, 6000.0, 17):
            point = ecef_to_geodetic(propagate(elements, float(t)))
            assert abs(point.latitude_deg) < 1e-9

    def test_inclination_bounds_latitude(self):
        elements = OrbitElements(EARTH_RADIUS_MEAN + 1_414_000.0, 52.0, 77.0, 0.0)
        period = kepler_period(elements.semi_major_axis_m)
        max_lat = max(
            abs(ecef_to_geodetic(propagate(elements, float(t))).latitude_deg)
            for t in np.linspace(0.0, period, 200)
        )
        assert max_lat <= 52.5
        assert max_lat > 45.0

    def test_angular_rate_matches_mean_motion(self):
        a = 7_578_137.0
        elements = OrbitElements(a, 87.4, 0.0, 0.0)
        dt = 10.0
        p0 = propagate(elements, 0.0).as_array()
        p1 = propagate(elements, dt).as_array()
        # Compare in the inertial frame: un-rotate the second sample.
        theta = OMEGA_EARTH * dt
        p1i = np.array(
            [
                math.cos(theta) * p1[0] - math.sin(theta) * p1[1],
                math.sin(theta) * p1[0] + math.cos(theta) * p1[1],
                p1[2],
            ]
        )
        swept = math.acos(float(np.dot(p0, p1i)) / a ** 2)
        assert swept == pytest.approx(math.sqrt(MU_EARTH / a ** 3) * dt, rel=1e-9)

    def test_grid_matches_scalar(self):
        elements = OrbitElements(7_578_137.0, 87.4, 12.0, 200.0)
        times = np.array([0.0, 60.0, 120.0])
        grid = propagate_grid([elements], times)
        for k, t in enumerate(times):
            assert np.allclose(grid[0, k], propagate(elements, float(t)).as_array())

    def test_inside_earth_rejected(self):
        with pytest.raises(InvalidSpec):
            OrbitElements(6_000_000.0, 0.0, 0.0, 0.0)


class TestWalker:
    def test_star_raan_spacing(self):
        spec = ConstellationSpec("t", 4, 2, 0, 1_200_000.0, 87.4, pattern="star")
        raans = sorted({e.raan_deg for e in generate_walker(spec)})
        assert raans == [0.0, 90.0]

    def test_delta_raan_spacing(self):
        spec = ConstellationSpec("t", 4, 2, 0, 1_200_000.0, 55.0, pattern="delta")
        raans = sorted({e.raan_deg for e in generate_walker(spec)})
        assert raans == [0.0, 180.0]

    def test_in_plane_spacing_even(self):
        spec = ConstellationSpec("t", 12, 3, 0, 715_000.0, 45.0)
        elements = generate_walker(spec)
        plane0 = sorted(e.anomaly_deg for e in elements if e.raan_deg == 0.0)
        assert plane0 == [0.0, 90.0, 180.0, 270.0]

    def test_phasing_offsets_adjacent_planes(self):
        spec = ConstellationSpec("t", 12, 3, 1, 715_000.0, 45.0)
        elements = generate_walker(spec)
        second_plane = sorted(e.anomaly_deg for e in elements if e.raan_deg == 120.0)
        assert second_plane[0] == pytest.approx(1 * 360.0 / 12)

    def test_total_count(self):
        spec = ConstellationSpec("t", 648, 18, 1, 1_200_000.0, 87.4, pattern="star")
        assert len(generate_walker(spec)) == 648

    def test_indivisible_rejected(self):
        with pytest.raises(InvalidSpec):
            ConstellationSpec("bad", 31, 6, 1, 20_200_000.0, 55.0)

    def test_bad_phasing_rejected(self):
        with pytest.raises(InvalidSpec):
            ConstellationSpec("bad", 12, 3, 3, 715_000.0, 45.0)


class TestVisibility:
    def test_matches_elevation_filter(self):
        spec = ConstellationSpec("t", 40, 5, 1, 1_200_000.0, 87.4, pattern="star")
        sats = generate_walker(spec)
        gs = GroundStation("Paris", GeodeticPoint(48.8566, 2.3522, 35.0))
        t = 1234.0
        visible = visible_satellites(gs, sats, t, 10.0)
        station = gs.position()
        for idx, pos in visible:
            assert elevation_angle(station, pos) >= 10.0
        visible_ids = {idx for idx, _ in visible}
        for idx, elements in enumerate(sats):
            if idx not in visible_ids:
                assert elevation_angle(station, propagate(elements, t)) < 10.0

    def test_oneweb_always_visible_from_paris(self):
        """Sweep one orbital period at 60 s: the 648-satellite shell never
        leaves Paris without a usable satellite at a 10 deg mask."""
        spec = bundled_constellation("oneweb")
        sats = generate_walker(spec)
        gs = GroundStation("Paris", GeodeticPoint(48.8566, 2.3522, 35.0))
        station = gs.position().as_array()
        period = orbital_period(spec.semi_major_axis_m)
        times = np.arange(0.0, period, 60.0)
        grid = propagate_grid(sats, times)
        station_norm = np.linalg.norm(station)
        for k in range(times.size):
            los = grid[:, k, :] - station
            sin_elev = (los @ station) / (np.linalg.norm(los, axis=1) * station_norm)
            assert np.max(np.degrees(np.arcsin(sin_elev))) >= 10.0


class TestTofBound:
    def slant_oracle(self, altitude_m, elev_deg):
        r = EARTH_RADIUS_MEAN
        ro = r + altitude_m
        e = math.radians(elev_deg)
        # Independent route: solve the triangle via the apparent zenith angle.
        zenith = math.pi / 2.0 + e
        # law of sines: sin(angle at satellite) = r sin(zenith) / ro
        sat_angle = math.asin(r * math.sin(zenith) / ro)
        centre_angle = math.pi - zenith - sat_angle
        return ro * math.sin(centre_angle) / math.sin(zenith)

    def test_zero_elevation_1200km(self):
        spec = ConstellationSpec("t", 18, 18, 0, 1_200_000.0, 87.4, pattern="star")
        bound = max_tof_bound(spec, 0.0)
        assert bound * SPEED_OF_LIGHT == pytest.approx(4.09e6, rel=0.01)
        assert bound == pytest.approx(0.01365, abs=0.0002)

    def test_matches_triangle_oracle(self):
        spec = ConstellationSpec("t", 18, 18, 0, 1_200_000.0, 87.4, pattern="star")
        for elev in (0.0, 5.0, 10.0, 30.0, 60.0, 89.0):
            got = max_tof_bound(spec, elev) * SPEED_OF_LIGHT
            assert got == pytest.approx(self.slant_oracle(1_200_000.0, elev), rel=1e-9)

    def test_zenith_limit_is_altitude(self):
        spec = ConstellationSpec("t", 18, 18, 0, 715_000.0, 45.0)
        assert max_tof_bound(spec, 90.0) * SPEED_OF_LIGHT == pytest.approx(715_000.0, abs=1e-3)

    def test_monotone_decreasing_in_elevation(self):
        spec = ConstellationSpec("t", 18, 18, 0, 1_414_000.0, 52.0)
        bounds = [max_tof_bound(spec, e) for e in (0.0, 10.0, 20.0, 45.0, 90.0)]
        assert all(b1 > b2 for b1, b2 in zip(bounds, bounds[1:]))

    def test_bounds_actual_slant_for_equatorial_station(self):
        spec = ConstellationSpec("t", 36, 4, 1, 715_000.0, 45.0)
        sats = generate_walker(spec)
        gs = GroundStation("eq", GeodeticPoint(0.0, 0.0, 0.0))
        bound = max_tof_bound(spec, 10.0)
        for t in np.linspace(0.0, 6000.0, 25):
            for _, pos in visible_satellites(gs, sats, float(t), 10.0):
                assert gs.position().distance_to(pos) / SPEED_OF_LIGHT <= bound


class TestLoaders:
    @pytest.mark.parametrize(
        "name,count,alt_km",
        [
            ("oneweb", 648, 1200.0),
            ("orbcomm", 36, 715.0),
            ("globalstar", 48, 1414.0),
            ("gps", 30, 20200.0),
            ("galileo", 24, 23222.0),
        ],
    )
    def test_bundled_constellations(self, name, count, alt_km):
        spec = bundled_constellation(name)
        assert spec.total_satellites == count
        assert spec.altitude_m == pytest.approx(alt_km * 1000.0)
        assert len(generate_walker(spec)) == count

    def test_bundled_stations(self):
        stations = bundled_stations()
        assert len(stations) == 9
        names = [s.name for s in stations]
        assert "Paris" in names and "Reykjavik" in names

    def test_unknown_key_rejected(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text(
            "[constellation]\nname = x\ntotal_satellites = 4\nplanes = 2\n"
            "phasing = 0\naltitude_km = 1000\ninclination_deg = 50\ncolour = blue\n"
        )
        with pytest.raises(ConfigError, match="colour"):
            load_constellation(bad)

    def test_missing_station_key_rejected(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("[station]\nname = x\nlatitude_deg = 1.0\n")
        with pytest.raises(ConfigError, match="longitude_deg"):
            load_stations(bad)

    def test_unknown_bundle_lists_known(self):
        with pytest.raises(InvalidSpec, match="oneweb"):
            bundled_constellation("nonsuch")
