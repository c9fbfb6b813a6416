"""Circular-orbit propagation, Walker constellations, visibility.

Propagation is two-body Keplerian with a rotating Earth: positions are
computed in an inertial frame aligned with ECEF at t = 0, then rotated
into ECEF.  Good enough for geometry studies over a few orbital
periods; no J2, no drag.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .constants import EARTH_RADIUS_MEAN, MU_EARTH, OMEGA_EARTH, SPEED_OF_LIGHT
from .errors import InvalidSpec
from .geodesy import EcefVector, GeodeticPoint, elevation_angle, geodetic_to_ecef
from . import textconfig

DATA_DIR = Path(__file__).parent / "data"


@dataclass(frozen=True)
class OrbitElements:
    """Circular orbit: size, plane, and where the satellite sits in it."""

    semi_major_axis_m: float
    inclination_deg: float
    raan_deg: float
    anomaly_deg: float
    epoch_s: float = 0.0

    def __post_init__(self):
        if self.semi_major_axis_m <= EARTH_RADIUS_MEAN:
            raise InvalidSpec(
                f"semi-major axis {self.semi_major_axis_m} m is inside the Earth"
            )


@dataclass(frozen=True)
class ConstellationSpec:
    """Walker-style shell: N satellites in P planes at one altitude."""

    name: str
    total_satellites: int
    planes: int
    phasing: int
    altitude_m: float
    inclination_deg: float
    pattern: str = "delta"  # "delta" spreads planes over 360 deg, "star" over 180

    def __post_init__(self):
        # an empty shell is legal (coverage scans use it as a control)
        if self.total_satellites < 0 or self.planes < 1:
            raise InvalidSpec("need a nonnegative count and at least one plane")
        if self.total_satellites % self.planes != 0:
            raise InvalidSpec(
                f"{self.total_satellites} satellites do not divide into {self.planes} planes"
            )
        if not 0 <= self.phasing < self.planes:
            raise InvalidSpec(f"phasing {self.phasing} outside [0, planes)")
        if self.pattern not in ("delta", "star"):
            raise InvalidSpec(f"unknown pattern {self.pattern!r}")
        if self.altitude_m <= 0:
            raise InvalidSpec("altitude must be positive")

    @property
    def semi_major_axis_m(self) -> float:
        return EARTH_RADIUS_MEAN + self.altitude_m


@dataclass(frozen=True)
class GroundStation:
    name: str
    location: GeodeticPoint

    def position(self) -> EcefVector:
        return geodetic_to_ecef(self.location)


def orbital_period(semi_major_axis_m: float) -> float:
    return 2.0 * math.pi * math.sqrt(semi_major_axis_m ** 3 / MU_EARTH)


def propagate(elements: OrbitElements, t: float) -> EcefVector:
    """ECEF position of the satellite at time t (seconds)."""
    return EcefVector.from_array(_propagate_array(elements, np.array([t]))[0])


def _propagate_array(elements: OrbitElements, times: np.ndarray) -> np.ndarray:
    a = elements.semi_major_axis_m
    inc = math.radians(elements.inclination_deg)
    raan = math.radians(elements.raan_deg)
    mean_motion = math.sqrt(MU_EARTH / a ** 3)
    u = math.radians(elements.anomaly_deg) + mean_motion * (times - elements.epoch_s)
    cos_u, sin_u = np.cos(u), np.sin(u)
    # Inertial position for a circular orbit (argument of latitude u).
    xi = a * (cos_u * math.cos(raan) - sin_u * math.sin(raan) * math.cos(inc))
    yi = a * (cos_u * math.sin(raan) + sin_u * math.cos(raan) * math.cos(inc))
    zi = a * sin_u * math.sin(inc)
    # Rotate into ECEF: the Earth has turned by omega*t since frame alignment.
    theta = OMEGA_EARTH * times
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    x = cos_t * xi + sin_t * yi
    y = -sin_t * xi + cos_t * yi
    return np.stack([x, y, zi], axis=-1)


def propagate_all(sats: list, t: float) -> np.ndarray:
    """(n, 3) ECEF positions for a satellite list at one instant."""
    return propagate_grid(sats, np.array([t]))[:, 0, :]


def propagate_grid(sats: list, times) -> np.ndarray:
    """(n_sats, n_times, 3) ECEF positions over a time grid."""
    times = np.asarray(times, dtype=float)
    out = np.empty((len(sats), times.size, 3))
    for i, elements in enumerate(sats):
        out[i] = _propagate_array(elements, times)
    return out


def generate_walker(spec: ConstellationSpec) -> list:
    """Orbit elements for every satellite in the shell.

    Planes are spaced evenly in RAAN (full circle for delta patterns,
    half for star).  In-plane slots are even; adjacent planes are offset
    by phasing * 360 / N degrees of anomaly.
    """
    if spec.total_satellites == 0:
        return []
    per_plane = spec.total_satellites // spec.planes
    raan_spread = 360.0 if spec.pattern == "delta" else 180.0
    elements = []
    for plane in range(spec.planes):
        raan = plane * raan_spread / spec.planes
        phase_offset = plane * spec.phasing * 360.0 / spec.total_satellites
        for slot in range(per_plane):
            anomaly = (slot * 360.0 / per_plane + phase_offset) % 360.0
            elements.append(
                OrbitElements(
                    semi_major_axis_m=spec.semi_major_axis_m,
                    inclination_deg=spec.inclination_deg,
                    raan_deg=raan,
                    anomaly_deg=anomaly,
                )
            )
    return elements


def visible_satellites(gs: GroundStation, sats: list, t: float, min_elev_deg: float) -> list:
    """(index, position) for every satellite at or above the elevation mask."""
    station = gs.position()
    positions = propagate_all(sats, t)
    out = []
    for i in range(len(sats)):
        pos = EcefVector.from_array(positions[i])
        if elevation_angle(station, pos) >= min_elev_deg:
            out.append((i, pos))
    return out


def max_tof_bound(spec: ConstellationSpec, min_elev_deg: float) -> float:
    """Upper bound (seconds) on one-way flight time to a shell satellite.

    Law of cosines on the (Earth centre, observer, satellite) triangle
    at the lowest usable elevation: the slant range there is the
    longest line of sight the mask allows.
    """
    r_surface = EARTH_RADIUS_MEAN
    r_orbit = spec.semi_major_axis_m
    sin_e = math.sin(math.radians(min_elev_deg))
    slant = -r_surface * sin_e + math.sqrt(
        (r_surface * sin_e) ** 2 + r_orbit ** 2 - r_surface ** 2
    )
    return slant / SPEED_OF_LIGHT


# ---------------------------------------------------------------------------
# Structured-text loaders.
# ---------------------------------------------------------------------------

_CONSTELLATION_KEYS = (
    "name",
    "total_satellites",
    "planes",
    "phasing",
    "altitude_km",
    "inclination_deg",
    "pattern",
)


def load_constellation(path) -> ConstellationSpec:
    """Read one [constellation] section from a config file."""
    sections = textconfig.load_text_config(path)
    textconfig.check_sections(sections, {"constellation"}, path)
    sec = textconfig.one_section(sections, "constellation", path)
    textconfig.check_keys(sec, _CONSTELLATION_KEYS, required=_CONSTELLATION_KEYS[:-1], path=path)
    try:
        return ConstellationSpec(
            name=textconfig.get_str(sec, "name", path),
            total_satellites=textconfig.get_int(sec, "total_satellites", path),
            planes=textconfig.get_int(sec, "planes", path),
            phasing=textconfig.get_int(sec, "phasing", path),
            altitude_m=textconfig.get_float(sec, "altitude_km", path) * 1000.0,
            inclination_deg=textconfig.get_float(sec, "inclination_deg", path),
            pattern=textconfig.get_str(sec, "pattern", path, default="delta"),
        )
    except InvalidSpec as exc:
        raise InvalidSpec(f"{path}: {exc}") from exc


def station_from_section(sec, path=None) -> GroundStation:
    """Build one GroundStation from an already-parsed [station] section."""
    textconfig.check_keys(
        sec,
        ("name", "latitude_deg", "longitude_deg", "altitude_m"),
        required=("name", "latitude_deg", "longitude_deg"),
        path=path,
    )
    return GroundStation(
        name=textconfig.get_str(sec, "name", path),
        location=GeodeticPoint(
            latitude_deg=textconfig.get_float(sec, "latitude_deg", path),
            longitude_deg=textconfig.get_float(sec, "longitude_deg", path),
            altitude_m=textconfig.get_float(sec, "altitude_m", path, default=0.0),
        ),
    )


def load_stations(path) -> list:
    """Read repeated [station] sections from a config file."""
    sections = textconfig.load_text_config(path)
    textconfig.check_sections(sections, {"station"}, path)
    stations = [station_from_section(sec, path) for sec in sections]
    if not stations:
        raise InvalidSpec(f"{path}: no [station] sections found")
    return stations


def bundled_constellation(name: str) -> ConstellationSpec:
    """Load one of the constellation files shipped with the package."""
    path = DATA_DIR / "constellations" / f"{name}.cfg"
    if not path.exists():
        known = sorted(p.stem for p in (DATA_DIR / "constellations").glob("*.cfg"))
        raise InvalidSpec(f"no bundled constellation {name!r}; known: {', '.join(known)}")
    return load_constellation(path)


def bundled_stations() -> list:
    return load_stations(DATA_DIR / "stations" / "default.cfg")
