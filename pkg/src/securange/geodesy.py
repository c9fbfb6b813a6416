"""Earth geometry: WGS-84 conversions, elevation angles, spherical triangles.

Positions are Earth-centred Earth-fixed (ECEF) metres.  Direction
vectors on the unit sphere are plain numpy arrays of shape (3,).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import WGS84_A, WGS84_B, WGS84_E2
from .errors import DegenerateInput


@dataclass(frozen=True)
class EcefVector:
    """A position (or displacement) in the ECEF frame, metres."""

    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @staticmethod
    def from_array(arr) -> "EcefVector":
        return EcefVector(float(arr[0]), float(arr[1]), float(arr[2]))

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def distance_to(self, other: "EcefVector") -> float:
        dx = self.x - other.x
        dy = self.y - other.y
        dz = self.z - other.z
        return math.sqrt(dx * dx + dy * dy + dz * dz)


@dataclass(frozen=True)
class GeodeticPoint:
    """Geodetic latitude/longitude in degrees, ellipsoidal height in metres."""

    latitude_deg: float
    longitude_deg: float
    altitude_m: float = 0.0


def geodetic_to_ecef(point: GeodeticPoint) -> EcefVector:
    """WGS-84 geodetic coordinates to ECEF metres."""
    lat = math.radians(point.latitude_deg)
    lon = math.radians(point.longitude_deg)
    sin_lat = math.sin(lat)
    cos_lat = math.cos(lat)
    # Prime-vertical radius of curvature.
    n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
    h = point.altitude_m
    x = (n + h) * cos_lat * math.cos(lon)
    y = (n + h) * cos_lat * math.sin(lon)
    z = (n * (1.0 - WGS84_E2) + h) * sin_lat
    return EcefVector(x, y, z)


def ecef_to_geodetic(vec: EcefVector) -> GeodeticPoint:
    """ECEF metres to WGS-84 geodetic coordinates.

    Bowring start followed by fixed-point refinement; converges to
    sub-millimetre for any altitude from the surface out past MEO.
    """
    if vec.norm() <= 1.0:
        raise DegenerateInput("position is at (or numerically inside) the Earth's centre")
    x, y, z = vec.x, vec.y, vec.z
    p = math.hypot(x, y)
    lon = math.atan2(y, x)

    if p < 1e-9:
        # On the polar axis the longitude is arbitrary; pin it to zero.
        lat = math.copysign(math.pi / 2.0, z) if z != 0.0 else 0.0
        alt = abs(z) - WGS84_B
        return GeodeticPoint(math.degrees(lat), 0.0, alt)

    # Bowring's parametric-latitude seed.
    ep2 = (WGS84_A * WGS84_A - WGS84_B * WGS84_B) / (WGS84_B * WGS84_B)
    theta = math.atan2(z * WGS84_A, p * WGS84_B)
    lat = math.atan2(
        z + ep2 * WGS84_B * math.sin(theta) ** 3,
        p - WGS84_E2 * WGS84_A * math.cos(theta) ** 3,
    )
    for _ in range(10):
        sin_lat = math.sin(lat)
        n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
        alt = p / math.cos(lat) - n
        new_lat = math.atan2(z, p * (1.0 - WGS84_E2 * n / (n + alt)))
        if abs(new_lat - lat) < 1e-14:
            lat = new_lat
            break
        lat = new_lat
    sin_lat = math.sin(lat)
    n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
    alt = p / math.cos(lat) - n

    lon_deg = math.degrees(lon)
    if lon_deg >= 180.0:
        lon_deg -= 360.0
    return GeodeticPoint(math.degrees(lat), lon_deg, alt)


def elevation_angle(observer: EcefVector, target: EcefVector) -> float:
    """Elevation of `target` above the observer's local horizon plane, degrees.

    "Up" is the observer's geocentric radial, so a target along the same
    radial reads exactly +90.  Negative values mean below the horizon.
    """
    obs = observer.as_array()
    obs_norm = np.linalg.norm(obs)
    if obs_norm == 0.0:
        raise DegenerateInput("observer at the Earth's centre has no horizon")
    los = target.as_array() - obs
    los_norm = np.linalg.norm(los)
    if los_norm == 0.0:
        raise DegenerateInput("observer and target coincide")
    sin_elev = float(np.dot(obs, los) / (obs_norm * los_norm))
    sin_elev = min(1.0, max(-1.0, sin_elev))
    return math.degrees(math.asin(sin_elev))


def subsatellite_point(sat: EcefVector) -> np.ndarray:
    """Unit vector of the satellite's radial projection onto the sphere."""
    arr = sat.as_array()
    norm = np.linalg.norm(arr)
    if norm == 0.0:
        raise DegenerateInput("cannot project the origin onto the sphere")
    return arr / norm


@dataclass(frozen=True)
class SphericalTriangle:
    """Three unit vectors spanning a minor spherical triangle."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    @staticmethod
    def from_vertices(a, b, c) -> "SphericalTriangle":
        verts = []
        for v in (a, b, c):
            arr = np.asarray(v, dtype=float)
            norm = np.linalg.norm(arr)
            if norm == 0.0:
                raise DegenerateInput("triangle vertex at the origin")
            verts.append(arr / norm)
        return SphericalTriangle(*verts)

    def solid_angle(self) -> float:
        return triangle_solid_angle(self.a, self.b, self.c)


def triangle_solid_angle(a, b, c) -> float:
    """Solid angle (steradians) of the minor triangle, Van Oosterom-Strackee."""
    num = abs(float(np.dot(a, np.cross(b, c))))
    den = 1.0 + float(np.dot(a, b)) + float(np.dot(b, c)) + float(np.dot(c, a))
    return 2.0 * math.atan2(num, den)


# Points whose edge-plane determinant is within this of zero count as
# on the boundary, hence inside.
_BOUNDARY_TOL = 1e-12


def point_in_spherical_triangle(point, triangle: SphericalTriangle) -> bool:
    """Is the unit vector `point` inside the minor triangle (boundary inclusive)?

    The point is inside iff it sits on the same side of each edge's
    great-circle plane as the opposite vertex, i.e. the scalar triple
    products det[a,b,p], det[b,c,p], det[c,a,p] all share the sign of
    det[a,b,c].  That orientation reference is what excludes the
    antipodal triangle, whose determinants all flip sign.
    """
    p = np.asarray(point, dtype=float)
    a, b, c = triangle.a, triangle.b, triangle.c
    orientation = float(np.dot(a, np.cross(b, c)))
    d_ab = float(np.dot(np.cross(a, b), p))
    d_bc = float(np.dot(np.cross(b, c), p))
    d_ca = float(np.dot(np.cross(c, a), p))
    if orientation >= 0.0:
        return min(d_ab, d_bc, d_ca) >= -_BOUNDARY_TOL
    return max(d_ab, d_bc, d_ca) <= _BOUNDARY_TOL


def points_in_spherical_triangles(points, tri_a, tri_b, tri_c) -> np.ndarray:
    """Vectorised containment: one point per triangle row, boundary inclusive.

    points / tri_a / tri_b / tri_c are (n, 3) arrays of unit vectors;
    returns a boolean array of length n.  Used by the coverage sweeps
    where millions of triangles get tested.
    """
    points = np.asarray(points, dtype=float)
    cross_ab = np.cross(tri_a, tri_b)
    cross_bc = np.cross(tri_b, tri_c)
    cross_ca = np.cross(tri_c, tri_a)
    orientation = np.einsum("ij,ij->i", tri_a, cross_bc)
    d_ab = np.einsum("ij,ij->i", cross_ab, points)
    d_bc = np.einsum("ij,ij->i", cross_bc, points)
    d_ca = np.einsum("ij,ij->i", cross_ca, points)
    lo = np.minimum(np.minimum(d_ab, d_bc), d_ca)
    hi = np.maximum(np.maximum(d_ab, d_bc), d_ca)
    return np.where(orientation >= 0.0, lo >= -_BOUNDARY_TOL, hi <= _BOUNDARY_TOL)
