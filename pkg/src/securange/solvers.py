"""Nonlinear least-squares position solvers.

Two measurement models share one damped Gauss-Newton core:

  spherical    |r - s_i| (+ clock bias)  = pseudorange_i
  ellipsoidal  |r - g_i| + |r - l|       = measured sum_i

The ellipsoidal model intersects ellipsoids of revolution whose foci are
a navigation satellite and the responding satellite; its Jacobian row is
the sum of the two unit vectors from the iterate to the foci, which is
never larger than 2 and vanishes only between the foci on the axis.

Damping follows the usual schedule: multiply by 10 when a step fails to
reduce the cost, divide by 10 after an accepted step.  Convergence is a
position step below config.convergence_tol_m, which also terminates on
inconsistent systems where the residual floor is far above zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import WGS84_A
from .errors import DegenerateGeometry, FocusCoincidence, NonConvergence
from .geodesy import EcefVector, GeodeticPoint, ecef_to_geodetic, geodetic_to_ecef

# Iterates closer than this to a focus get nudged; unit vectors blow up
# at exactly zero separation.
_FOCUS_GUARD_M = 1e-6

# Relative floor on the smallest singular value of the first Jacobian
# below which the geometry cannot pin down a position.
_RANK_FLOOR = 1e-10


@dataclass(frozen=True)
class SolverConfig:
    """surface_altitude_m, when set, replaces the free 3-D solve by a
    2-unknown solve over local tangent offsets at that fixed geodetic
    altitude; useful when the receiver is known to sit on the ground."""

    max_iterations: int = 100
    convergence_tol_m: float = 1e-4
    damping_init: float = 1e-3
    initial_guess: object = "auto"
    surface_altitude_m: float | None = None


DEFAULT_CONFIG = SolverConfig()


@dataclass(frozen=True)
class PositionSolution:
    position: EcefVector
    residuals_m: np.ndarray
    iterations: int
    converged: bool
    clock_bias_m: float = 0.0

    def max_abs_residual_m(self) -> float:
        return float(np.max(np.abs(self.residuals_m)))


def _as_array(pos) -> np.ndarray:
    if isinstance(pos, EcefVector):
        return pos.as_array()
    return np.asarray(pos, dtype=float)


def _auto_guess(sat_positions) -> np.ndarray:
    """Surface point under the mean satellite direction.  Satellites are
    always well above any solution of interest, so this starts on the
    correct side of the constellation."""
    dirs = np.array([p / np.linalg.norm(p) for p in sat_positions])
    total = dirs.sum(axis=0)
    norm = np.linalg.norm(total)
    if norm < 1e-9:
        return np.array([WGS84_A, 0.0, 0.0])
    return WGS84_A * total / norm


def _nudge_off_singularities(x: np.ndarray, singular_points) -> tuple:
    """Move the iterate 1 m off any point where the model is undefined.

    The shift direction walks the coordinate axes deterministically, so
    reruns behave identically."""
    moved = False
    for axis in np.eye(3):
        clear = all(np.linalg.norm(x - p) > _FOCUS_GUARD_M
                    for p in singular_points)
        if clear:
            return x, moved
        x = x + axis
        moved = True
    clear = all(np.linalg.norm(x - p) > _FOCUS_GUARD_M
                for p in singular_points)
    if not clear:
        raise FocusCoincidence(
            "iterate cannot be separated from a constraint focus")
    return x, moved


def _levenberg(residual, jacobian, x0, config, singular_points, pos_dim=3):
    """Shared damped Gauss-Newton loop.

    x may carry extra columns beyond the position components (the clock
    variant appends a bias); only the position part of the step decides
    convergence, and only it is checked against foci.  pos_dim is 3 for
    free solves and 2 for the tangent-plane surface mode, where the
    parameters are offsets rather than coordinates and focus collisions
    cannot occur.
    """
    x = np.array(x0, dtype=float)
    if singular_points is not None and len(singular_points):
        x[:3], _ = _nudge_off_singularities(x[:3], singular_points)
    lam = config.damping_init
    r = residual(x)
    cost = float(r @ r)
    iterations = 0
    nudges = 0

    for iterations in range(1, config.max_iterations + 1):
        jac = jacobian(x)
        if iterations == 1:
            svals = np.linalg.svd(jac, compute_uv=False)
            if svals[-1] < _RANK_FLOOR * max(svals[0], 1.0):
                raise DegenerateGeometry(
                    "constraint geometry is rank deficient "
                    f"(singular values {svals})")
        normal = jac.T @ jac
        grad = jac.T @ r
        identity = np.eye(normal.shape[0])

        converged = False
        accepted = False
        for _ in range(60):
            try:
                step = np.linalg.solve(normal + lam * identity, -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            if np.linalg.norm(step[:pos_dim]) < config.convergence_tol_m:
                converged = True
                break
            x_try = x + step
            if singular_points is not None and len(singular_points):
                x_try[:3], moved = _nudge_off_singularities(
                    x_try[:3], singular_points)
                if moved:
                    nudges += 1
                    if nudges > 5:
                        raise FocusCoincidence(
                            "iterate keeps landing on a constraint focus")
            r_try = residual(x_try)
            cost_try = float(r_try @ r_try)
            if cost_try <= cost:
                x, r, cost = x_try, r_try, cost_try
                lam = max(lam * 0.1, 1e-14)
                accepted = True
                break
            lam *= 10.0

        if converged:
            return x, r, iterations, True
        if not accepted:
            break

    best = (x, r, iterations, False)
    return best


class _SurfaceChart:
    """Two-parameter chart over the fixed-altitude surface.

    Offsets (e, n) are meters along the east/north tangent directions at
    the base point; the charted position is the tangent-plane point
    pulled back to the configured geodetic altitude.  The chart Jacobian
    is taken by central differences at 1 cm; the measurement Jacobian
    rows stay analytic and are chained onto it."""

    _H = 0.01

    def __init__(self, base_ecef: np.ndarray, altitude_m: float):
        g = ecef_to_geodetic(EcefVector.from_array(base_ecef))
        self.altitude_m = float(altitude_m)
        self.base = geodetic_to_ecef(GeodeticPoint(
            g.latitude_deg, g.longitude_deg, self.altitude_m)).as_array()
        lat = np.radians(g.latitude_deg)
        lon = np.radians(g.longitude_deg)
        self.east = np.array([-np.sin(lon), np.cos(lon), 0.0])
        self.north = np.array([-np.sin(lat) * np.cos(lon),
                               -np.sin(lat) * np.sin(lon),
                               np.cos(lat)])

    def position(self, en: np.ndarray) -> np.ndarray:
        q = self.base + en[0] * self.east + en[1] * self.north
        g = ecef_to_geodetic(EcefVector.from_array(q))
        return geodetic_to_ecef(GeodeticPoint(
            g.latitude_deg, g.longitude_deg, self.altitude_m)).as_array()

    def jacobian(self, en: np.ndarray) -> np.ndarray:
        cols = []
        for axis in np.eye(2):
            plus = self.position(en + self._H * axis)
            minus = self.position(en - self._H * axis)
            cols.append((plus - minus) / (2.0 * self._H))
        return np.column_stack(cols)


def _raise_nonconvergence(x, r, iterations, clock_bias=0.0, position=None):
    best = PositionSolution(
        position=EcefVector.from_array(x[:3] if position is None else position),
        residuals_m=np.array(r, dtype=float),
        iterations=iterations,
        converged=False,
        clock_bias_m=clock_bias,
    )
    raise NonConvergence(
        f"no convergence after {iterations} iterations "
        f"(last position step above tolerance)", best=best)


def range_residuals(measurements, position, clock_bias_m: float = 0.0
                    ) -> np.ndarray:
    """model minus measurement for the spherical system at a given point."""
    sats = np.array([_as_array(p) for p, _ in measurements])
    rhos = np.array([float(rho) for _, rho in measurements])
    x = _as_array(position)
    return np.linalg.norm(sats - x, axis=1) + clock_bias_m - rhos


def range_jacobian(measurements, position, estimate_clock: bool = False
                   ) -> np.ndarray:
    sats = np.array([_as_array(p) for p, _ in measurements])
    x = _as_array(position)
    diff = x - sats
    rows = diff / np.linalg.norm(diff, axis=1)[:, None]
    if estimate_clock:
        rows = np.hstack([rows, np.ones((len(sats), 1))])
    return rows


def sum_residuals(constraints, position) -> np.ndarray:
    """model minus measurement for the ellipsoidal system at a given point."""
    x = _as_array(position)
    gnss = np.array([_as_array(c.gnss_position) for c in constraints])
    leos = np.array([_as_array(c.leo_position) for c in constraints])
    sums = np.array([c.measured_sum_m for c in constraints])
    return (np.linalg.norm(gnss - x, axis=1)
            + np.linalg.norm(leos - x, axis=1) - sums)


def sum_jacobian(constraints, position) -> np.ndarray:
    x = _as_array(position)
    gnss = np.array([_as_array(c.gnss_position) for c in constraints])
    leos = np.array([_as_array(c.leo_position) for c in constraints])
    dg = x - gnss
    dl = x - leos
    return (dg / np.linalg.norm(dg, axis=1)[:, None]
            + dl / np.linalg.norm(dl, axis=1)[:, None])


def spherical_multilaterate(measurements, config: SolverConfig = DEFAULT_CONFIG,
                            estimate_clock: bool = False) -> PositionSolution:
    """Intersect range spheres around satellites.

    measurements: iterable of (position, range_m) pairs; position may be
    an EcefVector or any length-3 array.  With estimate_clock a common
    additive bias (meters) becomes a fourth unknown, the standard
    receiver-clock term that makes plain pseudoranges spoofable by any
    consistent common offset.
    """
    pairs = [(_as_array(p), float(rho)) for p, rho in measurements]
    surface = config.surface_altitude_m is not None
    pos_dim = 2 if surface else 3
    needed = pos_dim + (1 if estimate_clock else 0)
    if len(pairs) < needed:
        raise DegenerateGeometry(
            f"{len(pairs)} ranges cannot determine {needed} unknowns")
    sats = np.array([p for p, _ in pairs])
    rhos = np.array([rho for _, rho in pairs])

    if isinstance(config.initial_guess, str) and config.initial_guess == "auto":
        x0 = _auto_guess(sats)
    else:
        x0 = _as_array(config.initial_guess)

    chart = _SurfaceChart(x0, config.surface_altitude_m) if surface else None
    point = (lambda x: chart.position(x[:2])) if surface else (lambda x: x[:3])

    def residual(x):
        d = np.linalg.norm(sats - point(x), axis=1)
        model = d + (x[pos_dim] if estimate_clock else 0.0)
        return model - rhos

    def jacobian(x):
        p = point(x)
        diff = p - sats
        rows = diff / np.linalg.norm(diff, axis=1)[:, None]
        if surface:
            rows = rows @ chart.jacobian(x[:2])
        if estimate_clock:
            rows = np.hstack([rows, np.ones((len(pairs), 1))])
        return rows

    x0 = np.zeros(2) if surface else x0
    if estimate_clock:
        x0 = np.append(x0, 0.0)

    x, r, iterations, ok = _levenberg(
        residual, jacobian, x0, config,
        singular_points=None if surface else sats, pos_dim=pos_dim)
    bias = float(x[pos_dim]) if estimate_clock else 0.0
    if not ok:
        _raise_nonconvergence(x, r, iterations, bias,
                              position=point(x))
    return PositionSolution(
        position=EcefVector.from_array(point(x)),
        residuals_m=residual(x),
        iterations=iterations,
        converged=True,
        clock_bias_m=bias,
    )


def ellipsoidal_multilaterate(constraints,
                              config: SolverConfig = DEFAULT_CONFIG
                              ) -> PositionSolution:
    """Intersect sum-of-distance ellipsoids from SumConstraint records.

    No clock unknown: the sums are clock-free by construction, which is
    exactly why a common inflation cannot be absorbed and shows up in
    the residuals instead.
    """
    items = list(constraints)
    surface = config.surface_altitude_m is not None
    pos_dim = 2 if surface else 3
    if len(items) < pos_dim:
        raise DegenerateGeometry(
            f"{len(items)} sum constraints cannot determine "
            f"{pos_dim} unknowns")
    gnss = np.array([_as_array(c.gnss_position) for c in items])
    leos = np.array([_as_array(c.leo_position) for c in items])
    sums = np.array([c.measured_sum_m for c in items])
    for c in items:
        if c.gnss_position.distance_to(c.leo_position) < _FOCUS_GUARD_M:
            raise FocusCoincidence(
                f"constraint {c.gnss_id}: foci coincide")

    if isinstance(config.initial_guess, str) and config.initial_guess == "auto":
        x0 = _auto_guess(np.vstack([gnss, leos]))
    else:
        x0 = _as_array(config.initial_guess)

    chart = _SurfaceChart(x0, config.surface_altitude_m) if surface else None
    point = (lambda x: chart.position(x[:2])) if surface else (lambda x: x[:3])

    def residual(x):
        p = point(x)
        return (np.linalg.norm(gnss - p, axis=1)
                + np.linalg.norm(leos - p, axis=1) - sums)

    def jacobian(x):
        p = point(x)
        dg = p - gnss
        dl = p - leos
        rows = (dg / np.linalg.norm(dg, axis=1)[:, None]
                + dl / np.linalg.norm(dl, axis=1)[:, None])
        if surface:
            rows = rows @ chart.jacobian(x[:2])
        return rows

    foci = np.vstack([gnss, leos])
    x, r, iterations, ok = _levenberg(
        residual, jacobian, np.zeros(2) if surface else x0, config,
        singular_points=None if surface else foci, pos_dim=pos_dim)
    if not ok:
        _raise_nonconvergence(x, r, iterations, position=point(x))
    return PositionSolution(
        position=EcefVector.from_array(point(x)),
        residuals_m=residual(x),
        iterations=iterations,
        converged=True,
    )
