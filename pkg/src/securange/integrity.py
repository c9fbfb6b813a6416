"""Post-solution integrity checks.

A solved fix is only trusted when every enabled check passes:

  containment   the fix's ground projection lies inside at least one
                spherical triangle spanned by the ground projections of
                the ranging anchors and a broadcast satellite;
  residual      every measured sum is geometrically consistent with the
                fix;
  clock         the two-way round trip matches the fix-to-responder
                distance;
  drift         the responder clock offset does not slew implausibly;
  key window    no broadcast stamp predates its key disclosure;
  loose sync    the one-way flight time fits the responder's orbit.

Delay-only attacks can place the baseline fix almost anywhere, but they
can only lengthen signal paths: the fix they induce is pushed outside
the anchor triangles or leaves sum residuals no position can explain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import SPEED_OF_LIGHT
from .geodesy import (
    EcefVector,
    SphericalTriangle,
    point_in_spherical_triangle,
    subsatellite_point,
    triangle_solid_angle,
)
from .solvers import sum_residuals
from .timing import RangingExchange, drift_estimate, two_way_tof

# Triangles thinner than this solid angle cannot give a meaningful
# containment verdict and are recorded as degenerate instead.
MIN_SOLID_ANGLE_SR = 1e-10

# Default ceiling on |geometric sum - measured sum| at the fix.
RESIDUAL_THRESHOLD_M = 50.0

# Default ceiling on the fitted responder clock slew.
DRIFT_BOUND = 1e-4

# Clock check slack beyond the noise allowance (timestamp quantization,
# filter lag).
CLOCK_SLACK_S = 1e-7


@dataclass(frozen=True)
class TriangleVerdict:
    label: str
    contains: bool
    solid_angle_sr: float
    degenerate: bool


@dataclass(frozen=True)
class ContainmentResult:
    passed: bool
    verdicts: tuple

    def n_containing(self) -> int:
        return sum(1 for v in self.verdicts if v.contains)

    def n_degenerate(self) -> int:
        return sum(1 for v in self.verdicts if v.degenerate)


@dataclass(frozen=True)
class ResidualVerdict:
    passed: bool
    max_abs_m: float
    threshold_m: float


@dataclass(frozen=True)
class ClockVerdict:
    passed: bool
    mismatch_s: float
    tolerance_s: float


@dataclass(frozen=True)
class DriftVerdict:
    passed: bool
    drift: float
    bound: float


def containment_check(position, anchors, gnss_positions=None,
                      min_solid_angle_sr: float = MIN_SOLID_ANGLE_SR
                      ) -> ContainmentResult:
    """Test the fix's ground projection against anchor triangles.

    anchors: the ranging anchor positions (two anchors pair with each
    entry of gnss_positions as third vertex; exactly three anchors form
    a single triangle on their own).  The check passes when at least one
    non-degenerate triangle contains the projection.
    """
    fix = subsatellite_point(position)
    anchor_subs = [subsatellite_point(a) for a in anchors]
    triangles = []
    if len(anchors) == 3 and not gnss_positions:
        triangles.append(("anchors", anchor_subs))
    elif len(anchors) == 2 and gnss_positions is not None:
        # An empty satellite list yields no triangles and therefore a
        # vacuous fail, not an error.
        for sid, pos in (gnss_positions.items()
                         if isinstance(gnss_positions, dict)
                         else gnss_positions):
            triangles.append((sid, anchor_subs + [subsatellite_point(pos)]))
    else:
        raise ValueError(
            "need two anchors plus broadcast satellites, or exactly three "
            "anchors")

    verdicts = []
    passed = False
    for label, (a, b, c) in triangles:
        omega = triangle_solid_angle(a, b, c)
        if omega < min_solid_angle_sr:
            verdicts.append(TriangleVerdict(label, False, omega, True))
            continue
        inside = point_in_spherical_triangle(
            fix, SphericalTriangle.from_vertices(a, b, c))
        passed = passed or inside
        verdicts.append(TriangleVerdict(label, inside, omega, False))
    return ContainmentResult(passed, tuple(verdicts))


def residual_check(constraints, position,
                   threshold_m: float = RESIDUAL_THRESHOLD_M
                   ) -> ResidualVerdict:
    """Largest absolute gap between measured sums and the sums the fix
    would produce geometrically."""
    worst = float(np.max(np.abs(sum_residuals(constraints, position))))
    return ResidualVerdict(worst <= threshold_m, worst, threshold_m)


def clock_check(exchange: RangingExchange, position, leo_position,
                sigma_m: float = 0.0) -> ClockVerdict:
    """Compare the measured round trip against the fix geometry.

    The tolerance allows two one-way noise draws at sigma_m plus fixed
    slack.  Return-leg delays inflate the round trip but cancel out of
    the sum constraints, so this mismatch is their only footprint.
    """
    flight = 2.0 * two_way_tof(exchange)
    pos = position if isinstance(position, EcefVector) \
        else EcefVector.from_array(np.asarray(position, dtype=float))
    expected = 2.0 * pos.distance_to(leo_position) / SPEED_OF_LIGHT
    mismatch = flight - expected
    tol = 2.0 * sigma_m / SPEED_OF_LIGHT + CLOCK_SLACK_S
    return ClockVerdict(abs(mismatch) <= tol, mismatch, tol)


def drift_check(samples, bound: float = DRIFT_BOUND) -> DriftVerdict:
    """Fit the responder clock offset over repeated exchanges; an
    attacker walking the offset to fake motion slews far faster than any
    honest oscillator."""
    slope = drift_estimate(samples)
    return DriftVerdict(abs(slope) <= bound, slope, bound)


@dataclass(frozen=True)
class IntegrityReport:
    """Bundle of whichever checks a pipeline ran; None means skipped.
    accepted() requires every enabled check to pass."""

    containment: ContainmentResult | None = None
    residual: ResidualVerdict | None = None
    clock: ClockVerdict | None = None
    drift: DriftVerdict | None = None
    key_window: tuple | None = None
    sync_ok: bool | None = None

    def _verdicts(self):
        out = []
        if self.containment is not None:
            out.append(("containment", self.containment.passed))
        if self.residual is not None:
            out.append(("sum-residual", self.residual.passed))
        if self.clock is not None:
            out.append(("clock", self.clock.passed))
        if self.drift is not None:
            out.append(("drift", self.drift.passed))
        if self.key_window is not None:
            out.append(("key-window", all(self.key_window)))
        if self.sync_ok is not None:
            out.append(("loose-sync", self.sync_ok))
        return out

    def accepted(self) -> bool:
        checks = self._verdicts()
        return bool(checks) and all(ok for _, ok in checks)

    def failing_checks(self) -> tuple:
        """Names of enabled checks that did not pass; empty when clean.
        A report with no enabled checks rejects with no named culprit."""
        return tuple(name for name, ok in self._verdicts() if not ok)

    def as_text(self) -> str:
        if self.accepted():
            lines = ["verdict: accept"]
        else:
            failing = ", ".join(self.failing_checks())
            suffix = f" ({failing})" if failing else " (no checks enabled)"
            lines = [f"verdict: reject{suffix}"]

        if self.containment is None:
            lines.append("containment: skipped")
        else:
            c = self.containment
            word = "pass" if c.passed else "fail"
            lines.append(
                f"containment: {word} ({c.n_containing()} of "
                f"{len(c.verdicts)} triangles contain the fix, "
                f"{c.n_degenerate()} degenerate)")

        if self.residual is None:
            lines.append("sum-residual: skipped")
        else:
            r = self.residual
            word = "pass" if r.passed else "fail"
            lines.append(
                f"sum-residual: {word} (max {r.max_abs_m!r} m, "
                f"threshold {r.threshold_m!r} m)")

        if self.clock is None:
            lines.append("clock: skipped")
        else:
            k = self.clock
            word = "pass" if k.passed else "fail"
            lines.append(
                f"clock: {word} (mismatch {k.mismatch_s!r} s, "
                f"tolerance {k.tolerance_s!r} s)")

        if self.drift is None:
            lines.append("drift: skipped")
        else:
            d = self.drift
            word = "pass" if d.passed else "fail"
            lines.append(
                f"drift: {word} (slope {d.drift!r}, bound {d.bound!r})")

        if self.key_window is None:
            lines.append("key-window: skipped")
        else:
            ok = sum(1 for v in self.key_window if v)
            word = "pass" if all(self.key_window) else "fail"
            lines.append(
                f"key-window: {word} ({ok} of {len(self.key_window)} "
                "stamps inside the window)")

        if self.sync_ok is None:
            lines.append("loose-sync: skipped")
        else:
            lines.append(f"loose-sync: {'pass' if self.sync_ok else 'fail'}")

        return "\n".join(lines) + "\n"
