"""Adversary planning and the spoofable baseline receiver.

plan_spoof answers the attacker's question: which per-satellite
broadcast delays, together with a return-leg delay on the two-way
exchange, make the baseline receiver compute a chosen fake position?
The return-leg delay shifts the receiver's clock correction by half of
itself, uniformly shrinking every pseudorange; the per-satellite delays
then shape the remainder.  Every delay must come out nonnegative, which
fails whenever some broadcast satellite sits too low in the direction
of the displacement, so feasibility depends on the constellation
snapshot.

run_scheme models the takeover of a ground reference node whose time
comes from broadcast reception: delaying that feed makes the node
stamp (or trigger) its responses early relative to reality, and every
sum constraint comes out short by the feed delay times c.  Shortening
is exactly what satellite anchors make impossible, which is the case
for anchoring in orbit rather than on the ground.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .channel import AttackScript, propagate_signal
from .constants import SPEED_OF_LIGHT
from .errors import ConfigError, DegenerateInput, InfeasiblePlan, NegativeDelay
from .geodesy import EcefVector, GeodeticPoint, elevation_angle, geodetic_to_ecef
from .orbits import GroundStation, bundled_constellation, generate_walker, propagate, visible_satellites
from .protocol import (
    LeoResponse,
    SessionResult,
    SignalEvent,
    form_sums,
    receive_broadcasts,
)
from . import textconfig
from .timing import ClockModel, RangingExchange, Timestamp, two_way_offset

C = SPEED_OF_LIGHT


@dataclass(frozen=True)
class SpoofPlan:
    """Delay schedule that would move the baseline fix to fake_position.

    gnss_delays may contain negative entries; then the plan is not
    executable (feasible is False) and script() refuses to build."""

    true_position: EcefVector
    fake_position: EcefVector
    backward_delay_s: float
    gnss_delays: dict
    feasible: bool

    def worst_margin_s(self) -> float:
        """Smallest planned delay; negative means infeasible."""
        return min(self.gnss_delays.values())

    def script(self) -> AttackScript:
        if not self.feasible:
            raise InfeasiblePlan(
                f"plan needs a negative broadcast delay "
                f"({self.worst_margin_s():.3e} s); pick another epoch or a "
                "larger return-leg delay")
        return AttackScript(backward_delay=self.backward_delay_s,
                            gnss_delays=dict(self.gnss_delays))


def plan_spoof(true_position: EcefVector, fake_position: EcefVector,
               gnss_positions, backward_delay_s: float = 0.0) -> SpoofPlan:
    """Solve for the delay schedule that lands the baseline fix on
    fake_position.

    Each broadcast delay is the range difference the fake position
    implies, plus the uniform credit of half the return-leg delay:
    delaying the response makes the receiver believe its clock runs
    ahead, which shortens every pseudorange by c*backward/2 and buys
    slack for satellites that would otherwise need time to run
    backwards.
    """
    if backward_delay_s < 0.0:
        raise NegativeDelay(f"backward delay {backward_delay_s} < 0")
    credit = backward_delay_s / 2.0
    delays = {}
    for sid, pos in (gnss_positions.items()
                     if isinstance(gnss_positions, dict)
                     else gnss_positions):
        shift = (pos.distance_to(fake_position)
                 - pos.distance_to(true_position)) / C
        delays[sid] = shift + credit
    feasible = bool(delays) and min(delays.values()) >= 0.0
    return SpoofPlan(true_position, fake_position, backward_delay_s,
                     delays, feasible)


def victim_pseudoranges(session: SessionResult):
    """The baseline receiver's view: one-way pseudoranges, clock-corrected
    with the two-way offset estimate instead of a solved clock unknown.

    Honest inputs give exact geometric ranges whatever the receiver
    clock bias.  Returns (position, range_m) pairs ready for the
    spherical solver.
    """
    delta = two_way_offset(session.exchange)
    out = []
    for b in session.broadcasts:
        rho = C * ((b.arrival_local.value + delta) - b.transmit_stamp_s)
        out.append((b.position, rho))
    return out


def run_scheme(
    ue_position: EcefVector,
    gs_position: EcefVector,
    gnss_positions,
    *,
    scheme: str = "A",
    feed_delay_s: float = 0.0,
    t1_true_s: float = 0.0,
    processing_delay_s: float = 0.08,
    ue_clock: ClockModel | None = None,
) -> SessionResult:
    """Exchange with a ground reference node whose time is slaved to a
    delayed broadcast feed.

    scheme A: the node transmits when the (delayed) timing tick arrives,
    stamps the departure with the tick's face value, and honestly
    reports the longer wait it measured.
    scheme B: the node's whole clock lags by the feed delay; it responds
    after its nominal processing time and both its stamps are early.

    Either way every sum constraint shrinks by exactly c*feed_delay_s.
    """
    if feed_delay_s < 0.0:
        raise NegativeDelay(f"feed delay {feed_delay_s} < 0")
    if scheme not in ("A", "B"):
        raise ValueError(f"unknown scheme {scheme!r}; expected 'A' or 'B'")
    ue_clock = ue_clock if ue_clock is not None else ClockModel("ue")

    t1 = ue_clock.read(t1_true_s)
    up = propagate_signal(ue_position, gs_position, t1_true_s)
    t2_true = up.arrival_true_time
    nominal_depart = t2_true + processing_delay_s

    if scheme == "A":
        actual_depart = nominal_depart + feed_delay_s
        receive_stamp = t2_true
        transmit_stamp = nominal_depart
        reported = actual_depart - t2_true
    else:
        actual_depart = nominal_depart
        receive_stamp = t2_true - feed_delay_s
        transmit_stamp = nominal_depart - feed_delay_s
        reported = transmit_stamp - receive_stamp

    down = propagate_signal(gs_position, ue_position, actual_depart)
    t3 = ue_clock.read(down.arrival_true_time)
    exchange = RangingExchange(t1, Timestamp(receive_stamp, "gs"), t3,
                               reported, "gs")
    response = LeoResponse(
        sat_id="gs",
        position=gs_position,
        receive_stamp_s=receive_stamp,
        transmit_stamp_s=transmit_stamp,
        processing_delay_s=reported,
    )
    events = [
        SignalEvent("challenge", "ue", "gs", t1_true_s, t2_true,
                    up.path_length_m, 0.0),
        SignalEvent("response", "gs", "ue", actual_depart,
                    down.arrival_true_time, down.path_length_m,
                    feed_delay_s),
    ]
    broadcasts, b_events = receive_broadcasts(
        ue_position, gnss_positions, nominal_depart, ue_clock=ue_clock)
    constraints = form_sums(exchange.t1_u, response, broadcasts)
    return SessionResult(
        exchange=exchange,
        response=response,
        broadcasts=broadcasts,
        constraints=constraints,
        events=events + b_events,
    )


@dataclass(frozen=True)
class AttackScenario:
    """A named, fully pinned spoofing configuration: who stands where,
    which constellations serve, which epoch the attack runs at."""

    name: str
    true_point: GeodeticPoint
    fake_point: GeodeticPoint
    backward_delay_s: float
    epoch_s: float
    elevation_mask_deg: float
    leo_constellation: str
    gnss_constellations: tuple
    anchor_separation_s: float
    noise_sigma_m: float = 0.0
    # set for timing-takeover scenarios: the responder is a ground
    # reference node fed by a (possibly delayed) broadcast timing signal
    scheme: str | None = None
    feed_delay_s: float = 0.0
    gs_point: GeodeticPoint | None = None

    def true_position(self) -> EcefVector:
        return geodetic_to_ecef(self.true_point)

    def fake_position(self) -> EcefVector:
        return geodetic_to_ecef(self.fake_point)

    def gs_position(self) -> EcefVector:
        if self.gs_point is None:
            raise DegenerateInput(
                f"scenario {self.name!r} has no ground reference node")
        return geodetic_to_ecef(self.gs_point)


def scenario_snapshot(scenario: AttackScenario):
    """Materialize the scenario's satellite geometry.

    Returns (anchor_first, anchor_second, gnss_pairs):

      anchor_first    the responding satellite at the scenario epoch,
                      chosen as the highest-elevation member of the LEO
                      shell above the mask as seen from the true site;
      anchor_second   the same vehicle one anchor separation later;
      gnss_pairs      [(id, position), ...] for every broadcast
                      satellite above the mask at the scenario epoch.

    Broadcast positions are taken at the epoch of the first exchange,
    which is the one the sum constraints come from.
    """
    site = GroundStation("site", scenario.true_point)
    sats = generate_walker(bundled_constellation(scenario.leo_constellation))
    visible = visible_satellites(site, sats, scenario.epoch_s,
                                 scenario.elevation_mask_deg)
    if not visible:
        raise DegenerateInput(
            f"no {scenario.leo_constellation} satellite above "
            f"{scenario.elevation_mask_deg} deg at epoch {scenario.epoch_s}")
    station_pos = site.position()
    best_index, anchor_first = max(
        visible, key=lambda iv: elevation_angle(station_pos, iv[1]))
    anchor_second = propagate(sats[best_index],
                              scenario.epoch_s + scenario.anchor_separation_s)

    gnss_pairs = []
    for name in scenario.gnss_constellations:
        shell = generate_walker(bundled_constellation(name))
        for i, pos in visible_satellites(site, shell, scenario.epoch_s,
                                         scenario.elevation_mask_deg):
            gnss_pairs.append((f"{name}-{i:02d}", pos))
    if not gnss_pairs:
        raise DegenerateInput(
            f"no broadcast satellite above {scenario.elevation_mask_deg} "
            f"deg at epoch {scenario.epoch_s}")
    return anchor_first, anchor_second, gnss_pairs


_SCENARIO_REQUIRED = (
    "name",
    "true_latitude_deg", "true_longitude_deg",
    "fake_latitude_deg", "fake_longitude_deg",
    "backward_delay_s", "epoch_s", "elevation_mask_deg",
    "leo_constellation", "gnss_constellations", "anchor_separation_s",
)
_SCENARIO_OPTIONAL = ("true_altitude_m", "fake_altitude_m", "noise_sigma_m",
                      "scheme", "feed_delay_s", "gs_latitude_deg",
                      "gs_longitude_deg", "gs_altitude_m")


def load_scenario(path) -> AttackScenario:
    sections = textconfig.load_text_config(path)
    sec = textconfig.one_section(sections, "scenario", path)
    textconfig.check_keys(sec, _SCENARIO_REQUIRED + _SCENARIO_OPTIONAL,
                          required=_SCENARIO_REQUIRED, path=path)
    true_point = GeodeticPoint(
        textconfig.get_float(sec, "true_latitude_deg", path),
        textconfig.get_float(sec, "true_longitude_deg", path),
        textconfig.get_float(sec, "true_altitude_m", path, default=0.0),
    )
    fake_point = GeodeticPoint(
        textconfig.get_float(sec, "fake_latitude_deg", path),
        textconfig.get_float(sec, "fake_longitude_deg", path),
        textconfig.get_float(sec, "fake_altitude_m", path, default=0.0),
    )
    scheme = sec.get("scheme")
    gs_point = None
    if scheme is not None:
        scheme = scheme.strip().upper()
        if scheme not in ("A", "B"):
            raise ConfigError(f"unknown scheme {scheme!r}; expected A or B",
                              path, sec.line)
        gs_point = GeodeticPoint(
            textconfig.get_float(sec, "gs_latitude_deg", path),
            textconfig.get_float(sec, "gs_longitude_deg", path),
            textconfig.get_float(sec, "gs_altitude_m", path, default=0.0),
        )
    return AttackScenario(
        name=textconfig.get_str(sec, "name", path),
        true_point=true_point,
        fake_point=fake_point,
        backward_delay_s=textconfig.get_float(sec, "backward_delay_s", path),
        epoch_s=textconfig.get_float(sec, "epoch_s", path),
        elevation_mask_deg=textconfig.get_float(
            sec, "elevation_mask_deg", path),
        leo_constellation=textconfig.get_str(sec, "leo_constellation", path),
        gnss_constellations=tuple(
            textconfig.get_list(sec, "gnss_constellations", path)),
        anchor_separation_s=textconfig.get_float(
            sec, "anchor_separation_s", path),
        noise_sigma_m=textconfig.get_float(
            sec, "noise_sigma_m", path, default=0.0),
        scheme=scheme,
        feed_delay_s=textconfig.get_float(sec, "feed_delay_s", path,
                                          default=0.0),
        gs_point=gs_point,
    )


def bundled_scenario(name: str) -> AttackScenario:
    """Load a scenario shipped with the package by bare name."""
    root = Path(__file__).parent / "data" / "scenarios"
    path = root / f"{name.replace('-', '_')}.cfg"
    if not path.exists():
        known = sorted(p.stem.replace("_", "-") for p in root.glob("*.cfg"))
        raise FileNotFoundError(
            f"no bundled scenario {name!r}; available: {', '.join(known)}")
    return load_scenario(path)
