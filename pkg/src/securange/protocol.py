"""One positioning session: a two-way ranging exchange with a responding
satellite, plus authenticated one-way broadcasts from navigation satellites,
combined into sum-of-distance constraints.

A session freezes all geometry.  Satellite motion matters only across
sessions; within one exchange the flight times are microseconds to
milliseconds and the positions are treated as constant.

The central identity: with t1 the local challenge stamp, a the local
arrival stamp of a broadcast, dp the reported processing delay and
g = (responder transmit stamp - broadcast transmit stamp),

    sum / c = (a - t1) - dp + g

equals the summed distance receiver->responder plus navigation
satellite->receiver, whatever the broadcast schedule.  Delays inserted on
the return leg never appear in it; delays on the challenge leg or on a
broadcast add in directly, which is what the integrity checks exploit.
"""

from __future__ import annotations

from dataclasses import dataclass

from .channel import AttackScript, BENIGN, NoiseModel, propagate_signal, validate_script
from .constants import SPEED_OF_LIGHT
from .errors import DegenerateInput, StaleReference, UnauthenticatedResponse
from .geodesy import EcefVector
from .timing import ClockModel, RangingExchange, Timestamp, two_way_offset, two_way_tof

# Broadcast authentication keys are disclosed on a fixed cadence; a stamp
# gap at or beyond this is consistent with a forged-after-disclosure signal.
KEY_WINDOW_S = 30.0

# Slack added to the geometric flight-time ceiling in the loose
# synchronization check (receiver clocks are assumed no worse than this).
SYNC_SLACK_S = 1e-5


@dataclass(frozen=True)
class LeoResponse:
    """What the responding satellite reports back for one exchange."""

    sat_id: str
    position: EcefVector
    receive_stamp_s: float
    transmit_stamp_s: float
    processing_delay_s: float
    authenticated: bool = True


@dataclass(frozen=True)
class GnssBroadcast:
    """One authenticated navigation broadcast as seen by the receiver."""

    sat_id: str
    position: EcefVector
    transmit_stamp_s: float
    arrival_local: Timestamp
    authenticated: bool = True


@dataclass(frozen=True)
class SumConstraint:
    """measured_sum_m = distance(receiver, gnss) + distance(receiver, leo)
    as inferred from stamps.  stamp_gap_s is the responder transmit stamp
    minus the broadcast transmit stamp, kept for the key-window check."""

    gnss_id: str
    gnss_position: EcefVector
    leo_position: EcefVector
    measured_sum_m: float
    stamp_gap_s: float = 0.0


@dataclass(frozen=True)
class SignalEvent:
    """Trace record of one simulated signal leg (true times, not stamps)."""

    kind: str
    source: str
    destination: str
    depart_true_s: float
    arrive_true_s: float
    path_length_m: float
    injected_delay_s: float


@dataclass
class SessionResult:
    exchange: RangingExchange
    response: LeoResponse
    broadcasts: list
    constraints: list
    events: list

    def offset_estimate_s(self) -> float:
        return two_way_offset(self.exchange)

    def tof_estimate_s(self) -> float:
        return two_way_tof(self.exchange)


def _require_valid(script: AttackScript):
    if not validate_script(script):
        raise ValueError("attack script has negative or non-finite delays")


def run_exchange(
    ue_position: EcefVector,
    leo_position: EcefVector,
    *,
    t1_true_s: float = 0.0,
    processing_delay_s: float = 0.08,
    ue_clock: ClockModel | None = None,
    leo_clock: ClockModel | None = None,
    script: AttackScript = BENIGN,
    noise: NoiseModel | None = None,
    sat_id: str = "leo",
):
    """Simulate one challenge/response round trip at frozen geometry.

    The responder stamps arrival and departure on its own clock and
    reports their difference as the processing delay, so a responder
    clock bias cancels out of the report while a drift does not.

    Returns (RangingExchange, LeoResponse, [SignalEvent, SignalEvent]).
    """
    _require_valid(script)
    ue_clock = ue_clock if ue_clock is not None else ClockModel("ue")
    leo_clock = leo_clock if leo_clock is not None else ClockModel(sat_id)

    t1 = ue_clock.read(t1_true_s)
    up = propagate_signal(
        ue_position, leo_position, t1_true_s,
        extra_delay=script.forward_delay, noise=noise,
    )
    t2 = leo_clock.read(up.arrival_true_time)
    depart_true = up.arrival_true_time + processing_delay_s
    transmit_stamp = leo_clock.read(depart_true)
    reported = transmit_stamp.value - t2.value
    down = propagate_signal(
        leo_position, ue_position, depart_true,
        extra_delay=script.backward_delay, noise=noise,
    )
    t3 = ue_clock.read(down.arrival_true_time)

    exchange = RangingExchange(t1, t2, t3, reported, sat_id)
    response = LeoResponse(
        sat_id=sat_id,
        position=leo_position,
        receive_stamp_s=t2.value,
        transmit_stamp_s=transmit_stamp.value,
        processing_delay_s=reported,
    )
    events = [
        SignalEvent("challenge", "ue", sat_id, t1_true_s,
                    up.arrival_true_time, up.path_length_m,
                    script.forward_delay),
        SignalEvent("response", sat_id, "ue", depart_true,
                    down.arrival_true_time, down.path_length_m,
                    script.backward_delay),
    ]
    return exchange, response, events


def receive_broadcasts(
    ue_position: EcefVector,
    gnss_positions,
    epoch_true_s: float,
    *,
    ue_clock: ClockModel | None = None,
    gnss_clocks: dict | None = None,
    transmit_offsets: dict | None = None,
    script: AttackScript = BENIGN,
    noise: NoiseModel | None = None,
):
    """Simulate one-way broadcasts reaching the receiver.

    gnss_positions is a dict or an iterable of (sat_id, EcefVector).
    Each satellite transmits at epoch_true_s minus its entry in
    transmit_offsets (default 0: all broadcasts share the epoch).

    Returns (list[GnssBroadcast], list[SignalEvent]).
    """
    _require_valid(script)
    ue_clock = ue_clock if ue_clock is not None else ClockModel("ue")
    gnss_clocks = gnss_clocks or {}
    transmit_offsets = transmit_offsets or {}
    if isinstance(gnss_positions, dict):
        pairs = list(gnss_positions.items())
    else:
        pairs = list(gnss_positions)

    broadcasts, events = [], []
    for sid, pos in pairs:
        clock = gnss_clocks.get(sid) or ClockModel(sid)
        depart_true = epoch_true_s - transmit_offsets.get(sid, 0.0)
        stamp = clock.read(depart_true)
        prop = propagate_signal(
            pos, ue_position, depart_true,
            extra_delay=script.delay_for(sid), noise=noise,
        )
        arrival = ue_clock.read(prop.arrival_true_time)
        broadcasts.append(GnssBroadcast(sid, pos, stamp.value, arrival))
        events.append(SignalEvent(
            "broadcast", sid, "ue", depart_true,
            prop.arrival_true_time, prop.path_length_m,
            script.delay_for(sid),
        ))
    return broadcasts, events


def form_sums(t1: Timestamp, response: LeoResponse, broadcasts) -> list:
    """Combine stamps into one SumConstraint per broadcast.

    Rejects unauthenticated inputs, broadcasts that arrived at or before
    the challenge went out, and sums at or below the focal separation
    (no point in space satisfies those)."""
    if not response.authenticated:
        raise UnauthenticatedResponse(
            f"response from {response.sat_id} failed authentication")
    constraints = []
    for b in broadcasts:
        if not b.authenticated:
            raise UnauthenticatedResponse(
                f"broadcast from {b.sat_id} failed authentication")
        if b.arrival_local.clock_id != t1.clock_id:
            raise ValueError(
                f"broadcast stamped on clock {b.arrival_local.clock_id!r}, "
                f"challenge on {t1.clock_id!r}")
        if b.arrival_local.value <= t1.value:
            raise StaleReference(
                f"broadcast from {b.sat_id} arrived before the challenge "
                "was issued")
        gap = response.transmit_stamp_s - b.transmit_stamp_s
        total_s = (b.arrival_local.value - t1.value) \
            - response.processing_delay_s + gap
        total_m = SPEED_OF_LIGHT * total_s
        focal_m = b.position.distance_to(response.position)
        if total_m <= focal_m:
            raise DegenerateInput(
                f"sum {total_m:.3f} m for {b.sat_id} does not exceed the "
                f"focal separation {focal_m:.3f} m")
        constraints.append(SumConstraint(
            gnss_id=b.sat_id,
            gnss_position=b.position,
            leo_position=response.position,
            measured_sum_m=total_m,
            stamp_gap_s=gap,
        ))
    return constraints


def check_key_window(constraints, window_s: float = KEY_WINDOW_S) -> list:
    """Per-constraint verdicts: True when the broadcast stamp is recent
    enough that its authentication key cannot have been disclosed yet."""
    return [not (c.stamp_gap_s > 0.0 and c.stamp_gap_s >= window_s)
            for c in constraints]


def loose_sync_check(exchange: RangingExchange, max_tof_s: float,
                     slack_s: float = SYNC_SLACK_S) -> bool:
    """True when the estimated one-way flight time fits under the
    geometric ceiling for the responder's orbit (plus clock slack)."""
    return two_way_tof(exchange) <= max_tof_s + slack_s


def run_session(
    ue_position: EcefVector,
    leo_position: EcefVector,
    gnss_positions,
    *,
    t1_true_s: float = 0.0,
    processing_delay_s: float = 0.08,
    ue_clock: ClockModel | None = None,
    leo_clock: ClockModel | None = None,
    gnss_clocks: dict | None = None,
    transmit_offsets: dict | None = None,
    script: AttackScript = BENIGN,
    exchange_noise: NoiseModel | None = None,
    broadcast_noise: NoiseModel | None = None,
    sat_id: str = "leo",
) -> SessionResult:
    """One full session: exchange, broadcasts, sum constraints.

    The broadcast epoch is pinned to the undisturbed response departure
    time (geometry plus processing only), never to the possibly delayed
    actual departure: the navigation satellites run their own schedule,
    which an attacker touching the exchange cannot shift.  With honest
    clocks and a benign channel the responder transmit stamp therefore
    equals every broadcast stamp bitwise and the stamp gaps are exactly
    zero.
    """
    ue_clock = ue_clock if ue_clock is not None else ClockModel("ue")
    leo_clock = leo_clock if leo_clock is not None else ClockModel(sat_id)

    exchange, response, events = run_exchange(
        ue_position, leo_position,
        t1_true_s=t1_true_s,
        processing_delay_s=processing_delay_s,
        ue_clock=ue_clock, leo_clock=leo_clock,
        script=script, noise=exchange_noise, sat_id=sat_id,
    )
    clean = propagate_signal(ue_position, leo_position, t1_true_s)
    epoch_true = clean.arrival_true_time + processing_delay_s
    broadcasts, b_events = receive_broadcasts(
        ue_position, gnss_positions, epoch_true,
        ue_clock=ue_clock, gnss_clocks=gnss_clocks,
        transmit_offsets=transmit_offsets,
        script=script, noise=broadcast_noise,
    )
    constraints = form_sums(exchange.t1_u, response, broadcasts)
    return SessionResult(
        exchange=exchange,
        response=response,
        broadcasts=broadcasts,
        constraints=constraints,
        events=events + b_events,
    )
