"""Clocks, timestamps, and two-way ranging algebra.

A challenge leaves the user at t1 (user clock), is received by the
satellite at t2 (satellite clock), and the response lands back at t3
(user clock).  Everything downstream works off those three stamps and
the reported processing delay: no party ever needs a trusted absolute
clock on the user side.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientSamples, NegativeRtt


@dataclass(frozen=True)
class Timestamp:
    """A clock reading.  clock_id records whose clock produced it;
    values from different clocks must not be mixed silently."""

    value: float
    clock_id: str


@dataclass(frozen=True)
class ClockModel:
    """Affine clock: reading = true_time + bias + drift * (true_time - epoch)."""

    clock_id: str
    bias_s: float = 0.0
    drift: float = 0.0
    epoch_s: float = 0.0

    def __post_init__(self):
        if abs(self.drift) >= 1e-3:
            raise ValueError(f"drift {self.drift} is outside the plausible range")

    def read(self, true_time: float) -> Timestamp:
        value = true_time + self.bias_s + self.drift * (true_time - self.epoch_s)
        return Timestamp(value, self.clock_id)


def clock_read(clock: ClockModel, true_time: float) -> Timestamp:
    return clock.read(true_time)


@dataclass(frozen=True)
class RangingExchange:
    """The three stamps of one two-way exchange plus the reported
    processing delay (seconds the responder says it held the signal)."""

    t1_u: Timestamp
    t2_l: Timestamp
    t3_u: Timestamp
    processing_delay_s: float
    sat_id: str = "leo"

    def __post_init__(self):
        if self.processing_delay_s < 0.0:
            raise NegativeRtt(f"processing delay {self.processing_delay_s} < 0")
        if self.t3_u.value <= self.t1_u.value:
            raise NegativeRtt("response stamp does not follow the challenge stamp")
        if self.t1_u.clock_id != self.t3_u.clock_id:
            raise ValueError("t1 and t3 must come from the same (user) clock")


def two_way_offset(x: RangingExchange) -> float:
    """Estimated offset of the satellite clock relative to the user clock.

    ((t2 - t1) - (t3 - processing - t2)) / 2: the outbound and return
    legs bracket the true offset; symmetric paths cancel it out.  An
    adversarial forward delay inflates the estimate by half, a backward
    delay deflates it by half.
    """
    outbound = x.t2_l.value - x.t1_u.value
    inbound = x.t3_u.value - x.processing_delay_s - x.t2_l.value
    return (outbound - inbound) / 2.0


def two_way_tof(x: RangingExchange) -> float:
    """Estimated one-way flight time: (t3 - t1 - processing) / 2.

    Lives entirely on the user clock, so the satellite's offset never
    enters.  Either directional delay inflates the estimate by half.
    """
    rtt = x.t3_u.value - x.t1_u.value - x.processing_delay_s
    if rtt < 0.0:
        raise NegativeRtt(f"round trip minus processing is negative ({rtt} s)")
    return rtt / 2.0


def drift_estimate(samples) -> float:
    """Least-squares slope of (true_time, offset) pairs, s/s."""
    samples = list(samples)
    if len(samples) < 2:
        raise InsufficientSamples("need at least two samples to fit a drift")
    times = np.array([t for t, _ in samples], dtype=float)
    offsets = np.array([o for _, o in samples], dtype=float)
    if np.ptp(times) == 0.0:
        raise InsufficientSamples("all samples share one epoch; slope is undefined")
    slope, _ = np.polyfit(times, offsets, 1)
    return float(slope)
