"""Signal propagation with adversarial delays and Gaussian range noise.

The adversary owns the channel but can only delay: every extra term is
clamped to be nonnegative at validation time, and arrivals are always
at or after the geometric flight time plus those delays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import SPEED_OF_LIGHT
from .errors import NegativeDelay
from .geodesy import EcefVector


class NoiseModel:
    """Zero-mean Gaussian range noise (metres) with a private seeded stream.

    A fresh instance replays the same sequence for the same seed; seeds
    may be ints or tuples (tuples derive independent per-trial streams).
    """

    def __init__(self, sigma_m: float = 0.0, seed=0):
        if sigma_m < 0.0:
            raise ValueError("noise sigma must be nonnegative")
        self.sigma_m = sigma_m
        self.seed = seed
        self._rng = np.random.default_rng(seed)

    def draw_m(self) -> float:
        """One range-error sample in metres.  sigma == 0 draws nothing."""
        if self.sigma_m == 0.0:
            return 0.0
        return float(self._rng.normal(0.0, self.sigma_m))

    def reset(self):
        self._rng = np.random.default_rng(self.seed)


@dataclass
class AttackScript:
    """Per-session delay schedule (seconds).  All values must be >= 0.

    forward_delay   delays the challenge on its way up to the satellite;
    backward_delay  delays the response coming back down;
    gnss_delays     per-satellite delays on broadcast signals, keyed by id;
    gs_gnss_delay   delay on the broadcast feeding a ground-station
                    reference node (the timing-takeover schemes).
    """

    forward_delay: float = 0.0
    backward_delay: float = 0.0
    gnss_delays: dict = field(default_factory=dict)
    gs_gnss_delay: float = 0.0

    def delay_for(self, sat_id: str) -> float:
        return self.gnss_delays.get(sat_id, 0.0)


BENIGN = AttackScript()


def validate_script(script: AttackScript) -> bool:
    """True iff every delay in the script is finite and nonnegative."""
    values = [script.forward_delay, script.backward_delay, script.gs_gnss_delay]
    values.extend(script.gnss_delays.values())
    return all(math.isfinite(v) and v >= 0.0 for v in values)


@dataclass(frozen=True)
class PropagationResult:
    arrival_true_time: float
    path_length_m: float


def propagate_signal(
    from_pos: EcefVector,
    to_pos: EcefVector,
    depart_true_time: float,
    extra_delay: float = 0.0,
    noise: NoiseModel | None = None,
) -> PropagationResult:
    """Arrival time of a signal sent between two fixed points.

    The noisy range (geometric distance plus one Gaussian draw) is what
    the receiver effectively times; the adversarial extra_delay then
    adds on top and can only push the arrival later.
    """
    if extra_delay < 0.0:
        raise NegativeDelay(f"extra delay {extra_delay} < 0")
    distance = from_pos.distance_to(to_pos)
    if noise is not None:
        distance += noise.draw_m()
    arrival = depart_true_time + distance / SPEED_OF_LIGHT + extra_delay
    return PropagationResult(arrival_true_time=arrival, path_length_m=distance)
