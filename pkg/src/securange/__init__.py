"""Secure positioning from two-way satellite ranging and authenticated
one-way broadcasts.

The measurement primitive is the sum constraint: one two-way exchange
with a responding satellite anchors the timeline, each authenticated
broadcast then pins the receiver to an ellipsoid of revolution whose
foci are the responder and the broadcaster.  Signal delays can only
lengthen these sums, so a receiver that checks geometric consistency
and ground-track containment cannot be silently displaced, while the
usual pseudorange receiver can.
"""

from .attacks import AttackScenario, bundled_scenario, plan_spoof
from .channel import AttackScript, BENIGN, NoiseModel
from .constants import SPEED_OF_LIGHT
from .errors import SimulationError
from .experiments import CoverageRun, MonteCarloGrid, run_attack_demo, run_coverage, run_residual_mc
from .geodesy import EcefVector, GeodeticPoint, ecef_to_geodetic, geodetic_to_ecef
from .integrity import IntegrityReport, clock_check, containment_check, residual_check
from .orbits import ConstellationSpec, GroundStation, bundled_constellation, bundled_stations, generate_walker
from .protocol import SumConstraint, run_session
from .solvers import PositionSolution, SolverConfig, ellipsoidal_multilaterate, spherical_multilaterate
from .timing import ClockModel, RangingExchange

__version__ = "0.1.0"

__all__ = [
    "AttackScenario",
    "AttackScript",
    "BENIGN",
    "ClockModel",
    "ConstellationSpec",
    "CoverageRun",
    "EcefVector",
    "GeodeticPoint",
    "GroundStation",
    "IntegrityReport",
    "MonteCarloGrid",
    "NoiseModel",
    "PositionSolution",
    "RangingExchange",
    "SimulationError",
    "SolverConfig",
    "SPEED_OF_LIGHT",
    "SumConstraint",
    "bundled_constellation",
    "bundled_scenario",
    "bundled_stations",
    "clock_check",
    "containment_check",
    "ecef_to_geodetic",
    "ellipsoidal_multilaterate",
    "generate_walker",
    "geodetic_to_ecef",
    "plan_spoof",
    "residual_check",
    "run_attack_demo",
    "run_coverage",
    "run_residual_mc",
    "run_session",
    "spherical_multilaterate",
    "__version__",
]
