"""Quantum speed limits and time-optimal control of a driven two-level system."""

from .bounds import BoundsReport, evaluate
from .dynamics import ControlSchedule, ControlSegment, Trajectory, integrate_rk4, propagate_constant
from .protocols import ProtocolKind, ProtocolSpec, build_protocol
from .states import HamiltonianParams, PureState, fubini_study_distance, ground_state

__version__ = "0.1.0"

__all__ = [
    "BoundsReport",
    "ControlSchedule",
    "ControlSegment",
    "HamiltonianParams",
    "ProtocolKind",
    "ProtocolSpec",
    "PureState",
    "Trajectory",
    "build_protocol",
    "evaluate",
    "fubini_study_distance",
    "ground_state",
    "integrate_rk4",
    "propagate_constant",
]
