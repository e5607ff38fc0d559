"""Time-optimal control schedules taking g(-gamma) to g(+gamma).

Three protocol families are supported:

* ``composite`` -- unconstrained lambda: a +lambda0 kick, free precession about x,
  then a -lambda0 kick, with lambda0 * t0 = pi/4.
* ``bang_off_bang`` -- |lambda| <= c with c > omega^2/gamma: +c, 0, -c.
* ``bang_bang`` -- |lambda| <= c with c < omega^2/gamma: +c, -c.

The constrained durations are solved numerically. Reflecting z -> -z maps the
initial ground state onto the target and turns each segment of a mirror-symmetric
schedule into the inverse of its partner, so the schedule reaches the target
exactly when its state at the midpoint lies on the equator (Bloch z = 0). The
solvers only need to hit that single condition.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .dynamics import ControlSchedule, ControlSegment, propagate_schedule
from .errors import UnreachableTargetError
from .states import HamiltonianParams, PureState, fidelity_overlap, ground_state, theta_of

SOLVER_FIDELITY = 1.0 - 1e-9


class ProtocolKind(str, Enum):
    COMPOSITE = "composite"
    BANG_OFF_BANG = "bang_off_bang"
    BANG_BANG = "bang_bang"

    @classmethod
    def parse(cls, value: "str | ProtocolKind") -> "ProtocolKind":
        if isinstance(value, cls):
            return value
        aliases = {"composite_unconstrained": "composite"}
        return cls(aliases.get(value, value))


@dataclass(frozen=True)
class ProtocolSpec:
    kind: ProtocolKind
    omega: float
    gamma: float
    lambda0: float | None = None
    c: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ProtocolKind.parse(self.kind))
        if self.omega <= 0:
            raise ValueError("omega must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.kind is not ProtocolKind.COMPOSITE and self.gamma > 0:
            if self.c is None or self.c <= 0:
                raise ValueError("constrained protocols need c > 0")
            critical = self.omega**2 / self.gamma
            if self.kind is ProtocolKind.BANG_OFF_BANG and not self.c > critical:
                raise ValueError(f"bang_off_bang needs c > omega^2/gamma = {critical:.6g}")
            if self.kind is ProtocolKind.BANG_BANG and not self.c < critical:
                raise ValueError(f"bang_bang needs c < omega^2/gamma = {critical:.6g}")


@dataclass(frozen=True)
class Protocol:
    """A built schedule plus what the bounds module needs to know about it.

    ``optimal_time`` is the analytic optimum for the composite pulse (the
    lambda0 -> infinity limit) and the solved duration for constrained kinds.
    ``variable_segments`` index the segments whose durations make up the
    evolution time when working the geometric inequality out for T.
    """

    spec: ProtocolSpec
    schedule: ControlSchedule
    optimal_time: float
    variable_segments: tuple[int, ...]
    metadata: dict = field(default_factory=dict)

    @property
    def initial(self) -> PureState:
        return ground_state(HamiltonianParams(self.spec.omega, -self.spec.gamma))

    @property
    def target(self) -> PureState:
        return ground_state(HamiltonianParams(self.spec.omega, self.spec.gamma))


def optimal_time_unconstrained(omega: float, gamma: float) -> float:
    """Optimal transfer time arctan(gamma/omega)/omega with unbounded lambda."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    return math.atan2(gamma, omega) / omega


def composite_pulse_schedule(omega: float, gamma: float, lambda0: float) -> ControlSchedule:
    """(+lambda0, t0), (0, T), (-lambda0, t0) with lambda0 t0 = pi/4.

    The positive kick comes first: it turns the initial azimuth pi into 3 pi/2,
    where precession about x runs along a meridian to the target.
    """
    if not lambda0 > 0:
        raise ValueError("lambda0 must be positive")
    if lambda0 < 10 * omega:
        warnings.warn(
            f"lambda0={lambda0} is not much larger than omega={omega}; "
            "the kicks will be visibly tilted",
            stacklevel=2,
        )
    t0 = math.pi / (4.0 * lambda0)
    middle = optimal_time_unconstrained(omega, gamma)
    return ControlSchedule(
        omega,
        (ControlSegment(lambda0, t0), ControlSegment(0.0, middle), ControlSegment(-lambda0, t0)),
    )


# --- constrained solver -------------------------------------------------------


def _rotate(vec: np.ndarray, axis: np.ndarray, angle):
    """Right-handed rotation of a Bloch vector (Rodrigues); ``angle`` may be an array."""
    angle = np.asarray(angle, dtype=float)[..., None]
    c, s = np.cos(angle), np.sin(angle)
    return vec * c + np.cross(axis, vec) * s + axis * np.dot(axis, vec) * (1.0 - c)


def _rotate_one(vec: np.ndarray, axis: np.ndarray, angle: float) -> np.ndarray:
    return _rotate(vec, axis, np.array([angle]))[0]


def _initial_bloch(omega: float, gamma: float) -> np.ndarray:
    theta = theta_of(omega, gamma)
    return np.array([-math.sin(theta), 0.0, math.cos(theta)])


def _first_root(f, upper: float, samples: int = 4096) -> float | None:
    """Smallest root of a vectorized f on (0, upper], bracketed on a grid then polished."""
    grid = np.linspace(0.0, upper, samples + 1)
    values = f(grid)
    hits = np.nonzero(values[1:] == 0.0)[0]
    flips = np.nonzero(values[:-1] * values[1:] < 0)[0]
    candidates = []
    if hits.size:
        candidates.append(float(grid[hits[0] + 1]))
    if flips.size:
        i = flips[0]
        root = brentq(lambda x: float(f(np.array([x]))[0]), grid[i], grid[i + 1], xtol=1e-15, rtol=1e-15)
        candidates.append(root)
    return min(candidates) if candidates else None


def _bang_bang_durations(omega: float, gamma: float, c: float, sign: float) -> float | None:
    """Kick duration t1 such that one kick leaves the state on the equator."""
    energy = math.hypot(omega, c)
    axis = np.array([omega, 0.0, sign * c]) / energy
    r0 = _initial_bloch(omega, gamma)

    # the first crossing, if any, happens within one full turn
    angle = _first_root(lambda a: _rotate(r0, axis, a)[:, 2], 2.0 * math.pi)
    if angle is None or angle <= 0:
        return None
    return angle / (2.0 * energy)


def _free_angle_to_equator(p: np.ndarray) -> np.ndarray:
    """Counter-clockwise precession angle about +x that brings p (..., 3) to z = 0."""
    beta = np.arctan2(p[..., 2], p[..., 1])
    angle = np.where(beta > 0, np.pi - beta, -beta)
    return np.where(np.abs(p[..., 2]) < 1e-15, 0.0, angle)


def _bang_off_bang_durations(
    omega: float, gamma: float, c: float, sign: float
) -> tuple[float, float]:
    """(t1, t2) minimizing 2 t1 + t2 over schedules that meet the midpoint condition.

    For any kick angle alpha the free-precession time needed to reach the
    equator is explicit, so the total time is a one-dimensional function of
    alpha; it is scanned on a grid and the best bracket refined.
    """
    energy = math.hypot(omega, c)
    axis = np.array([omega, 0.0, sign * c]) / energy
    r0 = _initial_bloch(omega, gamma)

    def total(alpha):
        return alpha / energy + _free_angle_to_equator(_rotate(r0, axis, alpha)) / omega

    grid = np.linspace(0.0, 2.0 * math.pi, 8193)
    values = total(grid)
    best = int(np.argmin(values))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, len(grid) - 1)]
    res = minimize_scalar(
        lambda a: float(total(np.array([a]))[0]),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-14},
    )
    alpha = float(res.x) if res.fun <= values[best] else float(grid[best])
    t1 = alpha / (2.0 * energy)
    t2 = float(_free_angle_to_equator(_rotate_one(r0, axis, alpha))) / omega
    return t1, t2


def constrained_schedule(omega: float, gamma: float, c: float) -> tuple[ControlSchedule, dict]:
    """Amplitude-limited optimal schedule; structure chosen by the regime c vs omega^2/gamma.

    Returns the schedule and metadata naming the sign of the first kick. Both
    kick orders are tried and the faster one that reaches the target is kept.
    """
    if not c > 0:
        raise ValueError("c must be positive")
    if not gamma > 0:
        raise ValueError("gamma must be positive for constrained protocols")
    critical = omega**2 / gamma
    if c == critical:
        raise ValueError("c equals omega^2/gamma; the protocol regime is ambiguous")
    initial = ground_state(HamiltonianParams(omega, -gamma))
    target = ground_state(HamiltonianParams(omega, gamma))
    max_total = 10.0 * math.pi / omega

    candidates = []
    for sign in (1.0, -1.0):
        if c > critical:
            t1, t2 = _bang_off_bang_durations(omega, gamma, c, sign)
            segs = (
                ControlSegment(sign * c, t1),
                ControlSegment(0.0, t2),
                ControlSegment(-sign * c, t1),
            )
            kind = ProtocolKind.BANG_OFF_BANG
        else:
            t1 = _bang_bang_durations(omega, gamma, c, sign)
            if t1 is None:
                continue
            segs = (ControlSegment(sign * c, t1), ControlSegment(-sign * c, t1))
            kind = ProtocolKind.BANG_BANG
        schedule = ControlSchedule(omega, segs)
        if schedule.total_duration > max_total:
            continue
        fid = fidelity_overlap(propagate_schedule(initial, schedule), target) ** 2
        if fid >= SOLVER_FIDELITY:
            candidates.append((schedule.total_duration, sign, schedule, kind, fid))

    if not candidates:
        raise UnreachableTargetError("target unreachable with given structure")
    duration, sign, schedule, kind, fid = min(candidates, key=lambda item: item[0])
    meta = {
        "kind": kind.value,
        "first_bang_sign": "+" if sign > 0 else "-",
        "c": c,
        "critical_c": critical,
        "solver_fidelity": fid,
    }
    return schedule, meta


def build_protocol(spec: ProtocolSpec) -> Protocol:
    """Schedule for a protocol spec; gamma = 0 gives the empty (zero-duration) schedule."""
    omega, gamma = spec.omega, spec.gamma
    if gamma == 0:
        schedule = ControlSchedule(omega, (ControlSegment(0.0, 0.0),))
        return Protocol(spec, schedule, 0.0, (), {"kind": spec.kind.value, "trivial": True})

    if spec.kind is ProtocolKind.COMPOSITE:
        lambda0 = spec.lambda0 if spec.lambda0 is not None else 10.0 * omega
        schedule = composite_pulse_schedule(omega, gamma, lambda0)
        return Protocol(
            spec,
            schedule,
            optimal_time_unconstrained(omega, gamma),
            (1,),
            {"kind": spec.kind.value, "lambda0": lambda0, "first_bang_sign": "+"},
        )

    schedule, meta = constrained_schedule(omega, gamma, spec.c)
    variable = (0, 1) if spec.kind is ProtocolKind.BANG_BANG else ()
    return Protocol(spec, schedule, schedule.total_duration, variable, meta)


def c_from_factor(omega: float, gamma: float, factor: float) -> float:
    """Amplitude bound c = factor * omega^2 / gamma."""
    return factor * omega**2 / gamma


def endpoint_infidelity(protocol: Protocol) -> float:
    final = propagate_schedule(protocol.initial, protocol.schedule)
    return 1.0 - fidelity_overlap(final, protocol.target) ** 2
