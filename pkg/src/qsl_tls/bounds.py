"""Quantum speed limit bounds on the evolution time.

All trajectory routes work from the action int_0^tau 2 Delta E dt recorded by the
integrator; closed forms describe the composite pulse in the lambda0 -> infinity
limit. Distances use s = 2 arccos|<a|b>| throughout, so a time-independent
Mandelstam-Tamm bound reads arccos|<a|b>| / Delta E = (s/2) / Delta E.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .dynamics import (
    ControlSchedule,
    Trajectory,
    action_at,
    integrate_rk4,
    path_length,
    segment_variances,
)
from .errors import ConsistencyError, InsufficientActionError
from .protocols import Protocol, ProtocolKind, ProtocolSpec, build_protocol
from .states import (
    HamiltonianParams,
    PureState,
    endpoint_distance,
    fidelity_overlap,
    fubini_study_distance,
    theta_of,
)

ACTION_SLACK = 1e-9
SEGMENT_VARIANCE_TOL = 1e-9


def bound_TA_trajectory(traj: Trajectory, s_target: float) -> float:
    """Time at which the accumulated path length first reaches ``s_target``.

    The action is piecewise linear between samples, so a binary search over the
    samples followed by a linear solve inside the bracketing step gives the exact
    crossing of the interpolant.
    """
    if s_target < 0:
        raise ValueError("s_target must be nonnegative")
    if s_target == 0:
        return 0.0
    action = traj.cumulative_action
    total = action[-1]
    if total < s_target:
        deficit = s_target - total
        if deficit > ACTION_SLACK:
            raise InsufficientActionError(deficit)
        return traj.duration
    k = int(np.searchsorted(action, s_target, side="left"))
    if k == 0:
        return 0.0
    a0, a1 = action[k - 1], action[k]
    t0, t1 = traj.times[k - 1], traj.times[k]
    if a1 == a0:
        return float(t0)
    return float(t0 + (s_target - a0) * (t1 - t0) / (a1 - a0))


def _arccos_clamped(x: float) -> float:
    return math.acos(min(1.0, max(0.0, x)))


def bound_TA_closed(theta: float, omega: float) -> float:
    """Composite pulse, lambda0 -> infinity: zero once the first kick alone covers s."""
    s = endpoint_distance(theta)
    kick = 0.5 * math.pi * math.sin(theta)
    if kick >= s:
        return 0.0
    return (s - kick) / (2.0 * omega)


def bound_TB(traj: Trajectory) -> float:
    """(s / s_path) * T, cross-checked against arccos|<psi0|psi_T>| / mean Delta E."""
    T = traj.duration
    if T == 0:
        return 0.0
    s_path = path_length(traj)
    half = _arccos_clamped(fidelity_overlap(traj.initial, traj.final))
    s = 2.0 * half
    if s_path == 0.0:
        if s > ACTION_SLACK:
            raise ConsistencyError("state moved without accumulating action")
        return 0.0
    ratio_form = s / s_path * T
    mean_variance = s_path / (2.0 * T)
    average_form = half / mean_variance
    if abs(ratio_form - average_form) > 1e-10 * max(1.0, T):
        raise ConsistencyError(
            f"T_B routes disagree: {ratio_form!r} vs {average_form!r}"
        )
    return ratio_form


def bound_TB_closed(theta: float, omega: float) -> float:
    s = endpoint_distance(theta)
    T = s / (2.0 * omega)
    denom = s + math.pi * math.sin(theta)
    return s / denom * T


def bound_TC_raw(theta: float, omega: float) -> float:
    """(s - pi sin(theta)) / (2 omega); negative for small-gamma endpoints."""
    return (endpoint_distance(theta) - math.pi * math.sin(theta)) / (2.0 * omega)


def bound_TC_closed(theta: float, omega: float) -> float:
    return max(0.0, bound_TC_raw(theta, omega))


def bound_TC_trajectory(
    traj: Trajectory, variable_segments: Sequence[int], s_target: float | None = None
) -> float | None:
    """Evolution time worked out from s <= action(T) when the action grows linearly in T.

    The action of the segments listed in ``variable_segments`` is 2 Delta E T
    only when Delta E is constant on them; then s <= (s_path - 2 Delta E T) +
    2 Delta E T gives T >= T - (s_path - s) / (2 Delta E). Returns None when
    that structure is absent (no variable segments, or Delta E differs between
    them), in which case the bound cannot be worked out in closed form.
    """
    if not variable_segments or traj.duration == 0:
        return None
    values = np.concatenate([segment_variances(traj, i) for i in variable_segments])
    rate = float(np.mean(values))
    if rate == 0 or np.max(np.abs(values - rate)) > 1e-6 * max(1.0, rate):
        return None
    s = fubini_study_distance(traj.initial, traj.final) if s_target is None else s_target
    value = traj.duration - (path_length(traj) - s) / (2.0 * rate)
    return max(0.0, value)


def bound_Tm(s: float, delta_e_max: float) -> float:
    """(s/2) / max Delta E; an unbounded variance gives the trivial bound 0."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    if s == 0 or math.isinf(delta_e_max):
        return 0.0
    if delta_e_max <= 0:
        raise ValueError("a positive distance needs a positive maximum variance")
    return 0.5 * s / delta_e_max


def variance_envelope(omega: float, c: float) -> float:
    """A-priori |Delta E| <= |c| + |omega| for |lambda| <= c."""
    return abs(c) + abs(omega)


def mandelstam_tamm(a: PureState, b: PureState, delta_e: float) -> float:
    """Time-independent bound arccos|<a|b>| / Delta E."""
    half = _arccos_clamped(fidelity_overlap(a, b))
    if delta_e == 0:
        if half > 1e-7:
            raise ConsistencyError("stationary segment cannot move the state")
        return 0.0
    return half / delta_e


def piecewise_mt_bound(schedule: ControlSchedule, traj: Trajectory) -> float:
    """Sum over constant-lambda segments of each segment's Mandelstam-Tamm bound."""
    live = [seg for seg in schedule.segments if seg.duration > 0]
    if len(live) != len(traj.segment_lambdas):
        raise ValueError("trajectory was not sampled on this schedule's segments")
    total = 0.0
    for i, seg in enumerate(live):
        if seg.lambda_value != traj.segment_lambdas[i]:
            raise ValueError("trajectory segments do not match the schedule")
        lo, hi = traj.segment_bounds[i], traj.segment_bounds[i + 1]
        de = segment_variances(traj, i)
        if np.max(np.abs(de - de[0])) > SEGMENT_VARIANCE_TOL * max(1.0, de[0]):
            raise ConsistencyError(
                f"Delta E drifts by {np.max(np.abs(de - de[0])):.2e} inside segment {i}"
            )
        total += mandelstam_tamm(traj.state(lo), traj.state(hi), float(de[0]))
    return total


def piecewise_mt_closed(theta: float, omega: float) -> float:
    """Composite pulse: the kicks contribute nothing, the free arc is a geodesic."""
    return endpoint_distance(theta) / (2.0 * omega)


@dataclass
class BoundsReport:
    """Optimal time and every bound for one protocol configuration.

    ``T`` is the optimal evolution time (analytic for the composite pulse,
    solved for constrained kinds); ``duration`` is the simulated schedule length.
    Bounds without a value are None; ``methods`` says how each one was obtained.
    """

    kind: str
    omega: float
    gamma: float
    theta: float
    s: float
    T: float
    duration: float
    s_path: float
    fidelity: float
    T_A: float
    T_B: float
    T_C: float | None
    T_m: float
    T_piecewise: float
    T_A_closed: float | None = None
    T_B_closed: float | None = None
    T_C_closed: float | None = None
    T_C_raw: float | None = None
    T_piecewise_closed: float | None = None
    methods: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate(
    spec: ProtocolSpec, h: float | None = None, protocol: Protocol | None = None
) -> tuple[Protocol, Trajectory, BoundsReport]:
    """Build, integrate and bound one protocol."""
    protocol = protocol or build_protocol(spec)
    omega, gamma = spec.omega, spec.gamma
    theta = theta_of(omega, gamma)
    s = endpoint_distance(theta)
    traj = integrate_rk4(protocol.initial, protocol.schedule, h)
    fid = fidelity_overlap(traj.final, protocol.target) ** 2
    s_path = path_length(traj)
    closed = spec.kind is ProtocolKind.COMPOSITE

    if gamma == 0:
        report = BoundsReport(
            kind=spec.kind.value, omega=omega, gamma=gamma, theta=theta, s=0.0,
            T=0.0, duration=0.0, s_path=s_path, fidelity=fid,
            T_A=0.0, T_B=0.0, T_C=0.0, T_m=0.0, T_piecewise=0.0,
            T_A_closed=0.0 if closed else None,
            T_B_closed=0.0 if closed else None,
            T_C_closed=0.0 if closed else None,
            T_C_raw=0.0 if closed else None,
            T_piecewise_closed=0.0 if closed else None,
            methods={"all": "trivial"},
            metadata=dict(protocol.metadata),
        )
        return protocol, traj, report

    T_A = bound_TA_trajectory(traj, s)
    T_B = bound_TB(traj)
    T_piece = piecewise_mt_bound(protocol.schedule, traj)
    T_C = bound_TC_trajectory(traj, protocol.variable_segments, s)
    methods = {"T_A": "trajectory", "T_B": "trajectory", "T_piecewise": "trajectory"}
    methods["T_C"] = "trajectory" if T_C is not None else "unavailable"

    envelope = math.inf if closed else variance_envelope(omega, spec.c)
    T_m = bound_Tm(s, envelope)
    methods["T_m"] = "closed_form"

    report = BoundsReport(
        kind=spec.kind.value,
        omega=omega,
        gamma=gamma,
        theta=theta,
        s=s,
        T=protocol.optimal_time,
        duration=traj.duration,
        s_path=s_path,
        fidelity=fid,
        T_A=T_A,
        T_B=T_B,
        T_C=T_C,
        T_m=T_m,
        T_piecewise=T_piece,
        methods=methods,
        metadata=dict(protocol.metadata),
    )
    if closed:
        report.T_A_closed = bound_TA_closed(theta, omega)
        report.T_B_closed = bound_TB_closed(theta, omega)
        report.T_C_closed = bound_TC_closed(theta, omega)
        report.T_C_raw = bound_TC_raw(theta, omega)
        report.T_piecewise_closed = piecewise_mt_closed(theta, omega)
        methods.update(
            T_A_closed="closed_form",
            T_B_closed="closed_form",
            T_C_closed="closed_form",
            T_piecewise_closed="closed_form",
        )
    return protocol, traj, report


def ta_zero_crossing() -> float:
    """Angle theta* where (pi/2) sin(theta) = pi - 2 theta; T_A vanishes above it."""
    return brentq(lambda t: 0.5 * math.pi * math.sin(t) - (math.pi - 2.0 * t), 0.1, 1.5, xtol=1e-15)


def tc_zero_crossing() -> float:
    """Angle where pi sin(theta) = pi - 2 theta; T_C is clamped to zero above it."""
    return brentq(lambda t: math.pi * math.sin(t) - (math.pi - 2.0 * t), 0.1, 1.5, xtol=1e-15)
