"""Invariant suite run by ``qsl-tls verify``.

Every check returns the worst residual it saw next to the tolerance it was held
to, so a failing run says by how much.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import bounds as B
from .dynamics import (
    ControlSchedule,
    ControlSegment,
    arc_length,
    integrate_rk4,
    path_length,
    propagate_schedule,
    random_schedule,
    segment_variances,
)
from .io import render_csv
from .protocols import (
    ProtocolKind,
    ProtocolSpec,
    build_protocol,
    c_from_factor,
    constrained_schedule,
    endpoint_infidelity,
)
from .states import (
    HamiltonianParams,
    bloch_variance,
    endpoint_distance,
    fidelity_overlap,
    fubini_study_distance,
    ground_state,
    random_state,
    theta_of,
    to_bloch,
    variance_from_moments,
)
from .sweep import SWEEP_COLUMNS, SweepConfig, run_sweep, sign_changes


@dataclass
class Check:
    name: str
    passed: bool
    residual: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        text = f"[{mark}] {self.name}: worst residual {self.residual:.3e} (tol {self.tolerance:.1e})"
        return text + (f" -- {self.detail}" if self.detail else "")


def _check(name, residual, tol, detail="") -> Check:
    residual = float(residual)
    return Check(name, bool(residual <= tol), residual, tol, detail)


@dataclass
class VerifyOptions:
    step: float | None = None
    protocol: ProtocolKind | None = None
    lambda0: float = 1e4
    omega: float = 1.0
    seed: int = 12345
    samples: int = 1000
    schedules: int = 200


# --- quantum core -----------------------------------------------------------


def check_distance(opts: VerifyOptions, rng) -> list[Check]:
    worst_sym, worst_range, worst_zero = 0.0, 0.0, 0.0
    for _ in range(opts.samples):
        a, b = random_state(rng), random_state(rng)
        d_ab, d_ba = fubini_study_distance(a, b), fubini_study_distance(b, a)
        worst_sym = max(worst_sym, abs(d_ab - d_ba))
        worst_range = max(worst_range, max(0.0, -d_ab, d_ab - math.pi))
        worst_zero = max(worst_zero, fubini_study_distance(a, a))
        phase = complex(math.cos(1.3), math.sin(1.3))
        a2 = type(a)(a.amp0 * phase, a.amp1 * phase)
        worst_zero = max(worst_zero, fubini_study_distance(a, a2))
    return [
        _check("distance symmetric", worst_sym, 1e-12),
        _check("distance within [0, pi]", worst_range, 0.0),
        _check("distance zero for equal rays", worst_zero, 1e-12),
    ]


def check_variance_routes(opts: VerifyOptions, rng) -> list[Check]:
    worst = 0.0
    for _ in range(opts.samples):
        state = random_state(rng)
        params = HamiltonianParams(rng.uniform(0.05, 3.0), rng.uniform(-3.0, 3.0))
        chi, phi = to_bloch(state)
        bloch = float(bloch_variance(chi, phi, params.omega, params.lam))
        worst = max(worst, abs(bloch - variance_from_moments(state, params)))
    return [_check("Bloch-form variance equals matrix moments", worst, 1e-12)]


def check_ground_states(opts: VerifyOptions, rng) -> list[Check]:
    worst_var, worst_dist = 0.0, 0.0
    for _ in range(opts.samples):
        params = HamiltonianParams(rng.uniform(0.05, 3.0), rng.uniform(-3.0, 3.0))
        worst_var = max(worst_var, variance_from_moments(ground_state(params), params))
    for omega in np.linspace(0.2, 3.0, 5):
        for gamma in np.geomspace(0.01, 100.0, 10):
            a = ground_state(HamiltonianParams(omega, -gamma))
            b = ground_state(HamiltonianParams(omega, gamma))
            closed = endpoint_distance(theta_of(omega, gamma))
            worst_dist = max(worst_dist, abs(fubini_study_distance(a, b) - closed))
    return [
        _check("ground states have zero variance", worst_var, 1e-12),
        _check("endpoint distance equals pi - 2 theta", worst_dist, 1e-12),
    ]


# --- dynamics ---------------------------------------------------------------


def _suite_protocols(opts: VerifyOptions):
    kinds = [opts.protocol] if opts.protocol else list(ProtocolKind)
    out = []
    for kind in kinds:
        for gamma in (0.5, 2.0, 5.0):
            if kind is ProtocolKind.COMPOSITE:
                spec = ProtocolSpec(kind, opts.omega, gamma, lambda0=opts.lambda0)
            else:
                factor = 1.5 if kind is ProtocolKind.BANG_OFF_BANG else 0.5
                spec = ProtocolSpec(kind, opts.omega, gamma, c=c_from_factor(opts.omega, gamma, factor))
            out.append(build_protocol(spec))
    return out


def check_dynamics(opts: VerifyOptions, rng) -> list[Check]:
    drift, infid, geo, speed, arc = 0.0, 0.0, 0.0, 0.0, 0.0
    schedules = [(p.initial, p.schedule) for p in _suite_protocols(opts)]
    schedules += [(random_state(rng), random_schedule(rng)) for _ in range(opts.schedules)]
    for initial, schedule in schedules:
        traj = integrate_rk4(initial, schedule, opts.step)
        drift = max(drift, traj.max_norm_drift, float(np.max(np.abs(np.linalg.norm(traj.states, axis=1) - 1))))
        oracle = propagate_schedule(initial, schedule)
        infid = max(infid, 1.0 - fidelity_overlap(traj.final, oracle) ** 2)
        dist = fubini_study_distance(traj.initial, traj.final)
        geo = max(geo, dist - path_length(traj))
        arcs = arc_length(traj)
        sp = path_length(traj)
        if sp > 0:
            arc = max(arc, abs(arcs[-1] - sp) / sp)
        speed = max(speed, _speed_law_residual(traj, arcs))
    return [
        _check("norm drift per step", drift, 1e-10),
        _check("RK4 matches closed-form propagators (infidelity)", infid, 1e-8),
        _check("path length >= endpoint distance", geo, 1e-9),
        _check("path length equals summed great-circle arcs (relative)", arc, 1e-5),
        _check("arc-length speed equals 2 Delta E (relative)", speed, 1e-4),
    ]


def _speed_law_residual(traj, arcs) -> float:
    worst = 0.0
    for i in range(len(traj.segment_lambdas)):
        lo, hi = traj.segment_bounds[i], traj.segment_bounds[i + 1]
        if hi - lo < 2:
            continue
        t = traj.times[lo : hi + 1]
        s = arcs[lo : hi + 1]
        rate = (s[2:] - s[:-2]) / (t[2:] - t[:-2])
        target = 2.0 * traj.variances[lo + 1 : hi]
        mask = target > 1e-3 * max(1.0, float(np.max(target)))
        if np.any(mask):
            worst = max(worst, float(np.max(np.abs(rate[mask] - target[mask]) / target[mask])))
    return worst


# --- protocols --------------------------------------------------------------


def check_protocols(opts: VerifyOptions, rng) -> list[Check]:
    out = []
    kinds = [opts.protocol] if opts.protocol else list(ProtocolKind)
    constrained = [p for p in _suite_protocols(opts) if p.spec.kind is not ProtocolKind.COMPOSITE]
    if constrained:
        worst = max(endpoint_infidelity(p) for p in constrained)
        out.append(_check("constrained protocols reach the target (infidelity)", worst, 1e-9))
    if ProtocolKind.COMPOSITE in kinds:
        ratio = 0.0
        for lam0 in (10.0, 1e2, 1e3, opts.lambda0):
            p = build_protocol(ProtocolSpec(ProtocolKind.COMPOSITE, opts.omega, 2.0, lambda0=lam0))
            envelope = 2.0 * (opts.omega / lam0) ** 2
            ratio = max(ratio, endpoint_infidelity(p) / envelope)
        out.append(_check("composite infidelity within 2 (omega/lambda0)^2", ratio, 1.0))
        # middle-arc geometry is a kick-limit statement; check it with very short kicks
        p = build_protocol(ProtocolSpec(ProtocolKind.COMPOSITE, opts.omega, 2.0, lambda0=1e7 * opts.omega))
        traj = integrate_rk4(p.initial, p.schedule)
        lo, hi = traj.segment_bounds[1], traj.segment_bounds[2]
        _, phi = traj.angles()
        out.append(_check("composite middle arc at azimuth 3 pi/2", np.max(np.abs(phi[lo : hi + 1] - 1.5 * math.pi)), 1e-6))
        de = segment_variances(traj, 1)
        out.append(_check("composite middle arc has Delta E = omega", np.max(np.abs(de - opts.omega)), 1e-9))
    if ProtocolKind.BANG_BANG in kinds:
        worst = 0.0
        for p in _suite_protocols(VerifyOptions(protocol=ProtocolKind.BANG_BANG, omega=opts.omega)):
            traj = integrate_rk4(p.initial, p.schedule, opts.step)
            v = np.concatenate([segment_variances(traj, i) for i in range(len(traj.segment_lambdas))])
            worst = max(worst, float(np.max(v) - np.min(v)))
        out.append(_check("bang-bang Delta E constant", worst, 1e-6))
    if constrained:
        worst = 0.0
        for gamma in (0.5, 2.0, 5.0):
            factors = np.concatenate([np.linspace(0.2, 0.95, 8), np.geomspace(1.05, 100.0, 10)])
            durations = [
                constrained_schedule(opts.omega, gamma, c_from_factor(opts.omega, gamma, f))[0].total_duration
                for f in factors
            ]
            worst = max(worst, float(np.max(np.diff(durations))))
        out.append(_check("constrained duration nonincreasing in c", max(worst, 0.0), 1e-12))
    return out


# --- bounds -----------------------------------------------------------------


def _sweep_reports(opts: VerifyOptions, kind: ProtocolKind, gammas) -> list[B.BoundsReport]:
    config = SweepConfig(omega=opts.omega, protocol=kind, lambda0=opts.lambda0, step=opts.step)
    return [B.evaluate(config.spec_for(float(g)), h=opts.step)[2] for g in gammas]


def check_bounds(opts: VerifyOptions, rng) -> list[Check]:
    out = []
    kinds = [opts.protocol] if opts.protocol else list(ProtocolKind)
    gammas = np.concatenate([[0.0], np.geomspace(0.05, 20.0, 12)])
    dominance, ordering = 0.0, 0.0
    for kind in kinds:
        for r in _sweep_reports(opts, kind, gammas):
            traj_bounds = [r.T_A, r.T_B, r.T_m, r.T_piecewise] + ([r.T_C] if r.T_C is not None else [])
            dominance = max(dominance, max(b - r.duration for b in traj_bounds))
            closed = [b for b in (r.T_A_closed, r.T_B_closed, r.T_C_closed, r.T_piecewise_closed) if b is not None]
            if closed:
                dominance = max(dominance, max(b - r.T for b in closed))
            ordering = max(ordering, r.T_m - r.T_B)
            if r.T_C is not None:
                ordering = max(ordering, r.T_C - r.T_B)
            if r.T_C_closed is not None:
                ordering = max(ordering, r.T_C_closed - r.T_B_closed)
    out.append(_check("every bound <= T", dominance, 1e-9))
    out.append(_check("T_m <= T_B and T_C <= T_B", ordering, 1e-9))

    if ProtocolKind.COMPOSITE in kinds:
        omega = opts.omega
        sat = 0.0
        worst_name = ""
        theta = theta_of(omega, 1e3 * omega)
        T = B.piecewise_mt_closed(theta, omega)
        for name, value in (
            ("T_A", B.bound_TA_closed(theta, omega)),
            ("T_B", B.bound_TB_closed(theta, omega)),
            ("T_C", B.bound_TC_closed(theta, omega)),
            ("T_piecewise", B.piecewise_mt_closed(theta, omega)),
        ):
            gap = (T - value) / T
            if gap > sat:
                sat, worst_name = gap, name
        out.append(_check("bounds saturate to T at gamma = 1e3 omega (relative)", sat, 1e-3, f"worst: {worst_name}"))
        zero = [B.bound_TA_closed(theta_of(omega, 0.0), omega), B.bound_TB_closed(math.pi / 2, omega), B.bound_TC_closed(math.pi / 2, omega)]
        out.append(_check("bounds vanish at gamma = 0", max(zero), 0.0))

        grid = np.linspace(1e-3, 10.0 * omega, 2000)
        diff = [B.bound_TA_closed(theta_of(omega, g), omega) - B.bound_TB_closed(theta_of(omega, g), omega) for g in grid]
        changes = sign_changes(diff)
        out.append(_check("T_A - T_B changes sign once on (0, 10 omega]", abs(changes - 1), 0.0, f"{changes} sign changes"))

        agree_a, agree_b, piece_traj = 0.0, 0.0, 0.0
        for gamma in (0.5, 1.0, 2.0, 5.0):
            spec = ProtocolSpec(ProtocolKind.COMPOSITE, omega, gamma, lambda0=opts.lambda0)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                _, _, r = B.evaluate(spec, h=opts.step)
            agree_a = max(agree_a, abs(r.T_A - r.T_A_closed))
            agree_b = max(agree_b, abs(r.T_B - r.T_B_closed))
            piece_traj = max(piece_traj, abs(r.T_piecewise - r.duration))
        detail = f"lambda0 = {opts.lambda0:g}"
        out.append(_check("trajectory T_A matches closed form", agree_a, 1e-3, detail))
        out.append(_check("trajectory T_B matches closed form", agree_b, 1e-3, detail))
        piece_closed = max(
            abs(B.piecewise_mt_closed(theta_of(omega, g), omega) - math.atan2(g, omega) / omega)
            for g in np.geomspace(0.01, 1e3, 50)
        )
        out.append(_check("piecewise MT bound equals T (closed form)", piece_closed, 1e-9))
        out.append(_check("piecewise MT bound equals duration (trajectory)", piece_traj, 1e-4, detail))
    return out


# --- cli --------------------------------------------------------------------


def check_output(opts: VerifyOptions, rng) -> list[Check]:
    config = SweepConfig(omega=opts.omega, gamma_min=0.0, gamma_max=3.0, gamma_steps=4, protocol=opts.protocol or ProtocolKind.COMPOSITE, step=opts.step)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        first = render_csv(SWEEP_COLUMNS, run_sweep(config))
        second = render_csv(SWEEP_COLUMNS, run_sweep(config))
    header = first.splitlines()[0].split(",")
    return [
        _check("identical config gives identical CSV", 0.0 if first == second else 1.0, 0.0),
        _check("CSV header matches the column list", 0.0 if tuple(header) == SWEEP_COLUMNS else 1.0, 0.0),
    ]


SUITE: tuple[Callable[[VerifyOptions, np.random.Generator], list[Check]], ...] = (
    check_distance,
    check_variance_routes,
    check_ground_states,
    check_dynamics,
    check_protocols,
    check_bounds,
    check_output,
)


def run_suite(opts: VerifyOptions) -> list[Check]:
    rng = np.random.default_rng(opts.seed)
    results: list[Check] = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for check in SUITE:
            results.extend(check(opts, rng))
    return results
