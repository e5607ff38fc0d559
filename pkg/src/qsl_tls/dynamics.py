"""Time evolution under piecewise-constant drives.

A schedule is a list of constant-lambda segments. ``integrate_rk4`` runs classic
four-stage Runge-Kutta on i dpsi/dt = H(t) psi, renormalizing after every step,
and records the energy variance and the action integral int_0^t 2 Delta E dt'
(the length of the path traced on the Bloch sphere).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .states import (
    HamiltonianParams,
    PureState,
    bloch_angles,
    bloch_variance,
    bloch_xyz,
    fubini_study_distance,
)

# per-step cap h <= STEP_SCALE / max(omega, |lambda|) used when no step is given
STEP_SCALE = 1e-3


@dataclass(frozen=True)
class ControlSegment:
    lambda_value: float
    duration: float

    def __post_init__(self):
        if not math.isfinite(self.lambda_value):
            raise ValueError("lambda_value must be finite")
        if not (self.duration >= 0 and math.isfinite(self.duration)):
            raise ValueError(f"segment duration must be finite and >= 0, got {self.duration}")


@dataclass(frozen=True)
class ControlSchedule:
    omega: float
    segments: tuple[ControlSegment, ...]

    def __post_init__(self):
        segs = tuple(
            s if isinstance(s, ControlSegment) else ControlSegment(*s) for s in self.segments
        )
        if not segs:
            raise ValueError("schedule has no segments")
        object.__setattr__(self, "segments", segs)

    @property
    def total_duration(self) -> float:
        return math.fsum(s.duration for s in self.segments)

    @property
    def max_amplitude(self) -> float:
        return max(abs(s.lambda_value) for s in self.segments)

    def boundaries(self) -> list[float]:
        """Times 0 = t_0 <= t_1 <= ... <= t_n of the segment edges."""
        out = [0.0]
        for s in self.segments:
            out.append(out[-1] + s.duration)
        return out


@dataclass(frozen=True)
class Trajectory:
    """Time-sampled evolution.

    ``variances`` holds Delta E (not squared) under the Hamiltonian acting right
    after each sample; the last sample uses the final segment's Hamiltonian.
    ``segment_bounds[i]`` is the sample index where the i-th non-empty segment starts
    (with one trailing entry for the final sample).
    """

    times: np.ndarray
    states: np.ndarray
    variances: np.ndarray
    cumulative_action: np.ndarray
    omega: float
    segment_lambdas: tuple[float, ...] = ()
    segment_bounds: tuple[int, ...] = (0,)
    max_norm_drift: float = 0.0
    step_sizes: tuple[float, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.times)

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    def state(self, index: int) -> PureState:
        return PureState.from_vector(self.states[index], normalize=True)

    @property
    def initial(self) -> PureState:
        return self.state(0)

    @property
    def final(self) -> PureState:
        return self.state(-1)

    def bloch(self) -> np.ndarray:
        return bloch_xyz(self.states)

    def angles(self) -> tuple[np.ndarray, np.ndarray]:
        return bloch_angles(self.states)


def propagate_constant(state: PureState, omega: float, lam: float, dt: float) -> PureState:
    """Exact evolution exp(-i H dt)|state> under constant H = omega sx + lam sz."""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    u = propagator_matrix(omega, lam, dt)
    return PureState.from_vector(u @ state.as_array(), normalize=True)


def propagator_matrix(omega: float, lam: float, dt: float) -> np.ndarray:
    energy = math.hypot(omega, lam)
    if energy == 0.0:
        return np.eye(2, dtype=complex)
    nx, nz = omega / energy, lam / energy
    c, s = math.cos(energy * dt), math.sin(energy * dt)
    return np.array(
        [[c - 1j * s * nz, -1j * s * nx], [-1j * s * nx, c + 1j * s * nz]], dtype=complex
    )


def propagate_schedule(state: PureState, schedule: ControlSchedule) -> PureState:
    """Chain of closed-form propagators over every segment; the integrator's oracle."""
    psi = state.as_array()
    for seg in schedule.segments:
        psi = propagator_matrix(schedule.omega, seg.lambda_value, seg.duration) @ psi
    return PureState.from_vector(psi, normalize=True)


def rk4_step(psi: np.ndarray, hamiltonian: np.ndarray, h: float) -> np.ndarray:
    """One classic Runge-Kutta step for dpsi/dt = -i H psi (no renormalization)."""

    def f(v):
        return -1j * (hamiltonian @ v)

    k1 = f(psi)
    k2 = f(psi + 0.5 * h * k1)
    k3 = f(psi + 0.5 * h * k2)
    k4 = f(psi + h * k3)
    return psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_step_matrix(omega: float, lam: float, h: float) -> np.ndarray:
    """The linear map performed by one RK4 step under constant H.

    Applying ``rk4_step`` to the identity gives the step as a 2x2 matrix, so a
    constant segment can be stepped with one matrix-vector product per step.
    """
    ham = HamiltonianParams(omega, lam).matrix()
    return rk4_step(np.eye(2, dtype=complex), ham, h)


def default_step(omega: float, lam: float) -> float:
    return STEP_SCALE / max(abs(omega), abs(lam))


def _segment_steps(duration: float, h: float) -> tuple[int, float]:
    n = max(1, math.ceil(duration / h - 1e-9))
    return n, duration / n


def integrate_rk4(
    initial: PureState, schedule: ControlSchedule, h: float | None = None
) -> Trajectory:
    """Integrate the Schrodinger equation over a piecewise-constant schedule.

    Parameters
    ----------
    initial : PureState
        State at t = 0.
    schedule : ControlSchedule
        Segments to traverse. Zero-duration segments are skipped.
    h : float, optional
        Requested step. Each segment uses the largest step <= h that divides it
        into an integer number of steps. When omitted, every segment gets
        ``1e-3 / max(omega, |lambda|)`` for its own lambda.

    Returns
    -------
    Trajectory
        Samples at every step, including every segment boundary.
    """
    if h is not None and not h > 0:
        raise ValueError("step size must be positive")
    if not isinstance(schedule, ControlSchedule) or not schedule.segments:
        raise ValueError("schedule is empty")
    omega = schedule.omega

    psi = initial.as_array()
    psi = psi / np.linalg.norm(psi)
    times = [0.0]
    chunks = [psi[None, :]]
    lambdas: list[float] = []
    bounds = [0]
    steps_used: list[float] = []
    max_drift = 0.0
    t0 = 0.0
    n_samples = 1

    for seg in schedule.segments:
        if seg.duration == 0.0:
            continue
        h_seg = h if h is not None else default_step(omega, seg.lambda_value)
        n, dt = _segment_steps(seg.duration, h_seg)
        m = rk4_step_matrix(omega, seg.lambda_value, dt)
        m00, m01, m10, m11 = complex(m[0, 0]), complex(m[0, 1]), complex(m[1, 0]), complex(m[1, 1])
        a, b = complex(psi[0]), complex(psi[1])
        block = np.empty((n, 2), dtype=complex)
        drift = 0.0
        for k in range(n):
            a, b = m00 * a + m01 * b, m10 * a + m11 * b
            norm = math.sqrt(a.real * a.real + a.imag * a.imag + b.real * b.real + b.imag * b.imag)
            d = abs(norm - 1.0)
            if d > drift:
                drift = d
            a /= norm
            b /= norm
            block[k, 0] = a
            block[k, 1] = b
        max_drift = max(max_drift, drift)
        psi = block[-1]
        chunks.append(block)
        times.extend((t0 + dt * np.arange(1, n + 1)).tolist())
        t0 += seg.duration
        times[-1] = t0
        lambdas.append(seg.lambda_value)
        n_samples += n
        bounds.append(n_samples - 1)
        steps_used.append(dt)

    states = np.concatenate(chunks, axis=0)
    times_arr = np.asarray(times)
    variances, action = _variance_and_action(times_arr, states, omega, lambdas, bounds)
    return Trajectory(
        times=times_arr,
        states=states,
        variances=variances,
        cumulative_action=action,
        omega=omega,
        segment_lambdas=tuple(lambdas),
        segment_bounds=tuple(bounds),
        max_norm_drift=max_drift,
        step_sizes=tuple(steps_used),
    )


def _variance_and_action(times, states, omega, lambdas, bounds):
    """Delta E per sample and the trapezoid action, segment by segment.

    Delta E jumps at a boundary because H switches there, so each segment's
    trapezoid uses its own lambda at both of its end samples.
    """
    n = len(times)
    variances = np.zeros(n)
    action = np.zeros(n)
    if not lambdas:
        return variances, action
    chi, phi = bloch_angles(states)
    for i, lam in enumerate(lambdas):
        lo, hi = bounds[i], bounds[i + 1]
        de = np.sqrt(bloch_variance(chi[lo : hi + 1], phi[lo : hi + 1], omega, lam))
        variances[lo:hi] = de[:-1]
        if i == len(lambdas) - 1:
            variances[hi] = de[-1]
        dt = np.diff(times[lo : hi + 1])
        incr = np.cumsum(dt * (de[:-1] + de[1:]))  # 2 * trapezoid of Delta E
        action[lo + 1 : hi + 1] = action[lo] + incr
    return variances, action


def segment_variances(traj: Trajectory, index: int) -> np.ndarray:
    """Delta E over every sample of one segment, both ends under that segment's H."""
    lo, hi = traj.segment_bounds[index], traj.segment_bounds[index + 1]
    chi, phi = bloch_angles(traj.states[lo : hi + 1])
    return np.sqrt(bloch_variance(chi, phi, traj.omega, traj.segment_lambdas[index]))


def path_length(traj: Trajectory) -> float:
    """Total action int 2 Delta E dt, i.e. the length of the path on the sphere."""
    return float(traj.cumulative_action[-1])


def arc_length(traj: Trajectory) -> np.ndarray:
    """Cumulative sum of great-circle distances between consecutive samples.

    Independent of the variance: uses only the sampled states.
    """
    psi = traj.states
    ov = np.abs(np.sum(np.conj(psi[:-1]) * psi[1:], axis=1))
    steps = 2.0 * np.arccos(np.clip(ov, 0.0, 1.0))
    return np.concatenate([[0.0], np.cumsum(steps)])


def action_at(traj: Trajectory, tau: float) -> float:
    """Action int_0^tau 2 Delta E dt by linear interpolation between samples."""
    total = traj.duration
    if tau < 0 or tau > total * (1 + 1e-12) + 1e-15:
        raise ValueError(f"tau={tau} outside [0, {total}]")
    return float(np.interp(tau, traj.times, traj.cumulative_action))


def endpoint_distance_of(traj: Trajectory) -> float:
    return fubini_study_distance(traj.initial, traj.final)


def trajectory_records(traj: Trajectory) -> np.ndarray:
    """Export table, one row per sample.

    Columns: t, Re amp0, Im amp0, Re amp1, Im amp1, x, y, z, Delta E, action.
    """
    xyz = traj.bloch()
    return np.column_stack(
        [
            traj.times,
            traj.states[:, 0].real,
            traj.states[:, 0].imag,
            traj.states[:, 1].real,
            traj.states[:, 1].imag,
            xyz,
            traj.variances,
            traj.cumulative_action,
        ]
    )


TRAJECTORY_COLUMNS = ("t", "re_amp0", "im_amp0", "re_amp1", "im_amp1", "x", "y", "z", "delta_e", "action")


def random_schedule(
    rng: np.random.Generator,
    omega: float | None = None,
    max_segments: int = 4,
    max_lambda: float = 5.0,
    max_duration: float = 1.0,
) -> ControlSchedule:
    if omega is None:
        omega = float(rng.uniform(0.2, 3.0))
    n = int(rng.integers(1, max_segments + 1))
    segs: Sequence[ControlSegment] = [
        ControlSegment(float(rng.uniform(-max_lambda, max_lambda)), float(rng.uniform(0.01, max_duration)))
        for _ in range(n)
    ]
    return ControlSchedule(omega, tuple(segs))
