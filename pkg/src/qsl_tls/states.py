"""Pure states of a qubit, Bloch-sphere geometry and the driven two-level Hamiltonian.

The Hamiltonian is ``H = omega * sx + lam * sz`` with hbar = 1. A state is stored as
its two amplitudes in the {|0>, |1>} basis; the Bloch parametrization is

    |psi> = cos(chi/2)|0> + exp(i phi) sin(chi/2)|1>

so that the Bloch vector is (sin chi cos phi, sin chi sin phi, cos chi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, DegenerateHamiltonianError

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)

NORM_TOL = 1e-12
POLE_TOL = 1e-12
VARIANCE_CLAMP = 1e-14


@dataclass(frozen=True)
class PureState:
    """Normalized pair of complex amplitudes."""

    amp0: complex
    amp1: complex

    def __post_init__(self):
        object.__setattr__(self, "amp0", complex(self.amp0))
        object.__setattr__(self, "amp1", complex(self.amp1))
        norm2 = abs(self.amp0) ** 2 + abs(self.amp1) ** 2
        if abs(norm2 - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized: |psi|^2 = {norm2!r}")

    @classmethod
    def from_vector(cls, vec, normalize: bool = False) -> "PureState":
        v = np.asarray(vec, dtype=complex).reshape(2)
        if normalize:
            v = v / np.linalg.norm(v)
        return cls(v[0], v[1])

    def as_array(self) -> np.ndarray:
        return np.array([self.amp0, self.amp1], dtype=complex)

    def bloch_vector(self) -> "BlochVector":
        x, y, z = bloch_xyz(self.as_array())
        return BlochVector(float(x), float(y), float(z))


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class HamiltonianParams:
    """Coefficients of ``omega * sx + lam * sz`` (inverse-time units)."""

    omega: float
    lam: float = 0.0

    @property
    def energy(self) -> float:
        """Positive eigenvalue sqrt(omega^2 + lam^2)."""
        return math.hypot(self.omega, self.lam)

    def matrix(self) -> np.ndarray:
        return self.omega * SX + self.lam * SZ


KET0 = PureState(1.0, 0.0)
KET1 = PureState(0.0, 1.0)
# Bloch z = +1 is |0>, the sigma_z = +1 eigenstate.
UP_Z = KET0
DOWN_Z = KET1


def bloch_xyz(psi: np.ndarray) -> np.ndarray:
    """Bloch vector(s) of amplitude array(s) of shape (..., 2)."""
    psi = np.asarray(psi)
    a, b = psi[..., 0], psi[..., 1]
    cross = np.conj(a) * b
    return np.stack(
        [2.0 * cross.real, 2.0 * cross.imag, np.abs(a) ** 2 - np.abs(b) ** 2], axis=-1
    )


def bloch_angles(psi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``to_bloch`` on amplitude arrays of shape (..., 2)."""
    psi = np.asarray(psi)
    a, b = psi[..., 0], psi[..., 1]
    chi = 2.0 * np.arctan2(np.abs(b), np.abs(a))
    phi = np.mod(np.angle(b) - np.angle(a), 2.0 * np.pi)
    phi = np.where(np.sin(chi) < POLE_TOL, 0.0, phi)
    # mod can return exactly 2*pi for tiny negative inputs
    phi = np.where(phi >= 2.0 * np.pi, 0.0, phi)
    return chi, phi


def to_bloch(state: PureState) -> tuple[float, float]:
    """Polar angle chi in [0, pi] and azimuth phi in [0, 2 pi); phi = 0 at the poles."""
    chi, phi = bloch_angles(state.as_array())
    return float(chi), float(phi)


def from_bloch(chi: float, phi: float) -> PureState:
    if not 0.0 <= chi <= math.pi:
        raise ValueError(f"polar angle out of range: {chi}")
    c, s = math.cos(chi / 2.0), math.sin(chi / 2.0)
    amp1 = complex(math.cos(phi), math.sin(phi)) * s
    # cos^2 + sin^2 can miss 1 by an ulp; renormalize so the constructor check is exact
    norm = math.sqrt(c * c + abs(amp1) ** 2)
    return PureState(c / norm, amp1 / norm)


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the first nonzero amplitude is real and >= 0."""
    for amp in vec:
        if abs(amp) > 1e-15:
            return vec * (abs(amp) / amp)
    return vec


def ground_state(params: HamiltonianParams) -> PureState:
    """Lower eigenvector of ``omega sx + lam sz``.

    The Bloch vector of the ground state points opposite to (omega, 0, lam).
    """
    energy = params.energy
    if energy == 0.0:
        raise DegenerateHamiltonianError("Hamiltonian is zero; eigenbasis undefined")
    nx, nz = -params.omega / energy, -params.lam / energy
    # angle of (nx, nz) measured from +z; arctan2 keeps accuracy near both poles
    chi = math.atan2(abs(nx), nz)
    phi = 0.0 if nx >= 0 else math.pi
    vec = np.array(
        [math.cos(chi / 2.0), complex(math.cos(phi), math.sin(phi)) * math.sin(chi / 2.0)]
    )
    vec = _fix_phase(vec / np.linalg.norm(vec))
    return PureState(vec[0], vec[1])


def excited_state(params: HamiltonianParams) -> PureState:
    energy = params.energy
    if energy == 0.0:
        raise DegenerateHamiltonianError("Hamiltonian is zero; eigenbasis undefined")
    flipped = HamiltonianParams(-params.omega, -params.lam)
    return ground_state(flipped)


def overlap(a: PureState, b: PureState) -> complex:
    return a.amp0.conjugate() * b.amp0 + a.amp1.conjugate() * b.amp1


def fidelity_overlap(a: PureState, b: PureState) -> float:
    """|<a|b>|, clamped to [0, 1]."""
    return min(1.0, abs(overlap(a, b)))


def fubini_study_distance(a: PureState, b: PureState) -> float:
    """Geodesic distance 2 arccos|<a|b>| between two rays, in [0, pi].

    Evaluated as 2 atan2(|b_perp|, |<a|b>|) with b_perp the part of b orthogonal
    to a; arccos loses half the digits near |<a|b>| = 1.
    """
    ov = overlap(a, b)
    perp0 = b.amp0 - ov * a.amp0
    perp1 = b.amp1 - ov * a.amp1
    sin_half = math.sqrt(abs(perp0) ** 2 + abs(perp1) ** 2)
    return 2.0 * math.atan2(sin_half, abs(ov))


def bloch_variance(chi, phi, omega, lam):
    """Energy variance (Delta E^2) from Bloch angles; works on scalars and arrays.

    Negative roundoff above -1e-14 is clamped to zero.
    """
    s, c = np.sin(chi), np.cos(chi)
    var = (
        lam**2 * s**2
        + omega**2 * (1.0 - s**2 * np.cos(phi) ** 2)
        - 2.0 * lam * omega * s * c * np.cos(phi)
    )
    if np.any(var < -VARIANCE_CLAMP):
        raise ConsistencyError(f"negative energy variance {np.min(var):.3e}")
    return np.maximum(var, 0.0)


def energy_variance(state: PureState, params: HamiltonianParams) -> float:
    """Energy uncertainty Delta E (a standard deviation, not its square)."""
    chi, phi = to_bloch(state)
    return math.sqrt(float(bloch_variance(chi, phi, params.omega, params.lam)))


def variance_from_moments(state: PureState, params: HamiltonianParams) -> float:
    """<H^2> - <H>^2 by direct 2x2 matrix algebra (returns Delta E squared)."""
    psi = state.as_array()
    h = params.matrix()
    h_psi = h @ psi
    mean = np.vdot(psi, h_psi).real
    mean_sq = np.vdot(h_psi, h_psi).real
    return float(mean_sq - mean**2)


def theta_of(omega: float, gamma: float) -> float:
    """Angle theta = arctan(omega / gamma) in (0, pi/2]; pi/2 exactly at gamma = 0."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    if gamma == 0:
        return math.pi / 2.0
    return math.atan2(omega, gamma)


def endpoint_distance(theta: float) -> float:
    """Distance pi - 2 theta between g(-gamma) and g(+gamma)."""
    return math.pi - 2.0 * theta


def random_state(rng: np.random.Generator) -> PureState:
    """Haar-random pure state."""
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return PureState.from_vector(v, normalize=True)
