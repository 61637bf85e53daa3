"""
Spin-1/2 states and SU(2) propagators

Conventions used throughout the toolkit:
- spin operators are I_α = σ_α / 2, evolution is exp(-iHt)
- |c0| = 1 is the +z state
- H = ω·Iz + A·(cos φ·Ix + sin φ·Iy) for a constant slice
- compose([A, B]) = A·B, i.e. the rightmost factor acts first

Batched work (chirp integration) goes through the Cayley-Klein pair
(a, b) with U = [[a, -b*], [b, a*]].
"""

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike

from app.core.errors import InvalidParameterError
from app.core.schema import BlochVector, EulerAnglesZXZ

_I2 = np.eye(2, dtype=complex)
_DEGENERATE_TOL = 1e-12
_CHECK_TOL = 1e-9


def _readonly(values: ArrayLike, shape: Tuple[int, ...]) -> np.ndarray:
    array = np.array(values, dtype=complex).reshape(shape)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Spinor:
    """Normalized pure state (c0, c1)"""

    vector: np.ndarray

    def __post_init__(self):
        vector = _readonly(self.vector, (2,))
        norm = float(np.vdot(vector, vector).real)
        if not math.isfinite(norm) or abs(norm - 1.0) > _CHECK_TOL:
            raise InvalidParameterError(f"spinor norm {norm} differs from 1")
        object.__setattr__(self, "vector", vector)

    @classmethod
    def of(cls, c0: complex, c1: complex) -> "Spinor":
        return cls(np.array([c0, c1], dtype=complex))

    @classmethod
    def up(cls) -> "Spinor":
        """+z (ground) state"""
        return cls.of(1.0, 0.0)

    @classmethod
    def plus_y(cls) -> "Spinor":
        return cls.of(1.0 / math.sqrt(2.0), 1j / math.sqrt(2.0))

    @property
    def c0(self) -> complex:
        return complex(self.vector[0])

    @property
    def c1(self) -> complex:
        return complex(self.vector[1])


@dataclass(frozen=True, eq=False)
class SU2Propagator:
    """2x2 special unitary matrix"""

    matrix: np.ndarray

    def __post_init__(self):
        matrix = _readonly(self.matrix, (2, 2))
        if not np.all(np.isfinite(matrix)):
            raise InvalidParameterError("propagator entries must be finite")
        if np.abs(matrix @ matrix.conj().T - _I2).max() > _CHECK_TOL:
            raise InvalidParameterError("propagator is not unitary")
        det = matrix[0, 0] * matrix[1, 1] - matrix[0, 1] * matrix[1, 0]
        if abs(det - 1.0) > _CHECK_TOL:
            raise InvalidParameterError(f"propagator determinant {det} differs from 1")
        object.__setattr__(self, "matrix", matrix)

    def __matmul__(self, other: "SU2Propagator") -> "SU2Propagator":
        return SU2Propagator(self.matrix @ other.matrix)

    def adjoint(self) -> "SU2Propagator":
        return SU2Propagator(self.matrix.conj().T)

    @property
    def cayley_klein(self) -> Tuple[complex, complex]:
        return complex(self.matrix[0, 0]), complex(self.matrix[1, 0])


def from_cayley_klein(a: complex, b: complex) -> SU2Propagator:
    return SU2Propagator(np.array([[a, -np.conj(b)], [b, np.conj(a)]], dtype=complex))


def identity() -> SU2Propagator:
    return SU2Propagator(_I2)


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise InvalidParameterError(f"{name} must be finite, got {value}")


def cayley_klein(
    offset: ArrayLike,
    amplitude: ArrayLike,
    phase: ArrayLike,
    duration: ArrayLike,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Batched exact exponential of constant generators

    Returns the Cayley-Klein arrays (a, b) of exp(-i(ω·Iz + A(cos φ·Ix + sin φ·Iy))t).
    Broadcasts over all arguments.
    """
    offset, amplitude, phase, duration = np.broadcast_arrays(
        np.asarray(offset, dtype=float),
        np.asarray(amplitude, dtype=float),
        np.asarray(phase, dtype=float),
        np.asarray(duration, dtype=float),
    )
    rate = np.hypot(amplitude, offset)
    # sin(Ωt/2)/Ω without dividing by Ω
    k = 0.5 * duration * np.sinc(rate * duration / (2.0 * np.pi))
    a = np.cos(0.5 * rate * duration) - 1j * k * offset
    b = -1j * k * amplitude * np.exp(1j * phase)
    return a, b


def ordered_product(a: ArrayLike, b: ArrayLike) -> Tuple[complex, complex]:
    """
    Time-ordered product of a stack of Cayley-Klein pairs

    Element 0 acts first. Pairs are combined level by level, so the cost is
    a handful of vectorized passes rather than a Python loop per factor.
    """
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size == 0:
        return 1.0 + 0.0j, 0.0j
    while a.size > 1:
        if a.size % 2:
            a = np.append(a, 1.0 + 0.0j)
            b = np.append(b, 0.0j)
        early_a, early_b = a[0::2], b[0::2]
        late_a, late_b = a[1::2], b[1::2]
        a, b = (
            late_a * early_a - np.conj(late_b) * early_b,
            late_b * early_a + np.conj(late_a) * early_b,
        )
    return complex(a[0]), complex(b[0])


def prop_const(offset: float, amplitude: float, phase: float, duration: float) -> SU2Propagator:
    """Exact propagator of a constant rf slice (closed-form axis-angle)"""
    _require_finite(offset=offset, amplitude=amplitude, phase=phase, duration=duration)
    if duration < 0:
        raise InvalidParameterError(f"duration must be non-negative, got {duration}")
    if amplitude < 0:
        raise InvalidParameterError(f"amplitude must be non-negative, got {amplitude}")
    a, b = cayley_klein(offset, amplitude, phase, duration)
    return from_cayley_klein(complex(a), complex(b))


def rotation(angle: float, axis: Sequence[float]) -> SU2Propagator:
    """exp(-i·angle·(n·I)) for a nonzero axis n"""
    _require_finite(angle=angle)
    n = np.asarray(axis, dtype=float)
    length = float(np.linalg.norm(n))
    if n.shape != (3,) or not math.isfinite(length) or length == 0.0:
        raise InvalidParameterError(f"rotation axis must be a finite nonzero 3-vector, got {axis}")
    nx, ny, nz = n / length
    c, s = math.cos(angle / 2.0), math.sin(angle / 2.0)
    return from_cayley_klein(complex(c, -s * nz), -1j * s * complex(nx, ny))


def z_rotation(angle: float) -> SU2Propagator:
    _require_finite(angle=angle)
    half = cmath.exp(-0.5j * angle)
    return SU2Propagator(np.array([[half, 0.0], [0.0, half.conjugate()]], dtype=complex))


def x_rotation(angle: float) -> SU2Propagator:
    _require_finite(angle=angle)
    c, s = math.cos(angle / 2.0), math.sin(angle / 2.0)
    return SU2Propagator(np.array([[c, -1j * s], [-1j * s, c]], dtype=complex))


def compose(propagators: Iterable[SU2Propagator]) -> SU2Propagator:
    """Matrix product A·B·…; the rightmost factor acts first"""
    factors = list(propagators)
    if not factors:
        raise InvalidParameterError("compose requires at least one propagator")
    matrix = factors[0].matrix
    for factor in factors[1:]:
        matrix = matrix @ factor.matrix
    return SU2Propagator(matrix)


def apply(U: SU2Propagator, state: Spinor) -> Spinor:
    return Spinor(U.matrix @ state.vector)


def to_bloch(state: Spinor) -> BlochVector:
    coherence = state.vector[0].conjugate() * state.vector[1]
    return BlochVector(
        x=float(2.0 * coherence.real),
        y=float(2.0 * coherence.imag),
        z=float(abs(state.vector[0]) ** 2 - abs(state.vector[1]) ** 2),
    )


def euler_zxz(U: SU2Propagator) -> EulerAnglesZXZ:
    """
    Decompose U ∝ Rz(alpha)·Rx(theta)·Rz(beta) with theta in [0, π]

    At theta ∈ {0, π} only one combination of alpha and beta is defined;
    beta is set to 0 and the whole z-angle goes into alpha.
    """
    m = U.matrix / np.sqrt(U.matrix[0, 0] * U.matrix[1, 1] - U.matrix[0, 1] * U.matrix[1, 0])
    u00, u10 = complex(m[0, 0]), complex(m[1, 0])
    if abs(u10) < _DEGENERATE_TOL:
        return EulerAnglesZXZ(alpha=-2.0 * cmath.phase(u00), theta=0.0, beta=0.0)
    if abs(u00) < _DEGENERATE_TOL:
        return EulerAnglesZXZ(alpha=2.0 * (cmath.phase(u10) + math.pi / 2.0), theta=math.pi, beta=0.0)
    theta = 2.0 * math.atan2(abs(u10), abs(u00))
    total = -2.0 * cmath.phase(u00)
    difference = 2.0 * (cmath.phase(u10) + math.pi / 2.0)
    return EulerAnglesZXZ(alpha=0.5 * (total + difference), theta=theta, beta=0.5 * (total - difference))


def reconstruct(angles: EulerAnglesZXZ) -> SU2Propagator:
    return compose([z_rotation(angles.alpha), x_rotation(angles.theta), z_rotation(angles.beta)])


def distance_up_to_phase(U: SU2Propagator, V: SU2Propagator) -> float:
    """1 - |tr(U†V)|/2; zero iff U = e^{iγ}V"""
    overlap = abs(np.trace(U.matrix.conj().T @ V.matrix)) / 2.0
    return max(0.0, 1.0 - float(overlap))


def state_distance(a: Spinor, b: Spinor) -> float:
    """1 - |<a|b>|; insensitive to global phase"""
    return max(0.0, 1.0 - float(abs(np.vdot(a.vector, b.vector))))


def is_unitary(U: SU2Propagator, tol: float = 1e-10) -> bool:
    return float(np.abs(U.matrix @ U.matrix.conj().T - _I2).max()) <= tol


def random_su2(rng: np.random.Generator) -> SU2Propagator:
    """Haar-uniform SU(2) element from a random unit quaternion"""
    q = rng.normal(size=4)
    q = q / np.linalg.norm(q)
    return from_cayley_klein(complex(q[0], q[1]), complex(-q[2], q[3]))
