"""
Adiabatic inversions and the double-sweep refocusing block

Θ(ω) is either the ideal Euler form Rz(α)·Rx(π)·Rz(β) or a numerically
integrated linear chirp. Δ(ω, τ) = Θ·exp(-iωτ·Iz)·Θ is proportional to
exp(+iωτ·Iz) whenever Θ inverts, independently of α and β.
"""

import logging
import math
from typing import Union

import numpy as np

from app.core.cache import cache_manager
from app.core.errors import InvalidParameterError
from app.core.schema import AdiabaticityReport, ChirpSpec, DoubleSweepBlock, IdealInversionSpec
from app.core.su2 import (
    SU2Propagator,
    Spinor,
    apply,
    cayley_klein,
    compose,
    euler_zxz,
    from_cayley_klein,
    ordered_product,
    to_bloch,
    x_rotation,
    z_rotation,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_PHASE_STEP = 0.05
_CHUNK = 1 << 16


def ideal_inversion(spec: IdealInversionSpec, offset: float) -> SU2Propagator:
    return compose([
        z_rotation(spec.alpha(offset)),
        x_rotation(IdealInversionSpec.CENTER_ANGLE),
        z_rotation(spec.beta(offset)),
    ])


def _chain(late: tuple, early: tuple) -> tuple:
    (la, lb), (ea, eb) = late, early
    return la * ea - np.conj(lb) * eb, lb * ea + np.conj(la) * eb


def _integrate_chirp(spec: ChirpSpec, offset: float, max_phase_step: float) -> SU2Propagator:
    # In the frame following the rf phase the generator is (ω - f(t))·Iz + A·Ix;
    # the fixed-frame propagator is z_rotation(φ(D)) times that one.
    detuning_bound = max(abs(offset - spec.f_start), abs(offset - spec.f_end))
    rate_bound = math.hypot(detuning_bound, spec.amplitude)
    substeps = max(1, math.ceil(spec.duration * rate_bound / max_phase_step))
    h = spec.duration / substeps

    # Two-term Magnus step: for a generator linear in t the commutator term
    # is h³/12·A·(d/dt)(ω - f)·Iy, i.e. a constant tilt of the rf phase.
    drift = -(spec.f_end - spec.f_start) / spec.duration
    tilt = h * h * drift / 12.0
    amplitude = spec.amplitude * math.hypot(1.0, tilt)
    phase = math.atan2(tilt, 1.0)

    total = (1.0 + 0.0j, 0.0j)
    for start in range(0, substeps, _CHUNK):
        index = np.arange(start, min(start + _CHUNK, substeps))
        midpoints = (index + 0.5) * h
        a, b = cayley_klein(offset - spec.frequency(midpoints), amplitude, phase, h)
        total = _chain(ordered_product(a, b), total)

    logger.debug("chirp ω=%.6g: %d substeps of %.3e", offset, substeps, h)
    frame = z_rotation(float(spec.phase(spec.duration)))
    return frame @ from_cayley_klein(complex(total[0]), complex(total[1]))


def chirp_propagator(
    spec: ChirpSpec,
    offset: float,
    max_phase_step: float = DEFAULT_MAX_PHASE_STEP,
) -> SU2Propagator:
    """
    Propagator of a constant-amplitude linear chirp at one offset

    Each substep is a fourth-order Magnus step about its midpoint and
    advances the phase by at most max_phase_step.
    """
    if not math.isfinite(offset):
        raise InvalidParameterError(f"offset must be finite, got {offset}")
    if not (math.isfinite(max_phase_step) and max_phase_step > 0):
        raise InvalidParameterError(f"max_phase_step must be positive, got {max_phase_step}")
    return cache_manager.get_or_compute(
        spec,
        offset,
        max_phase_step,
        lambda: _integrate_chirp(spec, offset, max_phase_step),
    )


def inversion_efficiency(U: SU2Propagator) -> float:
    """-z of U applied to +z; +1 is a perfect inversion"""
    return -to_bloch(apply(U, Spinor.up())).z


def euler_center_deviation(U: SU2Propagator) -> float:
    """|π - θ| of the ZXZ decomposition"""
    return abs(math.pi - euler_zxz(U).theta)


def inversion_propagator(
    inversion: Union[ChirpSpec, IdealInversionSpec],
    offset: float,
    max_phase_step: float = DEFAULT_MAX_PHASE_STEP,
) -> SU2Propagator:
    if isinstance(inversion, ChirpSpec):
        return chirp_propagator(inversion, offset, max_phase_step)
    return ideal_inversion(inversion, offset)


def double_sweep(
    block: DoubleSweepBlock,
    offset: float,
    max_phase_step: float = DEFAULT_MAX_PHASE_STEP,
) -> SU2Propagator:
    """Θ·exp(-iωτ·Iz)·Θ with both inversions identical"""
    theta = inversion_propagator(block.inversion, offset, max_phase_step)
    return compose([theta, z_rotation(offset * block.delay), theta])


def adiabaticity_report(spec: ChirpSpec) -> AdiabaticityReport:
    amplitude_squared = spec.amplitude ** 2
    return AdiabaticityReport(
        sweep_rate=spec.sweep_rate,
        amplitude_squared=amplitude_squared,
        ratio=amplitude_squared / spec.sweep_rate,
    )
