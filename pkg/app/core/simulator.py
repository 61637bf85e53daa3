"""
Offset-resolved propagation of pulse sequences

Each offset is an independent pure computation; evaluate_offsets fans them
out over a thread pool and merges the results in grid order.
"""

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, Sequence, TypeVar

import numpy as np

from app.core.composer import total_duration, unit_scale_for
from app.core.errors import InvalidParameterError
from app.core.fourier import series_value
from app.core.schema import (
    ApproximationRow,
    CoefficientSet,
    IdealInversionSpec,
    OffsetGrid,
    OffsetProfile,
    ProfileRow,
    PulseSequence,
    Segment,
    SegmentKind,
    SweepMode,
    UnitScale,
)
from app.core.su2 import (
    SU2Propagator,
    Spinor,
    apply,
    compose,
    distance_up_to_phase,
    identity,
    prop_const,
    rotation,
    state_distance,
    to_bloch,
    z_rotation,
)
from app.core.sweep import DEFAULT_MAX_PHASE_STEP, chirp_propagator, ideal_inversion

logger = logging.getLogger(__name__)

PROFILE_COLUMNS = ("offset_norm", "offset_khz", "x", "y", "z")

T = TypeVar("T")


def segment_propagator(
    segment: Segment,
    offset: float,
    mode: SweepMode = SweepMode.INTEGRATED,
    max_phase_step: float = DEFAULT_MAX_PHASE_STEP,
    ideal: Optional[IdealInversionSpec] = None,
) -> SU2Propagator:
    if segment.kind == SegmentKind.CONSTANT_RF:
        return prop_const(offset, segment.amplitude, segment.phase, segment.duration)
    if segment.kind == SegmentKind.DELAY:
        return z_rotation(offset * segment.duration)
    if segment.kind == SegmentKind.CHIRP:
        if mode == SweepMode.IDEAL:
            return ideal_inversion(ideal or segment.ideal or IdealInversionSpec(), offset)
        return chirp_propagator(segment.chirp, offset, max_phase_step)
    raise InvalidParameterError(f"unknown segment kind {segment.kind!r}")


def sequence_propagator(
    s: PulseSequence,
    offset: float,
    mode: SweepMode = SweepMode.INTEGRATED,
    max_phase_step: float = DEFAULT_MAX_PHASE_STEP,
    ideal: Optional[IdealInversionSpec] = None,
) -> SU2Propagator:
    """
    Time-ordered product over the segments (first segment acts first)

    In ideal mode every chirp is replaced by Rz(α)·Rx(π)·Rz(β); the ideal
    argument overrides the angles stored on the segments.
    """
    if not s.segments:
        return identity()
    factors = [segment_propagator(seg, offset, mode, max_phase_step, ideal) for seg in s.segments]
    return compose(reversed(factors))


def evaluate_offsets(fn: Callable[[float], T], offsets: Iterable[float], workers: int = 1) -> List[T]:
    """Apply fn to every offset; results come back in input order"""
    values = [float(w) for w in offsets]
    if workers <= 1 or len(values) < 2:
        return [fn(w) for w in values]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, values))


def _default_scale(s: PulseSequence) -> UnitScale:
    try:
        return unit_scale_for(s)
    except InvalidParameterError:
        return UnitScale()


def _profile(
    s: PulseSequence,
    grid: OffsetGrid,
    initial: Spinor,
    initial_label: str,
    mode: SweepMode,
    max_phase_step: float,
    scale: Optional[UnitScale],
    workers: int,
    ideal: Optional[IdealInversionSpec],
) -> OffsetProfile:
    scale = scale or _default_scale(s)

    def row(offset: float) -> ProfileRow:
        U = sequence_propagator(s, offset, mode, max_phase_step, ideal)
        bloch = to_bloch(apply(U, initial))
        return ProfileRow(
            offset=offset,
            offset_khz=offset * scale.khz_per_unit,
            x=bloch.x,
            y=bloch.y,
            z=bloch.z,
        )

    logger.info("Simulating %s (%s) on %d offsets", s.label, mode.value, grid.points)
    rows = evaluate_offsets(row, grid.offsets(), workers)
    return OffsetProfile(
        rows=rows,
        label=s.label,
        initial_state=initial_label,
        mode=mode,
        max_phase_step=max_phase_step,
        scale=scale,
    )


def excitation_profile(
    s: PulseSequence,
    grid: OffsetGrid,
    mode: SweepMode = SweepMode.INTEGRATED,
    max_phase_step: float = DEFAULT_MAX_PHASE_STEP,
    scale: Optional[UnitScale] = None,
    workers: int = 1,
    ideal: Optional[IdealInversionSpec] = None,
) -> OffsetProfile:
    """Bloch coordinates of the propagated +z state"""
    return _profile(s, grid, Spinor.up(), "+z", mode, max_phase_step, scale, workers, ideal)


def rotation_profile(
    s: PulseSequence,
    grid: OffsetGrid,
    mode: SweepMode = SweepMode.INTEGRATED,
    max_phase_step: float = DEFAULT_MAX_PHASE_STEP,
    scale: Optional[UnitScale] = None,
    workers: int = 1,
    ideal: Optional[IdealInversionSpec] = None,
) -> OffsetProfile:
    """Bloch coordinates of the propagated +y state"""
    return _profile(s, grid, Spinor.plus_y(), "+y", mode, max_phase_step, scale, workers, ideal)


def profile_csv(profile: OffsetProfile) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(PROFILE_COLUMNS)
    for row in profile.rows:
        writer.writerow([
            f"{row.offset:.12g}",
            f"{row.offset_khz:.12g}",
            f"{row.x:.15e}",
            f"{row.y:.15e}",
            f"{row.z:.15e}",
        ])
    return buffer.getvalue()


def _require_bare_waveform(s: PulseSequence) -> None:
    if any(segment.kind == SegmentKind.CHIRP for segment in s.segments):
        raise InvalidParameterError(f"{s.label} contains sweeps; a bare waveform is required")


def dephased_state_check(s: PulseSequence, grid: OffsetGrid, workers: int = 1) -> float:
    """
    Largest 1 - |<ψ|ψ_pred>| over the grid

    ψ is the exact image of +z under the waveform and ψ_pred the dephased
    equator state (e^{-iωT/2}, -i)/√2 with T the waveform duration.
    """
    _require_bare_waveform(s)
    T = total_duration(s)
    if T <= 0:
        raise InvalidParameterError("dephasing check needs a waveform of nonzero duration")

    def deviation(offset: float) -> float:
        state = apply(sequence_propagator(s, offset), Spinor.up())
        predicted = Spinor.of(np.exp(-0.5j * offset * T) / math.sqrt(2.0), -1j / math.sqrt(2.0))
        return state_distance(state, predicted)

    return max(evaluate_offsets(deviation, grid.offsets(), workers))


def _played_coefficients(s: PulseSequence) -> CoefficientSet:
    # The second half of the waveform plays u_0, u_1, …, u_M in order
    segments = [seg for seg in s.segments if seg.kind == SegmentKind.CONSTANT_RF]
    if s.design is None or len(segments) != 2 * s.design.M + 2:
        raise InvalidParameterError(f"{s.label} is not a Fourier-designed waveform")
    half = segments[s.design.M + 1:]
    return CoefficientSet(u=[seg.amplitude * math.cos(seg.phase) for seg in half])


def first_order_propagator(s: PulseSequence, offset: float) -> SU2Propagator:
    """
    Interaction-frame average: free precession over T after a rotation by
    the series angle about an equatorial axis at phase -ωT/2
    """
    _require_bare_waveform(s)
    c = _played_coefficients(s)
    T = total_duration(s)
    angle = series_value(c, s.design, offset)
    axis = (math.cos(-0.5 * offset * T), math.sin(-0.5 * offset * T), 0.0)
    return compose([z_rotation(offset * T), rotation(angle, axis)])


def approximation_error(s: PulseSequence, grid: OffsetGrid, workers: int = 1) -> List[ApproximationRow]:
    """distance_up_to_phase between the exact waveform propagator and its first-order form"""

    def distance(offset: float) -> ApproximationRow:
        exact = sequence_propagator(s, offset)
        return ApproximationRow(offset=offset, distance=distance_up_to_phase(exact, first_order_propagator(s, offset)))

    return evaluate_offsets(distance, grid.offsets(), workers)


def max_norm_deviation(profiles: Sequence[OffsetProfile]) -> float:
    return max(
        (abs(math.sqrt(r.x * r.x + r.y * r.y + r.z * r.z) - 1.0) for p in profiles for r in p.rows),
        default=0.0,
    )
