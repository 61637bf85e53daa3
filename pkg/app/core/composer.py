"""
Composition of broadband excitation and rotation sequences

Sequences are emitted in time order (first segment acts first), i.e. the
operator products
    excitation: Δ(T/2)·U(θ)·(Δ(T)·U(θ))^(n-1)
    rotation:   Δ(T/2)·U(θ)·(Δ(T)·U(θ))^(n-1)·Δ(T/2)
with θ = π/(2n) are read right to left.
"""

import io
import logging
import math
from typing import List, Tuple, Union

import numpy as np

from app.core.errors import InvalidParameterError
from app.core.fourier import coefficients, waveform, waveform_duration
from app.core.schema import (
    ChirpSpec,
    DesignParams,
    IdealInversionSpec,
    PulseSequence,
    Segment,
    SegmentKind,
    SequenceFamily,
    UnitScale,
)

logger = logging.getLogger(__name__)

REFOCUS_WAVEFORM = "waveform"
REFOCUS_CUTOFF = "cutoff"
DEFAULT_DWELL = 0.05

SweepSpec = Union[ChirpSpec, IdealInversionSpec]
RefocusPolicy = Union[str, float, None]


def resolve_refocus_T(policy: RefocusPolicy, p: DesignParams) -> float:
    """
    Phase budget T used by the Δ(ω, T/2) and Δ(ω, T) delays

    "waveform": the waveform duration (2M+2)·Δt (default)
    "cutoff":   2Mπ
    a number:   any value not shorter than the waveform
    """
    waveform_T = waveform_duration(p)
    if policy is None or policy == REFOCUS_WAVEFORM:
        return waveform_T
    if policy == REFOCUS_CUTOFF:
        T = 2.0 * p.M * math.pi
    else:
        try:
            T = float(policy)
        except (TypeError, ValueError):
            raise InvalidParameterError(
                f"refocus_T must be '{REFOCUS_WAVEFORM}', '{REFOCUS_CUTOFF}' or a number, got {policy!r}"
            ) from None
    if not math.isfinite(T) or T < waveform_T:
        raise InvalidParameterError(f"refocus_T {T} is shorter than the waveform duration {waveform_T}")
    return T


def nominal_peak(p: DesignParams) -> float:
    """Amplitude 1/(2n) the waveform is designed under; chirps run at it"""
    return 1.0 / (2 * p.n_blocks)


def _sweep_segment(sweep: SweepSpec, peak: float, match_peak: bool) -> Segment:
    if isinstance(sweep, IdealInversionSpec):
        return Segment.sweep(ChirpSpec(amplitude=peak), ideal=sweep)
    if match_peak:
        sweep = ChirpSpec(**{**sweep.model_dump(), "amplitude": peak})
    return Segment.sweep(sweep)


def _rotation_block(wave: PulseSequence, p: DesignParams, T: float) -> List[Segment]:
    # Centre the waveform inside T so its free-evolution midpoint stays at T/2
    pad = 0.5 * (T - waveform_duration(p))
    if pad <= 1e-12 * T:
        return list(wave.segments)
    return [Segment.delay(pad), *wave.segments, Segment.delay(pad)]


def _double_sweep(inversion: Segment, delay: float) -> List[Segment]:
    return [inversion, Segment.delay(delay), inversion]


def _label(family: SequenceFamily, p: DesignParams, inversion: Segment, T: float) -> str:
    chirp = inversion.chirp
    sweep = "ideal" if inversion.ideal is not None else (
        f"sweep{chirp.f_start:g}to{chirp.f_end:g}_D{chirp.duration:g}"
    )
    return f"{family.value}_n{p.n_blocks}_N{p.N}_M{p.M}_{sweep}_T{T:.4f}"


def _assemble(
    family: SequenceFamily,
    p: DesignParams,
    sweep: SweepSpec,
    refocus_T: RefocusPolicy,
    match_peak: bool,
) -> PulseSequence:
    wave = waveform(coefficients(p), p)
    T = resolve_refocus_T(refocus_T, p)
    inversion = _sweep_segment(sweep, nominal_peak(p), match_peak)
    block = _rotation_block(wave, p, T)

    segments: List[Segment] = []
    if family == SequenceFamily.ROTATION:
        segments += _double_sweep(inversion, T / 2.0)
    segments += block
    for _ in range(p.n_blocks - 1):
        segments += _double_sweep(inversion, T)
        segments += block
    segments += _double_sweep(inversion, T / 2.0)

    sequence = PulseSequence(
        segments=segments,
        design=p,
        peak_amplitude=max(s.amplitude for s in segments),
        label=_label(family, p, inversion, T),
        family=family,
        refocus_T=T,
    )
    logger.debug("Composed %s: %d segments", sequence.label, len(segments))
    return sequence


def excitation_sequence(
    p: DesignParams,
    sweep: SweepSpec,
    refocus_T: RefocusPolicy = None,
    match_peak: bool = True,
) -> PulseSequence:
    """Broadband excitation; with match_peak the chirp runs at the nominal peak 1/(2n)"""
    return _assemble(SequenceFamily.EXCITATION, p, sweep, refocus_T, match_peak)


def rotation_sequence(
    p: DesignParams,
    sweep: SweepSpec,
    refocus_T: RefocusPolicy = None,
    match_peak: bool = True,
) -> PulseSequence:
    """Broadband π/2 x-rotation: the excitation preceded by Δ(ω, T/2)"""
    return _assemble(SequenceFamily.ROTATION, p, sweep, refocus_T, match_peak)


def hard_pulse_sequence(amplitude: float, flip: float) -> PulseSequence:
    if not (math.isfinite(amplitude) and amplitude > 0):
        raise InvalidParameterError(f"hard pulse amplitude must be positive, got {amplitude}")
    if not (math.isfinite(flip) and flip >= 0):
        raise InvalidParameterError(f"flip angle must be non-negative, got {flip}")
    return PulseSequence(
        segments=[Segment.rf(amplitude=amplitude, duration=flip / amplitude)],
        peak_amplitude=amplitude,
        label=f"hard_A{amplitude:g}_flip{math.degrees(flip):g}deg",
        family=SequenceFamily.HARD,
    )


def concat(first: PulseSequence, second: PulseSequence) -> PulseSequence:
    segments = list(first.segments) + list(second.segments)
    return PulseSequence(
        segments=segments,
        design=first.design or second.design,
        peak_amplitude=max(first.peak_amplitude, second.peak_amplitude),
        label=f"{first.label}+{second.label}",
        family=first.family,
        refocus_T=first.refocus_T,
    )


def total_duration(s: PulseSequence) -> float:
    return math.fsum(segment.duration for segment in s.segments)


def physical_duration(s: PulseSequence, u: UnitScale) -> float:
    """Duration in milliseconds"""
    return total_duration(s) * u.seconds_per_unit * 1000.0


def bandwidth_physical(u: UnitScale) -> Tuple[float, float]:
    """kHz interval covered by the normalized band ω ∈ [-1, 1]"""
    return -u.khz_per_unit, u.khz_per_unit


def unit_scale_for(s: PulseSequence, peak_khz: float = 10.0) -> UnitScale:
    """
    Anchor peak_khz to the nominal design amplitude 1/(2n), or to the pulse
    amplitude for sequences without a Fourier design
    """
    if s.design is not None:
        return UnitScale(peak_khz=peak_khz, peak_amplitude=nominal_peak(s.design))
    if s.peak_amplitude <= 0:
        raise InvalidParameterError("a sequence without rf has no amplitude anchor")
    return UnitScale(peak_khz=peak_khz, peak_amplitude=s.peak_amplitude)


def count_segments(s: PulseSequence, kind: SegmentKind) -> int:
    return sum(1 for segment in s.segments if segment.kind == kind)


def refocus_delays(s: PulseSequence) -> List[float]:
    """Delays nested between two chirps, in emission order"""
    segments = s.segments
    return [
        segments[i].duration
        for i in range(1, len(segments) - 1)
        if segments[i].kind == SegmentKind.DELAY
        and segments[i - 1].kind == SegmentKind.CHIRP
        and segments[i + 1].kind == SegmentKind.CHIRP
    ]


def to_manifest(s: PulseSequence) -> str:
    """Lossless JSON form of the sequence"""
    return s.model_dump_json(indent=2)


def from_manifest(text: str) -> PulseSequence:
    return PulseSequence.model_validate_json(text)


def to_point_list(s: PulseSequence, dwell: float = DEFAULT_DWELL) -> str:
    """
    Amplitude/phase samples at a fixed dwell for external waveform tooling

    Samples sit at the middle of each dwell interval; chirp phases are
    wrapped to [0, 2π).
    """
    if not (math.isfinite(dwell) and dwell > 0):
        raise InvalidParameterError(f"dwell must be positive, got {dwell}")
    total = total_duration(s)
    count = int(math.ceil(total / dwell)) if total > 0 else 0
    times = (np.arange(count) + 0.5) * dwell
    edges = np.cumsum([segment.duration for segment in s.segments])
    owners = np.searchsorted(edges, times, side="right")
    amplitude = np.zeros(count)
    phase = np.zeros(count)

    for index, segment in enumerate(s.segments):
        mask = owners == index
        if not mask.any() or segment.kind == SegmentKind.DELAY:
            continue
        amplitude[mask] = segment.amplitude
        if segment.kind == SegmentKind.CHIRP:
            local = times[mask] - (edges[index] - segment.duration)
            phase[mask] = np.mod(segment.chirp.phase(local), 2.0 * math.pi)
        else:
            phase[mask] = segment.phase

    buffer = io.StringIO()
    buffer.write(f"# points={count} dwell={dwell!r} units=normalized amplitude,phase_rad\n")
    for a, ph in zip(amplitude, phase):
        buffer.write(f"{a:.10e} {ph:.10e}\n")
    return buffer.getvalue()
