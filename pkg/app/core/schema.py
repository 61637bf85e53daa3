"""
Canonical Schema for the double-sweep toolkit

This module defines the single source of truth for every record the toolkit
builds, simulates, serializes or exchanges over HTTP. Numeric state objects
(spinors and propagators) live in app.core.su2; everything here is plain
pydantic data.
"""

import math
from enum import Enum
from typing import Any, ClassVar, Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class SweepMode(str, Enum):
    """How chirp segments are propagated"""
    IDEAL = "ideal_sweeps"  # Euler-form inversion Θ(ω)
    INTEGRATED = "integrated_sweeps"  # numerically integrated chirp


class SegmentKind(str, Enum):
    """Segment kinds of a pulse sequence"""
    CONSTANT_RF = "constant_rf"
    CHIRP = "chirp"
    DELAY = "delay"


class SequenceFamily(str, Enum):
    """Sequence families the composer can emit"""
    WAVEFORM = "waveform"
    EXCITATION = "excitation"
    ROTATION = "rotation"
    HARD = "hard"


class BlochVector(BaseModel):
    """Real 3-vector image of a spin-1/2 state"""
    model_config = ConfigDict(frozen=True)

    x: float
    y: float
    z: float

    @property
    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)


class EulerAnglesZXZ(BaseModel):
    """Angles of Rz(alpha)·Rx(theta)·Rz(beta)"""
    model_config = ConfigDict(frozen=True)

    alpha: float
    theta: float = Field(ge=0.0, le=math.pi + 1e-12)
    beta: float


class DesignParams(BaseModel):
    """
    Fourier design parameters

    Δt = π/N is the segment length, M the harmonic cutoff and n_blocks the
    number of reduced-angle rotation blocks. theta_target is derived as
    π/(2·n_blocks) when omitted and must match it when given.
    """
    model_config = ConfigDict(frozen=True)

    N: int = Field(default=20, gt=0, description="Sets Δt = π/N")
    M: int = Field(default=10, gt=0, description="Harmonic cutoff, M ≤ N")
    n_blocks: int = Field(default=1, gt=0, description="Number of U(ω, π/2n) blocks")
    theta_target: float = Field(default=math.pi / 2, description="Flip-angle target in radians")

    @model_validator(mode="before")
    @classmethod
    def _derive_theta(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("theta_target") is None:
            n_blocks = int(data.get("n_blocks", 1))
            data = {**data, "theta_target": math.pi / (2 * n_blocks)} if n_blocks > 0 else data
        return data

    @model_validator(mode="after")
    def _check_consistency(self) -> "DesignParams":
        if self.M > self.N:
            raise ValueError(f"M ({self.M}) must not exceed N ({self.N})")
        expected = math.pi / (2 * self.n_blocks)
        if not math.isfinite(self.theta_target) or abs(self.theta_target - expected) > 1e-12:
            raise ValueError(
                f"theta_target {self.theta_target} must equal π/(2n) = {expected} for n = {self.n_blocks}"
            )
        return self

    @property
    def dt(self) -> float:
        return math.pi / self.N

    @property
    def scale(self) -> float:
        """Linear rescaling of the π/2 coefficients"""
        return self.theta_target / (math.pi / 2)


class CoefficientSet(BaseModel):
    """Symmetric Fourier coefficients u[0..M] (u[-k] = u[k] implied)"""
    model_config = ConfigDict(frozen=True)

    u: List[float] = Field(..., min_length=1)

    @model_validator(mode="after")
    def _check_finite(self) -> "CoefficientSet":
        if not all(math.isfinite(v) for v in self.u):
            raise ValueError("coefficients must be finite")
        return self

    @property
    def M(self) -> int:
        return len(self.u) - 1


class DesignReportRow(BaseModel):
    """One tabulated value of the designed cosine series"""
    offset: float
    series_value_rad: float
    deviation_rad: float


class ChirpSpec(BaseModel):
    """Linear-frequency chirp used as an adiabatic inversion"""
    model_config = ConfigDict(frozen=True)

    f_start: float = Field(default=-5.0, description="Sweep start (normalized rad/unit-time)")
    f_end: float = Field(default=5.0, description="Sweep end (normalized rad/unit-time)")
    duration: float = Field(default=300.0, gt=0.0, description="Sweep duration (unit-time)")
    amplitude: float = Field(default=0.5, ge=0.0, description="Constant rf amplitude during the sweep")

    @model_validator(mode="after")
    def _check_sweep(self) -> "ChirpSpec":
        values = (self.f_start, self.f_end, self.duration, self.amplitude)
        if not all(math.isfinite(v) for v in values):
            raise ValueError("chirp parameters must be finite")
        if self.f_end == self.f_start:
            raise ValueError("chirp must sweep a nonzero frequency range")
        return self

    @property
    def sweep_rate(self) -> float:
        return abs(self.f_end - self.f_start) / self.duration

    def phase(self, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        """Quadratic rf phase φ(t) accumulated since the start of the sweep"""
        return self.f_start * t + (self.f_end - self.f_start) * t * t / (2.0 * self.duration)

    def frequency(self, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        return self.f_start + (self.f_end - self.f_start) * t / self.duration


class IdealInversionSpec(BaseModel):
    """
    Ideal inversion Θ(ω) = Rz(α(ω))·Rx(π)·Rz(β(ω))

    α and β are offset-linear; the default is α = β = 0.
    """
    model_config = ConfigDict(frozen=True)

    alpha_slope: float = 0.0
    alpha_intercept: float = 0.0
    beta_slope: float = 0.0
    beta_intercept: float = 0.0

    CENTER_ANGLE: ClassVar[float] = math.pi

    def alpha(self, offset: float) -> float:
        return self.alpha_slope * offset + self.alpha_intercept

    def beta(self, offset: float) -> float:
        return self.beta_slope * offset + self.beta_intercept


class DoubleSweepBlock(BaseModel):
    """Inversion, free delay, identical inversion: Δ(ω, delay)"""
    model_config = ConfigDict(frozen=True)

    inversion: Union[ChirpSpec, IdealInversionSpec]
    delay: float = Field(ge=0.0)


class AdiabaticityReport(BaseModel):
    """Sweep rate against the squared rf amplitude"""
    sweep_rate: float
    amplitude_squared: float
    ratio: float


class Segment(BaseModel):
    """
    One time slice of the control

    constant_rf carries (amplitude, phase); chirp carries a ChirpSpec (and,
    optionally, the Euler form used in ideal-sweep simulation); delay
    carries only its duration.
    """
    model_config = ConfigDict(frozen=True)

    kind: SegmentKind
    duration: float = Field(ge=0.0)
    amplitude: float = Field(default=0.0, ge=0.0)
    phase: float = 0.0
    chirp: Optional[ChirpSpec] = None
    ideal: Optional[IdealInversionSpec] = None

    @model_validator(mode="after")
    def _check_kind(self) -> "Segment":
        if not (math.isfinite(self.duration) and math.isfinite(self.amplitude) and math.isfinite(self.phase)):
            raise ValueError("segment values must be finite")
        if self.kind == SegmentKind.CHIRP:
            if self.chirp is None:
                raise ValueError("chirp segment requires a ChirpSpec")
            if self.duration != self.chirp.duration or self.amplitude != self.chirp.amplitude:
                raise ValueError("chirp segment duration/amplitude must match its ChirpSpec")
        elif self.chirp is not None or self.ideal is not None:
            raise ValueError(f"{self.kind.value} segment cannot carry sweep parameters")
        if self.kind == SegmentKind.DELAY and (self.amplitude != 0.0 or self.phase != 0.0):
            raise ValueError("delay segment carries only a duration")
        return self

    @classmethod
    def rf(cls, amplitude: float, duration: float, phase: float = 0.0) -> "Segment":
        return cls(kind=SegmentKind.CONSTANT_RF, amplitude=amplitude, duration=duration, phase=phase)

    @classmethod
    def delay(cls, duration: float) -> "Segment":
        return cls(kind=SegmentKind.DELAY, duration=duration)

    @classmethod
    def sweep(cls, chirp: ChirpSpec, ideal: Optional[IdealInversionSpec] = None) -> "Segment":
        return cls(
            kind=SegmentKind.CHIRP,
            duration=chirp.duration,
            amplitude=chirp.amplitude,
            chirp=chirp,
            ideal=ideal,
        )


class PulseSequence(BaseModel):
    """
    Time-ordered schedule of segments; the first segment acts first
    """
    model_config = ConfigDict(frozen=True)

    segments: List[Segment] = Field(default_factory=list)
    design: Optional[DesignParams] = None
    peak_amplitude: float = Field(default=0.0, ge=0.0)
    label: str = "sequence"
    family: SequenceFamily = SequenceFamily.WAVEFORM
    refocus_T: Optional[float] = Field(default=None, description="Phase budget T used by the delays")

    @model_validator(mode="after")
    def _check_peak(self) -> "PulseSequence":
        peak = max((s.amplitude for s in self.segments), default=0.0)
        if abs(peak - self.peak_amplitude) > 1e-12:
            raise ValueError(f"peak_amplitude {self.peak_amplitude} differs from segment maximum {peak}")
        return self


class UnitScale(BaseModel):
    """
    Physical anchor: peak_khz is the rf amplitude assigned to the normalized
    amplitude peak_amplitude
    """
    model_config = ConfigDict(frozen=True)

    peak_khz: float = Field(default=10.0, gt=0.0)
    peak_amplitude: float = Field(default=0.5, gt=0.0)

    @property
    def khz_per_unit(self) -> float:
        """kHz represented by one normalized unit of angular frequency"""
        return self.peak_khz / self.peak_amplitude

    @property
    def seconds_per_unit(self) -> float:
        return 1.0 / (2.0 * math.pi * 1000.0 * self.khz_per_unit)


class OffsetGrid(BaseModel):
    """Uniform offset grid including both endpoints"""
    model_config = ConfigDict(frozen=True)

    min: float = -1.0
    max: float = 1.0
    points: int = Field(default=201, ge=2)

    @model_validator(mode="after")
    def _check_range(self) -> "OffsetGrid":
        if not (math.isfinite(self.min) and math.isfinite(self.max)) or self.max <= self.min:
            raise ValueError("grid requires finite min < max")
        return self

    def offsets(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.points)


class ProfileRow(BaseModel):
    """Bloch coordinates at one offset"""
    offset: float
    offset_khz: float
    x: float
    y: float
    z: float


class OffsetProfile(BaseModel):
    """Offset → Bloch observables, with the metadata needed to regenerate it"""
    rows: List[ProfileRow]
    label: str
    initial_state: str = Field(description="'+z' for excitation, '+y' for rotation")
    mode: SweepMode
    max_phase_step: float
    scale: UnitScale

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(row, name) for row in self.rows])


class ApproximationRow(BaseModel):
    """Distance between exact and first-order propagators at one offset"""
    offset: float
    distance: float


class CheckKind(str, Enum):
    """Gates decide the exit status; targets are recorded with their shortfall"""
    GATE = "gate"
    TARGET = "target"


class CheckResult(BaseModel):
    """Outcome of one invariant check"""
    name: str
    passed: bool
    value: Optional[float] = None
    threshold: Optional[float] = None
    detail: str = ""
    kind: CheckKind = CheckKind.GATE


class DurationRow(BaseModel):
    """Physical duration of one figure preset under both refocus policies"""
    figure: str
    published_ms: float
    cutoff_ms: float
    waveform_ms: float
    cutoff_deviation: float = Field(description="Relative difference of the cutoff total")
    waveform_deviation: float = Field(description="Relative difference of the waveform total")


class VerificationReport(BaseModel):
    """Machine-readable outcome of the invariant suite"""
    checks: List[CheckResult] = Field(default_factory=list)
    adiabaticity: Dict[str, AdiabaticityReport] = Field(default_factory=dict)
    durations: List[DurationRow] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks if check.kind == CheckKind.GATE)

    @property
    def failed(self) -> List[str]:
        return [check.name for check in self.checks if check.kind == CheckKind.GATE and not check.passed]

    @property
    def deviations(self) -> List[str]:
        """Targets the measured value misses"""
        return [check.name for check in self.checks if check.kind == CheckKind.TARGET and not check.passed]


class RunManifest(BaseModel):
    """Everything needed to regenerate an output file"""
    tool_version: str
    label: str
    figure: Optional[str] = None
    family: str
    design: Optional[DesignParams] = None
    sweep: Optional[ChirpSpec] = None
    ideal: Optional[IdealInversionSpec] = None
    adiabaticity: Optional[AdiabaticityReport] = None
    unit_scale: Optional[UnitScale] = None
    grid: Optional[OffsetGrid] = None
    mode: Optional[SweepMode] = None
    max_phase_step: Optional[float] = None
    refocus_T: Optional[float] = None
    peak_amplitude: Optional[float] = None
    total_duration_units: Optional[float] = None
    physical_duration_ms: Optional[float] = None
    bandwidth_khz: Optional[List[float]] = None
    segment_counts: Dict[str, int] = Field(default_factory=dict)
    config: Dict[str, Any] = Field(default_factory=dict)
    files: List[str] = Field(default_factory=list)
