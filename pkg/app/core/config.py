"""
Configuration
Ambient settings come from the environment (a local .env is honoured);
run parameters come from a flat key=value file plus command-line overrides.
"""

import logging
import math
import os
from pathlib import Path
from typing import Any, Literal, Mapping, Optional, Union

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.composer import resolve_refocus_T
from app.core.schema import (
    ChirpSpec,
    DesignParams,
    IdealInversionSpec,
    OffsetGrid,
    SweepMode,
)

load_dotenv()

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def default_output_dir() -> str:
    return os.getenv("DSWEEP_OUTPUT_DIR", "./output")


def default_workers() -> int:
    return int(os.getenv("DSWEEP_WORKERS", "1"))


def configure_logging(level: Optional[str] = None) -> None:
    """Configure the root logger once from LOG_LEVEL"""
    name = (level or os.getenv("LOG_LEVEL", "INFO")).upper()
    logging.basicConfig(level=getattr(logging, name, logging.INFO), format=LOG_FORMAT)


class RunConfig(BaseModel):
    """
    Flat run configuration

    Every key maps to one command-line flag and one line of a run file.
    Module preconditions are checked here, before any computation.
    """
    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)

    # Fourier design
    N: int = Field(default=20, gt=0)
    M: int = Field(default=10, gt=0)
    n: int = Field(default=1, gt=0, description="Number of rotation blocks")
    theta_target: Optional[float] = Field(default=None, description="Must equal π/(2n) when given")

    # Adiabatic sweep
    sweep_f_start: float = -5.0
    sweep_f_end: float = 5.0
    sweep_duration: float = Field(default=300.0, gt=0.0)
    sweep_amplitude: Union[Literal["peak"], float] = "peak"
    refocus_T: Union[Literal["waveform", "cutoff"], float] = "waveform"

    # Units and grid
    peak_khz: float = Field(default=10.0, gt=0.0)
    grid_min: float = -1.0
    grid_max: float = 1.0
    grid_points: int = Field(default=201, ge=2)

    # Simulation
    mode: SweepMode = SweepMode.INTEGRATED
    max_phase_step: float = Field(default=0.05, gt=0.0)
    output_dir: str = Field(default_factory=default_output_dir)
    workers: int = Field(default_factory=default_workers, ge=1)

    # Ideal inversion angles α(ω), β(ω)
    ideal_alpha_slope: float = 0.0
    ideal_alpha_intercept: float = 0.0
    ideal_beta_slope: float = 0.0
    ideal_beta_intercept: float = 0.0

    # Hard pulse reference
    hard_amplitude: float = Field(default=0.5, gt=0.0)
    hard_flip: float = Field(default=math.pi / 2, ge=0.0)

    @model_validator(mode="after")
    def _check_preconditions(self) -> "RunConfig":
        if isinstance(self.sweep_amplitude, float) and self.sweep_amplitude < 0:
            raise ValueError("sweep_amplitude must be 'peak' or a non-negative number")
        design = self.design()
        self.chirp()
        self.grid()
        resolve_refocus_T(self.refocus_T, design)
        return self

    @property
    def match_peak(self) -> bool:
        return self.sweep_amplitude == "peak"

    def design(self) -> DesignParams:
        return DesignParams(N=self.N, M=self.M, n_blocks=self.n, theta_target=self.theta_target)

    def chirp(self) -> ChirpSpec:
        """Sweep spec; with the 'peak' policy the composer replaces the amplitude"""
        amplitude = ChirpSpec().amplitude if self.match_peak else float(self.sweep_amplitude)
        return ChirpSpec(
            f_start=self.sweep_f_start,
            f_end=self.sweep_f_end,
            duration=self.sweep_duration,
            amplitude=amplitude,
        )

    def ideal(self) -> IdealInversionSpec:
        return IdealInversionSpec(
            alpha_slope=self.ideal_alpha_slope,
            alpha_intercept=self.ideal_alpha_intercept,
            beta_slope=self.ideal_beta_slope,
            beta_intercept=self.ideal_beta_intercept,
        )

    def grid(self) -> OffsetGrid:
        return OffsetGrid(min=self.grid_min, max=self.grid_max, points=self.grid_points)


def load_run_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    base: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """
    Merge defaults < base (e.g. a figure preset) < run file < overrides

    Overrides equal to None are treated as not given.
    """
    values = dict(base or {})
    if path is not None:
        values.update(dotenv_values(path))
    values.update({key: value for key, value in (overrides or {}).items() if value is not None})
    return RunConfig(**values)
