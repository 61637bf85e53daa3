"""
Run Orchestrator
Coordinates every file-producing run: config → design → compose → simulate → write
Figure presets live in data/figures.json.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

from app import __version__
from app.core.composer import (
    bandwidth_physical,
    count_segments,
    excitation_sequence,
    hard_pulse_sequence,
    physical_duration,
    rotation_sequence,
    total_duration,
    unit_scale_for,
)
from app.core.config import RunConfig, load_run_config
from app.core.errors import InvalidParameterError, UnknownFigureError
from app.core.fourier import coefficients, design_report, design_report_csv, waveform, waveform_duration
from app.core.schema import (
    OffsetProfile,
    PulseSequence,
    RunManifest,
    SegmentKind,
    SweepMode,
)
from app.core.simulator import excitation_profile, profile_csv, rotation_profile
from app.core.sweep import adiabaticity_report

logger = logging.getLogger(__name__)

PROFILE_FAMILIES = ("excitation", "rotation", "hard")

# Keys that change where or how fast a run happens, never what it produces
_EXECUTION_KEYS = {"output_dir", "workers"}


class RunOrchestrator:
    """
    Main orchestrator for design, profile and figure runs
    Pipeline: RunConfig → Sequence → Profile → CSV + manifest
    """

    def __init__(self, presets_path: Optional[Union[str, Path]] = None):
        self.presets_path = Path(presets_path) if presets_path else (
            Path(__file__).parent.parent.parent / "data" / "figures.json"
        )
        self._presets: Optional[Dict[str, Dict[str, Any]]] = None

    @property
    def presets(self) -> Dict[str, Dict[str, Any]]:
        if self._presets is None:
            with open(self.presets_path, "r") as f:
                self._presets = json.load(f)
        return self._presets

    def figure_names(self) -> List[str]:
        return list(self.presets)

    def preset(self, name: str) -> Dict[str, Any]:
        if name not in self.presets:
            raise UnknownFigureError(name, self.figure_names())
        return self.presets[name]

    def figure_config(
        self,
        name: str,
        overrides: Optional[Mapping[str, Any]] = None,
        path: Optional[Union[str, Path]] = None,
    ) -> RunConfig:
        """Preset values, then the run file, then explicit overrides"""
        return load_run_config(path, overrides, base=self.preset(name)["config"])

    # ------------------------------------------------------------------
    # Sequence construction
    # ------------------------------------------------------------------

    def build_sequence(self, family: str, config: RunConfig) -> PulseSequence:
        if family == "hard":
            return hard_pulse_sequence(config.hard_amplitude, config.hard_flip)
        if family == "excitation":
            return excitation_sequence(config.design(), config.chirp(), config.refocus_T, config.match_peak)
        if family == "rotation":
            return rotation_sequence(config.design(), config.chirp(), config.refocus_T, config.match_peak)
        raise InvalidParameterError(f"unknown family {family!r}; expected one of {', '.join(PROFILE_FAMILIES)}")

    def simulate(self, family: str, sequence: PulseSequence, config: RunConfig) -> OffsetProfile:
        simulate = rotation_profile if family == "rotation" else excitation_profile
        return simulate(
            sequence,
            config.grid(),
            mode=config.mode,
            max_phase_step=config.max_phase_step,
            scale=unit_scale_for(sequence, config.peak_khz),
            workers=config.workers,
            ideal=config.ideal() if config.mode == SweepMode.IDEAL else None,
        )

    # ------------------------------------------------------------------
    # Runs
    # ------------------------------------------------------------------

    def design(self, config: RunConfig, name: Optional[str] = None) -> RunManifest:
        """Coefficients JSON plus the tabulated series values"""
        p = config.design()
        c = coefficients(p)
        wave = waveform(c, p)
        stem = f"{name}_{config.mode.value}" if name else f"{wave.label}_design_report"
        out = self._output_dir(config)

        csv_path = out / f"{stem}.csv"
        csv_path.write_text(design_report_csv(design_report(c, p, config.grid().offsets())))
        coefficient_path = out / f"{name or wave.label}.coefficients.json"
        coefficient_path.write_text(json.dumps({
            "design": p.model_dump(mode="json"),
            "u": c.u,
            "peak_amplitude": wave.peak_amplitude,
            "waveform_duration": waveform_duration(p),
        }, indent=2))

        manifest = RunManifest(
            tool_version=__version__,
            label=wave.label,
            figure=name,
            family="design",
            design=p,
            grid=config.grid(),
            peak_amplitude=wave.peak_amplitude,
            total_duration_units=total_duration(wave),
            segment_counts=self._segment_counts(wave),
            config=self._recorded_config(config),
            files=[csv_path.name, coefficient_path.name],
        )
        self._write_manifest(out / f"{stem}.manifest.json", manifest)
        return manifest

    def profile(self, config: RunConfig, family: str, name: Optional[str] = None) -> RunManifest:
        """Profile CSV plus a manifest sufficient to regenerate it"""
        if family not in PROFILE_FAMILIES:
            raise InvalidParameterError(f"unknown family {family!r}; expected one of {', '.join(PROFILE_FAMILIES)}")
        sequence = self.build_sequence(family, config)
        profile = self.simulate(family, sequence, config)
        base = f"{name or sequence.label}_{config.mode.value}"
        out = self._output_dir(config)

        csv_path = out / f"{base}.csv"
        csv_path.write_text(profile_csv(profile))
        manifest = self.manifest_for(sequence, config, name, [csv_path.name])
        self._write_manifest(out / f"{base}.manifest.json", manifest)
        logger.info("Wrote %s", csv_path)
        return manifest

    def figure_run(
        self,
        name: str,
        overrides: Optional[Mapping[str, Any]] = None,
        path: Optional[Union[str, Path]] = None,
    ) -> RunManifest:
        preset = self.preset(name)
        config = self.figure_config(name, overrides, path)
        logger.info("Figure run %s started", name)
        if preset["family"] == "design":
            manifest = self.design(config, name=name)
        else:
            manifest = self.profile(config, preset["family"], name=name)
        logger.info("Figure run %s finished: %s", name, ", ".join(manifest.files))
        return manifest

    # ------------------------------------------------------------------
    # Manifests
    # ------------------------------------------------------------------

    def manifest_for(
        self,
        sequence: PulseSequence,
        config: RunConfig,
        figure: Optional[str] = None,
        files: Optional[List[str]] = None,
    ) -> RunManifest:
        scale = unit_scale_for(sequence, config.peak_khz)
        chirp = next((s.chirp for s in sequence.segments if s.kind == SegmentKind.CHIRP), None)
        return RunManifest(
            tool_version=__version__,
            label=sequence.label,
            figure=figure,
            family=sequence.family.value,
            design=sequence.design,
            sweep=chirp,
            ideal=config.ideal() if chirp is not None and config.mode == SweepMode.IDEAL else None,
            adiabaticity=adiabaticity_report(chirp) if chirp is not None else None,
            unit_scale=scale,
            grid=config.grid(),
            mode=config.mode,
            max_phase_step=config.max_phase_step,
            refocus_T=sequence.refocus_T,
            peak_amplitude=sequence.peak_amplitude,
            total_duration_units=total_duration(sequence),
            physical_duration_ms=physical_duration(sequence, scale),
            bandwidth_khz=list(bandwidth_physical(scale)),
            segment_counts=self._segment_counts(sequence),
            config=self._recorded_config(config),
            files=files or [],
        )

    @staticmethod
    def _segment_counts(sequence: PulseSequence) -> Dict[str, int]:
        return {kind.value: count_segments(sequence, kind) for kind in SegmentKind}

    @staticmethod
    def _recorded_config(config: RunConfig) -> Dict[str, Any]:
        return config.model_dump(mode="json", exclude=_EXECUTION_KEYS)

    @staticmethod
    def _output_dir(config: RunConfig) -> Path:
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        return out

    @staticmethod
    def _write_manifest(path: Path, manifest: RunManifest) -> None:
        path.write_text(manifest.model_dump_json(indent=2))
        logger.info("Wrote %s", path)


# Global orchestrator instance
orchestrator = RunOrchestrator()
