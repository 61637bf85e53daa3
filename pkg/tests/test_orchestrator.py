import json
import math
from pathlib import Path

import pytest
from pydantic import ValidationError

from app.core.config import RunConfig, load_run_config
from app.core.errors import InvalidParameterError, UnknownFigureError
from app.core.fourier import coefficients, design_report, design_report_csv
from app.core.schema import SweepMode
from app.services.orchestrator import RunOrchestrator

FAST = {"mode": "ideal_sweeps", "grid_points": 5}


@pytest.fixture
def orchestrator():
    return RunOrchestrator()


class TestRunConfig:
    def test_defaults(self):
        config = RunConfig(output_dir="out", workers=1)
        assert config.mode == SweepMode.INTEGRATED
        assert config.match_peak
        assert config.design().theta_target == pytest.approx(math.pi / 2)

    def test_cutoff_above_n_rejected(self):
        with pytest.raises(ValidationError):
            RunConfig(N=10, M=11)

    def test_unknown_key_rejected(self):
        with pytest.raises(ValidationError):
            RunConfig(flip_angle=1.0)

    def test_refocus_budget_below_waveform_rejected(self):
        with pytest.raises(ValidationError):
            RunConfig(refocus_T=1.0)

    def test_non_finite_values_rejected(self):
        with pytest.raises(ValidationError):
            RunConfig(grid_max=math.inf)

    def test_run_file_then_overrides(self, tmp_path):
        run_file = tmp_path / "run.env"
        run_file.write_text("M=5\nsweep_duration=600\nrefocus_T=cutoff\n")
        config = load_run_config(run_file, {"sweep_duration": "900", "n": None}, base={"M": 8, "n": 2})
        assert config.M == 5
        assert config.n == 2
        assert config.sweep_duration == 900.0
        assert config.refocus_T == "cutoff"

    def test_explicit_sweep_amplitude(self):
        config = RunConfig(sweep_amplitude="0.3")
        assert not config.match_peak
        assert config.chirp().amplitude == 0.3


class TestDesignRun:
    def test_default_design_files(self, orchestrator, make_config):
        config = make_config()
        manifest = orchestrator.design(config)
        payload = json.loads((Path(config.output_dir) / manifest.files[1]).read_text())
        assert payload["u"][0] == 0.25
        assert manifest.family == "design"

    def test_two_blocks_halve_the_peak(self, orchestrator, make_config):
        manifest = orchestrator.design(make_config(n=2))
        assert manifest.peak_amplitude == pytest.approx(0.24897, abs=1e-5)

    def test_figure_csv_matches_design_report(self, orchestrator, make_config, tmp_path):
        manifest = orchestrator.figure_run("fig2_left", {"output_dir": str(tmp_path)})
        p = make_config().design()
        expected = design_report_csv(design_report(coefficients(p), p, make_config().grid().offsets()))
        assert (tmp_path / manifest.files[0]).read_text() == expected
        assert manifest.files[0] == "fig2_left_ideal_sweeps.csv"


class TestProfileRun:
    def test_hard_pulse_manifest(self, orchestrator, make_config):
        manifest = orchestrator.profile(make_config(**FAST), "hard")
        assert manifest.physical_duration_ms == pytest.approx(0.025, rel=1e-12)
        assert manifest.segment_counts == {"constant_rf": 1, "chirp": 0, "delay": 0}
        assert manifest.sweep is None

    def test_rotation_three_blocks(self, orchestrator, make_config):
        manifest = orchestrator.profile(make_config(n=3, **FAST), "rotation")
        assert manifest.segment_counts["chirp"] == 8
        assert manifest.bandwidth_khz == pytest.approx([-60.0, 60.0])

    def test_unknown_family_rejected(self, orchestrator, make_config):
        with pytest.raises(InvalidParameterError):
            orchestrator.profile(make_config(), "adiabatic")

    def test_manifest_omits_execution_settings(self, orchestrator, make_config):
        manifest = orchestrator.profile(make_config(**FAST), "excitation")
        assert "workers" not in manifest.config
        assert "output_dir" not in manifest.config

    def test_output_independent_of_workers(self, orchestrator, tmp_path):
        written = []
        for workers in (1, 3):
            out = tmp_path / f"w{workers}"
            config = RunConfig(output_dir=str(out), workers=workers, grid_points=5)
            manifest = orchestrator.profile(config, "excitation")
            written.append([(out / name).read_bytes() for name in manifest.files])
            written[-1].append(next(out.glob("*.manifest.json")).read_bytes())
        assert written[0] == written[1]


class TestFigures:
    def test_preset_names(self, orchestrator):
        names = orchestrator.figure_names()
        assert {"fig2_left", "fig2_right", "fig3a", "fig4c", "hard90"} <= set(names)

    def test_unknown_figure_lists_valid_names(self, orchestrator):
        with pytest.raises(UnknownFigureError) as e:
            orchestrator.preset("fig9")
        assert "fig3a" in str(e.value)
        assert "hard90" in str(e.value)

    @pytest.mark.parametrize("name, duration, total_ms", [("fig3b", 1000.0, 16.79), ("fig4b", 1200.0, 29.6462)])
    def test_preset_parameters_recorded(self, orchestrator, tmp_path, name, duration, total_ms):
        manifest = orchestrator.figure_run(name, {**FAST, "output_dir": str(tmp_path)})
        assert manifest.figure == name
        assert manifest.sweep.duration == duration
        assert manifest.refocus_T == pytest.approx(20 * math.pi)
        assert manifest.physical_duration_ms == pytest.approx(total_ms, rel=5e-3)
        assert (tmp_path / f"{name}_ideal_sweeps.csv").exists()

    def test_sweep_rate_recorded(self, orchestrator, tmp_path):
        manifest = orchestrator.figure_run("fig3a", {**FAST, "output_dir": str(tmp_path)})
        assert manifest.adiabaticity.sweep_rate == 1 / 30
        assert manifest.sweep.amplitude == 0.5
        assert manifest.adiabaticity.ratio == pytest.approx(7.5)
        assert manifest.config["sweep_amplitude"] == "peak"
        assert manifest.mode == SweepMode.IDEAL

    def test_run_file_between_preset_and_overrides(self, orchestrator, tmp_path):
        run_file = tmp_path / "run.env"
        run_file.write_text("grid_points=7\nsweep_duration=400\n")
        config = orchestrator.figure_config("fig3a", {"sweep_duration": 500.0}, run_file)
        assert config.grid_points == 7
        assert config.sweep_duration == 500.0
        assert config.refocus_T == "cutoff"
