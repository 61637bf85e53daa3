import json

import pytest

from app.cli import EXIT_INVALID, EXIT_OK, EXIT_VERIFY_FAILED, build_parser, main


@pytest.fixture
def out(tmp_path):
    return tmp_path / "out"


def _run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestParser:
    def test_every_config_key_is_a_flag(self):
        args = build_parser().parse_args(["profile", "rotation", "--sweep-duration", "1200", "--grid-points", "11"])
        assert args.family == "rotation"
        assert args.sweep_duration == "1200"
        assert args.grid_points == "11"
        assert args.N is None

    def test_unknown_family_is_a_usage_error(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["profile", "spinlock"])


class TestDesign:
    def test_writes_coefficients(self, capsys, out):
        code, stdout, _ = _run(capsys, "design", "--output-dir", str(out), "--grid-points", "11")
        assert code == EXIT_OK
        coefficient_file = next(out.glob("*.coefficients.json"))
        assert json.loads(coefficient_file.read_text())["u"][0] == 0.25
        assert str(coefficient_file) in stdout

    def test_cutoff_above_n_exits_invalid(self, capsys, out):
        code, _, stderr = _run(capsys, "design", "--output-dir", str(out), "--N", "10", "--M", "11")
        assert code == EXIT_INVALID
        assert "error:" in stderr
        assert not out.exists()


class TestProfile:
    def test_hard_pulse(self, capsys, out):
        code, _, _ = _run(capsys, "profile", "hard", "--output-dir", str(out), "--grid-points", "5")
        assert code == EXIT_OK
        manifest = json.loads(next(out.glob("*.manifest.json")).read_text())
        assert manifest["physical_duration_ms"] == pytest.approx(0.025)

    def test_rotation_run_file(self, capsys, out, tmp_path):
        run_file = tmp_path / "run.env"
        run_file.write_text("n=3\nmode=ideal_sweeps\ngrid_points=5\n")
        code, _, _ = _run(capsys, "profile", "rotation", "--config", str(run_file), "--output-dir", str(out))
        assert code == EXIT_OK
        manifest = json.loads(next(out.glob("*.manifest.json")).read_text())
        assert manifest["segment_counts"]["chirp"] == 8

    def test_workers_do_not_change_output(self, capsys, tmp_path):
        outputs = []
        for workers in ("1", "4"):
            target = tmp_path / workers
            assert _run(capsys, "profile", "excitation", "--output-dir", str(target), "--grid-points", "5",
                        "--workers", workers)[0] == EXIT_OK
            outputs.append(sorted((p.name, p.read_bytes()) for p in target.iterdir()))
        assert outputs[0] == outputs[1]


class TestReproduce:
    def test_unknown_figure(self, capsys, out):
        code, _, stderr = _run(capsys, "reproduce", "fig9", "--output-dir", str(out))
        assert code == EXIT_INVALID
        assert "fig9" in stderr
        assert "fig4c" in stderr

    def test_rotation_preset_with_overrides(self, capsys, out):
        code, stdout, _ = _run(
            capsys, "reproduce", "fig4b", "--output-dir", str(out), "--mode", "ideal_sweeps", "--grid-points", "5"
        )
        assert code == EXIT_OK
        manifest = json.loads((out / "fig4b_ideal_sweeps.manifest.json").read_text())
        assert manifest["sweep"]["duration"] == 1200.0
        assert manifest["config"]["n"] == 2
        assert "fig4b_ideal_sweeps.csv" in stdout


class TestVerify:
    def test_injected_coefficient_fails_oracle(self, capsys, out):
        code, stdout, _ = _run(capsys, "verify", "--output-dir", str(out), "--inject-u0", "0.5")
        assert code == EXIT_VERIFY_FAILED
        report = json.loads(stdout)
        assert report["passed"] is False
        assert "fourier_oracle" in report["failed"]
        assert json.loads((out / "verify_report.json").read_text()) == report

    def test_default_configuration_passes(self, capsys, out):
        code, stdout, _ = _run(capsys, "verify", "--output-dir", str(out))
        report = json.loads(stdout)
        assert report["failed"] == []
        assert report["passed"] is True
        assert code == EXIT_OK
        assert "ideal_excitation_band" in report["deviations"]
        assert {row["figure"] for row in report["durations"]} >= {"fig3a", "fig4c"}
        assert report["adiabaticity"]["fig3a"]["sweep_rate"] == pytest.approx(1 / 30)
