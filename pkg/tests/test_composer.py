import math

import pytest

from app.core.composer import (
    bandwidth_physical,
    concat,
    count_segments,
    excitation_sequence,
    from_manifest,
    hard_pulse_sequence,
    physical_duration,
    refocus_delays,
    resolve_refocus_T,
    rotation_sequence,
    to_manifest,
    to_point_list,
    total_duration,
    unit_scale_for,
)
from app.core.errors import InvalidParameterError
from app.core.fourier import waveform_duration
from app.core.schema import (
    ChirpSpec,
    DesignParams,
    IdealInversionSpec,
    PulseSequence,
    Segment,
    SegmentKind,
    UnitScale,
)


def _kinds(sequence):
    return [s.kind for s in sequence.segments]


RF, CHIRP, DELAY = SegmentKind.CONSTANT_RF, SegmentKind.CHIRP, SegmentKind.DELAY

# Sweep durations and block counts of the published excitation and rotation runs
PUBLISHED_TOTALS = [
    ("excitation", 1, 300.0, 5.5225),
    ("excitation", 2, 1000.0, 16.79),
    ("excitation", 3, 2000.0, 32.75),
    ("rotation", 1, 1000.0, 32.83),
    ("rotation", 2, 1200.0, 29.6462),
    ("rotation", 3, 2400.0, 51.9267),
]


class TestExcitationStructure:
    def test_single_block(self, design):
        sequence = excitation_sequence(design, ChirpSpec())
        assert _kinds(sequence) == [RF] * 22 + [CHIRP, DELAY, CHIRP]
        assert refocus_delays(sequence) == [pytest.approx(waveform_duration(design) / 2)]

    def test_three_blocks(self):
        p = DesignParams(n_blocks=3)
        sequence = excitation_sequence(p, ChirpSpec())
        T = waveform_duration(p)
        assert count_segments(sequence, RF) == 3 * 22
        assert count_segments(sequence, CHIRP) == 6
        assert refocus_delays(sequence) == pytest.approx([T, T, T / 2])
        assert _kinds(sequence)[:22] == [RF] * 22

    @pytest.mark.parametrize("n_blocks", [1, 2, 3])
    def test_chirp_runs_at_nominal_peak(self, n_blocks):
        sequence = rotation_sequence(DesignParams(n_blocks=n_blocks), ChirpSpec(amplitude=0.9))
        chirps = [s for s in sequence.segments if s.kind == CHIRP]
        assert {s.amplitude for s in chirps} == {1.0 / (2 * n_blocks)}
        assert sequence.peak_amplitude == 1.0 / (2 * n_blocks)

    def test_explicit_sweep_amplitude_kept(self, design):
        sequence = excitation_sequence(design, ChirpSpec(amplitude=0.3), match_peak=False)
        chirps = [s for s in sequence.segments if s.kind == CHIRP]
        assert {s.amplitude for s in chirps} == {0.3}

    def test_ideal_spec_attached_to_sweeps(self, design):
        ideal = IdealInversionSpec(alpha_slope=0.5)
        sequence = excitation_sequence(design, ideal)
        chirps = [s for s in sequence.segments if s.kind == CHIRP]
        assert all(s.ideal == ideal for s in chirps)

    @pytest.mark.parametrize("n_blocks", [1, 2, 3])
    def test_peak_below_amplitude_limit(self, n_blocks):
        sequence = excitation_sequence(DesignParams(n_blocks=n_blocks), ChirpSpec())
        assert sequence.peak_amplitude <= 1.0 / (2 * n_blocks) + 1e-9

    def test_label_embeds_parameters(self, design):
        label = excitation_sequence(design, ChirpSpec()).label
        assert label.startswith("excitation_n1_N20_M10_sweep-5to5_D300")


class TestRotationStructure:
    def test_single_block(self, design):
        sequence = rotation_sequence(design, ChirpSpec())
        assert _kinds(sequence) == [CHIRP, DELAY, CHIRP] + [RF] * 22 + [CHIRP, DELAY, CHIRP]

    def test_two_blocks(self):
        p = DesignParams(n_blocks=2)
        T = waveform_duration(p)
        assert refocus_delays(rotation_sequence(p, ChirpSpec())) == pytest.approx([T / 2, T, T / 2])

    def test_three_blocks_use_eight_sweeps(self):
        sequence = rotation_sequence(DesignParams(n_blocks=3), ChirpSpec())
        assert count_segments(sequence, CHIRP) == 8


class TestRefocusPolicy:
    def test_default_is_waveform_duration(self, design):
        assert resolve_refocus_T(None, design) == waveform_duration(design)

    def test_published_budget(self, design):
        assert resolve_refocus_T("cutoff", design) == pytest.approx(20 * math.pi)

    def test_numeric_budget_shorter_than_waveform_rejected(self, design):
        with pytest.raises(InvalidParameterError):
            resolve_refocus_T(1.0, design)

    def test_unknown_policy_rejected(self, design):
        with pytest.raises(InvalidParameterError):
            resolve_refocus_T("longest", design)

    def test_padding_centres_waveform(self, design):
        sequence = excitation_sequence(design, ChirpSpec(), refocus_T="cutoff")
        pad = (20 * math.pi - waveform_duration(design)) / 2
        assert sequence.segments[0].kind == DELAY
        assert sequence.segments[0].duration == pytest.approx(pad)
        assert sequence.segments[23].duration == pytest.approx(pad)
        assert refocus_delays(sequence) == pytest.approx([10 * math.pi])


class TestDurations:
    @pytest.mark.parametrize("family, n_blocks, sweep, expected_ms", PUBLISHED_TOTALS)
    def test_published_totals(self, family, n_blocks, sweep, expected_ms):
        compose = excitation_sequence if family == "excitation" else rotation_sequence
        sequence = compose(DesignParams(n_blocks=n_blocks), ChirpSpec(duration=sweep), refocus_T="cutoff")
        ms = physical_duration(sequence, unit_scale_for(sequence, peak_khz=10.0))
        assert ms == pytest.approx(expected_ms, rel=5e-3)

    def test_two_sweeps_alone(self):
        sweeps = PulseSequence(
            segments=[Segment.sweep(ChirpSpec(amplitude=0.5))] * 2,
            peak_amplitude=0.5,
            family="excitation",
        )
        assert physical_duration(sweeps, UnitScale(peak_khz=10.0, peak_amplitude=0.5)) == pytest.approx(4.7746, abs=1e-4)

    def test_empty_delay(self):
        empty = PulseSequence(segments=[Segment.delay(0.0)])
        assert physical_duration(empty, UnitScale()) == 0.0

    def test_additive_under_concatenation(self, design):
        a = excitation_sequence(design, ChirpSpec())
        b = hard_pulse_sequence(0.5, math.pi / 2)
        assert total_duration(concat(a, b)) == pytest.approx(total_duration(a) + total_duration(b), rel=1e-15)


class TestHardPulse:
    def test_ninety_degree_pulse(self):
        pulse = hard_pulse_sequence(0.5, math.pi / 2)
        assert len(pulse.segments) == 1
        assert pulse.segments[0].duration == pytest.approx(math.pi)
        assert total_duration(pulse) * 0.5 == pytest.approx(math.pi / 2)
        ms = physical_duration(pulse, unit_scale_for(pulse, peak_khz=10.0))
        assert ms * 1000.0 == pytest.approx(25.0, rel=1e-12)

    def test_nonpositive_amplitude_rejected(self):
        with pytest.raises(InvalidParameterError):
            hard_pulse_sequence(0.0, math.pi / 2)


class TestUnits:
    @pytest.mark.parametrize("amplitude, khz", [(0.5, 20.0), (0.25, 40.0), (1 / 6, 60.0)])
    def test_bandwidth(self, amplitude, khz):
        low, high = bandwidth_physical(UnitScale(peak_khz=10.0, peak_amplitude=amplitude))
        assert (low, high) == pytest.approx((-khz, khz))

    @pytest.mark.parametrize("n_blocks", [1, 2, 3])
    def test_nominal_anchor(self, n_blocks):
        sequence = excitation_sequence(DesignParams(n_blocks=n_blocks), ChirpSpec())
        assert unit_scale_for(sequence).peak_amplitude == pytest.approx(1.0 / (2 * n_blocks))


class TestSerialization:
    def test_manifest_round_trip_is_lossless(self):
        sequence = rotation_sequence(DesignParams(n_blocks=2), ChirpSpec(duration=1200.0), refocus_T="cutoff")
        assert from_manifest(to_manifest(sequence)) == sequence

    def test_point_list_header_and_samples(self):
        pulse = hard_pulse_sequence(0.5, math.pi / 2)
        lines = to_point_list(pulse, dwell=0.1).splitlines()
        count = math.ceil(math.pi / 0.1)
        assert lines[0].startswith(f"# points={count} dwell=0.1")
        assert len(lines) == count + 1
        amplitude, phase = map(float, lines[1].split())
        assert (amplitude, phase) == (0.5, 0.0)

    def test_point_list_rejects_bad_dwell(self, design):
        with pytest.raises(InvalidParameterError):
            to_point_list(excitation_sequence(design, ChirpSpec()), dwell=0.0)
