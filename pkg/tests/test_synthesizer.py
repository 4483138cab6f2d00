"""Tests for the Synthesizer service and degradation policies."""

import numpy as np
import pytest

from src.models.synth_types import (
    GROUP_PRESETS,
    CohortSpec,
    DegradationPolicy,
    GroupDistribution,
    PolicyKind,
    UtteranceSpec,
    parse_policy,
    policy_from_config,
)
from src.models.utterance import Group
from src.services.fmat_io import FmatIO
from src.services.manifest_loader import ManifestLoader
from src.services.prosody_extractor import ProsodyExtractor
from src.services.synthesizer import Synthesizer
from src.services.wav_io import WavIO
from src.utils.errors import DataError

PAUSES = ((0.5, 0.3), (1.2, 0.5))


def _spec(**overrides):
    fields = dict(f0_base=150.0, duration_s=2.2, pauses=PAUSES, amplitude=0.3)
    fields.update(overrides)
    return UtteranceSpec(**fields)


def _summary(spec, policies=(), seed=0):
    return ProsodyExtractor.summarize(Synthesizer.degrade(spec, list(policies), seed))


class TestUtteranceSpec:
    """Tests for UtteranceSpec validation."""

    @pytest.mark.parametrize("overrides", [
        {"f0_base": 50.0},
        {"f0_base": 450.0},
        {"jitter_pct": -1.0},
        {"pauses": ((0.5, 0.3), (0.7, 0.2))},
        {"pauses": ((2.0, 0.5),)},
        {"amplitude": 0.0},
        {"f0_var": 130.0},
    ])
    def test_invalid_specs(self, overrides):
        """Out-of-range or overlapping parameters should be rejected."""
        with pytest.raises(DataError):
            _spec(**overrides)

    def test_dict_form(self):
        """to_dict and from_dict should agree."""
        spec = _spec(jitter_pct=2.0, f0_var=10.0)
        assert UtteranceSpec.from_dict(spec.to_dict()) == spec


class TestPolicies:
    """Tests for policy parsing."""

    def test_text_forms(self):
        """Compact text should set the kind's parameters."""
        assert parse_policy("energy_gain(+6)") == DegradationPolicy(PolicyKind.ENERGY_GAIN, gain_db=6.0)
        assert parse_policy("f0_smooth(0.2)").window_s == 0.2
        assert parse_policy("jitter_remove").kind is PolicyKind.JITTER_REMOVE
        resynth = parse_policy("transcript_resynth(110, 0.25)")
        assert (resynth.target_f0, resynth.pause_s) == (110.0, 0.25)

    def test_mapping_form(self):
        """Config mappings should build the same policy."""
        assert policy_from_config({"kind": "f0_smooth", "window_s": 0.2}) == parse_policy("f0_smooth(0.2)")

    @pytest.mark.parametrize("text", ["f0_smooth(0)", "warp(2)", "energy_gain(loud)", "jitter_remove(1)", "(("])
    def test_invalid_policies(self, text):
        """Unknown kinds, bad arguments and non-positive windows should be rejected."""
        with pytest.raises(DataError):
            parse_policy(text)


class TestSynthUtterance:
    """Tests for rendering single utterances."""

    def test_steady_tone_measures_base_f0(self):
        """A jitter-free spec should track at f0_base with no jitter."""
        summary = _summary(_spec(pauses=()))
        assert summary.f0_avg == pytest.approx(150.0, abs=2.0)
        assert summary.jitter_avg < 0.002

    def test_pauses_recovered(self):
        """Pause schedule should be found within 20 ms."""
        w = Synthesizer.synth_utterance(_spec(), 0)
        track = ProsodyExtractor.f0_track(w)
        seg = ProsodyExtractor.segment_pauses(ProsodyExtractor.energy_track(w, 0.04, 0.01), track.voiced)
        assert seg.count == 2
        for (start, end), (onset, dur) in zip(seg.pauses, PAUSES):
            assert start == pytest.approx(onset, abs=0.02)
            assert end - start == pytest.approx(dur, abs=0.02)

    def test_deterministic(self):
        """The same seed should give bit-identical samples."""
        spec = _spec(jitter_pct=3.0, f0_var=10.0)
        a, b = Synthesizer.synth_utterance(spec, 7), Synthesizer.synth_utterance(spec, 7)
        np.testing.assert_array_equal(a.samples, b.samples)
        assert not np.array_equal(a.samples, Synthesizer.synth_utterance(spec, 8).samples)

    def test_length_and_range(self):
        """Output should have duration * rate samples within the amplitude."""
        w = Synthesizer.synth_utterance(_spec(amplitude=0.8), 0)
        assert w.samples.size == int(round(2.2 * 16000))
        assert np.max(np.abs(w.samples)) <= 0.8 + 1e-12

    def test_pauses_are_silent(self):
        """Samples inside a pause should be exactly zero."""
        w = Synthesizer.synth_utterance(_spec(), 0)
        assert np.all(w.samples[int(0.52 * 16000):int(0.78 * 16000)] == 0.0)

    def test_more_jitter_measures_more(self):
        """Measured jitter should grow with the injected period perturbation."""
        measured = [_summary(_spec(pauses=(), jitter_pct=j), seed=1).jitter_avg for j in (0.0, 1.0, 3.0, 5.0)]
        assert measured == sorted(measured)
        assert measured[0] < measured[-1]

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_two_percent_jitter_measures_two_percent(self, seed):
        """A 2% jitter spec should measure 0.02 ± 0.005."""
        assert _summary(_spec(pauses=(), jitter_pct=2.0), seed=seed).jitter_avg == pytest.approx(0.02, abs=0.005)


class TestDegrade:
    """Tests for parameter-track degradations."""

    def test_empty_policy_list_is_synth_utterance(self):
        """No policies should render exactly the undegraded utterance."""
        spec = _spec(jitter_pct=2.0, f0_var=8.0)
        np.testing.assert_array_equal(
            Synthesizer.degrade(spec, [], 4).samples, Synthesizer.synth_utterance(spec, 4).samples
        )

    def test_f0_smooth_flattens_contour(self):
        """A window spanning one contour cycle should remove the contour and cut the F0 derivative by more than 5x."""
        spec = _spec(pauses=(), f0_var=20.0, jitter_pct=5.0)
        before = _summary(spec, seed=2)
        after = _summary(spec, [parse_policy("f0_smooth(2.0)")], seed=2)
        assert before.f0_std > 8.0
        assert after.f0_std < 1.0
        assert after.f0_deriv_avg * 5 < before.f0_deriv_avg
        assert after.f0_avg == pytest.approx(150.0, abs=1.0)

    def test_f0_smooth_averages_jitter(self):
        """Smoothing should average the period perturbation away."""
        spec = _spec(pauses=(), jitter_pct=5.0)
        assert _summary(spec, seed=2).jitter_avg > 0.04
        assert _summary(spec, [parse_policy("f0_smooth(0.25)")], seed=2).jitter_avg < 0.01

    def test_short_window_keeps_contour(self):
        """A window much shorter than the contour period should leave most of its depth."""
        spec = _spec(pauses=(), f0_var=20.0)
        before = _summary(spec, seed=2).f0_std
        after = _summary(spec, [parse_policy("f0_smooth(0.1)")], seed=2).f0_std
        assert after == pytest.approx(before, rel=0.1)

    def test_energy_gain(self):
        """+6 dB should raise energy_avg by 6 dB and keep pauses."""
        spec = _spec()
        base = _summary(spec)
        loud = _summary(spec, [parse_policy("energy_gain(+6)")])
        assert loud.energy_avg - base.energy_avg == pytest.approx(6.0, abs=0.3)
        assert loud.pause_count == base.pause_count
        assert loud.pause_dur_avg == pytest.approx(base.pause_dur_avg, abs=0.02)

    def test_energy_gain_capped(self):
        """Gains that would exceed full scale should cap the amplitude at 1."""
        w = Synthesizer.degrade(_spec(amplitude=0.9), [parse_policy("energy_gain(12)")], 0)
        assert np.max(np.abs(w.samples)) <= 1.0

    def test_jitter_remove(self):
        """Removing jitter should bring measured jitter to the jitter-free level."""
        spec = _spec(pauses=(), jitter_pct=4.0)
        assert _summary(spec, [parse_policy("jitter_remove")]).jitter_avg < 0.002

    def test_pause_preserve_with_other_policies(self):
        """Non-resynthesis policies should leave the pause statistics alone."""
        spec = _spec(jitter_pct=3.0, f0_var=10.0)
        base = _summary(spec)
        policies = [parse_policy(p) for p in ("f0_smooth(0.1)", "energy_gain(+6)", "jitter_remove", "pause_preserve")]
        degraded = _summary(spec, policies)
        assert degraded.pause_count == base.pause_count
        assert degraded.pause_dur_avg == pytest.approx(base.pause_dur_avg, abs=0.02)

    def test_transcript_resynth_replaces_prosody(self):
        """Resynthesis should impose the target F0 and uniform pauses."""
        spec = _spec(jitter_pct=4.0, f0_var=15.0)
        summary = _summary(spec, [parse_policy("transcript_resynth(110, 0.3)")])
        assert summary.f0_avg == pytest.approx(110.0, abs=2.0)
        assert summary.jitter_avg < 0.002
        assert summary.pause_count == 2.0
        assert summary.pause_dur_std < 0.02


class TestSynthCohort:
    """Tests for cohort generation."""

    def _cohort_spec(self, n=5, **overrides):
        same = dict(f0_var=(5.0, 10.0), pause_count=(1, 2), pause_dur=(0.3, 0.5), duration_s=(2.0, 2.5))
        distributions = {
            Group.HC: GroupDistribution(jitter_pct=(0.0, 1.0), **same),
            Group.PD: GroupDistribution(jitter_pct=(3.0, 5.0), **same),
        }
        fields = dict(n_per_group=n, utterances_per_speaker=1, distributions=distributions,
                      n_target_speakers=2, target_seconds=2.0)
        fields.update(overrides)
        return CohortSpec(**fields)

    def test_one_speaker_per_group_rejected(self):
        """Cohorts need at least two speakers per group."""
        with pytest.raises(DataError):
            CohortSpec(n_per_group=1)

    def test_invalid_distribution_rejected(self):
        """Reversed ranges should be rejected."""
        with pytest.raises(DataError):
            GroupDistribution(jitter_pct=(3.0, 1.0))

    def test_specs_deterministic(self):
        """The same seed should draw the same specs."""
        spec = self._cohort_spec()
        a = Synthesizer.synth_cohort(spec, seed=11)
        b = Synthesizer.synth_cohort(spec, seed=11)
        assert a.specs == b.specs and a.seeds == b.seeds
        assert Synthesizer.synth_cohort(spec, seed=12).specs != a.specs

    def test_presets_encode_pd_traits(self):
        """PD presets should have more jitter and pauses and less intonation."""
        hc, pd_ = GROUP_PRESETS[Group.HC], GROUP_PRESETS[Group.PD]
        assert pd_.jitter_pct[0] > hc.jitter_pct[1]
        assert pd_.f0_var[1] < hc.f0_var[0]
        assert pd_.pause_dur[0] > hc.pause_dur[0]

    def test_jitter_separates_groups(self):
        """Disjoint jitter ranges should separate the groups on measured jitter, until removed."""
        cohort = Synthesizer.synth_cohort(self._cohort_spec(), seed=5)
        measured, removed = {Group.HC: [], Group.PD: []}, []
        for record in cohort.records:
            spec, seed = cohort.specs[record.id], cohort.seeds[record.id]
            measured[record.group].append(_summary(spec, seed=seed).jitter_avg)
            removed.append(_summary(spec, [parse_policy("jitter_remove")], seed=seed).jitter_avg)
        assert max(measured[Group.HC]) < min(measured[Group.PD])
        assert max(removed) < min(measured[Group.PD])

    def test_writes_cohort_files(self, tmp_path):
        """Writing a cohort should produce manifest, audio, features, targets and specs."""
        cohort = Synthesizer.synth_cohort(self._cohort_spec(n=2), seed=1, out_dir=tmp_path)
        records = ManifestLoader.load(tmp_path / "manifest.jsonl")
        assert [r.id for r in records] == [r.id for r in cohort.records]
        first = records[0]
        w = WavIO.read(tmp_path / first.audio_path)
        assert w.duration_s == pytest.approx(cohort.specs[first.id].duration_s, abs=1e-3)
        m = FmatIO.read(tmp_path / first.feature_path)
        assert m.dim == 16
        targets = ManifestLoader.load(tmp_path / "targets.jsonl")
        assert len(targets) == 2
        assert FmatIO.read(tmp_path / targets[0].feature_path).n_frames == 100
        specs, seeds = Synthesizer.read_spec_file(tmp_path / "cohort_specs.jsonl")
        assert specs == cohort.specs and seeds == cohort.seeds

    def test_write_degraded(self, tmp_path):
        """Degraded conditions should get their own manifest and audio."""
        cohort = Synthesizer.synth_cohort(self._cohort_spec(n=2), seed=1)
        records = Synthesizer.write_degraded(cohort, [parse_policy("energy_gain(3)")], tmp_path / "anon")
        assert ManifestLoader.load(tmp_path / "anon" / "manifest.jsonl") == list(records)
        assert all((tmp_path / "anon" / r.audio_path).is_file() for r in records)
        assert all(r.feature_path is None for r in records)

    def test_frames_encode_speaker(self):
        """Frame features of one speaker should share a speaker offset."""
        spec = self._cohort_spec()
        a1 = Synthesizer.synth_frames(0, "HC000", "x", 500, spec).frames.mean(axis=0)
        a2 = Synthesizer.synth_frames(0, "HC000", "y", 500, spec).frames.mean(axis=0)
        b = Synthesizer.synth_frames(0, "HC001", "z", 500, spec).frames.mean(axis=0)
        assert np.linalg.norm(a1 - a2) < np.linalg.norm(a1 - b)
