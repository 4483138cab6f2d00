"""
Synthetic cohorts and parameter-track degradations.

Utterances are harmonic pulse trains following a per-period F0 track. The
degradation policies rewrite that track (and the amplitude / pause schedule)
before rendering, giving controlled analogs of an anonymizer's acoustic
effects with exact oracles.
"""

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.ndimage import uniform_filter1d

from ..models.synth_types import CohortSpec, DegradationPolicy, PolicyKind, UtteranceSpec
from ..models.utterance import FrameMatrix, Gender, Group, Task, UtteranceRecord, Waveform
from ..utils.constants import SYNTH_EDGE_S, SYNTH_HARMONICS
from ..utils.errors import DataError
from ..utils.parallel import parallel_map
from ..utils.seeding import derive_seed, derived_rng
from .fmat_io import FmatIO
from .manifest_loader import ManifestLoader
from .wav_io import WavIO

logger = logging.getLogger(__name__)

# Shared "phonetic content" codebook of the synthetic frame features
CODEBOOK_SIZE = 32
SPEAKER_WEIGHT = 0.7
FRAME_NOISE = 0.2


@dataclass
class SynthTracks:
    """Mutable parameter tracks of one utterance, consumed by render."""
    spec: UtteranceSpec
    phase: float
    # Relative period perturbation per glottal period
    perturbation: np.ndarray
    smooth_windows: List[float] = field(default_factory=list)
    # Scale of the intonation contour left by smoothing
    contour_gain: float = 1.0


@dataclass(frozen=True)
class SynthCohort:
    records: Tuple[UtteranceRecord, ...]
    specs: Dict[str, UtteranceSpec]
    seeds: Dict[str, int]
    targets: Tuple[UtteranceRecord, ...] = ()


class Synthesizer:
    """Service for rendering, degrading and generating synthetic cohorts."""

    @staticmethod
    def build_tracks(spec: UtteranceSpec, seed: int) -> SynthTracks:
        rng = np.random.default_rng(seed)
        phase = float(rng.uniform(0.0, 2.0 * np.pi))
        # Upper bound on the number of periods, so draws do not depend on policies
        n_max = int(np.ceil(spec.duration_s * (spec.f0_base + spec.f0_var) * 1.2)) + 16
        j = spec.jitter_pct / 100.0
        # Alternating signs: each draw is uniform in ±j and E|u_i - u_(i-1)| = j
        signs = np.where(np.arange(n_max) % 2 == 0, 1.0, -1.0)
        perturbation = signs * rng.uniform(0.0, j, size=n_max)
        return SynthTracks(spec=spec, phase=phase, perturbation=perturbation)

    @staticmethod
    def period_frequencies(tracks: SynthTracks) -> np.ndarray:
        """
        Instantaneous frequency of every glottal period covering the utterance.

        Smoothing windows act on the two parts of the track separately: the
        perturbation gets a moving average over the periods inside the
        window, and the sinusoidal contour is scaled by the moving average's
        response at f0_rate_hz (zero when the window spans whole cycles).
        """
        spec = tracks.spec
        perturbation = tracks.perturbation
        for window_s in tracks.smooth_windows:
            size = max(1, int(round(window_s * spec.f0_base)))
            perturbation = uniform_filter1d(perturbation, size=size, mode="nearest")
        depth = spec.f0_var * tracks.contour_gain
        freqs = []
        t = 0.0
        for u in perturbation:
            if t >= spec.duration_s:
                break
            nominal = spec.f0_base + depth * np.sin(2.0 * np.pi * spec.f0_rate_hz * t + tracks.phase)
            period = (1.0 + u) / nominal
            freqs.append(1.0 / period)
            t += period
        return np.asarray(freqs, dtype=np.float64)

    @classmethod
    def render(cls, tracks: SynthTracks) -> Waveform:
        spec = tracks.spec
        sr = spec.sample_rate
        n = int(round(spec.duration_s * sr))
        freqs = cls.period_frequencies(tracks)

        period_ends = np.cumsum(1.0 / freqs)
        times = np.arange(n) / sr
        idx = np.minimum(np.searchsorted(period_ends, times, side="right"), freqs.size - 1)
        phase = 2.0 * np.pi * np.cumsum(freqs[idx]) / sr

        harmonics = np.arange(1, SYNTH_HARMONICS + 1, dtype=np.float64)
        signal = np.sin(phase[:, None] * harmonics) @ (1.0 / harmonics)
        signal /= np.sum(1.0 / harmonics)

        samples = spec.amplitude * signal * cls._envelope(spec, times)
        return Waveform(samples=np.clip(samples, -1.0, 1.0), sample_rate=sr)

    @staticmethod
    def _envelope(spec: UtteranceSpec, times: np.ndarray) -> np.ndarray:
        """Unit gain with silent pauses; raised-cosine ramps sit on the speech side."""
        edges = [(0.0, 0.0)] + list(spec.pauses) + [(spec.duration_s, 0.0)]
        env = np.zeros_like(times)
        for (prev_onset, prev_dur), (onset, _) in zip(edges[:-1], edges[1:]):
            start, end = prev_onset + prev_dur, onset
            inside = (times >= start) & (times < end)
            ramp = min(SYNTH_EDGE_S, (end - start) / 2.0)
            t = times[inside]
            gain = np.ones_like(t)
            if ramp > 0:
                rise = np.clip((t - start) / ramp, 0.0, 1.0)
                fall = np.clip((end - t) / ramp, 0.0, 1.0)
                gain = 0.5 * (1.0 - np.cos(np.pi * np.minimum(rise, fall)))
            env[inside] = gain
        return env

    @classmethod
    def synth_utterance(cls, spec: UtteranceSpec, seed: int) -> Waveform:
        """Render an utterance spec; identical seeds give identical samples."""
        return cls.render(cls.build_tracks(spec, seed))

    @classmethod
    def degrade(cls, spec: UtteranceSpec, policies: Sequence[DegradationPolicy], seed: int) -> Waveform:
        """
        Apply policies to the parameter tracks in order, then render.

        The pause schedule is kept except under transcript_resynth, which
        re-specifies the utterance with uniform pauses.

        Args:
            spec: Undegraded utterance parameters.
            policies: Degradations applied in order.
            seed: Seed of the undegraded rendering.

        Returns:
            Waveform of the degraded utterance.
        """
        tracks = cls.build_tracks(spec, seed)
        for policy in policies:
            tracks = cls.apply_policy(tracks, policy)
        return cls.render(tracks)

    @classmethod
    def apply_policy(cls, tracks: SynthTracks, policy: DegradationPolicy) -> SynthTracks:
        kind = policy.kind
        if kind is PolicyKind.F0_SMOOTH:
            tracks.smooth_windows.append(policy.window_s)
            tracks.contour_gain *= float(np.sinc(tracks.spec.f0_rate_hz * policy.window_s))
        elif kind is PolicyKind.ENERGY_GAIN:
            amplitude = tracks.spec.amplitude * 10.0 ** (policy.gain_db / 20.0)
            if amplitude > 1.0:
                logger.warning("energy_gain(%+.1f dB) saturates amplitude; capped at 1.0", policy.gain_db)
            tracks.spec = replace(tracks.spec, amplitude=min(amplitude, 1.0))
        elif kind is PolicyKind.JITTER_REMOVE:
            tracks.perturbation = np.zeros_like(tracks.perturbation)
        elif kind is PolicyKind.TRANSCRIPT_RESYNTH:
            tracks = cls._resynthesize(tracks, policy)
        return tracks

    @staticmethod
    def _resynthesize(tracks: SynthTracks, policy: DegradationPolicy) -> SynthTracks:
        """Keep only duration and segment count; all source prosody is replaced."""
        spec = tracks.spec
        count = len(spec.pauses)
        while count > 0 and spec.duration_s - count * policy.pause_s < 0.3 * (count + 1):
            count -= 1
        segment = (spec.duration_s - count * policy.pause_s) / (count + 1)
        pauses = tuple((segment * (i + 1) + policy.pause_s * i, policy.pause_s) for i in range(count))
        new_spec = UtteranceSpec(
            f0_base=policy.target_f0,
            duration_s=spec.duration_s,
            f0_var=0.0,
            jitter_pct=0.0,
            pauses=pauses,
            amplitude=0.5,
            sample_rate=spec.sample_rate,
        )
        return SynthTracks(spec=new_spec, phase=0.0, perturbation=np.zeros_like(tracks.perturbation))

    @staticmethod
    def _place_pauses(duration: float, durations: Sequence[float]) -> Tuple[Tuple[float, float], ...]:
        """Spread pauses evenly, dropping the last ones when speech segments would be < 0.3 s."""
        durations = list(durations)
        while durations and duration - sum(durations) < 0.3 * (len(durations) + 1):
            durations.pop()
        segment = (duration - sum(durations)) / (len(durations) + 1)
        pauses, t = [], 0.0
        for dur in durations:
            t += segment
            pauses.append((round(t, 6), round(dur, 6)))
            t += dur
        return tuple(pauses)

    @classmethod
    def draw_specs(cls, cohort: CohortSpec, seed: int) -> List[Tuple[UtteranceRecord, UtteranceSpec]]:
        """Deterministic per-speaker parameters drawn from the group distributions."""
        out: List[Tuple[UtteranceRecord, UtteranceSpec]] = []
        for group in (Group.HC, Group.PD):
            dist = cohort.distributions[group]
            for i in range(cohort.n_per_group):
                speaker = f"{group.value}{i:03d}"
                gender = Gender.M if i % 2 == 0 else Gender.F
                rng = derived_rng(seed, speaker)
                base_range = dist.f0_base_m if gender is Gender.M else dist.f0_base_f
                f0_base = float(rng.uniform(*base_range))
                f0_var = float(rng.uniform(*dist.f0_var))
                jitter = float(rng.uniform(*dist.jitter_pct))
                amplitude = float(rng.uniform(*dist.amplitude))
                for j in range(cohort.utterances_per_speaker):
                    utt_id = f"{speaker}_{j:02d}"
                    utt_rng = derived_rng(seed, utt_id)
                    duration = round(float(utt_rng.uniform(*dist.duration_s)), 3)
                    n_pauses = int(utt_rng.integers(dist.pause_count[0], dist.pause_count[1] + 1))
                    pause_durs = utt_rng.uniform(*dist.pause_dur, size=n_pauses)
                    spec = UtteranceSpec(
                        f0_base=f0_base,
                        duration_s=duration,
                        f0_var=f0_var,
                        jitter_pct=jitter,
                        pauses=cls._place_pauses(duration, pause_durs),
                        amplitude=amplitude,
                    )
                    record = UtteranceRecord(
                        id=utt_id,
                        speaker=speaker,
                        gender=gender,
                        group=group,
                        task=cohort.task,
                        audio_path=f"audio/{utt_id}.wav",
                        feature_path=f"features/{utt_id}.fmat",
                    )
                    out.append((record, spec))
        return out

    @staticmethod
    def speaker_code(seed: int, speaker: str, dim: int) -> np.ndarray:
        return derived_rng(seed, "code:" + speaker).standard_normal(dim)

    @classmethod
    def synth_frames(cls, seed: int, speaker: str, key: str, n_frames: int, cohort: CohortSpec) -> FrameMatrix:
        """Frame features: shared content codebook entry + speaker code + noise."""
        codebook = np.random.default_rng(seed).standard_normal((CODEBOOK_SIZE, cohort.feature_dim)) * 2.0
        code = cls.speaker_code(seed, speaker, cohort.feature_dim)
        rng = derived_rng(seed, "frames:" + key)
        content = codebook[rng.integers(CODEBOOK_SIZE, size=n_frames)]
        noise = rng.standard_normal((n_frames, cohort.feature_dim)) * FRAME_NOISE
        frames = content + SPEAKER_WEIGHT * code + noise
        return FrameMatrix(frames=frames.astype(np.float32), hop_s=1.0 / cohort.frames_per_second)

    @classmethod
    def synth_cohort(
        cls,
        cohort: CohortSpec,
        seed: int,
        out_dir: Optional[Path] = None,
        jobs: int = 1,
    ) -> SynthCohort:
        """
        Generate a cohort; when out_dir is given, write WAVs, FMATs, the
        manifest, the cohort spec file and the target-speaker pool files.
        """
        pairs = cls.draw_specs(cohort, seed)
        records = tuple(r for r, _ in pairs)
        specs = {r.id: s for r, s in pairs}
        seeds = {r.id: derive_seed(seed, r.id) for r in records}

        targets: List[UtteranceRecord] = []
        for i in range(cohort.n_target_speakers):
            speaker = f"TGT{i:03d}"
            targets.append(UtteranceRecord(
                id=f"{speaker}_pool",
                speaker=speaker,
                gender=Gender.M if i % 2 == 0 else Gender.F,
                group=Group.HC,
                task=Task.MONOLOGUE,
                feature_path=f"targets/{speaker}.fmat",
            ))

        if out_dir is not None:
            out_dir = Path(out_dir)
            parallel_map(
                _render_job,
                [(specs[r.id], seeds[r.id], (), out_dir / r.audio_path) for r in records],
                jobs,
            )
            for record in records:
                spec = specs[record.id]
                n_frames = max(2, int(round(spec.duration_s * cohort.frames_per_second)))
                FmatIO.write(cls.synth_frames(seed, record.speaker, record.id, n_frames, cohort),
                             out_dir / record.feature_path)
            n_target = int(round(cohort.target_seconds * cohort.frames_per_second))
            for target in targets:
                FmatIO.write(cls.synth_frames(seed, target.speaker, target.id, n_target, cohort),
                             out_dir / target.feature_path)
            ManifestLoader.write(records, out_dir / "manifest.jsonl")
            ManifestLoader.write(targets, out_dir / "targets.jsonl")
            cls.write_spec_file(specs, seeds, out_dir / "cohort_specs.jsonl")
            logger.info("Wrote %d utterances and %d target pools to %s", len(records), len(targets), out_dir)

        return SynthCohort(records=records, specs=specs, seeds=seeds, targets=tuple(targets))

    @staticmethod
    def write_spec_file(specs: Dict[str, UtteranceSpec], seeds: Dict[str, int], path: Path) -> Path:
        """Cohort spec file in the manifest's line-delimited key-value format."""
        with Path(path).open("w", encoding="utf-8", newline="\n") as handle:
            for utt_id in sorted(specs):
                entry = {"id": utt_id, "seed": seeds[utt_id], **specs[utt_id].to_dict()}
                handle.write(json.dumps(entry) + "\n")
        return Path(path)

    @staticmethod
    def read_spec_file(path) -> Tuple[Dict[str, UtteranceSpec], Dict[str, int]]:
        specs: Dict[str, UtteranceSpec] = {}
        seeds: Dict[str, int] = {}
        with Path(path).open("r", encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    entry = json.loads(line)
                    utt_id = entry.pop("id")
                    seeds[utt_id] = int(entry.pop("seed"))
                    specs[utt_id] = UtteranceSpec.from_dict(entry)
                except (KeyError, TypeError, ValueError) as e:
                    raise DataError(f"{path} line {lineno}: bad cohort spec ({e})") from None
        return specs, seeds

    @classmethod
    def write_degraded(
        cls,
        cohort: SynthCohort,
        policies: Sequence[DegradationPolicy],
        out_dir: Path,
        jobs: int = 1,
    ) -> Tuple[UtteranceRecord, ...]:
        """Render every cohort utterance through the policies into out_dir with its own manifest."""
        out_dir = Path(out_dir)
        records = tuple(replace(r, audio_path=f"audio/{r.id}.wav", feature_path=None) for r in cohort.records)
        parallel_map(
            _render_job,
            [(cohort.specs[r.id], cohort.seeds[r.id], tuple(policies), out_dir / r.audio_path) for r in records],
            jobs,
        )
        ManifestLoader.write(records, out_dir / "manifest.jsonl")
        logger.info("Wrote %d degraded utterances to %s", len(records), out_dir)
        return records


def _render_job(job) -> Path:
    spec, seed, policies, path = job
    return WavIO.write(Synthesizer.degrade(spec, policies, seed), path)
