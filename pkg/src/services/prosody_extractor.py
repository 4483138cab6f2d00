"""
Prosody and phonation feature extraction from waveforms.

F0 uses the cumulative-mean-normalized difference function with an absolute
threshold and parabolic refinement of the dip. Pauses are low-energy unvoiced
runs inside the speech region. Jitter is period perturbation measured on
single glottal cycles (rising zero crossings inside voiced runs), falling
back to frame-to-frame F0 periods when no cycle survives the consistency
check against the frame track.
"""

import logging
from typing import List, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.ndimage import binary_dilation

from ..models.acoustics import AcousticSummary, F0Track, JitterStats, PauseSegmentation, ProsodyConfig
from ..models.utterance import Waveform
from ..utils.constants import CYCLE_TOLERANCE, ENERGY_FLOOR
from ..utils.errors import DataError

logger = logging.getLogger(__name__)

FLOOR_DB = -100.0


def _frame(w: Waveform, frame_s: float, hop_s: float) -> Tuple[np.ndarray, int, int]:
    frame_len = int(round(frame_s * w.sample_rate))
    hop = int(round(hop_s * w.sample_rate))
    if frame_len < 2 or hop < 1:
        raise DataError(f"frame/hop too short for sample rate {w.sample_rate}")
    if w.samples.size < frame_len:
        raise DataError(
            f"waveform of {w.samples.size} samples is shorter than one {frame_len}-sample frame"
        )
    frames = sliding_window_view(w.samples, frame_len)[::hop]
    return frames, frame_len, hop


def _runs(mask: np.ndarray) -> List[Tuple[int, int]]:
    """Maximal runs of True as (start, end) with end exclusive."""
    padded = np.concatenate(([False], mask, [False])).astype(np.int8)
    edges = np.diff(padded)
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    return list(zip(starts.tolist(), ends.tolist()))


class ProsodyExtractor:
    """Service computing F0, energy, pauses, jitter and their summary."""

    @classmethod
    def energy_track(cls, w: Waveform, frame_s: float, hop_s: float) -> np.ndarray:
        """Per-frame energy in dB: 10·log10(mean square + 1e-10)."""
        frames, _, _ = _frame(w, frame_s, hop_s)
        mean_square = np.mean(frames * frames, axis=1)
        energy = 10.0 * np.log10(mean_square + ENERGY_FLOOR)
        energy[mean_square == 0.0] = FLOOR_DB
        return energy

    @classmethod
    def f0_track(
        cls,
        w: Waveform,
        frame_s: float = ProsodyConfig.frame_s,
        hop_s: float = ProsodyConfig.hop_s,
        fmin: float = ProsodyConfig.fmin,
        fmax: float = ProsodyConfig.fmax,
        threshold: float = ProsodyConfig.threshold,
        voicing_floor_db: float = ProsodyConfig.voicing_floor_db,
    ) -> F0Track:
        """
        Frame-wise F0 estimate.

        Frames are unvoiced when the normalized difference function never dips
        below the threshold within [1/fmax, 1/fmin] or when frame energy is
        below the voicing floor.
        """
        if not (0 < fmin < fmax):
            raise DataError(f"need 0 < fmin < fmax, got {fmin}, {fmax}")
        if w.sample_rate < 4 * fmax:
            raise DataError(f"sample rate {w.sample_rate} Hz too low for fmax {fmax} Hz")

        frames, frame_len, _ = _frame(w, frame_s, hop_s)
        sr = w.sample_rate
        tau_min = max(2, int(np.floor(sr / fmax)))
        tau_max = min(int(np.ceil(sr / fmin)) + 1, frame_len // 2)
        if tau_max <= tau_min + 1:
            raise DataError(f"frame of {frame_s} s too short for fmin {fmin} Hz")
        window = frame_len - tau_max

        cmnd = cls._cmnd(frames, window, tau_max)
        energy = cls.energy_track(w, frame_s, hop_s)

        f0 = np.zeros(frames.shape[0], dtype=np.float64)
        for i in range(frames.shape[0]):
            if energy[i] < voicing_floor_db:
                continue
            tau = cls._pick_dip(cmnd[i], tau_min, tau_max, threshold)
            if tau is None:
                continue
            freq = sr / tau
            if fmin <= freq <= fmax:
                f0[i] = freq

        return F0Track(f0=f0, voiced=f0 > 0, frame_s=frame_s, hop_s=hop_s)

    @staticmethod
    def _cmnd(frames: np.ndarray, window: int, tau_max: int) -> np.ndarray:
        """Cumulative-mean-normalized difference function, shape (F, tau_max + 1)."""
        n = frames.shape[0]
        diff = np.zeros((n, tau_max + 1), dtype=np.float64)
        head = frames[:, :window]
        for tau in range(1, tau_max + 1):
            delta = head - frames[:, tau:tau + window]
            diff[:, tau] = np.einsum("ij,ij->i", delta, delta)

        cumulative = np.cumsum(diff[:, 1:], axis=1)
        taus = np.arange(1, tau_max + 1, dtype=np.float64)
        cmnd = np.ones_like(diff)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = diff[:, 1:] * taus / cumulative
        cmnd[:, 1:] = np.where(cumulative > 0, ratio, 1.0)
        return cmnd

    @staticmethod
    def _pick_dip(cmnd: np.ndarray, tau_min: int, tau_max: int, threshold: float):
        below = np.flatnonzero(cmnd[tau_min:tau_max] < threshold)
        if below.size == 0:
            return None
        tau = tau_min + int(below[0])
        # Walk down to the bottom of the dip
        while tau + 1 < tau_max and cmnd[tau + 1] < cmnd[tau]:
            tau += 1
        a, b, c = cmnd[tau - 1], cmnd[tau], cmnd[tau + 1]
        denom = a - 2.0 * b + c
        shift = 0.5 * (a - c) / denom if denom > 0 else 0.0
        return tau + float(np.clip(shift, -0.5, 0.5))

    @classmethod
    def segment_pauses(
        cls,
        energy: np.ndarray,
        voiced: np.ndarray,
        hop_s: float = ProsodyConfig.hop_s,
        frame_s: float = ProsodyConfig.frame_s,
        min_pause_s: float = ProsodyConfig.min_pause_s,
        offset_db: float = ProsodyConfig.pause_offset_db,
        floor_db: float = ProsodyConfig.voicing_floor_db,
    ) -> PauseSegmentation:
        """
        Find pauses inside the speech region.

        A pause is a maximal run of frames that are both below
        (median speech energy - offset_db) and unvoiced, lasting at least
        min_pause_s. Duration counts the union of the run's analysis windows.
        """
        energy = np.asarray(energy, dtype=np.float64)
        voiced = np.asarray(voiced, dtype=bool)
        if energy.shape != voiced.shape:
            raise DataError("energy and voicing tracks are not aligned")

        audible = energy > floor_db
        if not np.any(audible):
            return PauseSegmentation(pauses=(), speech_start=0, speech_end=0, empty_speech=True)

        gate = float(np.median(energy[audible])) - offset_db
        silent = energy < gate
        speaking = np.flatnonzero(~silent)
        start, end = int(speaking[0]), int(speaking[-1]) + 1

        candidates = silent[start:end] & ~voiced[start:end]
        pauses = []
        for run_start, run_end in _runs(candidates):
            duration = (run_end - run_start - 1) * hop_s + frame_s
            if duration + 1e-9 >= min_pause_s:
                onset = (start + run_start) * hop_s
                pauses.append((onset, onset + duration))
        return PauseSegmentation(pauses=tuple(pauses), speech_start=start, speech_end=end)

    @staticmethod
    def jitter_stats(f0: F0Track) -> JitterStats:
        """Period perturbation |T_i - T_(i-1)| / mean(T) over consecutive voiced frames."""
        samples = []
        for start, end in _runs(f0.voiced):
            if end - start >= 2:
                periods = 1.0 / f0.f0[start:end]
                samples.append(np.abs(np.diff(periods)))
        if not samples:
            return JitterStats(jitter_avg=0.0, jitter_std=0.0, no_voicing=True)
        mean_period = float(np.mean(1.0 / f0.f0[f0.voiced]))
        values = np.concatenate(samples) / mean_period
        return JitterStats(jitter_avg=float(values.mean()), jitter_std=float(values.std()))

    @staticmethod
    def cycle_track(w: Waveform, track: F0Track, tolerance: float = CYCLE_TOLERANCE) -> F0Track:
        """
        Per-cycle F0 inside the voiced runs of a frame track.

        Cycles run between consecutive rising zero crossings, located to
        sub-sample precision by linear interpolation. A cycle is kept when
        its frequency is within tolerance (relative) of the frame estimate
        at its midpoint.

        Args:
            w: Waveform the frame track was computed on.
            track: Frame-wise F0 track of w.
            tolerance: Largest accepted relative deviation from the frame F0.

        Returns:
            Track with one entry per cycle. Rejected cycles and run
            boundaries are unvoiced entries, so runs are never bridged.
        """
        sr = w.sample_rate
        hop = int(round(track.hop_s * sr))
        frame_len = int(round(track.frame_s * sr))
        x = w.samples
        values: List[float] = []
        for start, end in _runs(track.voiced):
            lo = start * hop
            seg = x[lo:min(x.size, (end - 1) * hop + frame_len)]
            rising = np.flatnonzero((seg[:-1] < 0.0) & (seg[1:] > 0.0))
            if rising.size < 2:
                continue
            times = lo + rising + seg[rising] / (seg[rising] - seg[rising + 1])
            freqs = sr / np.diff(times)
            mids = 0.5 * (times[:-1] + times[1:])
            frames = np.clip(np.round((mids - frame_len / 2.0) / hop).astype(int), start, end - 1)
            expected = track.f0[frames]
            keep = np.abs(freqs - expected) <= tolerance * expected
            values.extend(np.where(keep, freqs, 0.0).tolist())
            values.append(0.0)

        f0 = np.asarray(values, dtype=np.float64)
        voiced = f0 > 0
        period = float(np.mean(1.0 / f0[voiced])) if voiced.any() else track.hop_s
        return F0Track(f0=f0, voiced=voiced, frame_s=period, hop_s=period)

    @staticmethod
    def _steady_frames(in_region: np.ndarray, in_pause: np.ndarray, cfg: ProsodyConfig) -> np.ndarray:
        """
        Speech frames at least one window length away from pauses and from
        the speech-region bounds, so partly silent windows never enter the
        energy statistics. Falls back to all non-pause region frames when
        nothing is left.
        """
        margin = int(np.ceil(cfg.frame_s / cfg.hop_s - 1e-9))
        blocked = np.concatenate(([True], ~in_region | in_pause, [True]))
        near = binary_dilation(blocked, iterations=margin)[1:-1]
        steady = in_region & ~near
        return steady if steady.any() else in_region & ~in_pause

    @classmethod
    def summarize(cls, w: Waveform, cfg: ProsodyConfig = ProsodyConfig()) -> AcousticSummary:
        """
        Compose F0, energy, pause and jitter analysis into one feature vector.

        Args:
            w: Mono waveform.
            cfg: Analysis settings.

        Returns:
            AcousticSummary; no_voicing and empty_speech mark the fallbacks.
        """
        track = cls.f0_track(
            w, cfg.frame_s, cfg.hop_s, cfg.fmin, cfg.fmax, cfg.threshold, cfg.voicing_floor_db
        )
        energy = cls.energy_track(w, cfg.frame_s, cfg.hop_s)
        seg = cls.segment_pauses(
            energy, track.voiced, cfg.hop_s, cfg.frame_s, cfg.min_pause_s, cfg.pause_offset_db,
            cfg.voicing_floor_db,
        )
        jitter = cls.jitter_stats(cls.cycle_track(w, track, cfg.cycle_tolerance))
        if jitter.no_voicing:
            jitter = cls.jitter_stats(track)

        voiced_f0 = track.f0[track.voiced]
        no_voicing = voiced_f0.size == 0
        if no_voicing:
            f0_avg = f0_std = f0_deriv = 0.0
        else:
            f0_avg = float(voiced_f0.mean())
            f0_std = float(voiced_f0.std())
            pairs = track.voiced[1:] & track.voiced[:-1]
            deltas = np.abs(np.diff(track.f0))[pairs]
            f0_deriv = float(deltas.mean()) if deltas.size else 0.0

        if seg.empty_speech:
            region_energy = energy
            unvoiced_ratio = 1.0
        else:
            in_pause = np.zeros(energy.size, dtype=bool)
            for onset, end in seg.pauses:
                first = int(round(onset / cfg.hop_s))
                last = int(round((end - cfg.frame_s) / cfg.hop_s)) + 1
                in_pause[first:last] = True
            region = slice(seg.speech_start, seg.speech_end)
            in_region = np.zeros(energy.size, dtype=bool)
            in_region[region] = True
            region_energy = energy[cls._steady_frames(in_region, in_pause, cfg)]
            unvoiced_ratio = float(np.mean(~track.voiced[region]))

        durations = np.asarray(seg.durations, dtype=np.float64)
        return AcousticSummary(
            f0_avg=f0_avg,
            f0_std=f0_std,
            f0_deriv_avg=f0_deriv,
            energy_avg=float(region_energy.mean()),
            energy_std=float(region_energy.std()),
            pause_dur_avg=float(durations.mean()) if durations.size else 0.0,
            pause_dur_std=float(durations.std()) if durations.size else 0.0,
            pause_count=float(seg.count),
            unvoiced_ratio=unvoiced_ratio,
            jitter_avg=0.0 if no_voicing else jitter.jitter_avg,
            jitter_std=0.0 if no_voicing else jitter.jitter_std,
            no_voicing=no_voicing,
            empty_speech=seg.empty_speech,
        )
