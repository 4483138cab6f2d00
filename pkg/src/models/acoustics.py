"""
Prosody / phonation data types.

FEATURE_NAMES fixes the column order of every per-utterance feature table the
prosody extractor writes.
"""

from dataclasses import dataclass, field, fields
from typing import List, Tuple

import numpy as np

from ..utils.constants import (
    CYCLE_TOLERANCE,
    DEFAULT_FMAX,
    DEFAULT_FMIN,
    DEFAULT_FRAME_S,
    DEFAULT_HOP_S,
    MIN_PAUSE_S,
    PAUSE_OFFSET_DB,
    VOICING_FLOOR_DB,
    YIN_THRESHOLD,
)
from ..utils.errors import DataError


@dataclass(frozen=True)
class ProsodyConfig:
    frame_s: float = DEFAULT_FRAME_S
    hop_s: float = DEFAULT_HOP_S
    fmin: float = DEFAULT_FMIN
    fmax: float = DEFAULT_FMAX
    threshold: float = YIN_THRESHOLD
    voicing_floor_db: float = VOICING_FLOOR_DB
    pause_offset_db: float = PAUSE_OFFSET_DB
    min_pause_s: float = MIN_PAUSE_S
    cycle_tolerance: float = CYCLE_TOLERANCE

    def __post_init__(self):
        if not (0 < self.hop_s <= self.frame_s):
            raise DataError(f"need 0 < hop_s <= frame_s, got hop {self.hop_s}, frame {self.frame_s}")
        if not (0 < self.fmin < self.fmax):
            raise DataError(f"need 0 < fmin < fmax, got {self.fmin}, {self.fmax}")
        if not (0 < self.cycle_tolerance < 1):
            raise DataError(f"cycle_tolerance must lie in (0, 1), got {self.cycle_tolerance}")

@dataclass(frozen=True, eq=False)
class F0Track:
    """Per-frame F0 in Hz; 0 marks an unvoiced frame."""
    f0: np.ndarray
    voiced: np.ndarray
    frame_s: float
    hop_s: float

    def __post_init__(self):
        f0 = np.asarray(self.f0, dtype=np.float64)
        voiced = np.asarray(self.voiced, dtype=bool)
        if f0.shape != voiced.shape or f0.ndim != 1:
            raise DataError("f0 and voiced must be 1-D arrays of equal length")
        if np.any((f0 > 0) != voiced):
            raise DataError("f0 must be positive exactly on voiced frames")
        object.__setattr__(self, "f0", f0)
        object.__setattr__(self, "voiced", voiced)

    @classmethod
    def from_f0(cls, f0, frame_s: float = DEFAULT_FRAME_S, hop_s: float = DEFAULT_HOP_S) -> "F0Track":
        """Build a track whose voicing is implied by f0 > 0."""
        f0 = np.asarray(f0, dtype=np.float64)
        return cls(f0=f0, voiced=f0 > 0, frame_s=frame_s, hop_s=hop_s)

    @property
    def n_frames(self) -> int:
        return self.f0.size


@dataclass(frozen=True)
class PauseSegmentation:
    """Pause intervals (start_s, end_s) inside the speech region."""
    pauses: Tuple[Tuple[float, float], ...]
    speech_start: int
    speech_end: int  # exclusive frame index
    empty_speech: bool = False

    @property
    def durations(self) -> List[float]:
        return [end - start for start, end in self.pauses]

    @property
    def count(self) -> int:
        return len(self.pauses)


@dataclass(frozen=True)
class JitterStats:
    jitter_avg: float
    jitter_std: float
    no_voicing: bool = False


@dataclass(frozen=True)
class AcousticSummary:
    """Named scalar prosody / phonation features of one utterance."""
    f0_avg: float
    f0_std: float
    f0_deriv_avg: float
    energy_avg: float
    energy_std: float
    pause_dur_avg: float
    pause_dur_std: float
    pause_count: float
    unvoiced_ratio: float
    jitter_avg: float
    jitter_std: float
    no_voicing: bool = field(default=False, compare=False)
    empty_speech: bool = field(default=False, compare=False)

    def values(self) -> List[float]:
        return [float(getattr(self, name)) for name in FEATURE_NAMES]

    @property
    def flags(self) -> str:
        """Flag column text: '|'-joined set flags, empty when none."""
        names = [n for n in ("no_voicing", "empty_speech") if getattr(self, n)]
        return "|".join(names)


FEATURE_NAMES: Tuple[str, ...] = tuple(
    f.name for f in fields(AcousticSummary) if f.name not in ("no_voicing", "empty_speech")
)
