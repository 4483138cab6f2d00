"""
Corpus data model: manifest records, frame matrices and waveforms.

FrameMatrix and Waveform validate their invariants on construction, so any
instance that exists is safe to hand to the numeric services.
"""

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from ..utils.errors import DataError


class Gender(str, Enum):
    M = "M"
    F = "F"


class Group(str, Enum):
    """Clinical group: healthy control or Parkinson's disease."""
    HC = "HC"
    PD = "PD"


class Task(str, Enum):
    SENTENCES = "sentences"
    MONOLOGUE = "monologue"


@dataclass(frozen=True)
class UtteranceRecord:
    """
    One manifest entry.

    At least one of audio_path / feature_path must be present; the loader
    enforces uniqueness of ids across a manifest.
    """
    id: str
    speaker: str
    gender: Gender
    group: Group
    task: Task
    audio_path: Optional[str] = None
    feature_path: Optional[str] = None
    transcript: Optional[str] = None

    def __post_init__(self):
        if not self.id:
            raise DataError("utterance id must be non-empty")
        if self.audio_path is None and self.feature_path is None:
            raise DataError(f"{self.id}: one of audio_path/feature_path is required")

    def to_dict(self) -> dict:
        """Flat key-value form used by the manifest writer."""
        data = {
            "id": self.id,
            "speaker": self.speaker,
            "gender": self.gender.value,
            "group": self.group.value,
            "task": self.task.value,
        }
        for key in ("audio_path", "feature_path", "transcript"):
            value = getattr(self, key)
            if value is not None:
                data[key] = value
        return data

    def resolve(self, path: Optional[str], base: Path) -> Optional[Path]:
        """Resolve a manifest path relative to the manifest directory."""
        if path is None:
            return None
        p = Path(path)
        return p if p.is_absolute() else base / p


@dataclass(frozen=True, eq=False)
class FrameMatrix:
    """T×D frame-level representation of one utterance."""
    frames: np.ndarray
    hop_s: float

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float32)
        if frames.ndim != 2 or frames.shape[0] < 1 or frames.shape[1] < 1:
            raise DataError(f"frame matrix must be T×D with T, D >= 1, got shape {frames.shape}")
        if not np.all(np.isfinite(frames)):
            raise DataError("frame matrix contains non-finite values")
        if not (self.hop_s > 0 and np.isfinite(self.hop_s)):
            raise DataError(f"hop_s must be > 0, got {self.hop_s}")
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, FrameMatrix):
            return NotImplemented
        return (
            np.float32(self.hop_s) == np.float32(other.hop_s)
            and self.frames.shape == other.frames.shape
            and np.array_equal(self.frames, other.frames)
        )


@dataclass(frozen=True, eq=False)
class Waveform:
    """Mono audio samples in [-1, 1]."""
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size < 1:
            raise DataError("waveform must be mono with at least one sample")
        if not np.all(np.isfinite(samples)) or np.max(np.abs(samples)) > 1.0 + 1e-6:
            raise DataError("waveform samples must be finite and within [-1, 1]")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise DataError(f"sample_rate must be a positive integer, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate
