"""Privacy-evaluation types: embeddings, trial protocols and score sets."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .utterance import Group
from ..utils.constants import ENROLLMENTS_PER_SPEAKER, TRIALS_PER_SPEAKER
from ..utils.errors import DataError


@dataclass(frozen=True)
class ProtocolConfig:
    per_speaker_trials: int = TRIALS_PER_SPEAKER
    per_speaker_enroll: int = ENROLLMENTS_PER_SPEAKER
    seed: int = 0


@dataclass(frozen=True, eq=False)
class UtteranceEmbedding:
    """Unit-norm utterance vector used as the simulated attacker's input."""
    id: str
    speaker: str
    group: Optional[Group]
    vector: np.ndarray

    def __post_init__(self):
        vector = np.asarray(self.vector, dtype=np.float64)
        if vector.ndim != 1 or not np.all(np.isfinite(vector)):
            raise DataError(f"{self.id}: embedding must be a finite vector")
        if abs(np.linalg.norm(vector) - 1.0) > 1e-6:
            raise DataError(f"{self.id}: embedding must have unit norm")
        object.__setattr__(self, "vector", vector)


@dataclass(frozen=True)
class Trial:
    trial_id: str
    claimed_speaker: str
    same_speaker: bool
    trial_group: Group
    claimed_group: Group

    @property
    def same_group(self) -> bool:
        return self.trial_group == self.claimed_group


@dataclass(frozen=True)
class SpeakerSplit:
    speaker: str
    group: Group
    enrollment: Tuple[str, ...]
    trials: Tuple[str, ...]


@dataclass(frozen=True)
class TrialProtocol:
    """Per-speaker enrollment/trial split and the derived full-cross trial list."""
    splits: Tuple[SpeakerSplit, ...]
    trials: Tuple[Trial, ...]

    def __post_init__(self):
        for split in self.splits:
            if not split.enrollment or not split.trials:
                raise DataError(f"speaker {split.speaker}: needs enrollment and trial utterances")
            if set(split.enrollment) & set(split.trials):
                raise DataError(f"speaker {split.speaker}: enrollment and trial sets overlap")

    @property
    def ids(self) -> List[str]:
        """Every utterance id the protocol refers to."""
        out: List[str] = []
        for split in self.splits:
            out.extend(split.enrollment)
            out.extend(split.trials)
        return out


@dataclass
class ScoreSet:
    genuine: List[float] = field(default_factory=list)
    impostor: List[float] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        """Both sides non-empty, so an EER is defined."""
        return bool(self.genuine) and bool(self.impostor)


@dataclass(frozen=True)
class EERResult:
    eer: float
    threshold: float
    n_genuine: int
    n_impostor: int


@dataclass(frozen=True)
class TrialScores:
    """Pooled scores plus one ScoreSet per group of same-group trial pairs."""
    pooled: ScoreSet
    per_group: Dict[Group, ScoreSet]
