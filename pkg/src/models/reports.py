"""Result tables for the distortion and utility analyses."""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from ..utils.constants import CV_FOLDS, CV_SEEDS, PROBE_ITERATIONS, PROBE_L2, PROBE_LEARNING_RATE


@dataclass(frozen=True)
class DistortionRow:
    feature: str
    emd: float
    mi: float
    n: int
    mi_raw: float = field(default=0.0, compare=False)


@dataclass(frozen=True)
class DistortionReport:
    rows: Tuple[DistortionRow, ...]

    def row(self, feature: str) -> DistortionRow:
        for r in self.rows:
            if r.feature == feature:
                return r
        raise KeyError(feature)


@dataclass(frozen=True)
class ProbeConfig:
    learning_rate: float = PROBE_LEARNING_RATE
    iterations: int = PROBE_ITERATIONS
    l2: float = PROBE_L2


@dataclass(frozen=True)
class CVConfig:
    folds: int = CV_FOLDS
    seeds: Tuple[int, ...] = CV_SEEDS
    probe: ProbeConfig = ProbeConfig()


@dataclass(frozen=True)
class F1Result:
    f1: float
    degenerate: bool = False


@dataclass(frozen=True)
class FoldScore:
    train_cond: str
    eval_cond: str
    fold: int
    seed: int
    f1: float


@dataclass(frozen=True)
class CVReport:
    scores: Tuple[FoldScore, ...]

    @property
    def f1_values(self) -> np.ndarray:
        return np.array([s.f1 for s in self.scores], dtype=np.float64)

    @property
    def mean(self) -> float:
        return float(self.f1_values.mean())

    @property
    def std(self) -> float:
        return float(self.f1_values.std())


@dataclass(frozen=True)
class WERResult:
    id: str
    wer: float
    n_ref_tokens: int
    edits: int = 0
