"""
Target-speaker pool and conversion settings.

A pool holds every usable frame of one target speaker. It is immutable once
built and may be shared by concurrent conversions.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .utterance import Gender
from ..utils.constants import DEFAULT_K
from ..utils.errors import DataError


class SelectionPolicy(str, Enum):
    """How a target speaker is chosen relative to the source gender."""
    SAME_GENDER = "same_gender"
    CROSS_GENDER = "cross_gender"
    UNCONSTRAINED = "unconstrained"


class ConversionMode(str, Enum):
    KNN = "knn"
    # Features bypass the conversion step
    RESYNTHESIS = "resynthesis"


@dataclass(frozen=True)
class ConversionConfig:
    k: int = DEFAULT_K
    seed: int = 0
    policy: SelectionPolicy = SelectionPolicy.SAME_GENDER
    mode: ConversionMode = ConversionMode.KNN

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise DataError(f"k must be a positive integer, got {self.k}")
        object.__setattr__(self, "policy", SelectionPolicy(self.policy))
        object.__setattr__(self, "mode", ConversionMode(self.mode))


@dataclass(frozen=True, eq=False)
class TargetPool:
    """
    All frames of one target speaker, with cached row norms.

    Build pools with KnnConverter.build_pool, which drops zero-norm rows; the
    constructor only checks that frames and norms agree.
    """
    speaker: str
    gender: Gender
    frames: np.ndarray
    norms: np.ndarray
    dropped_rows: int = 0

    # Unit-normalized rows in double precision, derived on construction
    _unit_rows: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float32)
        norms = np.asarray(self.norms, dtype=np.float64)
        if frames.ndim != 2 or frames.shape[0] < 1:
            raise DataError(f"pool {self.speaker}: frames must be a non-empty N×D matrix")
        if norms.shape != (frames.shape[0],) or np.any(norms <= 0):
            raise DataError(f"pool {self.speaker}: norms must be positive, one per row")
        frames.setflags(write=False)
        norms.setflags(write=False)
        unit = frames.astype(np.float64) / norms[:, None]
        unit.setflags(write=False)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "norms", norms)
        object.__setattr__(self, "gender", Gender(self.gender))
        object.__setattr__(self, "_unit_rows", unit)

    @property
    def size(self) -> int:
        """Number of frames (N)."""
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]

    @property
    def unit_rows(self) -> np.ndarray:
        return self._unit_rows
