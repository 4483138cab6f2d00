"""
kNN voice conversion in feature space.

Every source frame is replaced by the mean of the k target-pool frames with the
highest cosine similarity. Similarities are computed in double precision and
ties are broken by the lower pool-row index, so results are exact and
platform-independent.
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from ..models.target_pool import ConversionConfig, SelectionPolicy, TargetPool
from ..models.utterance import FrameMatrix, Gender, UtteranceRecord
from ..utils.constants import CONVERT_BLOCK_ROWS, ZERO_NORM_EPS
from ..utils.errors import DimensionError, InsufficientDataError, PolicyError
from ..utils.seeding import derived_rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConversionResult:
    matrix: FrameMatrix
    # (T, k) selected pool rows; -1 on passed-through zero-norm rows
    indices: np.ndarray
    passthrough_rows: int


class KnnConverter:
    """Service implementing pool construction, target selection and conversion."""

    @classmethod
    def build_pool(cls, speaker: str, gender: Gender, matrices: Sequence[FrameMatrix]) -> TargetPool:
        """
        Concatenate a target speaker's frames into a pool.

        Rows with Euclidean norm below 1e-12 are dropped and counted.

        Args:
            speaker: Target speaker id.
            gender: Target speaker gender, used by the selection policy.
            matrices: The speaker's frame matrices, concatenated in order.

        Returns:
            TargetPool holding the kept rows and their norms.

        Raises:
            DimensionError: matrices disagree on D.
            InsufficientDataError: no rows left after filtering.
        """
        if not matrices:
            raise InsufficientDataError(f"pool {speaker}: no frame matrices given")
        dims = {m.dim for m in matrices}
        if len(dims) != 1:
            raise DimensionError(f"pool {speaker}: frame dimensions disagree {sorted(dims)}")

        frames = np.concatenate([m.frames for m in matrices], axis=0)
        norms = np.linalg.norm(frames.astype(np.float64), axis=1)
        keep = norms >= ZERO_NORM_EPS
        dropped = int(np.count_nonzero(~keep))
        if not np.any(keep):
            raise InsufficientDataError(f"pool {speaker}: empty after dropping {dropped} zero-norm rows")
        if dropped:
            logger.warning("Pool %s: dropped %d zero-norm frame(s)", speaker, dropped)

        return TargetPool(
            speaker=speaker,
            gender=gender,
            frames=frames[keep],
            norms=norms[keep],
            dropped_rows=dropped,
        )

    @classmethod
    def neighbors(cls, src: FrameMatrix, pool: TargetPool, k: int) -> np.ndarray:
        """
        Indices of the k most cosine-similar pool rows for every source row.

        Rows are ordered by decreasing similarity, ties by increasing index.
        Zero-norm source rows get a row of -1.
        """
        if src.dim != pool.dim:
            raise DimensionError(f"source has D={src.dim}, pool {pool.speaker} has D={pool.dim}")
        if k < 1 or k > pool.size:
            raise InsufficientDataError(f"k={k} outside [1, {pool.size}] for pool {pool.speaker}")

        queries = src.frames.astype(np.float64)
        q_norms = np.linalg.norm(queries, axis=1)
        active = q_norms >= ZERO_NORM_EPS
        out = np.full((src.n_frames, k), -1, dtype=np.int64)
        rows = np.flatnonzero(active)
        unit_pool = pool.unit_rows
        n = pool.size

        for start in range(0, rows.size, CONVERT_BLOCK_ROWS):
            block = rows[start:start + CONVERT_BLOCK_ROWS]
            sims = (queries[block] / q_norms[block, None]) @ unit_pool.T
            if k < n:
                # k-th largest similarity per row; every row >= it is a candidate
                kth = np.partition(sims, n - k, axis=1)[:, n - k]
            else:
                kth = sims.min(axis=1)
            for i, row in enumerate(block):
                out[row] = cls._top_k(sims[i], kth[i], k)
        return out

    @staticmethod
    def _top_k(sims: np.ndarray, kth: float, k: int) -> np.ndarray:
        candidates = np.flatnonzero(sims >= kth)
        # Sort by (-similarity, index); lexsort uses the last key as primary
        order = np.lexsort((candidates, -sims[candidates]))
        return candidates[order[:k]]

    @classmethod
    def convert_detailed(cls, src: FrameMatrix, pool: TargetPool, k: int) -> ConversionResult:
        """Convert and also return the selected index sets."""
        indices = cls.neighbors(src, pool, k)
        out = src.frames.astype(np.float64)
        active = indices[:, 0] >= 0
        if np.any(active):
            # Mean accumulated in double precision
            selected = pool.frames[indices[active]].astype(np.float64)
            out[active] = selected.mean(axis=1)
        passthrough = int(np.count_nonzero(~active))
        if passthrough:
            logger.debug("Passed %d zero-norm source frame(s) through unchanged", passthrough)
        matrix = FrameMatrix(frames=out.astype(np.float32), hop_s=src.hop_s)
        return ConversionResult(matrix=matrix, indices=indices, passthrough_rows=passthrough)

    @classmethod
    def convert(cls, src: FrameMatrix, pool: TargetPool, k: int) -> FrameMatrix:
        """
        Replace every source frame by the mean of its k nearest pool frames.

        Args:
            src: Source frame matrix.
            pool: Target pool with the same dimension as src.
            k: Neighbors averaged per frame.

        Returns:
            FrameMatrix with the shape and hop of src. Zero-norm rows are
            copied unchanged.

        Raises:
            DimensionError: src.D != pool.D.
            InsufficientDataError: k > pool size.
        """
        return cls.convert_detailed(src, pool, k).matrix

    @staticmethod
    def resynthesis_passthrough(src: FrameMatrix) -> FrameMatrix:
        """Resynthesis ablation: features bypass the conversion step."""
        return src

    @classmethod
    def select_target(
        cls,
        record: UtteranceRecord,
        candidates: Sequence[TargetPool],
        cfg: ConversionConfig,
    ) -> TargetPool:
        """
        Choose a target pool uniformly among the candidates the policy allows.

        The choice is a function of (cfg.seed, record.id) only.

        Raises:
            PolicyError: no candidate satisfies the policy.
        """
        if not candidates:
            raise PolicyError(f"{record.id}: no target candidates")
        eligible: List[TargetPool] = [
            pool for pool in candidates if cls._allowed(cfg.policy, record.gender, pool.gender)
        ]
        if not eligible:
            raise PolicyError(
                f"{record.id}: no candidate satisfies policy {cfg.policy.value} "
                f"for gender {record.gender.value}"
            )
        rng = derived_rng(cfg.seed, record.id)
        return eligible[int(rng.integers(len(eligible)))]

    @staticmethod
    def _allowed(policy: SelectionPolicy, source: Gender, target: Gender) -> bool:
        if policy is SelectionPolicy.SAME_GENDER:
            return source == target
        if policy is SelectionPolicy.CROSS_GENDER:
            return source != target
        return True
