"""
Per-feature distortion between original and anonymized cohorts.

Both tables are standardized with a scaler fit on the originals, then each
feature gets a 1-D Earth Mover's Distance (all rows of each table) and a
Kraskov-Stögbauer-Grassberger mutual information estimate (rows paired by
utterance id).
"""

import hashlib
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree
from scipy.special import digamma
from scipy.stats import wasserstein_distance

from ..models.reports import DistortionReport, DistortionRow
from ..utils.constants import DEGENERATE_STD, MI_JITTER_SCALE, MI_NEIGHBORS
from ..utils.errors import DataError, InsufficientDataError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Standardizer:
    """Per-feature mean and population std fit on the original cohort."""
    features: Tuple[str, ...]
    means: np.ndarray
    stds: np.ndarray
    degenerate: np.ndarray

    @property
    def scales(self) -> np.ndarray:
        """Divisors used by apply: std, or 1 for degenerate features."""
        return np.where(self.degenerate, 1.0, self.stds)


class DistortionAnalyzer:
    """Service for standardization, EMD, MI and the per-feature report."""

    @classmethod
    def fit_standardizer(cls, original: pd.DataFrame) -> Standardizer:
        """
        Fit per-column mean and population std.

        Columns with std < 1e-12 are flagged degenerate and later scaled by 1.
        """
        if original.shape[1] == 0:
            raise DataError("feature table has no columns")
        if original.shape[0] < 2:
            raise InsufficientDataError(f"need at least 2 rows to fit a scaler, got {original.shape[0]}")
        values = cls._numeric(original)
        stds = values.std(axis=0)
        degenerate = stds < DEGENERATE_STD
        for name in np.asarray(original.columns)[degenerate]:
            logger.warning("Feature %s is degenerate (constant); scaling by 1", name)
        return Standardizer(
            features=tuple(str(c) for c in original.columns),
            means=values.mean(axis=0),
            stds=stds,
            degenerate=degenerate,
        )

    @classmethod
    def apply(cls, standardizer: Standardizer, table: pd.DataFrame) -> pd.DataFrame:
        """
        Transform a table with a fitted standardizer.

        Raises:
            DataError: a fitted column is missing from the table.
        """
        missing = [f for f in standardizer.features if f not in table.columns]
        if missing:
            raise DataError(f"table is missing fitted column(s): {', '.join(missing)}")
        values = cls._numeric(table[list(standardizer.features)])
        scaled = (values - standardizer.means) / standardizer.scales
        return pd.DataFrame(scaled, index=table.index, columns=list(standardizer.features))

    @staticmethod
    def _numeric(table: pd.DataFrame) -> np.ndarray:
        try:
            values = table.to_numpy(dtype=np.float64)
        except (TypeError, ValueError):
            raise DataError("feature table contains non-numeric values") from None
        if not np.all(np.isfinite(values)):
            raise DataError("feature table contains non-finite values")
        return values

    @staticmethod
    def emd_1d(a, b) -> float:
        """Wasserstein-1 distance between two empirical samples with equal weights."""
        a = np.asarray(a, dtype=np.float64).ravel()
        b = np.asarray(b, dtype=np.float64).ravel()
        if a.size == 0 or b.size == 0:
            raise InsufficientDataError("EMD needs at least one sample on each side")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise DataError("EMD samples must be finite")
        return float(wasserstein_distance(a, b))

    @staticmethod
    def _tie_jitter(axis: np.ndarray) -> np.ndarray:
        """Deterministic jitter keyed to the axis content, not its argument position."""
        digest = hashlib.blake2b(axis.tobytes(), digest_size=8).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "little"))
        std = float(axis.std())
        scale = MI_JITTER_SCALE * (std if std > 0 else 1.0)
        return axis + rng.uniform(-scale, scale, size=axis.size)

    @classmethod
    def mutual_info_raw(cls, a, b, k: int = MI_NEIGHBORS) -> float:
        """KSG estimator #1 in nats, before clamping; may be slightly negative."""
        a = np.asarray(a, dtype=np.float64).ravel()
        b = np.asarray(b, dtype=np.float64).ravel()
        if a.size != b.size:
            raise DataError(f"MI samples differ in length: {a.size} vs {b.size}")
        n = a.size
        if n < k + 2:
            raise InsufficientDataError(f"MI with k={k} needs at least {k + 2} pairs, got {n}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise DataError("MI samples must be finite")

        x = cls._tie_jitter(a)
        y = cls._tie_jitter(b)
        joint = np.column_stack((x, y))
        dist, _ = cKDTree(joint).query(joint, k=k + 1, p=np.inf)
        eps = dist[:, k]

        nx = cls._strict_counts(x, eps)
        ny = cls._strict_counts(y, eps)
        return float(digamma(k) + digamma(n) - np.mean(digamma(nx + 1) + digamma(ny + 1)))

    @staticmethod
    def _strict_counts(axis: np.ndarray, eps: np.ndarray) -> np.ndarray:
        """Number of other points strictly within eps of each point."""
        ordered = np.sort(axis)
        upper = np.searchsorted(ordered, axis + eps, side="left")
        lower = np.searchsorted(ordered, axis - eps, side="right")
        return np.maximum(upper - lower - 1, 0)

    @classmethod
    def mutual_info(cls, a, b, k: int = MI_NEIGHBORS) -> float:
        """KSG mutual information in nats, clamped at 0."""
        return max(cls.mutual_info_raw(a, b, k), 0.0)

    @classmethod
    def distortion_report(
        cls,
        original: pd.DataFrame,
        anonymized: pd.DataFrame,
        standardizer: Optional[Standardizer] = None,
        k: int = MI_NEIGHBORS,
    ) -> DistortionReport:
        """
        EMD and MI per feature on standardized values, sorted by feature name.

        Tables are indexed by utterance id. EMD uses every row of each table;
        MI pairs rows by the ids present in both.

        Args:
            original: Feature table of the original condition.
            anonymized: Feature table of the anonymized condition.
            standardizer: Fitted scaler; fitted on original when omitted.
            k: Neighbors of the KSG estimator.

        Returns:
            DistortionReport with one row per feature.

        Raises:
            InsufficientDataError: the tables share no ids.
        """
        if standardizer is None:
            standardizer = cls.fit_standardizer(original)
        orig = cls.apply(standardizer, original)
        anon = cls.apply(standardizer, anonymized)

        shared = sorted(set(orig.index) & set(anon.index))
        if not shared:
            raise InsufficientDataError("original and anonymized tables share no utterance ids")
        dropped = len(set(orig.index) | set(anon.index)) - len(shared)
        if dropped:
            logger.info("MI pairing uses %d shared ids (%d unpaired)", len(shared), dropped)
        paired_orig = orig.loc[shared]
        paired_anon = anon.loc[shared]

        rows = []
        for feature in sorted(standardizer.features):
            emd = cls.emd_1d(orig[feature].to_numpy(), anon[feature].to_numpy())
            raw = cls.mutual_info_raw(paired_orig[feature].to_numpy(), paired_anon[feature].to_numpy(), k)
            rows.append(DistortionRow(feature=feature, emd=emd, mi=max(raw, 0.0), n=len(shared), mi_raw=raw))
        return DistortionReport(rows=tuple(rows))
