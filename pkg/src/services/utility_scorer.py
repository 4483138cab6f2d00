"""
Utility scoring: F1, a deterministic logistic probe and speaker-disjoint
cross-validation across training/evaluation conditions.

The probe stands in for a pathological-speech detector head. Training is
full-batch gradient descent from zero on standardized inputs, so a given
fold always yields the same model.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import expit

from ..models.reports import CVConfig, CVReport, F1Result, FoldScore, ProbeConfig
from ..models.utterance import Group, UtteranceRecord
from ..utils.errors import DataError, InsufficientDataError
from ..utils.seeding import derived_rng, fnv1a_64
from .distortion_analyzer import DistortionAnalyzer, Standardizer

logger = logging.getLogger(__name__)


def _design(features) -> pd.DataFrame:
    """Feature rows as a table with stable string column names."""
    values = np.asarray(features, dtype=np.float64)
    if values.ndim != 2:
        raise DataError(f"features must be a 2-D array, got shape {values.shape}")
    return pd.DataFrame(values, columns=[f"x{i}" for i in range(values.shape[1])])


@dataclass(frozen=True, eq=False)
class ProbeModel:
    weights: np.ndarray
    bias: float
    config: ProbeConfig
    standardizer: Standardizer
    # Objective value before each update and after the last one
    history: Tuple[float, ...] = ()

    @property
    def dim(self) -> int:
        return self.weights.size


class UtilityScorer:
    """Service for F1, probe training and cross-validation."""

    @staticmethod
    def f1_score(predictions: Sequence[bool], labels: Sequence[bool]) -> F1Result:
        """
        Positive-class F1 = 2TP / (2TP + FP + FN).

        Returns 0 with the degenerate flag when there are no positives in
        either predictions or labels.
        """
        pred = np.asarray(predictions, dtype=bool)
        true = np.asarray(labels, dtype=bool)
        if pred.shape != true.shape or pred.ndim != 1:
            raise DataError(f"predictions and labels differ in length: {pred.size} vs {true.size}")
        if pred.size == 0:
            raise InsufficientDataError("F1 needs at least one prediction")
        tp = int(np.count_nonzero(pred & true))
        fp = int(np.count_nonzero(pred & ~true))
        fn = int(np.count_nonzero(~pred & true))
        denom = 2 * tp + fp + fn
        if denom == 0:
            return F1Result(f1=0.0, degenerate=True)
        return F1Result(f1=2 * tp / denom)

    @staticmethod
    def objective(weights: np.ndarray, bias: float, x: np.ndarray, y: np.ndarray, l2: float) -> float:
        """Mean logistic loss plus 0.5·l2·||w||²; the bias is not regularized."""
        z = x @ weights + bias
        return float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * np.dot(weights, weights))

    @staticmethod
    def gradient(
        weights: np.ndarray, bias: float, x: np.ndarray, y: np.ndarray, l2: float
    ) -> Tuple[np.ndarray, float]:
        residual = expit(x @ weights + bias) - y
        return x.T @ residual / y.size + l2 * weights, float(residual.mean())

    @classmethod
    def train_probe(cls, features, labels: Sequence[bool], cfg: ProbeConfig = ProbeConfig()) -> ProbeModel:
        """
        Fit the logistic probe on one training fold.

        Raises:
            InsufficientDataError: only one class present.
        """
        x_raw = _design(features)
        y = np.asarray(labels, dtype=bool)
        if x_raw.shape[0] != y.size:
            raise DataError(f"{x_raw.shape[0]} feature rows but {y.size} labels")
        if y.all() or not y.any():
            raise InsufficientDataError("probe training needs examples of both classes")

        standardizer = DistortionAnalyzer.fit_standardizer(x_raw)
        x = DistortionAnalyzer.apply(standardizer, x_raw).to_numpy()
        target = y.astype(np.float64)

        weights = np.zeros(x.shape[1], dtype=np.float64)
        bias = 0.0
        history = []
        for _ in range(cfg.iterations):
            history.append(cls.objective(weights, bias, x, target, cfg.l2))
            grad_w, grad_b = cls.gradient(weights, bias, x, target, cfg.l2)
            weights = weights - cfg.learning_rate * grad_w
            bias = bias - cfg.learning_rate * grad_b
        history.append(cls.objective(weights, bias, x, target, cfg.l2))

        return ProbeModel(
            weights=weights, bias=bias, config=cfg, standardizer=standardizer, history=tuple(history)
        )

    @staticmethod
    def predict(model: ProbeModel, features) -> np.ndarray:
        """Boolean predictions (True = PD) for raw, unstandardized rows."""
        x_raw = _design(features)
        if x_raw.shape[1] != model.dim:
            raise DataError(f"probe expects {model.dim} features, got {x_raw.shape[1]}")
        x = DistortionAnalyzer.apply(model.standardizer, x_raw).to_numpy()
        return (x @ model.weights + model.bias) > 0

    @staticmethod
    def assign_folds(speaker_groups: Mapping[str, Group], folds: int, seed: int) -> Dict[str, int]:
        """
        Greedy stratified assignment of speakers to folds.

        Within each group speakers are visited in order of a uniform draw
        from their seeded generator (id hash breaks ties) and placed in the
        fold holding the fewest speakers of that group, then the fewest
        overall, then the lowest index.

        Args:
            speaker_groups: Group label per speaker id.
            folds: Number of folds, at least 2.
            seed: Seed of this repetition.

        Returns:
            Fold index per speaker id.
        """
        if folds < 2:
            raise DataError(f"need at least 2 folds, got {folds}")
        assignment: Dict[str, int] = {}
        totals = [0] * folds
        for group in sorted(set(speaker_groups.values()), key=lambda g: g.value):
            members = sorted(
                (s for s, g in speaker_groups.items() if g == group),
                key=lambda s: (float(derived_rng(seed, s).random()), fnv1a_64(s.encode("utf-8")), s),
            )
            counts = [0] * folds
            for speaker in members:
                fold = min(range(folds), key=lambda f: (counts[f], totals[f], f))
                assignment[speaker] = fold
                counts[fold] += 1
                totals[fold] += 1
        return assignment

    @classmethod
    def cross_validate(
        cls,
        records: Sequence[UtteranceRecord],
        tables: Mapping[str, pd.DataFrame],
        train_cond: str,
        eval_cond: str,
        cfg: CVConfig = CVConfig(),
    ) -> CVReport:
        """
        Speaker-disjoint, group-stratified k-fold F1 repeated over seeds.

        Each fold trains on train_cond rows of the training speakers and
        evaluates on eval_cond rows of the held-out speakers. Tables are
        indexed by utterance id.

        Args:
            records: Manifest records; group labels come from here.
            tables: Feature table per condition name.
            train_cond: Condition the probe is trained on.
            eval_cond: Condition the probe is evaluated on.
            cfg: Folds, seeds and probe settings.

        Returns:
            CVReport with one F1 per (seed, fold).

        Raises:
            DataError: an id is missing from either condition.
            InsufficientDataError: a fold's train or test side holds one class.
        """
        for cond in (train_cond, eval_cond):
            if cond not in tables:
                raise DataError(f"unknown condition {cond!r}")
        ids = [r.id for r in records]
        for cond in {train_cond, eval_cond}:
            missing = [i for i in ids if i not in tables[cond].index]
            if missing:
                raise DataError(f"condition {cond!r} lacks id(s): {', '.join(missing[:5])}")
        if list(tables[train_cond].columns) != list(tables[eval_cond].columns):
            raise DataError(f"conditions {train_cond!r} and {eval_cond!r} have different columns")

        train_x = tables[train_cond].loc[ids].to_numpy(dtype=np.float64)
        eval_x = tables[eval_cond].loc[ids].to_numpy(dtype=np.float64)
        labels = np.array([r.group is Group.PD for r in records])
        speakers = np.array([r.speaker for r in records])
        speaker_groups = {r.speaker: r.group for r in records}

        scores: List[FoldScore] = []
        for seed in cfg.seeds:
            assignment = cls.assign_folds(speaker_groups, cfg.folds, seed)
            fold_of = np.array([assignment[s] for s in speakers])
            for fold in range(cfg.folds):
                test = fold_of == fold
                train = ~test
                for side, mask in (("train", train), ("test", test)):
                    if labels[mask].all() or not labels[mask].any():
                        raise InsufficientDataError(f"seed {seed} fold {fold}: {side} split holds one class")
                model = cls.train_probe(train_x[train], labels[train], cfg.probe)
                result = cls.f1_score(cls.predict(model, eval_x[test]), labels[test])
                scores.append(FoldScore(train_cond, eval_cond, fold, seed, result.f1))
                logger.debug("%s->%s seed %d fold %d: F1 %.3f", train_cond, eval_cond, seed, fold, result.f1)

        report = CVReport(scores=tuple(scores))
        logger.info("%s->%s: F1 %.3f ± %.3f", train_cond, eval_cond, report.mean, report.std)
        return report
