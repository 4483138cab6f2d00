"""
Simulated-attack privacy scoring.

Utterances are embedded with pooled frame statistics, split per speaker into
enrollment and trial sets, scored by cosine against per-speaker enrollment
models, and summarized by the equal error rate, pooled and per group.
"""

import logging
from collections import defaultdict
from typing import Dict, Iterable, List, Mapping, Tuple

import numpy as np

from ..models.scores import (
    EERResult,
    ProtocolConfig,
    ScoreSet,
    SpeakerSplit,
    Trial,
    TrialProtocol,
    TrialScores,
)
from ..models.utterance import FrameMatrix, Group, Task, UtteranceRecord
from ..utils.constants import MONOLOGUE_SUFFIXES, ZERO_NORM_EPS
from ..utils.errors import DataError, InsufficientDataError
from ..utils.seeding import derived_rng

logger = logging.getLogger(__name__)


class PrivacyScorer:
    """Service for embeddings, trial protocols, scoring and EER."""

    @staticmethod
    def embed(m: FrameMatrix) -> np.ndarray:
        """Per-dimension mean ++ per-dimension std, L2-normalized."""
        frames = m.frames.astype(np.float64)
        pooled = np.concatenate((frames.mean(axis=0), frames.std(axis=0)))
        norm = np.linalg.norm(pooled)
        if norm < ZERO_NORM_EPS:
            raise DataError("cannot embed an all-zero frame matrix")
        return pooled / norm

    @staticmethod
    def split_monologue(m: FrameMatrix) -> Tuple[FrameMatrix, FrameMatrix]:
        """Split a matrix at frame T/2 into the '#a' and '#b' pseudo-utterances."""
        if m.n_frames < 2:
            raise InsufficientDataError("a monologue needs at least 2 frames to be split in half")
        half = m.n_frames // 2
        return (
            FrameMatrix(frames=m.frames[:half], hop_s=m.hop_s),
            FrameMatrix(frames=m.frames[half:], hop_s=m.hop_s),
        )

    @classmethod
    def build_protocol(
        cls,
        records: Iterable[UtteranceRecord],
        cfg: ProtocolConfig = ProtocolConfig(),
    ) -> TrialProtocol:
        """
        Split every speaker's utterances evenly into trials and enrollments.

        A speaker with a single monologue utterance is split in half: '#a'
        enrolls, '#b' is the trial. Every trial utterance is then scored
        against every enrolled speaker.

        Args:
            records: Manifest records of the condition.
            cfg: Per-speaker caps and the split seed.

        Returns:
            TrialProtocol with speaker splits in id order and the full trial list.

        Raises:
            DataError: a speaker has a single non-monologue utterance or
                inconsistent group labels.
        """
        by_speaker: Dict[str, List[UtteranceRecord]] = defaultdict(list)
        for record in records:
            by_speaker[record.speaker].append(record)

        splits: List[SpeakerSplit] = []
        for speaker in sorted(by_speaker):
            recs = sorted(by_speaker[speaker], key=lambda r: r.id)
            groups = {r.group for r in recs}
            if len(groups) != 1:
                raise DataError(f"speaker {speaker} has inconsistent group labels")
            group = groups.pop()

            if len(recs) == 1:
                if recs[0].task is not Task.MONOLOGUE:
                    raise DataError(f"speaker {speaker} has a single non-monologue utterance")
                first, second = (recs[0].id + s for s in MONOLOGUE_SUFFIXES)
                splits.append(SpeakerSplit(speaker, group, enrollment=(first,), trials=(second,)))
                continue

            ids = [r.id for r in recs]
            order = derived_rng(cfg.seed, speaker).permutation(len(ids))
            shuffled = [ids[i] for i in order]
            half = len(shuffled) // 2
            trials = tuple(shuffled[:half][:cfg.per_speaker_trials])
            enrollment = tuple(shuffled[half:][:cfg.per_speaker_enroll])
            splits.append(SpeakerSplit(speaker, group, enrollment=enrollment, trials=trials))

        trials: List[Trial] = []
        for split in splits:
            for trial_id in split.trials:
                for claimed in splits:
                    trials.append(Trial(
                        trial_id=trial_id,
                        claimed_speaker=claimed.speaker,
                        same_speaker=claimed.speaker == split.speaker,
                        trial_group=split.group,
                        claimed_group=claimed.group,
                    ))
        logger.info("Protocol: %d speakers, %d trials", len(splits), len(trials))
        return TrialProtocol(splits=tuple(splits), trials=tuple(trials))

    @classmethod
    def protocol_embeddings(
        cls,
        protocol: TrialProtocol,
        matrices: Mapping[str, FrameMatrix],
    ) -> Dict[str, np.ndarray]:
        """Embed every protocol id, splitting monologues where pseudo-ids are used."""
        vectors: Dict[str, np.ndarray] = {}
        halves: Dict[str, Tuple[FrameMatrix, FrameMatrix]] = {}
        for utt_id in protocol.ids:
            if utt_id in matrices:
                vectors[utt_id] = cls.embed(matrices[utt_id])
                continue
            base, suffix = utt_id[:-2], utt_id[-2:]
            if suffix not in MONOLOGUE_SUFFIXES or base not in matrices:
                raise DataError(f"no frame matrix for protocol id {utt_id}")
            if base not in halves:
                halves[base] = cls.split_monologue(matrices[base])
            vectors[utt_id] = cls.embed(halves[base][MONOLOGUE_SUFFIXES.index(suffix)])
        return vectors

    @staticmethod
    def score_trials(protocol: TrialProtocol, embeddings: Mapping[str, np.ndarray]) -> TrialScores:
        """
        Cosine-score every trial against the claimed speaker's enrollment model.

        The model is the L2-normalized mean of the speaker's enrollment vectors.
        Per-group sets keep only trials whose speaker and claimed speaker share
        a group.

        Raises:
            DataError: a protocol id has no embedding.
        """
        missing = [i for i in protocol.ids if i not in embeddings]
        if missing:
            raise DataError(f"missing embedding for id(s): {', '.join(missing[:5])}")

        models: Dict[str, np.ndarray] = {}
        for split in protocol.splits:
            mean = np.mean([np.asarray(embeddings[i], dtype=np.float64) for i in split.enrollment], axis=0)
            norm = np.linalg.norm(mean)
            if norm < ZERO_NORM_EPS:
                raise DataError(f"speaker {split.speaker}: enrollment vectors cancel out")
            models[split.speaker] = mean / norm

        pooled = ScoreSet()
        per_group: Dict[Group, ScoreSet] = {split.group: ScoreSet() for split in protocol.splits}
        for trial in protocol.trials:
            score = float(np.dot(np.asarray(embeddings[trial.trial_id], dtype=np.float64), models[trial.claimed_speaker]))
            side = "genuine" if trial.same_speaker else "impostor"
            getattr(pooled, side).append(score)
            if trial.same_group:
                getattr(per_group[trial.trial_group], side).append(score)
        return TrialScores(pooled=pooled, per_group=per_group)

    @staticmethod
    def eer(scores: ScoreSet) -> EERResult:
        """
        Equal error rate by a sweep over the sorted scores.

        FAR(t) is the fraction of impostor scores >= t and FRR(t) the
        fraction of genuine scores < t. The crossing is linearly interpolated
        between the two adjacent operating points that bracket it.

        Raises:
            InsufficientDataError: either side is empty.
        """
        if not scores.complete:
            raise InsufficientDataError(
                f"EER needs genuine and impostor scores, got {len(scores.genuine)}/{len(scores.impostor)}"
            )
        genuine = np.sort(np.asarray(scores.genuine, dtype=np.float64))
        impostor = np.sort(np.asarray(scores.impostor, dtype=np.float64))
        thresholds = np.append(np.unique(np.concatenate((genuine, impostor))), np.inf)

        far = (impostor.size - np.searchsorted(impostor, thresholds, side="left")) / impostor.size
        frr = np.searchsorted(genuine, thresholds, side="left") / genuine.size
        gap = far - frr

        i = int(np.flatnonzero(gap <= 0)[0])
        if gap[i] == 0 or i == 0:
            rate, threshold = far[i], thresholds[i]
        else:
            alpha = gap[i - 1] / (gap[i - 1] - gap[i])
            rate = far[i - 1] + alpha * (far[i] - far[i - 1])
            if np.isfinite(thresholds[i]):
                threshold = thresholds[i - 1] + alpha * (thresholds[i] - thresholds[i - 1])
            else:
                threshold = thresholds[i - 1]
        return EERResult(
            eer=float(rate),
            threshold=float(threshold),
            n_genuine=int(genuine.size),
            n_impostor=int(impostor.size),
        )

    @classmethod
    def intra_eer(cls, per_group: Mapping[Group, ScoreSet]) -> Dict[Group, EERResult]:
        """EER per group; groups with an empty side are absent, not zero."""
        results: Dict[Group, EERResult] = {}
        for group in sorted(per_group, key=lambda g: g.value):
            scores = per_group[group]
            if not scores.complete:
                logger.warning("Group %s has no %s scores; intra-EER omitted", group.value,
                               "impostor" if scores.genuine else "genuine")
                continue
            results[group] = cls.eer(scores)
        return results
