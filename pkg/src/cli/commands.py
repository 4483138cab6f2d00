"""
Command implementations.

Each command takes a resolved RunConfig, writes its outputs under the run's
output directory and returns the counts echoed into the run log. Per-record
work goes through parallel_map; results are merged in id order.
"""

import logging
from dataclasses import asdict, replace
from pathlib import Path
from typing import Callable, Dict, List, Tuple

import numpy as np

from ..models.acoustics import ProsodyConfig
from ..models.reports import CVConfig, ProbeConfig
from ..models.scores import ProtocolConfig
from ..models.synth_types import GROUP_PRESETS, CohortSpec, GroupDistribution, policy_from_config
from ..models.target_pool import ConversionConfig, ConversionMode, TargetPool
from ..models.utterance import Group, UtteranceRecord
from ..services.distortion_analyzer import DistortionAnalyzer
from ..services.fmat_io import FmatIO
from ..services.knn_converter import KnnConverter
from ..services.manifest_loader import ManifestLoader
from ..services.privacy_scorer import PrivacyScorer
from ..services.prosody_extractor import ProsodyExtractor
from ..services.report_writer import ReportWriter
from ..services.synthesizer import Synthesizer
from ..services.utility_scorer import UtilityScorer
from ..services.wav_io import WavIO
from ..services import tables
from ..services.wer import wer_detailed
from ..utils.constants import ZERO_NORM_EPS
from ..utils.errors import ConfigError, DataError
from ..utils.parallel import parallel_map
from .config import RunConfig

logger = logging.getLogger(__name__)

Counts = Dict[str, int]


def _load_records(config: RunConfig, key: str = "manifest") -> Tuple[List[UtteranceRecord], Path]:
    path = config.path(key)
    records = sorted(ManifestLoader.load(path), key=lambda r: r.id)
    if not records:
        raise DataError(f"manifest {path} holds no records")
    return records, path.parent


def _required(record: UtteranceRecord, attr: str, base: Path) -> Path:
    path = record.resolve(getattr(record, attr), base)
    if path is None:
        raise DataError(f"{record.id}: record has no {attr}")
    return path


# Workers are module-level so they pickle into worker processes

def _features_job(job):
    utt_id, path, prosody = job
    return utt_id, ProsodyExtractor.summarize(WavIO.read(path), prosody)


def _convert_job(job) -> int:
    src_path, pool, k, mode, dst_path = job
    src = FmatIO.read(src_path)
    if mode is ConversionMode.RESYNTHESIS:
        FmatIO.write(KnnConverter.resynthesis_passthrough(src), dst_path)
        return 0
    result = KnnConverter.convert_detailed(src, pool, k)
    FmatIO.write(result.matrix, dst_path)
    return result.passthrough_rows


def _cv_job(job):
    records, frames, train_cond, eval_cond, cv = job
    return UtilityScorer.cross_validate(records, frames, train_cond, eval_cond, cv)


def run_synth(config: RunConfig) -> Counts:
    p = config.params
    distributions = dict(GROUP_PRESETS)
    for name, overrides in p["distributions"].items():
        try:
            group = Group(name)
        except ValueError:
            raise ConfigError(f"synth.distributions: unknown group {name!r}") from None
        if not isinstance(overrides, dict):
            raise ConfigError(f"synth.distributions.{name} must be a mapping")
        distributions[group] = GroupDistribution.from_dict({**asdict(GROUP_PRESETS[group]), **overrides})

    cohort_spec = CohortSpec(
        n_per_group=p["n_per_group"],
        utterances_per_speaker=p["utterances_per_speaker"],
        task=p["task"],
        feature_dim=p["feature_dim"],
        frames_per_second=p["frames_per_second"],
        n_target_speakers=p["n_target_speakers"],
        target_seconds=p["target_seconds"],
        distributions=distributions,
    )
    conditions = {}
    for cond, entries in sorted(p["degrade"].items()):
        if not isinstance(entries, list):
            raise ConfigError(f"synth.degrade.{cond} must be a list of policies")
        conditions[cond] = [policy_from_config(e) for e in entries]

    cohort = Synthesizer.synth_cohort(cohort_spec, config.seed, config.out, jobs=config.jobs)
    for cond, policies in conditions.items():
        logger.info("Degrading into %s: %s", cond, ", ".join(pol.kind.value for pol in policies) or "identity")
        Synthesizer.write_degraded(cohort, policies, config.out / cond, jobs=config.jobs)
    return {
        "utterances": len(cohort.records),
        "speakers": len({r.speaker for r in cohort.records}),
        "target_speakers": len(cohort.targets),
        "degraded_conditions": len(conditions),
    }


def run_convert(config: RunConfig) -> Counts:
    p = config.params
    records, base = _load_records(config)
    try:
        conv = ConversionConfig(k=p["k"], seed=config.seed, policy=p["policy"], mode=p["mode"])
    except ValueError as e:
        raise ConfigError(f"convert: {e}") from None
    out_dir = config.out / p["output"]

    pools: List[TargetPool] = []
    if conv.mode is ConversionMode.KNN:
        targets, target_base = _load_records(config, "targets")
        by_speaker: Dict[str, List[UtteranceRecord]] = {}
        for record in targets:
            by_speaker.setdefault(record.speaker, []).append(record)
        for speaker in sorted(by_speaker):
            members = by_speaker[speaker]
            genders = {r.gender for r in members}
            if len(genders) != 1:
                raise DataError(f"target speaker {speaker} has inconsistent gender labels")
            matrices = [FmatIO.read(_required(r, "feature_path", target_base)) for r in members]
            pools.append(KnnConverter.build_pool(speaker, genders.pop(), matrices))

    jobs, converted = [], []
    for record in records:
        pool = KnnConverter.select_target(record, pools, conv) if pools else None
        relative = f"features/{record.id}{FmatIO.EXTENSION}"
        jobs.append((_required(record, "feature_path", base), pool, conv.k, conv.mode, out_dir / relative))
        converted.append(replace(record, audio_path=None, feature_path=relative))
        if pool is not None:
            logger.debug("%s -> target %s", record.id, pool.speaker)

    passthrough = parallel_map(_convert_job, jobs, config.jobs)
    ManifestLoader.write(converted, out_dir / "manifest.jsonl")
    return {
        "utterances": len(records),
        "target_pools": len(pools),
        "dropped_pool_rows": sum(pool.dropped_rows for pool in pools),
        "passthrough_rows": int(sum(passthrough)),
    }


def run_features(config: RunConfig) -> Counts:
    p = config.params
    records, base = _load_records(config)
    try:
        prosody = ProsodyConfig(**p["prosody"])
    except TypeError as e:
        raise ConfigError(f"features.prosody: {e}") from None
    jobs = [(r.id, _required(r, "audio_path", base), prosody) for r in records]
    summaries = dict(parallel_map(_features_job, jobs, config.jobs))
    tables.write_features(summaries, config.output_path())
    return {
        "utterances": len(summaries),
        "no_voicing": sum(s.no_voicing for s in summaries.values()),
        "empty_speech": sum(s.empty_speech for s in summaries.values()),
    }


def run_distort(config: RunConfig) -> Counts:
    p = config.params
    original = tables.read_features(config.path("original"))
    anonymized = tables.read_features(config.path("anonymized"))
    standardizer = DistortionAnalyzer.fit_standardizer(original)
    report = DistortionAnalyzer.distortion_report(original, anonymized, standardizer, k=p["neighbors"])
    tables.write_distortion(report, config.output_path())
    return {
        "features": len(report.rows),
        "degenerate_features": int(np.count_nonzero(standardizer.degenerate)),
        "paired_utterances": report.rows[0].n if report.rows else 0,
    }


def _unit(utt_id: str, vector: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(vector)
    if norm < ZERO_NORM_EPS:
        raise DataError(f"{utt_id}: zero-norm embedding")
    return vector / norm


def run_privacy(config: RunConfig) -> Counts:
    p = config.params
    records, base = _load_records(config)
    protocol = PrivacyScorer.build_protocol(
        records,
        ProtocolConfig(p["per_speaker_trials"], p["per_speaker_enroll"], config.seed),
    )
    if p["embeddings"] is not None:
        raw = tables.read_embeddings(config.path("embeddings"))
        embeddings = {i: _unit(i, v) for i, v in raw.items()}
    else:
        paths = [_required(r, "feature_path", base) for r in records]
        matrices = dict(zip((r.id for r in records), parallel_map(FmatIO.read, paths, config.jobs)))
        embeddings = PrivacyScorer.protocol_embeddings(protocol, matrices)

    scores = PrivacyScorer.score_trials(protocol, embeddings)
    pooled = PrivacyScorer.eer(scores.pooled)
    per_group = PrivacyScorer.intra_eer(scores.per_group)
    tables.write_privacy(pooled, {g.value: r for g, r in per_group.items()}, config.output_path())
    logger.info("Pooled EER %.4f over %d trials", pooled.eer, len(protocol.trials))
    return {
        "speakers": len(protocol.splits),
        "trials": len(protocol.trials),
        "groups_scored": len(per_group),
    }


def run_utility(config: RunConfig) -> Counts:
    p = config.params
    records, _ = _load_records(config)
    frames = {}
    for cond, table in sorted(p["conditions"].items()):
        path = Path(table)
        frames[cond] = tables.read_features(path if path.is_absolute() else config.base_dir / path)

    pairs = p["pairs"] or [[cond, cond] for cond in sorted(frames)]
    for pair in pairs:
        if not isinstance(pair, list) or len(pair) != 2 or any(c not in frames for c in pair):
            raise ConfigError(f"utility.pairs entry {pair!r} must name two known conditions")
    if not all(isinstance(s, int) for s in p["seeds"]):
        raise ConfigError("utility.seeds must be integers")

    cv = CVConfig(
        folds=p["folds"],
        seeds=tuple(config.seed + s for s in p["seeds"]),
        probe=ProbeConfig(p["learning_rate"], p["iterations"], p["l2"]),
    )
    jobs = [(records, frames, train, evaluate, cv) for train, evaluate in pairs]
    reports = parallel_map(_cv_job, jobs, config.jobs)
    tables.write_utility(reports, config.output_path())
    return {
        "utterances": len(records),
        "condition_pairs": len(pairs),
        "fold_scores": sum(len(r.scores) for r in reports),
    }


def run_wer(config: RunConfig) -> Counts:
    records, _ = _load_records(config)
    by_id = ManifestLoader.by_id(records)
    hyp = tables.read_report(config.path("hypotheses"), ["id", "hypothesis"])
    hypotheses = dict(zip(hyp["id"].astype(str), hyp["hypothesis"].fillna("").astype(str)))

    unknown = sorted(set(hypotheses) - set(by_id))
    if unknown:
        raise DataError(f"hypotheses for unknown id(s): {', '.join(unknown[:5])}")
    results = []
    for record in records:
        if record.transcript is None:
            logger.debug("%s has no reference transcript; skipped", record.id)
            continue
        if record.id not in hypotheses:
            raise DataError(f"{record.id}: no hypothesis")
        results.append(wer_detailed(record.id, record.transcript, hypotheses[record.id]))
    if not results:
        raise DataError("no manifest record carries a transcript")
    tables.write_wer(results, by_id, config.output_path())
    return {"utterances": len(results), "skipped": len(records) - len(results)}


def run_report(config: RunConfig) -> Counts:
    written = ReportWriter.write(config.path("reports"), config.out)
    return {"files_written": len(written)}


COMMAND_RUNNERS: Dict[str, Callable[[RunConfig], Counts]] = {
    "synth": run_synth,
    "convert": run_convert,
    "features": run_features,
    "distort": run_distort,
    "privacy": run_privacy,
    "utility": run_utility,
    "wer": run_wer,
    "report": run_report,
}
