"""
CSV tables: feature and embedding ingestion, report writing.

All reports are written with REPORT_FLOAT_FORMAT and '\n' line endings, and
rows are emitted in a deterministic order so identical runs give
byte-identical files.
"""

import logging
from pathlib import Path
from typing import Dict, Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from ..models.acoustics import FEATURE_NAMES, AcousticSummary
from ..models.reports import CVReport, DistortionReport, WERResult
from ..models.scores import EERResult
from ..models.utterance import UtteranceRecord
from ..utils.constants import REPORT_FLOAT_FORMAT
from ..utils.errors import DataError, FormatError
from .wer import corpus_wer

logger = logging.getLogger(__name__)

POOLED = "ALL"


def write_csv(frame: pd.DataFrame, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=REPORT_FLOAT_FORMAT, lineterminator="\n")
    return path


def _read(path, required: Sequence[str]) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"table not found: {path}")
    try:
        frame = pd.read_csv(path, dtype={"id": str}, keep_default_na=False, na_values=[""])
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise FormatError(f"{path}: unreadable CSV ({e})") from None
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise FormatError(f"{path}: missing column(s) {', '.join(missing)}")
    return frame


def features_frame(summaries: Mapping[str, AcousticSummary]) -> pd.DataFrame:
    """Feature table indexed by id, columns in FEATURE_NAMES order."""
    ids = sorted(summaries)
    data = [summaries[i].values() for i in ids]
    return pd.DataFrame(data, index=pd.Index(ids, name="id"), columns=list(FEATURE_NAMES))


def write_features(summaries: Mapping[str, AcousticSummary], path) -> Path:
    frame = features_frame(summaries).reset_index()
    frame["flags"] = [summaries[i].flags for i in frame["id"]]
    return write_csv(frame, path)


def read_features(path) -> pd.DataFrame:
    """
    Read a feature CSV (id + numeric columns) into a table indexed by id.

    Non-numeric columns such as 'flags' are dropped.

    Raises:
        FormatError: missing id column, duplicate ids or non-finite values.
    """
    frame = _read(path, ["id"])
    if frame["id"].duplicated().any():
        dup = frame.loc[frame["id"].duplicated(), "id"].iloc[0]
        raise FormatError(f"{path}: duplicate id {dup!r}")
    frame = frame.set_index("id").drop(columns=["flags"], errors="ignore")
    numeric = frame.select_dtypes(include=[np.number])
    dropped = [c for c in frame.columns if c not in numeric.columns]
    if dropped:
        logger.debug("%s: ignoring non-numeric column(s) %s", path, dropped)
    if not np.isfinite(numeric.to_numpy(dtype=np.float64)).all():
        raise FormatError(f"{path}: non-finite feature values")
    return numeric.astype(np.float64)


def read_embeddings(path) -> Dict[str, np.ndarray]:
    """Read an embedding CSV with columns id, v0, v1, ..."""
    frame = read_features(path)
    columns = [c for c in frame.columns if str(c).startswith("v")]
    if not columns:
        raise FormatError(f"{path}: no v<i> embedding columns")
    return {utt_id: row.to_numpy(dtype=np.float64) for utt_id, row in frame[columns].iterrows()}


def write_embeddings(vectors: Mapping[str, np.ndarray], path) -> Path:
    ids = sorted(vectors)
    matrix = np.vstack([vectors[i] for i in ids])
    frame = pd.DataFrame(matrix, columns=[f"v{j}" for j in range(matrix.shape[1])])
    frame.insert(0, "id", ids)
    return write_csv(frame, path)


def write_distortion(report: DistortionReport, path) -> Path:
    frame = pd.DataFrame(
        [(r.feature, r.emd, r.mi, r.n) for r in report.rows],
        columns=["feature", "emd", "mi", "n"],
    )
    return write_csv(frame, path)


def write_privacy(pooled: EERResult, per_group: Mapping[str, EERResult], path) -> Path:
    """Pooled row first (group=ALL), then intra-group rows sorted by group."""
    rows = [(POOLED, pooled)] + sorted(per_group.items())
    frame = pd.DataFrame(
        [(g, r.eer, r.threshold, r.n_genuine, r.n_impostor) for g, r in rows],
        columns=["group", "eer", "threshold", "n_genuine", "n_impostor"],
    )
    return write_csv(frame, path)


def write_utility(reports: Iterable[CVReport], path) -> Path:
    """Per-fold rows followed by one aggregate row per condition pair (fold and seed = 'mean')."""
    rows = []
    for report in reports:
        for s in report.scores:
            rows.append((s.train_cond, s.eval_cond, str(s.fold), str(s.seed), s.f1))
        first = report.scores[0]
        rows.append((first.train_cond, first.eval_cond, "mean", "mean", report.mean))
    frame = pd.DataFrame(rows, columns=["train_cond", "eval_cond", "fold", "seed", "f1"])
    return write_csv(frame, path)


def write_wer(results: Sequence[WERResult], records: Mapping[str, UtteranceRecord], path) -> Path:
    """Per-utterance rows sorted by id, then corpus-level rows per group and pooled."""
    ordered = sorted(results, key=lambda r: r.id)
    rows = [(r.id, r.wer, r.n_ref_tokens) for r in ordered]
    groups = sorted({records[r.id].group.value for r in ordered if r.id in records})
    for group in groups:
        members = [r for r in ordered if r.id in records and records[r.id].group.value == group]
        rows.append((f"{POOLED}:{group}", corpus_wer(members), sum(r.n_ref_tokens for r in members)))
    rows.append((POOLED, corpus_wer(ordered), sum(r.n_ref_tokens for r in ordered)))
    frame = pd.DataFrame(rows, columns=["id", "wer", "n_ref_tokens"])
    return write_csv(frame, path)


def read_report(path, required: Sequence[str]) -> pd.DataFrame:
    return _read(path, required)
