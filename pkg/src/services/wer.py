"""Word error rate with fixed text normalization."""

import unicodedata
from typing import List, Sequence

import numpy as np

from ..models.reports import WERResult
from ..utils.errors import DataError


def normalize_text(text: str) -> List[str]:
    """
    Lowercase, compose accents (NFC), drop punctuation and symbols
    (Unicode categories P* and S*), and split on whitespace.
    """
    text = unicodedata.normalize("NFC", text.lower())
    kept = "".join(ch for ch in text if unicodedata.category(ch)[0] not in ("P", "S"))
    return kept.split()


def edit_distance(reference: Sequence[str], hypothesis: Sequence[str]) -> int:
    """Token-level Levenshtein distance with unit costs."""
    previous = list(range(len(hypothesis) + 1))
    for i, ref_token in enumerate(reference, start=1):
        current = [i] + [0] * len(hypothesis)
        for j, hyp_token in enumerate(hypothesis, start=1):
            substitution = previous[j - 1] + (ref_token != hyp_token)
            current[j] = min(previous[j] + 1, current[j - 1] + 1, substitution)
        previous = current
    return previous[-1]


def wer(reference: str, hypothesis: str) -> float:
    """(S + D + I) / N over normalized tokens; may exceed 1."""
    return wer_detailed("", reference, hypothesis).wer


def wer_detailed(utt_id: str, reference: str, hypothesis: str) -> WERResult:
    ref_tokens = normalize_text(reference)
    if not ref_tokens:
        raise DataError(f"{utt_id or 'reference'}: reference is empty after normalization")
    edits = edit_distance(ref_tokens, normalize_text(hypothesis))
    return WERResult(id=utt_id, wer=edits / len(ref_tokens), n_ref_tokens=len(ref_tokens), edits=edits)


def corpus_wer(results: Sequence[WERResult]) -> float:
    """Total edits over total reference tokens."""
    if not results:
        return float("nan")
    return float(np.sum([r.edits for r in results]) / np.sum([r.n_ref_tokens for r in results]))
