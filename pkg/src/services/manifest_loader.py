"""
Manifest loading and writing.

A manifest is line-delimited JSON: one flat object per line with the field
names of UtteranceRecord. Blank lines are skipped; line numbers in errors are
1-based file lines.
"""

import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List

from ..models.utterance import Gender, Group, Task, UtteranceRecord
from ..utils.errors import DataError, ManifestError

logger = logging.getLogger(__name__)

MANDATORY_FIELDS = ("id", "speaker", "gender", "group", "task")
OPTIONAL_FIELDS = ("audio_path", "feature_path", "transcript")
_ENUMS = {"gender": Gender, "group": Group, "task": Task}


class ManifestLoader:
    """Service for reading and writing utterance manifests."""

    @classmethod
    def load(cls, path) -> List[UtteranceRecord]:
        """
        Load every record of a manifest, in file order.

        Raises:
            ManifestError: duplicate id, missing mandatory field, unknown enum
                value or malformed line; the message names the line number(s).
        """
        path = Path(path)
        if not path.is_file():
            raise DataError(f"manifest not found: {path}")

        records: List[UtteranceRecord] = []
        seen: Dict[str, int] = {}
        with path.open("r", encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                record = cls.parse_line(line, lineno)
                if record.id in seen:
                    raise ManifestError(f"duplicate id {record.id!r}", lines=(seen[record.id], lineno))
                seen[record.id] = lineno
                records.append(record)

        logger.debug("Loaded %d records from %s", len(records), path)
        return records

    @classmethod
    def parse_line(cls, line: str, lineno: int) -> UtteranceRecord:
        """Parse and validate one manifest line."""
        try:
            data = json.loads(line)
        except json.JSONDecodeError as e:
            raise ManifestError(f"invalid JSON ({e.msg})", lines=(lineno,)) from None
        if not isinstance(data, dict):
            raise ManifestError("record must be a key-value object", lines=(lineno,))

        unknown = set(data) - set(MANDATORY_FIELDS) - set(OPTIONAL_FIELDS)
        if unknown:
            raise ManifestError(f"unknown field(s) {sorted(unknown)}", lines=(lineno,))
        for name in MANDATORY_FIELDS:
            if data.get(name) in (None, ""):
                raise ManifestError(f"missing mandatory field {name!r}", lines=(lineno,))

        values = {}
        for name in MANDATORY_FIELDS + OPTIONAL_FIELDS:
            value = data.get(name)
            if value is not None and not isinstance(value, str):
                raise ManifestError(f"field {name!r} must be a string", lines=(lineno,))
            if name in _ENUMS:
                try:
                    value = _ENUMS[name](value)
                except ValueError:
                    raise ManifestError(f"unknown {name} value {value!r}", lines=(lineno,)) from None
            values[name] = value

        try:
            return UtteranceRecord(**values)
        except DataError as e:
            raise ManifestError(str(e), lines=(lineno,)) from None

    @classmethod
    def write(cls, records: Iterable[UtteranceRecord], path) -> Path:
        """Write records one per line; keys in a fixed order."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="\n") as handle:
            for record in records:
                handle.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")
        return path

    @staticmethod
    def by_id(records: Iterable[UtteranceRecord]) -> Dict[str, UtteranceRecord]:
        return {r.id: r for r in records}
