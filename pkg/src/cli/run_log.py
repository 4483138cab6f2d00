"""Logging setup for CLI runs and the per-run log file."""

import logging
import sys
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Dict, Optional

import yaml

from .. import __version__
from .config import RunConfig

PACKAGE_LOGGER = "src"
DEPENDENCIES = ("numpy", "scipy", "pandas", "soundfile", "PyYAML", "Pillow")


_console: Optional[logging.Handler] = None


def configure_console(verbose: int) -> None:
    """Attach one stderr handler to the package logger; repeated calls replace it."""
    global _console
    level = logging.WARNING - 10 * min(verbose, 2)
    logger = logging.getLogger(PACKAGE_LOGGER)
    logger.setLevel(logging.DEBUG)
    if _console is not None:
        logger.removeHandler(_console)
    handler = _console = logging.StreamHandler(sys.stderr)
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    logger.addHandler(handler)


def _version(dist: str) -> str:
    try:
        return metadata.version(dist)
    except metadata.PackageNotFoundError:
        return "unknown"


class RunLog:
    """
    Writes <out>/run.log. Only the first line carries a timestamp; the rest
    is the resolved config, versions, package log records and final counts.
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.path = Path(config.out) / "run.log"
        self._handler: Optional[logging.FileHandler] = None

    def __enter__(self) -> "RunLog":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        with self.path.open("w", encoding="utf-8", newline="\n") as handle:
            handle.write(f"run {self.config.command} started {stamp}\n")
            handle.write("config:\n")
            handle.write(yaml.safe_dump(self.config.as_dict(), sort_keys=True, default_flow_style=False))
            handle.write("versions:\n")
            handle.write(f"  spane-kit: {__version__}\n")
            for dist in DEPENDENCIES:
                handle.write(f"  {dist}: {_version(dist)}\n")
            handle.write("log:\n")

        self._handler = logging.FileHandler(self.path, mode="a", encoding="utf-8")
        self._handler.setLevel(logging.INFO)
        self._handler.setFormatter(logging.Formatter("  %(levelname)s %(name)s: %(message)s"))
        logger = logging.getLogger(PACKAGE_LOGGER)
        logger.setLevel(logging.DEBUG)
        logger.addHandler(self._handler)
        return self

    def counts(self, counts: Dict[str, int]) -> None:
        self._detach()
        with self.path.open("a", encoding="utf-8", newline="\n") as handle:
            handle.write("counts:\n")
            for key in sorted(counts):
                handle.write(f"  {key}: {counts[key]}\n")

    def _detach(self) -> None:
        if self._handler is not None:
            logging.getLogger(PACKAGE_LOGGER).removeHandler(self._handler)
            self._handler.close()
            self._handler = None

    def __exit__(self, exc_type, exc, tb) -> None:
        if exc is not None and self._handler is not None:
            logging.getLogger(PACKAGE_LOGGER).error("%s", exc)
        self._detach()
