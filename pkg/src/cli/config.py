"""
Run configuration: YAML file, command-line overrides and per-command defaults.

Relative paths inside the file resolve against the file's directory; the
output directory given on the command line resolves against the working
directory.
"""

import copy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from ..utils.constants import (
    CV_FOLDS,
    CV_SEEDS,
    DEFAULT_K,
    ENROLLMENTS_PER_SPEAKER,
    MI_NEIGHBORS,
    PROBE_ITERATIONS,
    PROBE_L2,
    PROBE_LEARNING_RATE,
    TRIALS_PER_SPEAKER,
)
from ..utils.errors import ConfigError
from ..utils.parallel import default_jobs

COMMANDS = ("synth", "convert", "features", "distort", "privacy", "utility", "wer", "report")

# Per-command keys and defaults; None marks a path resolved at run time
SECTION_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "synth": {
        "n_per_group": 10,
        "utterances_per_speaker": 2,
        "task": "sentences",
        "feature_dim": 16,
        "frames_per_second": 50.0,
        "n_target_speakers": 4,
        "target_seconds": 20.0,
        "distributions": {},
        "degrade": {},
    },
    "convert": {
        "manifest": None,
        "targets": None,
        "k": DEFAULT_K,
        "policy": "same_gender",
        "mode": "knn",
        "output": "converted",
    },
    "features": {
        "manifest": None,
        "output": "features.csv",
        "prosody": {},
    },
    "distort": {
        "original": None,
        "anonymized": None,
        "neighbors": MI_NEIGHBORS,
        "output": "distortion.csv",
    },
    "privacy": {
        "manifest": None,
        "embeddings": None,
        "per_speaker_trials": TRIALS_PER_SPEAKER,
        "per_speaker_enroll": ENROLLMENTS_PER_SPEAKER,
        "output": "privacy.csv",
    },
    "utility": {
        "manifest": None,
        "conditions": {},
        "pairs": [],
        "folds": CV_FOLDS,
        "seeds": list(CV_SEEDS),
        "learning_rate": PROBE_LEARNING_RATE,
        "iterations": PROBE_ITERATIONS,
        "l2": PROBE_L2,
        "output": "utility.csv",
    },
    "wer": {
        "manifest": None,
        "hypotheses": None,
        "output": "wer.csv",
    },
    "report": {
        "reports": None,
    },
}

# Keys that name existing input files or directories
INPUT_KEYS = {"manifest", "targets", "original", "anonymized", "embeddings", "hypotheses", "reports"}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration of one command run."""
    command: str
    seed: int = 0
    out: Path = Path("out")
    jobs: int = field(default_factory=default_jobs)
    params: Dict[str, Any] = field(default_factory=dict)
    base_dir: Path = Path(".")

    def path(self, key: str) -> Optional[Path]:
        value = self.params.get(key)
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    def output_path(self, key: str = "output") -> Path:
        return self.out / self.params[key]

    def as_dict(self) -> Dict[str, Any]:
        """Plain form echoed into the run log."""
        return {
            "command": self.command,
            "seed": self.seed,
            "out": str(self.out),
            "jobs": self.jobs,
            self.command: self.params,
        }


def _load_yaml(path: Path) -> Dict[str, Any]:
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with path.open("r", encoding="utf-8") as handle:
            data = yaml.safe_load(handle)
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid YAML ({e})") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def _int(value: Any, name: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return value


def _merge_section(command: str, section: Any) -> Dict[str, Any]:
    if section is None:
        section = {}
    if not isinstance(section, dict):
        raise ConfigError(f"section {command!r} must be a mapping")
    defaults = SECTION_DEFAULTS[command]
    unknown = sorted(set(section) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown key(s) in {command!r}: {', '.join(unknown)}")
    params = copy.deepcopy(defaults)
    for key, value in section.items():
        expected = defaults[key]
        if expected is not None and value is not None:
            if isinstance(expected, bool) != isinstance(value, bool):
                raise ConfigError(f"{command}.{key} has the wrong type: {value!r}")
            if isinstance(expected, float) and isinstance(value, int):
                value = float(value)
            if not isinstance(value, type(expected)):
                raise ConfigError(
                    f"{command}.{key} must be {type(expected).__name__}, got {type(value).__name__}"
                )
        params[key] = value
    return params


def load_config(
    command: str,
    path,
    seed: Optional[int] = None,
    out: Optional[str] = None,
    jobs: Optional[int] = None,
) -> RunConfig:
    """
    Resolve the configuration of one command.

    Raises:
        ConfigError: unknown command or key, wrong type, or a missing input path.
    """
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    path = Path(path)
    data = _load_yaml(path)
    base_dir = path.parent

    unknown = sorted(set(data) - {"seed", "out", "jobs"} - set(COMMANDS))
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")

    resolved_seed = _int(data.get("seed", 0) if seed is None else seed, "seed", 0)
    resolved_jobs = _int(data.get("jobs", default_jobs()) if jobs is None else jobs, "jobs", 1)
    if out is not None:
        out_dir = Path(out)
    else:
        raw = data.get("out", "out")
        if not isinstance(raw, str):
            raise ConfigError(f"out must be a path string, got {raw!r}")
        out_dir = Path(raw) if Path(raw).is_absolute() else base_dir / raw

    params = _merge_section(command, data.get(command))
    config = RunConfig(
        command=command,
        seed=resolved_seed,
        out=out_dir,
        jobs=resolved_jobs,
        params=params,
        base_dir=base_dir,
    )
    _fill_default_inputs(config)
    _check_inputs(config)
    return config


def _fill_default_inputs(config: RunConfig) -> None:
    """Chain commands through the output directory when inputs are omitted."""
    params = config.params
    defaults = {"manifest": "manifest.jsonl", "targets": "targets.jsonl"}
    if params.get("mode") == "resynthesis":
        # Resynthesis never reads target pools
        defaults.pop("targets")
    for key, filename in defaults.items():
        if key in params and params[key] is None:
            params[key] = str((config.out / filename).resolve())
    if config.command == "report" and params["reports"] is None:
        params["reports"] = str(config.out.resolve())


def _check_inputs(config: RunConfig) -> None:
    params = config.params
    required = {
        "distort": ("original", "anonymized"),
        "wer": ("hypotheses",),
    }.get(config.command, ())
    for key in required:
        if params.get(key) is None:
            raise ConfigError(f"{config.command}.{key} is required")
    for key in INPUT_KEYS & set(params):
        if params[key] is not None and not config.path(key).exists():
            raise ConfigError(f"{config.command}.{key}: path does not exist: {config.path(key)}")
    if config.command == "utility":
        for cond, table in params["conditions"].items():
            p = Path(table)
            p = p if p.is_absolute() else config.base_dir / p
            if not p.is_file():
                raise ConfigError(f"utility.conditions.{cond}: path does not exist: {p}")
        if not params["conditions"]:
            raise ConfigError("utility.conditions must name at least one feature table")
