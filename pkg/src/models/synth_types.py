"""
Synthetic cohort definitions.

Each utterance is described by an UtteranceSpec; cohorts draw specs from one
GroupDistribution per clinical group. Degradation policies act on the spec's
parameter tracks to emulate the acoustic effects of an anonymizer.
"""

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Tuple

from .utterance import Group, Task
from ..utils.constants import DEFAULT_SAMPLE_RATE
from ..utils.errors import DataError

Range = Tuple[float, float]


@dataclass(frozen=True)
class UtteranceSpec:
    """
    Parameters of one synthetic utterance.

    f0_var is the depth (Hz) of a slow sinusoidal intonation contour at
    f0_rate_hz. jitter_pct perturbs every glottal period by a uniform draw
    within ±jitter_pct with alternating sign, so the expected local jitter
    |T_i - T_(i-1)| / mean(T) equals jitter_pct / 100.
    Pauses are (onset_s, duration_s) pairs.
    """
    f0_base: float
    duration_s: float
    f0_var: float = 0.0
    f0_rate_hz: float = 0.5
    jitter_pct: float = 0.0
    pauses: Tuple[Tuple[float, float], ...] = ()
    amplitude: float = 0.5
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        object.__setattr__(self, "pauses", tuple((float(a), float(b)) for a, b in self.pauses))
        if not (60.0 <= self.f0_base <= 400.0):
            raise DataError(f"f0_base must lie in [60, 400] Hz, got {self.f0_base}")
        if self.f0_var < 0 or self.f0_base - self.f0_var < 30.0:
            raise DataError(f"f0_var {self.f0_var} out of range for f0_base {self.f0_base}")
        if not (0 <= self.jitter_pct < 50.0):
            raise DataError(f"jitter_pct must lie in [0, 50), got {self.jitter_pct}")
        if self.duration_s <= 0 or self.sample_rate <= 0:
            raise DataError("duration_s and sample_rate must be positive")
        if not (0 < self.amplitude <= 1.0):
            raise DataError(f"amplitude must lie in (0, 1], got {self.amplitude}")
        end = 0.0
        for onset, dur in sorted(self.pauses):
            if dur <= 0 or onset < end or onset + dur > self.duration_s:
                raise DataError(f"pause ({onset}, {dur}) overlaps another or leaves the utterance")
            end = onset + dur

    def to_dict(self) -> dict:
        return {
            "f0_base": self.f0_base,
            "duration_s": self.duration_s,
            "f0_var": self.f0_var,
            "f0_rate_hz": self.f0_rate_hz,
            "jitter_pct": self.jitter_pct,
            "pauses": [list(p) for p in self.pauses],
            "amplitude": self.amplitude,
            "sample_rate": self.sample_rate,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "UtteranceSpec":
        data = dict(data)
        data["pauses"] = tuple(tuple(p) for p in data.get("pauses", ()))
        return cls(**data)


class PolicyKind(str, Enum):
    F0_SMOOTH = "f0_smooth"
    ENERGY_GAIN = "energy_gain"
    JITTER_REMOVE = "jitter_remove"
    PAUSE_PRESERVE = "pause_preserve"
    TRANSCRIPT_RESYNTH = "transcript_resynth"


@dataclass(frozen=True)
class DegradationPolicy:
    """One parameter-track transformation; only the fields of its kind are used."""
    kind: PolicyKind
    window_s: float = 0.1
    gain_db: float = 0.0
    target_f0: float = 120.0
    pause_s: float = 0.3

    def __post_init__(self):
        object.__setattr__(self, "kind", PolicyKind(self.kind))
        if self.kind is PolicyKind.F0_SMOOTH and self.window_s <= 0:
            raise DataError(f"f0_smooth window must be > 0, got {self.window_s}")
        if self.kind is PolicyKind.TRANSCRIPT_RESYNTH and (
            not (60.0 <= self.target_f0 <= 400.0) or self.pause_s <= 0
        ):
            raise DataError("transcript_resynth needs target_f0 in [60, 400] and pause_s > 0")


# Positional argument of each kind in the "kind(arg, ...)" text form
_POLICY_ARGS = {
    PolicyKind.F0_SMOOTH: ("window_s",),
    PolicyKind.ENERGY_GAIN: ("gain_db",),
    PolicyKind.JITTER_REMOVE: (),
    PolicyKind.PAUSE_PRESERVE: (),
    PolicyKind.TRANSCRIPT_RESYNTH: ("target_f0", "pause_s"),
}

_POLICY_RE = re.compile(r"^\s*([a-z_0-9]+)\s*(?:\((.*)\))?\s*$")


def parse_policy(text: str) -> DegradationPolicy:
    """
    Parse the compact text form, e.g. "f0_smooth(0.1)" or "energy_gain(+6)".

    Raises:
        DataError: unknown kind, wrong argument count or non-numeric argument.
    """
    match = _POLICY_RE.match(text)
    if not match:
        raise DataError(f"cannot parse degradation policy: {text!r}")
    try:
        kind = PolicyKind(match.group(1))
    except ValueError:
        raise DataError(f"unknown degradation policy: {match.group(1)!r}") from None
    raw = match.group(2)
    args = [a.strip() for a in raw.split(",")] if raw and raw.strip() else []
    names = _POLICY_ARGS[kind]
    if len(args) > len(names):
        raise DataError(f"{kind.value} takes at most {len(names)} argument(s), got {len(args)}")
    try:
        values = {name: float(arg) for name, arg in zip(names, args)}
    except ValueError:
        raise DataError(f"non-numeric argument in {text!r}") from None
    return DegradationPolicy(kind=kind, **values)


def policy_from_config(entry) -> DegradationPolicy:
    """Accept either the text form or a mapping with a 'kind' key."""
    if isinstance(entry, str):
        return parse_policy(entry)
    if isinstance(entry, dict) and "kind" in entry:
        try:
            return DegradationPolicy(**entry)
        except TypeError as e:
            raise DataError(f"bad degradation policy {entry}: {e}") from None
    raise DataError(f"bad degradation policy entry: {entry!r}")


@dataclass(frozen=True)
class GroupDistribution:
    """Uniform parameter ranges for the speakers of one group."""
    f0_base_m: Range = (95.0, 135.0)
    f0_base_f: Range = (180.0, 230.0)
    f0_var: Range = (15.0, 25.0)
    jitter_pct: Range = (0.0, 1.0)
    pause_count: Tuple[int, int] = (1, 3)
    pause_dur: Range = (0.2, 0.5)
    amplitude: Range = (0.3, 0.6)
    duration_s: Range = (2.5, 3.5)

    def __post_init__(self):
        for name in ("f0_base_m", "f0_base_f", "f0_var", "jitter_pct", "pause_dur", "amplitude", "duration_s"):
            lo, hi = getattr(self, name)
            if lo > hi or lo < 0:
                raise DataError(f"invalid range for {name}: ({lo}, {hi})")
            object.__setattr__(self, name, (float(lo), float(hi)))
        lo, hi = self.pause_count
        if lo > hi or lo < 0:
            raise DataError(f"invalid range for pause_count: ({lo}, {hi})")
        if self.f0_base_m[0] < 60.0 or self.f0_base_f[1] > 400.0:
            raise DataError("f0_base ranges must lie within [60, 400] Hz")
        if self.amplitude[1] > 1.0:
            raise DataError("amplitude range must lie within (0, 1]")

    @classmethod
    def from_dict(cls, data: dict) -> "GroupDistribution":
        try:
            return cls(**{k: tuple(v) for k, v in data.items()})
        except TypeError as e:
            raise DataError(f"bad group distribution: {e}") from None


@dataclass(frozen=True)
class CohortSpec:
    n_per_group: int = 10
    utterances_per_speaker: int = 2
    task: Task = Task.SENTENCES
    feature_dim: int = 16
    frames_per_second: float = 50.0
    n_target_speakers: int = 4
    target_seconds: float = 20.0
    distributions: Dict[Group, GroupDistribution] = field(default_factory=lambda: dict(GROUP_PRESETS))

    def __post_init__(self):
        object.__setattr__(self, "task", Task(self.task))
        if self.n_per_group < 2:
            raise DataError(f"need at least 2 speakers per group, got {self.n_per_group}")
        if self.utterances_per_speaker < 1:
            raise DataError("utterances_per_speaker must be >= 1")
        if set(self.distributions) != set(Group):
            raise DataError("distributions must define both HC and PD")


# PD-like speakers: higher jitter, more and longer pauses, reduced intonation
GROUP_PRESETS: Dict[Group, GroupDistribution] = {
    Group.HC: GroupDistribution(),
    Group.PD: GroupDistribution(
        f0_var=(4.0, 10.0),
        jitter_pct=(3.0, 5.0),
        pause_count=(2, 4),
        pause_dur=(0.35, 0.7),
    ),
}
