"""Pytest configuration and shared fixtures."""

import numpy as np
import pytest

from src.models.utterance import FrameMatrix, Gender, Group, Task, UtteranceRecord, Waveform


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "slow: end-to-end experiment on a synthetic cohort"
    )


@pytest.fixture
def rng():
    """Seeded generator so every test run draws the same numbers."""
    return np.random.default_rng(1234)


def make_record(utt_id, speaker, group=Group.HC, gender=Gender.M, task=Task.SENTENCES, transcript=None, **paths):
    """Manifest record with a feature path unless one is given."""
    if not paths:
        paths = {"feature_path": f"features/{utt_id}.fmat"}
    return UtteranceRecord(
        id=utt_id, speaker=speaker, gender=gender, group=group, task=task, transcript=transcript, **paths
    )


def sine(freq=150.0, seconds=1.0, amplitude=0.5, sample_rate=16000):
    t = np.arange(int(seconds * sample_rate)) / sample_rate
    return Waveform(samples=amplitude * np.sin(2 * np.pi * freq * t), sample_rate=sample_rate)


def frames(array, hop_s=0.02):
    return FrameMatrix(frames=np.asarray(array, dtype=np.float32), hop_s=hop_s)
