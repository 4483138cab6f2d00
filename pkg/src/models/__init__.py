"""Data models for corpora, acoustic features, scores and synthetic cohorts."""

from .utterance import Gender, Group, Task, UtteranceRecord, FrameMatrix, Waveform
from .target_pool import SelectionPolicy, ConversionMode, ConversionConfig, TargetPool
from .acoustics import ProsodyConfig, F0Track, PauseSegmentation, JitterStats, AcousticSummary, FEATURE_NAMES
from .scores import ProtocolConfig, UtteranceEmbedding, Trial, SpeakerSplit, TrialProtocol, ScoreSet, EERResult, TrialScores
from .reports import DistortionRow, DistortionReport, ProbeConfig, CVConfig, F1Result, FoldScore, CVReport, WERResult
from .synth_types import UtteranceSpec, PolicyKind, DegradationPolicy, GroupDistribution, CohortSpec, parse_policy
