"""Services for corpus I/O, conversion, feature extraction and evaluation."""

from .manifest_loader import ManifestLoader
from .fmat_io import FmatIO
from .wav_io import WavIO
from .knn_converter import KnnConverter
from .prosody_extractor import ProsodyExtractor
from .distortion_analyzer import DistortionAnalyzer
from .privacy_scorer import PrivacyScorer
from .utility_scorer import UtilityScorer
from .synthesizer import Synthesizer
from .report_writer import ReportWriter
