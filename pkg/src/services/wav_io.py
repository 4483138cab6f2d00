"""
WAV reading and writing via soundfile.

Only uncompressed PCM 16-bit and IEEE float 32-bit files are accepted.
"""

import logging
from pathlib import Path

import numpy as np
import soundfile as sf

from ..models.utterance import Waveform
from ..utils.errors import DataError, FormatError

logger = logging.getLogger(__name__)


class WavIO:
    """Service for loading and saving mono waveforms."""

    SUPPORTED_SUBTYPES = {"PCM_16", "FLOAT"}

    @classmethod
    def read(cls, path) -> Waveform:
        """
        Read a WAV file as a mono waveform.

        Stereo input is downmixed by the channel mean; 16-bit samples are
        scaled by 1/32768.

        Raises:
            FormatError: not a WAV file, unsupported encoding, more than two
                channels or an empty data chunk.
        """
        path = Path(path)
        if not path.is_file():
            raise DataError(f"audio file not found: {path}")
        try:
            info = sf.info(str(path))
        except RuntimeError as e:
            raise FormatError(f"{path}: unreadable audio ({e})") from None

        if info.format != "WAV" or info.subtype not in cls.SUPPORTED_SUBTYPES:
            raise FormatError(f"{path}: unsupported encoding {info.format}/{info.subtype}")
        if info.channels not in (1, 2):
            raise FormatError(f"{path}: expected mono or stereo, found {info.channels} channels")
        if info.frames == 0:
            raise FormatError(f"{path}: zero-length data chunk")

        data, rate = sf.read(str(path), dtype="float64", always_2d=True)
        samples = data.mean(axis=1)
        if info.subtype == "FLOAT":
            samples = np.clip(samples, -1.0, 1.0)
        logger.debug("Read %s: %d samples at %d Hz", path.name, samples.size, rate)
        return Waveform(samples=samples, sample_rate=rate)

    @classmethod
    def write(cls, waveform: Waveform, path, subtype: str = "PCM_16") -> Path:
        if subtype not in cls.SUPPORTED_SUBTYPES:
            raise FormatError(f"unsupported output subtype {subtype}")
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        sf.write(str(path), waveform.samples, waveform.sample_rate, subtype=subtype, format="WAV")
        return path
