"""Tests for WAV reading and writing."""

import numpy as np
import pytest
import soundfile as sf

from src.models.utterance import Waveform
from src.services.wav_io import WavIO
from src.utils.errors import DataError, FormatError


class TestWavIO:
    """Tests for the WavIO service."""

    def test_pcm16_scaled_by_32768(self, tmp_path):
        """16-bit samples should map to value / 32768."""
        path = tmp_path / "a.wav"
        sf.write(str(path), np.array([0, 16384, -32768, 32767], dtype=np.int16), 8000, subtype="PCM_16")
        w = WavIO.read(path)
        assert w.sample_rate == 8000
        np.testing.assert_allclose(w.samples, [0.0, 0.5, -1.0, 32767 / 32768])

    def test_stereo_downmixed_by_mean(self, tmp_path):
        """Two channels should average into one."""
        path = tmp_path / "s.wav"
        data = np.array([[16384, 0], [0, -16384], [8192, 8192]], dtype=np.int16)
        sf.write(str(path), data, 16000, subtype="PCM_16")
        np.testing.assert_allclose(WavIO.read(path).samples, [0.25, -0.25, 0.25])

    def test_float_input_clipped(self, tmp_path):
        """Float samples beyond ±1 should be clipped."""
        path = tmp_path / "f.wav"
        sf.write(str(path), np.array([1.5, -2.0, 0.25], dtype=np.float32), 16000, subtype="FLOAT")
        np.testing.assert_allclose(WavIO.read(path).samples, [1.0, -1.0, 0.25])

    def test_unsupported_subtype(self, tmp_path):
        """24-bit PCM should be rejected."""
        path = tmp_path / "p24.wav"
        sf.write(str(path), np.zeros(16), 16000, subtype="PCM_24")
        with pytest.raises(FormatError, match="unsupported"):
            WavIO.read(path)

    def test_too_many_channels(self, tmp_path):
        """More than two channels should be rejected."""
        path = tmp_path / "c3.wav"
        sf.write(str(path), np.zeros((16, 3), dtype=np.int16), 16000, subtype="PCM_16")
        with pytest.raises(FormatError, match="channels"):
            WavIO.read(path)

    def test_not_a_wav(self, tmp_path):
        """Arbitrary bytes should raise FormatError."""
        path = tmp_path / "junk.wav"
        path.write_bytes(b"this is not audio at all")
        with pytest.raises(FormatError):
            WavIO.read(path)

    def test_missing_file(self, tmp_path):
        """A missing path should raise DataError."""
        with pytest.raises(DataError):
            WavIO.read(tmp_path / "absent.wav")

    def test_write_pcm16(self, tmp_path):
        """Written waveforms should read back within one quantization step."""
        samples = np.linspace(-0.9, 0.9, 101)
        path = WavIO.write(Waveform(samples=samples, sample_rate=16000), tmp_path / "out" / "w.wav")
        assert sf.info(str(path)).subtype == "PCM_16"
        np.testing.assert_allclose(WavIO.read(path).samples, samples, atol=1.0 / 32768)


class TestWaveform:
    """Tests for Waveform validation."""

    @pytest.mark.parametrize("samples, rate", [
        (np.array([]), 16000),
        (np.array([0.0, 1.5]), 16000),
        (np.array([0.0, np.nan]), 16000),
        (np.zeros((2, 2)), 16000),
        (np.zeros(4), 0),
    ])
    def test_invalid_waveforms(self, samples, rate):
        """Empty, out-of-range, non-finite or non-mono input should be rejected."""
        with pytest.raises(DataError):
            Waveform(samples=samples, sample_rate=rate)

    def test_duration(self):
        """duration_s should be samples over rate."""
        assert Waveform(samples=np.zeros(8000), sample_rate=16000).duration_s == 0.5
