"""
FMAT (SPFM) binary I/O for frame matrices.

Layout, all little-endian: magic "SPFM", version u32, T u32, D u32, hop_s f32,
then T·D float32 values in row-major order.
"""

import struct
from pathlib import Path

import numpy as np

from ..models.utterance import FrameMatrix
from ..utils.constants import FMAT_HEADER_SIZE, FMAT_MAGIC, FMAT_VERSION
from ..utils.errors import DataError, FormatError

_HEADER = struct.Struct("<4sIIIf")


class FmatIO:
    """Reader/writer for .fmat files."""

    EXTENSION = ".fmat"

    @classmethod
    def write(cls, matrix: FrameMatrix, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        t, d = matrix.frames.shape
        header = _HEADER.pack(FMAT_MAGIC, FMAT_VERSION, t, d, matrix.hop_s)
        payload = np.ascontiguousarray(matrix.frames, dtype="<f4").tobytes(order="C")
        path.write_bytes(header + payload)
        return path

    @classmethod
    def read(cls, path) -> FrameMatrix:
        """
        Read a frame matrix.

        Raises:
            FormatError: bad magic, unsupported version, truncated payload or
                non-finite values.
        """
        path = Path(path)
        if not path.is_file():
            raise DataError(f"feature file not found: {path}")
        data = path.read_bytes()
        if len(data) < FMAT_HEADER_SIZE:
            raise FormatError(f"{path}: file shorter than the {FMAT_HEADER_SIZE}-byte header")

        magic, version, t, d, hop_s = _HEADER.unpack_from(data)
        if magic != FMAT_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        if version != FMAT_VERSION:
            raise FormatError(f"{path}: unsupported version {version}")

        expected = t * d * 4
        actual = len(data) - FMAT_HEADER_SIZE
        if actual != expected:
            raise FormatError(f"{path}: truncated payload, expected {expected} bytes, found {actual}")

        frames = np.frombuffer(data, dtype="<f4", offset=FMAT_HEADER_SIZE).reshape(t, d).astype(np.float32)
        if not np.all(np.isfinite(frames)):
            raise FormatError(f"{path}: non-finite values in payload")
        try:
            return FrameMatrix(frames=frames, hop_s=float(hop_s))
        except DataError as e:
            raise FormatError(f"{path}: {e}") from None
