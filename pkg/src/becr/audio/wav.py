"""Minimal RIFF/WAVE reader and writer.

Reads PCM 16-bit and IEEE float 32-bit data (plain or WAVE_FORMAT_EXTENSIBLE),
one or two channels. The stdlib ``wave`` module rejects float data, hence the
hand-rolled chunk walk.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from ..errors import UnsupportedFormatError, WavParseError
from .base import AudioBuffer

FORMAT_PCM = 0x0001
FORMAT_FLOAT = 0x0003
FORMAT_EXTENSIBLE = 0xFFFE

_SUBFORMAT_TAIL = b"\x00\x00\x00\x00\x10\x00\x80\x00\x00\xaa\x00\x38\x9b\x71"


def _parse_fmt(body: bytes) -> tuple[int, int, int, int, int]:
    if len(body) < 16:
        raise WavParseError("fmt chunk shorter than 16 bytes")
    fmt, channels, rate, _byte_rate, block_align, bits = struct.unpack("<HHIIHH", body[:16])
    if fmt == FORMAT_EXTENSIBLE:
        if len(body) < 40:
            raise WavParseError("extensible fmt chunk shorter than 40 bytes")
        fmt = struct.unpack("<H", body[24:26])[0]
        if body[26:40] != _SUBFORMAT_TAIL:
            raise UnsupportedFormatError("unrecognized WAVE_FORMAT_EXTENSIBLE sub-format")
    return fmt, channels, rate, block_align, bits


def read_wav(path) -> tuple[np.ndarray, int]:
    """Decode a WAV file to a float64 ``(frames, channels)`` array and its sample rate."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 12:
        raise WavParseError(f"{path}: file too short for a RIFF header")
    if raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise UnsupportedFormatError(f"{path}: not a RIFF/WAVE file")

    fmt_info = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        chunk_id = raw[pos : pos + 4]
        size = struct.unpack("<I", raw[pos + 4 : pos + 8])[0]
        start = pos + 8
        end = start + size
        if end > len(raw):
            raise WavParseError(
                f"{path}: chunk {chunk_id!r} declares {size} bytes, only {len(raw) - start} present"
            )
        if chunk_id == b"fmt ":
            fmt_info = _parse_fmt(raw[start:end])
        elif chunk_id == b"data":
            data = raw[start:end]
        pos = end + (size & 1)
        if fmt_info is not None and data is not None:
            break

    if fmt_info is None:
        raise WavParseError(f"{path}: missing fmt chunk")
    if data is None:
        raise WavParseError(f"{path}: missing data chunk")

    fmt, channels, rate, block_align, bits = fmt_info
    if channels not in (1, 2):
        raise UnsupportedFormatError(f"{path}: {channels} channels (only mono/stereo supported)")
    if fmt == FORMAT_PCM and bits == 16:
        dtype, scale = np.dtype("<i2"), 1.0 / 32768.0
    elif fmt == FORMAT_FLOAT and bits == 32:
        dtype, scale = np.dtype("<f4"), 1.0
    else:
        raise UnsupportedFormatError(
            f"{path}: format tag 0x{fmt:04x} with {bits} bits per sample is not supported"
        )
    if rate == 0:
        raise WavParseError(f"{path}: sample rate is zero")
    if block_align != channels * dtype.itemsize:
        raise WavParseError(f"{path}: block align {block_align} inconsistent with format")
    if len(data) % block_align:
        raise WavParseError(f"{path}: data chunk ends mid-frame (truncated)")

    samples = np.frombuffer(data, dtype=dtype).astype(np.float64) * scale
    return samples.reshape(-1, channels), rate


def load_wav(path) -> AudioBuffer:
    """Load a WAV file as a mono buffer; stereo is averaged across channels."""
    samples, rate = read_wav(path)
    if samples.shape[0] == 0:
        raise WavParseError(f"{path}: no audio frames")
    return AudioBuffer(samples.mean(axis=1), rate)


def write_wav(path, samples, sample_rate: int, sample_format: str = "pcm16") -> None:
    """Write ``samples`` (1-D mono or ``(frames, channels)``) as a WAV file.

    ``pcm16`` scales by 32768 and clips to the int16 range; ``float32``
    stores the values as-is.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    channels = x.shape[1]
    if sample_format == "pcm16":
        payload = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2").tobytes()
        tag, width = FORMAT_PCM, 2
    elif sample_format == "float32":
        payload = x.astype("<f4").tobytes()
        tag, width = FORMAT_FLOAT, 4
    else:
        raise ValueError(f"unknown sample format {sample_format!r}")
    fmt = struct.pack(
        "<HHIIHH", tag, channels, sample_rate, sample_rate * channels * width,
        channels * width, 8 * width,
    )
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(payload)) + payload
    if len(payload) & 1:
        body += b"\x00"
    with open(os.fspath(path), "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", len(body)) + body)
