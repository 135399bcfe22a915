"""Minimal RIFF/WAVE reader and writer.

Supports the two codecs the toolkit emits: PCM16 (format tag 1) and IEEE
float32 (format tag 3), little-endian. Reading downmixes multichannel files
by averaging; PCM16 samples are scaled by 1/32768. Writing clips PCM16 to
[-1, 1] and is bit-exact for float32, so a write/read round trip is exact
for float32 and within 1/32768 for PCM16.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .audio import AudioBuffer
from .errors import FormatError, UnsupportedFormatError

_TAG_PCM = 1
_TAG_IEEE_FLOAT = 3
_TAG_EXTENSIBLE = 0xFFFE


def read_wav(path) -> AudioBuffer:
    """Read a WAV file into a mono AudioBuffer with samples in [-1, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()

    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise FormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8: pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise FormatError(f"{path}: truncated fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            if len(body) < chunk_size:
                raise FormatError(f"{path}: data chunk shorter than declared")
            payload = body
        # chunks are word-aligned
        pos += 8 + chunk_size + (chunk_size & 1)

    if fmt is None:
        raise FormatError(f"{path}: missing fmt chunk")
    if payload is None:
        raise FormatError(f"{path}: missing data chunk")

    tag, n_channels, sample_rate, _byte_rate, _block_align, bits = fmt
    if tag == _TAG_EXTENSIBLE:
        raise UnsupportedFormatError(f"{path}: WAVE_FORMAT_EXTENSIBLE is not supported")
    if n_channels < 1:
        raise FormatError(f"{path}: invalid channel count {n_channels}")

    if tag == _TAG_PCM and bits == 16:
        raw = np.frombuffer(payload[: len(payload) - len(payload) % 2], dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif tag == _TAG_IEEE_FLOAT and bits == 32:
        raw = np.frombuffer(payload[: len(payload) - len(payload) % 4], dtype="<f4")
        samples = raw.astype(np.float64)
    else:
        raise UnsupportedFormatError(
            f"{path}: unsupported codec (format tag {tag}, {bits} bits)"
        )

    if n_channels > 1:
        usable = len(samples) - len(samples) % n_channels
        samples = samples[:usable].reshape(-1, n_channels).mean(axis=1)

    return AudioBuffer(samples, int(sample_rate))


def write_wav(buffer: AudioBuffer, path, codec: str = "pcm16") -> None:
    """Write an AudioBuffer as a mono WAV file.

    codec: "pcm16" (values clipped to [-1, 1], scaled by 32768 so that -1.0
    round-trips exactly) or "float32" (lossless).
    """
    if codec == "pcm16":
        quantized = np.clip(np.round(buffer.samples * 32768.0), -32768, 32767)
        payload = quantized.astype("<i2").tobytes()
        tag, bits = _TAG_PCM, 16
    elif codec == "float32":
        payload = buffer.samples.astype("<f4").tobytes()
        tag, bits = _TAG_IEEE_FLOAT, 32
    else:
        raise ValueError(f"codec must be 'pcm16' or 'float32', got {codec!r}")

    block_align = bits // 8
    byte_rate = buffer.sample_rate * block_align
    fmt_chunk = struct.pack("<HHIIHH", tag, 1, buffer.sample_rate, byte_rate, block_align, bits)

    chunks = [b"fmt ", struct.pack("<I", len(fmt_chunk)), fmt_chunk]
    if tag == _TAG_IEEE_FLOAT:
        chunks += [b"fact", struct.pack("<I", 4), struct.pack("<I", len(buffer.samples))]
    chunks += [b"data", struct.pack("<I", len(payload)), payload]
    if len(payload) & 1:
        chunks.append(b"\x00")

    body = b"".join(chunks)
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", 4 + len(body)) + b"WAVE" + body)
        fh.flush()
        os.fsync(fh.fileno())
