import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from voxstyle.audio import AudioBuffer
from voxstyle.errors import FormatError, UnsupportedFormatError
from voxstyle.wavio import read_wav, write_wav


def test_pcm16_negative_full_scale_exact(tmp_path):
    path = tmp_path / "a.wav"
    write_wav(AudioBuffer(np.array([-1.0, 0.0, 0.5]), 16000), path, codec="pcm16")
    back = read_wav(path)
    assert back.samples[0] == -1.0
    assert back.samples[1] == 0.0
    assert back.sample_rate == 16000


def test_pcm16_clips_above_full_scale(tmp_path):
    path = tmp_path / "a.wav"
    write_wav(AudioBuffer(np.array([1.5, -2.0]), 8000), path, codec="pcm16")
    back = read_wav(path)
    assert back.samples[0] == pytest.approx(32767 / 32768.0, abs=1e-9)  # ~0.99997
    assert back.samples[1] == -1.0


def test_float32_round_trip_lossless(tmp_path, rng):
    x = rng.standard_normal(321).astype(np.float32).astype(np.float64)
    path = tmp_path / "f.wav"
    write_wav(AudioBuffer(x, 44100), path, codec="float32")
    back = read_wav(path)
    assert back.sample_rate == 44100
    assert np.array_equal(back.samples, x)


@given(st.lists(st.floats(-1.0, 1.0, allow_nan=False, width=32), min_size=1, max_size=128))
@settings(max_examples=60, deadline=None)
def test_pcm16_quantization_bounded(tmp_path_factory, vals):
    path = tmp_path_factory.mktemp("wav") / "q.wav"
    x = np.array(vals)
    write_wav(AudioBuffer(x, 8000), path, codec="pcm16")
    back = read_wav(path)
    assert len(back.samples) == len(x)
    # round-to-nearest at step 1/32768, plus the clip at +32767
    assert np.max(np.abs(back.samples - np.clip(x, -1.0, 32767 / 32768.0))) <= 0.5 / 32768.0 + 1e-12


def test_multichannel_downmix(tmp_path):
    # hand-build a 2-channel PCM16 file: L = 0.5, R = -0.5 -> mean 0
    frames = struct.pack("<4h", 16384, -16384, 8192, 8192)
    fmt = struct.pack("<HHIIHH", 1, 2, 8000, 8000 * 4, 4, 16)
    body = b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(frames)) + frames
    blob = b"RIFF" + struct.pack("<I", 4 + len(body)) + b"WAVE" + body
    path = tmp_path / "st.wav"
    path.write_bytes(blob)
    back = read_wav(path)
    assert_allclose(back.samples, [0.0, 0.25], atol=1e-12)


def test_unknown_chunks_are_skipped(tmp_path):
    path = tmp_path / "x.wav"
    write_wav(AudioBuffer(np.array([0.25]), 8000), path, codec="pcm16")
    raw = path.read_bytes()
    # splice a junk chunk (odd size, so padding matters) before fmt
    junk = b"JUNK" + struct.pack("<I", 3) + b"abc\x00"
    patched = raw[:12] + junk + raw[12:]
    patched = patched[:4] + struct.pack("<I", len(patched) - 8) + patched[8:]
    path.write_bytes(patched)
    back = read_wav(path)
    assert back.samples[0] == pytest.approx(0.25, abs=1e-4)


def test_not_riff_rejected(tmp_path):
    path = tmp_path / "bad.wav"
    path.write_bytes(b"OggS" + b"\x00" * 40)
    with pytest.raises(FormatError):
        read_wav(path)


def test_missing_data_chunk_rejected(tmp_path):
    fmt = struct.pack("<HHIIHH", 1, 1, 8000, 16000, 2, 16)
    body = b"fmt " + struct.pack("<I", len(fmt)) + fmt
    blob = b"RIFF" + struct.pack("<I", 4 + len(body)) + b"WAVE" + body
    path = tmp_path / "nd.wav"
    path.write_bytes(blob)
    with pytest.raises(FormatError):
        read_wav(path)


def test_truncated_data_chunk_rejected(tmp_path):
    path = tmp_path / "t.wav"
    write_wav(AudioBuffer(np.zeros(100), 8000), path, codec="pcm16")
    raw = path.read_bytes()
    path.write_bytes(raw[:-50])
    with pytest.raises(FormatError):
        read_wav(path)


def test_unsupported_codec_rejected(tmp_path):
    fmt = struct.pack("<HHIIHH", 7, 1, 8000, 8000, 1, 8)  # mu-law
    body = b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", 2) + b"\x00\x00"
    blob = b"RIFF" + struct.pack("<I", 4 + len(body)) + b"WAVE" + body
    path = tmp_path / "mu.wav"
    path.write_bytes(blob)
    with pytest.raises(UnsupportedFormatError):
        read_wav(path)


def test_bad_codec_name_rejected(tmp_path):
    with pytest.raises(ValueError):
        write_wav(AudioBuffer(np.zeros(4), 8000), tmp_path / "x.wav", codec="mp3")


def test_odd_payload_is_padded(tmp_path):
    # 1 sample of pcm16 -> 2 bytes, even; use a junk-free file and check RIFF size
    path = tmp_path / "p.wav"
    write_wav(AudioBuffer(np.array([0.1, 0.2, 0.3]), 8000), path, codec="pcm16")
    raw = path.read_bytes()
    (riff_size,) = struct.unpack_from("<I", raw, 4)
    assert riff_size == len(raw) - 8
