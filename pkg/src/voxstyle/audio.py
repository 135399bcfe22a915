"""Audio containers and framing/overlap-add primitives.

Everything downstream works on mono float64 sample arrays in a nominal
[-1, 1] range. The hann window here is the periodic variant
``0.5 - 0.5*cos(2*pi*n/N)``, which overlap-adds to an exact constant at
hop = frame_len/k for any integer k >= 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import as_float_vector

WINDOW_KINDS = ("rectangular", "hann")


@dataclass(frozen=True)
class AudioBuffer:
    """Mono sample sequence plus its sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = as_float_vector(self.samples, "samples")
        object.__setattr__(self, "samples", samples)
        if not (isinstance(self.sample_rate, (int, np.integer)) and self.sample_rate > 0):
            raise ValueError(f"sample_rate must be a positive integer, got {self.sample_rate!r}")
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def with_samples(self, samples) -> "AudioBuffer":
        """New buffer with the same rate and different samples."""
        return AudioBuffer(np.asarray(samples, dtype=np.float64), self.sample_rate)


@dataclass(frozen=True)
class FrameSpec:
    """Analysis framing: frame length and hop in samples, window kind."""

    frame_len: int
    hop: int
    window: str = "hann"

    def __post_init__(self):
        if self.frame_len <= 0:
            raise ValueError(f"frame_len must be positive, got {self.frame_len}")
        if not 0 < self.hop <= self.frame_len:
            raise ValueError(f"hop must satisfy 0 < hop <= frame_len, got hop={self.hop}")
        if self.window not in WINDOW_KINDS:
            raise ValueError(f"window must be one of {WINDOW_KINDS}, got {self.window!r}")

    def window_values(self) -> np.ndarray:
        """The window as a length-frame_len array (periodic hann)."""
        if self.window == "rectangular":
            return np.ones(self.frame_len)
        n = np.arange(self.frame_len)
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / self.frame_len)

    @classmethod
    def from_milliseconds(cls, sample_rate: int, frame_ms: float = 25.0,
                          hop_ms: float = 10.0, window: str = "hann") -> "FrameSpec":
        """Framing from durations; 25/10 ms at 24 kHz gives 600/240 samples."""
        return cls(
            frame_len=int(round(frame_ms * sample_rate / 1000.0)),
            hop=int(round(hop_ms * sample_rate / 1000.0)),
            window=window,
        )


def frame_count(n_samples: int, spec: FrameSpec) -> int:
    """Number of full frames: 0 if the signal is shorter than one frame."""
    if n_samples < spec.frame_len:
        return 0
    return (n_samples - spec.frame_len) // spec.hop + 1


def frames(buffer: AudioBuffer, spec: FrameSpec) -> np.ndarray:
    """Windowed analysis frames, shape (n_frames, frame_len).

    Frame i covers samples [i*hop, i*hop + frame_len); the window is applied
    pointwise. A signal shorter than one frame yields an empty (0, frame_len)
    array.
    """
    x = buffer.samples
    n = frame_count(len(x), spec)
    out = np.empty((n, spec.frame_len))
    for i in range(n):
        out[i] = x[i * spec.hop: i * spec.hop + spec.frame_len]
    return out * spec.window_values()


def overlap_add(frame_seq, spec: FrameSpec, synthesis_window: bool = False) -> np.ndarray:
    """Reassemble frames at the spec's hop.

    With ``synthesis_window=False`` frames are summed as given; hann analysis
    windowing at hop = frame_len/2 then reconstructs the interior of the
    original signal exactly. With ``synthesis_window=True`` each frame is
    windowed again and the sum is divided by the accumulated squared window,
    which undoes an analysis window regardless of overlap factor.
    """
    frame_seq = np.asarray(frame_seq, dtype=np.float64)
    if frame_seq.ndim != 2:
        raise ValueError(f"frames must be a 2-D array, got shape {frame_seq.shape}")
    n, length = frame_seq.shape
    if n == 0:
        return np.zeros(0)
    if length != spec.frame_len:
        raise ValueError(f"frame length {length} does not match spec frame_len {spec.frame_len}")

    out_len = (n - 1) * spec.hop + spec.frame_len
    out = np.zeros(out_len)
    if not synthesis_window:
        for i in range(n):
            out[i * spec.hop: i * spec.hop + spec.frame_len] += frame_seq[i]
        return out

    w = spec.window_values()
    wsum = np.zeros(out_len)
    for i in range(n):
        sl = slice(i * spec.hop, i * spec.hop + spec.frame_len)
        out[sl] += frame_seq[i] * w
        wsum[sl] += w * w
    return out / np.maximum(wsum, 1e-12)


def rms(buffer) -> float:
    """Root mean square; 0.0 for an empty buffer."""
    x = buffer.samples if isinstance(buffer, AudioBuffer) else np.asarray(buffer, dtype=np.float64)
    if x.size == 0:
        return 0.0
    return float(np.sqrt(np.mean(x * x)))
