"""STFT, mel filterbank, log-mel features and mel-cepstra.

Conventions fixed here (and relied on by the tests):

* Power spectra are one-sided |rfft|^2 with no bin doubling; per frame the
  identity ``sum_k c_k * power[k] == fft_size * sum_n frame[n]^2`` holds,
  where c_k is 2 except at DC and Nyquist (c_k = 1).
* Mel scale is the HTK form ``mel(f) = 2595 * log10(1 + f/700)``.
* log-mel uses the natural log of floored filterbank outputs.
* Cepstra use the orthonormal DCT-II.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .audio import AudioBuffer, FrameSpec, frames
from .validation import as_float_matrix


@dataclass(frozen=True)
class Spectrogram:
    """One-sided power spectrogram, shape (n_frames, fft_size//2 + 1)."""

    values: np.ndarray
    bin_hz: float
    spec: FrameSpec

    def __post_init__(self):
        values = as_float_matrix(self.values, "values")
        if values.size and values.min() < 0:
            raise ValueError("power values must be nonnegative")
        object.__setattr__(self, "values", values)

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def n_bins(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class MelBank:
    """Triangular mel filterbank, weights shape (n_mels, n_bins)."""

    weights: np.ndarray
    f_min: float
    f_max: float
    sample_rate: int
    fft_size: int


@dataclass(frozen=True)
class MelFeatures:
    """log-mel energies and (optionally) their cepstral coefficients."""

    log_mel: np.ndarray
    mel_cepstra: np.ndarray | None = None


def hz_to_mel(f) -> np.ndarray:
    """HTK mel scale; hz_to_mel(700) = 2595*log10(2)."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m) -> np.ndarray:
    return 700.0 * (np.power(10.0, np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def stft(buffer: AudioBuffer, spec: FrameSpec, fft_size: int) -> Spectrogram:
    """One-sided power spectrogram of zero-padded windowed frames."""
    if fft_size < spec.frame_len:
        raise ValueError(f"fft_size {fft_size} must be >= frame_len {spec.frame_len}")
    framed = frames(buffer, spec)
    spectrum = np.fft.rfft(framed, n=fft_size, axis=1)
    power = (spectrum.real ** 2 + spectrum.imag ** 2)
    return Spectrogram(power, bin_hz=buffer.sample_rate / fft_size, spec=spec)


def parseval_weights(n_bins: int) -> np.ndarray:
    """Per-bin weights that make one-sided power sum to the full-FFT energy."""
    w = np.full(n_bins, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return w


def mel_bank(n_mels: int, fft_size: int, sample_rate: int,
             f_min: float = 0.0, f_max: float | None = None) -> MelBank:
    """Triangular filters with centers equally spaced on the mel scale."""
    if f_max is None:
        f_max = sample_rate / 2.0
    if n_mels < 1:
        raise ValueError(f"n_mels must be >= 1, got {n_mels}")
    if not 0 <= f_min < f_max <= sample_rate / 2.0:
        raise ValueError(
            f"need 0 <= f_min < f_max <= Nyquist, got f_min={f_min}, f_max={f_max}"
        )

    n_bins = fft_size // 2 + 1
    bin_freqs = np.arange(n_bins) * (sample_rate / fft_size)
    mel_edges = np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2)
    hz_edges = mel_to_hz(mel_edges)

    weights = np.zeros((n_mels, n_bins))
    for m in range(n_mels):
        lo, center, hi = hz_edges[m], hz_edges[m + 1], hz_edges[m + 2]
        rising = (bin_freqs - lo) / max(center - lo, 1e-12)
        falling = (hi - bin_freqs) / max(hi - center, 1e-12)
        weights[m] = np.maximum(0.0, np.minimum(rising, falling))
    return MelBank(weights, float(f_min), float(f_max), sample_rate, fft_size)


def log_mel(spec: Spectrogram, bank: MelBank, floor: float = 1e-10) -> MelFeatures:
    """Natural log of floored filterbank energies, shape (n_frames, n_mels)."""
    if floor <= 0:
        raise ValueError(f"floor must be positive, got {floor}")
    if bank.weights.shape[1] != spec.n_bins:
        raise ValueError(
            f"bank built for {bank.weights.shape[1]} bins, spectrogram has {spec.n_bins}"
        )
    energies = spec.values @ bank.weights.T
    return MelFeatures(log_mel=np.log(np.maximum(energies, floor)))


def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II matrix, rows indexed by coefficient: M @ M.T = I."""
    k = np.arange(n)[:, None]
    grid = np.pi * (2 * np.arange(n)[None, :] + 1) * k / (2 * n)
    mat = np.cos(grid) * np.sqrt(2.0 / n)
    mat[0] = np.sqrt(1.0 / n)
    return mat


def mel_cepstra(mel: MelFeatures, n_ceps: int) -> MelFeatures:
    """First n_ceps orthonormal DCT-II coefficients of each log-mel row."""
    n_mels = mel.log_mel.shape[1]
    if n_ceps > n_mels:
        raise ValueError(f"n_ceps {n_ceps} must be <= n_mels {n_mels}")
    dct = dct_matrix(n_mels)[:n_ceps]
    return MelFeatures(log_mel=mel.log_mel, mel_cepstra=mel.log_mel @ dct.T)


def spectral_centroid(spec: Spectrogram) -> np.ndarray:
    """Per-frame power-weighted mean frequency (Hz); 0 for silent frames."""
    freqs = np.arange(spec.n_bins) * spec.bin_hz
    total = spec.values.sum(axis=1)
    weighted = spec.values @ freqs
    return np.where(total > 0, weighted / np.maximum(total, 1e-300), 0.0)


def features_to_csv(matrix, path, prefix: str) -> None:
    """Write a (n_frames, n_cols) feature matrix as CSV with named columns."""
    matrix = as_float_matrix(matrix, "matrix")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"{prefix}_{i}" for i in range(matrix.shape[1])])
        for row in matrix:
            writer.writerow([repr(float(v)) for v in row])
