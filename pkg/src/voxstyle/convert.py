"""Style conversion pipelines: whisperization, intelligibility enhancement,
and SNR-controlled noise mixing.

Whisperization runs frame-wise source-filter processing: each frame is LPC
analyzed, its excitation replaced by white Gaussian noise carrying the same
RMS, its resonances shifted/broadened in the pole domain, and the result
reassembled with power-complementary (sqrt-hann) overlap-add so that the
injected excitation energy survives the overlap. A geometric-mean-neutral
shelving filter then tilts the overall spectrum.

The enhancer is a static spectral-shaping + dynamic-range-compression chain:
a linear-phase FIR boosts the 1-4 kHz region and tilts the spectrum up
above 1 kHz, then an envelope-follower compressor reduces level contrast by
the configured ratio.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import bilinear, fftconvolve, lfilter
from sklearn.base import BaseEstimator, TransformerMixin

from .audio import AudioBuffer, FrameSpec, rms
from .errors import NumericError
from .lpc import (
    de_emphasize,
    default_order,
    inverse_filter,
    levinson,
    modify_formants,
    autocorrelate,
    poles,
    pre_emphasize,
    reconstruct,
    synthesis_filter,
)
from .validation import check_same_rate


@dataclass(frozen=True)
class WhisperConfig:
    """Knobs for the whisperization pipeline.

    frame_spec=None derives 25 ms frames with 50% hann overlap from the
    input rate; lpc_order=None uses one pole pair per kHz plus two. The
    noise generator is a PCG64 stream seeded per call, so a fixed seed gives
    byte-identical output.
    """

    frame_spec: FrameSpec | None = None
    lpc_order: int | None = None
    seed: int = 0
    freq_scale: float = 1.15
    bw_exponent: float = 1.2
    freq_cutoff: float = 2000.0
    tilt_db_per_octave: float = 3.0
    pre_emphasis: bool = True

    def resolve_frame_spec(self, sample_rate: int) -> FrameSpec:
        if self.frame_spec is not None:
            return self.frame_spec
        frame_len = int(round(0.025 * sample_rate))
        return FrameSpec(frame_len=frame_len, hop=max(frame_len // 2, 1), window="hann")

    def resolve_order(self, sample_rate: int) -> int:
        return self.lpc_order if self.lpc_order is not None else default_order(sample_rate)


@dataclass(frozen=True)
class EnhanceConfig:
    """Spectral shaping band/tilt and compressor settings.

    attack_ms = release_ms = 0 makes the envelope follower instantaneous
    (static compression). rms_match rescales the result to the input RMS.
    """

    band_lo: float = 1000.0
    band_hi: float = 4000.0
    band_boost_db: float = 6.0
    tilt_db_per_octave: float = 2.0
    tilt_corner_hz: float = 1000.0
    ratio: float = 2.0
    attack_ms: float = 5.0
    release_ms: float = 50.0
    rms_match: bool = True
    fir_taps: int = 257

    def __post_init__(self):
        if self.ratio < 1:
            raise ValueError(f"ratio must be >= 1, got {self.ratio}")
        if not 0 < self.band_lo < self.band_hi:
            raise ValueError("band edges must be increasing and positive")
        if self.fir_taps % 2 == 0:
            raise ValueError("fir_taps must be odd for a zero-delay linear-phase filter")


@dataclass(frozen=True)
class NoiseMixSpec:
    """Target SNR and the masker to mix in (looped/truncated to length)."""

    snr_db: float
    noise: AudioBuffer

    def __post_init__(self):
        if rms(self.noise) <= 0:
            raise ValueError("noise must be nonsilent (RMS > 0)")


def tilt_filter(tilt_db_per_octave: float, sample_rate: int,
                f_lo: float = 300.0, f_hi: float | None = None):
    """First-order shelving filter approximating a dB/octave tilt.

    The shelf's end-to-end gain matches the requested tilt integrated over
    [f_lo, f_hi]; coefficients are normalized so b[0] = a[0] = 1, which makes
    the filter geometric-mean neutral (it rotates the spectrum without
    changing the whitened-residual energy).
    """
    if f_hi is None:
        f_hi = min(8000.0, 0.45 * sample_rate)
    if tilt_db_per_octave == 0.0:
        return np.array([1.0]), np.array([1.0])
    total_db = tilt_db_per_octave * np.log2(f_hi / f_lo)
    ratio = 10.0 ** (total_db / 20.0)
    center = np.sqrt(f_lo * f_hi)
    w_zero = 2.0 * np.pi * center / np.sqrt(ratio)
    w_pole = 2.0 * np.pi * center * np.sqrt(ratio)
    b, a = bilinear([1.0 / w_zero, 1.0], [1.0 / w_pole, 1.0], fs=sample_rate)
    return b / b[0], a / a[0]


def _power_overlap_add(synth_frames, spec: FrameSpec, out_len: int) -> np.ndarray:
    """Overlap-add with sqrt-window weights and local power normalization.

    For frames carrying mutually independent noise this preserves the local
    signal power exactly (in expectation) at any overlap factor, including
    the partially covered edges.
    """
    w = spec.window_values()
    sqrt_w = np.sqrt(w)
    total_len = (len(synth_frames) - 1) * spec.hop + spec.frame_len
    acc = np.zeros(total_len)
    wsum = np.zeros(total_len)
    for i, frame in enumerate(synth_frames):
        sl = slice(i * spec.hop, i * spec.hop + spec.frame_len)
        acc[sl] += frame * sqrt_w
        wsum[sl] += w
    out = acc / np.sqrt(np.maximum(wsum, 1e-12))
    out[wsum <= 1e-12] = 0.0
    return out[:out_len]


def whisperize(speech: AudioBuffer, cfg: WhisperConfig | None = None) -> AudioBuffer:
    """Convert voiced speech to whisper-like unvoiced speech.

    Per frame: LPC analysis, excitation RMS measured, excitation replaced by
    seeded white Gaussian noise scaled to that exact RMS, resonance
    frequencies below the cutoff raised and all resonance bandwidths
    broadened, then all-pole resynthesis. Output length equals input length;
    silent frames stay silent.
    """
    cfg = cfg or WhisperConfig()
    if len(speech) == 0:
        raise ValueError("speech must be nonempty")
    fs = speech.sample_rate
    spec = cfg.resolve_frame_spec(fs)
    order = cfg.resolve_order(fs)
    if order >= spec.frame_len:
        raise ValueError(f"lpc order {order} must be < frame_len {spec.frame_len}")

    x = pre_emphasize(speech.samples) if cfg.pre_emphasis else speech.samples
    n_in = len(x)
    n_frames = max(1, -(-(max(n_in - spec.frame_len, 0)) // spec.hop) + 1)
    padded_len = (n_frames - 1) * spec.hop + spec.frame_len
    x = np.concatenate([x, np.zeros(padded_len - n_in)])

    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    window = spec.window_values()
    synth = np.empty((n_frames, spec.frame_len))
    for i in range(n_frames):
        start = i * spec.hop
        raw = x[start: start + spec.frame_len]
        r = autocorrelate(raw * window, order)
        r[0] *= 1.0 + 1e-6
        solution = levinson(r, order)
        noise = rng.standard_normal(spec.frame_len)
        if solution.degenerate:
            synth[i] = 0.0
            continue
        history = x[max(0, start - order): start]
        if len(history) < order:
            history = np.concatenate([np.zeros(order - len(history)), history])
        residual_rms = rms(inverse_filter(raw, solution.coeffs, history=history))
        noise_rms = rms(noise)
        noise *= residual_rms / noise_rms if noise_rms > 0 else 0.0
        try:
            modified = modify_formants(poles(solution.coeffs), cfg.freq_scale,
                                       cfg.bw_exponent, cfg.freq_cutoff, fs)
        except NumericError as exc:
            raise NumericError(f"frame {i}: {exc}") from exc
        synth[i] = synthesis_filter(noise, reconstruct(modified), warn_unstable=False)

    out = _power_overlap_add(synth, spec, n_in)
    if cfg.tilt_db_per_octave != 0.0:
        b, a = tilt_filter(cfg.tilt_db_per_octave, fs)
        out = lfilter(b, a, out)
    if cfg.pre_emphasis:
        out = de_emphasize(out)
    if out.size and not np.all(np.isfinite(out)):
        raise NumericError("whisperization produced non-finite samples")
    return AudioBuffer(out, fs)


def _shaping_fir(cfg: EnhanceConfig, sample_rate: int) -> np.ndarray:
    """Linear-phase FIR matching the band-boost + tilt target magnitude."""
    grid_size = 4096
    freqs = np.fft.rfftfreq(grid_size, d=1.0 / sample_rate)
    gain_db = np.zeros_like(freqs)
    in_band = (freqs >= cfg.band_lo) & (freqs <= cfg.band_hi)
    gain_db[in_band] += cfg.band_boost_db
    above = freqs > cfg.tilt_corner_hz
    gain_db[above] += cfg.tilt_db_per_octave * np.log2(freqs[above] / cfg.tilt_corner_hz)
    amplitude = 10.0 ** (gain_db / 20.0)

    impulse = np.fft.irfft(amplitude, n=grid_size)
    impulse = np.roll(impulse, cfg.fir_taps // 2)[: cfg.fir_taps]
    return impulse * np.hamming(cfg.fir_taps)


def _envelope(x: np.ndarray, sample_rate: int, attack_ms: float, release_ms: float) -> np.ndarray:
    """One-pole attack/release follower of |x|; 0 ms coefficients track |x|."""
    mag = np.abs(x)
    a_att = np.exp(-1.0 / (sample_rate * attack_ms / 1000.0)) if attack_ms > 0 else 0.0
    a_rel = np.exp(-1.0 / (sample_rate * release_ms / 1000.0)) if release_ms > 0 else 0.0
    if a_att == a_rel:
        return lfilter([1.0 - a_att], [1.0, -a_att], mag)
    env = np.empty_like(mag)
    state = 0.0
    for i, m in enumerate(mag):
        coef = a_att if m > state else a_rel
        state = coef * state + (1.0 - coef) * m
        env[i] = state
    return env


def enhance(speech: AudioBuffer, cfg: EnhanceConfig | None = None) -> AudioBuffer:
    """Static spectral shaping followed by envelope-domain compression."""
    cfg = cfg or EnhanceConfig()
    if len(speech) == 0:
        raise ValueError("speech must be nonempty")
    input_rms = rms(speech)
    if input_rms == 0.0:
        return speech.with_samples(speech.samples.copy())

    taps = _shaping_fir(cfg, speech.sample_rate)
    delay = cfg.fir_taps // 2
    shaped = fftconvolve(speech.samples, taps, mode="full")[delay: delay + len(speech)]

    if cfg.ratio > 1.0:
        env = _envelope(shaped, speech.sample_rate, cfg.attack_ms, cfg.release_ms)
        ref = rms(shaped)
        with np.errstate(divide="ignore"):
            gain = np.where(env > 0.0, (env / ref) ** (1.0 / cfg.ratio - 1.0), 0.0)
        out = shaped * gain
    else:
        out = shaped

    if cfg.rms_match:
        out_rms = rms(out)
        if out_rms > 0:
            out = out * (input_rms / out_rms)
    if not np.all(np.isfinite(out)):
        raise NumericError("enhancement produced non-finite samples")
    return AudioBuffer(out, speech.sample_rate)


def fit_noise_to(noise: np.ndarray, n: int) -> np.ndarray:
    """Loop or truncate a noise signal to exactly n samples."""
    if n == 0:
        return np.zeros(0)
    reps = -(-n // len(noise))
    return np.tile(noise, reps)[:n]


def snr_gain(speech_rms: float, noise_rms: float, snr_db: float) -> float:
    """Gain g with 20*log10(speech_rms / (g * noise_rms)) == snr_db."""
    return (speech_rms / noise_rms) * 10.0 ** (-snr_db / 20.0)


def mix_at_snr(speech: AudioBuffer, spec: NoiseMixSpec) -> AudioBuffer:
    """Additively mix the spec's noise into speech at an exact SNR."""
    check_same_rate(speech, spec.noise)
    speech_rms = rms(speech)
    if speech_rms <= 0:
        raise ValueError("speech must be nonsilent (RMS > 0)")
    noise = fit_noise_to(spec.noise.samples, len(speech))
    noise_rms = rms(noise)
    if noise_rms <= 0:
        raise ValueError("noise segment is silent after loop/truncate")
    g = snr_gain(speech_rms, noise_rms, spec.snr_db)
    return AudioBuffer(speech.samples + g * noise, speech.sample_rate)


class WhisperConverter(BaseEstimator, TransformerMixin):
    """Estimator wrapper over :func:`whisperize`; stateless, fit is a no-op."""

    def __init__(self, frame_spec=None, lpc_order=None, seed=0, freq_scale=1.15,
                 bw_exponent=1.2, freq_cutoff=2000.0, tilt_db_per_octave=3.0,
                 pre_emphasis=True):
        self.frame_spec = frame_spec
        self.lpc_order = lpc_order
        self.seed = seed
        self.freq_scale = freq_scale
        self.bw_exponent = bw_exponent
        self.freq_cutoff = freq_cutoff
        self.tilt_db_per_octave = tilt_db_per_octave
        self.pre_emphasis = pre_emphasis

    def _config(self) -> WhisperConfig:
        return WhisperConfig(
            frame_spec=self.frame_spec, lpc_order=self.lpc_order, seed=self.seed,
            freq_scale=self.freq_scale, bw_exponent=self.bw_exponent,
            freq_cutoff=self.freq_cutoff, tilt_db_per_octave=self.tilt_db_per_octave,
            pre_emphasis=self.pre_emphasis,
        )

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        cfg = self._config()
        if isinstance(X, AudioBuffer):
            return whisperize(X, cfg)
        return [whisperize(buf, cfg) for buf in X]


class IntelligibilityEnhancer(BaseEstimator, TransformerMixin):
    """Estimator wrapper over :func:`enhance`; stateless, fit is a no-op."""

    def __init__(self, band_lo=1000.0, band_hi=4000.0, band_boost_db=6.0,
                 tilt_db_per_octave=2.0, tilt_corner_hz=1000.0, ratio=2.0,
                 attack_ms=5.0, release_ms=50.0, rms_match=True, fir_taps=257):
        self.band_lo = band_lo
        self.band_hi = band_hi
        self.band_boost_db = band_boost_db
        self.tilt_db_per_octave = tilt_db_per_octave
        self.tilt_corner_hz = tilt_corner_hz
        self.ratio = ratio
        self.attack_ms = attack_ms
        self.release_ms = release_ms
        self.rms_match = rms_match
        self.fir_taps = fir_taps

    def _config(self) -> EnhanceConfig:
        return EnhanceConfig(
            band_lo=self.band_lo, band_hi=self.band_hi, band_boost_db=self.band_boost_db,
            tilt_db_per_octave=self.tilt_db_per_octave, tilt_corner_hz=self.tilt_corner_hz,
            ratio=self.ratio, attack_ms=self.attack_ms, release_ms=self.release_ms,
            rms_match=self.rms_match, fir_taps=self.fir_taps,
        )

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        cfg = self._config()
        if isinstance(X, AudioBuffer):
            return enhance(X, cfg)
        return [enhance(buf, cfg) for buf in X]


class NoiseMixer(BaseEstimator, TransformerMixin):
    """Estimator wrapper over :func:`mix_at_snr` for a fixed masker."""

    def __init__(self, noise=None, snr_db=-4.0):
        self.noise = noise
        self.snr_db = snr_db

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        if self.noise is None:
            raise ValueError("NoiseMixer requires a noise buffer")
        spec = NoiseMixSpec(snr_db=self.snr_db, noise=self.noise)
        if isinstance(X, AudioBuffer):
            return mix_at_snr(X, spec)
        return [mix_at_snr(buf, spec) for buf in X]
