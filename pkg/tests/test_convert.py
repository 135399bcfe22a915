import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.signal import freqz
from sklearn.base import clone

import oracles
from voxstyle.analysis import voicing_ratio
from voxstyle.audio import AudioBuffer, FrameSpec, rms
from voxstyle.convert import (
    EnhanceConfig,
    IntelligibilityEnhancer,
    NoiseMixSpec,
    NoiseMixer,
    WhisperConfig,
    WhisperConverter,
    enhance,
    fit_noise_to,
    mix_at_snr,
    snr_gain,
    tilt_filter,
    whisperize,
)


@pytest.fixture(scope="module")
def vowel():
    return AudioBuffer(oracles.synthetic_vowel(seconds=1.0), 24000)


def segment_db(x: np.ndarray) -> float:
    return 20.0 * np.log10(np.sqrt(np.mean(x ** 2)))


class TestTiltFilter:
    def test_zero_tilt_is_identity(self):
        b, a = tilt_filter(0.0, 24000)
        assert_allclose(b, [1.0])
        assert_allclose(a, [1.0])

    def test_leading_coefficients_are_one(self):
        b, a = tilt_filter(3.0, 24000)
        assert b[0] == 1.0
        assert a[0] == 1.0

    def test_log_magnitude_mean_is_zero(self):
        # monic/monic minimum-phase: log|H| integrates to zero over the circle
        b, a = tilt_filter(3.0, 24000)
        _, h = freqz(b, a, worN=1 << 15)
        assert np.mean(np.log(np.abs(h))) == pytest.approx(0.0, abs=1e-4)

    def test_positive_tilt_monotone_rising(self):
        b, a = tilt_filter(3.0, 24000)
        f = np.linspace(300.0, 8000.0, 200)
        _, h = freqz(b, a, worN=f, fs=24000)
        mag = np.abs(h)
        assert np.all(np.diff(mag) > 0)

    def test_average_slope_near_request(self):
        for tilt in (3.0, -3.0, 1.5):
            b, a = tilt_filter(tilt, 24000)
            _, h = freqz(b, a, worN=[300.0, 8000.0], fs=24000)
            slope = (20 * np.log10(np.abs(h[1]) / np.abs(h[0]))) / np.log2(8000 / 300)
            assert slope == pytest.approx(tilt, rel=0.2)

    def test_default_band_tracks_rate(self):
        # f_hi = min(8000, 0.45 * fs) keeps the shelf below Nyquist
        b, a = tilt_filter(3.0, 8000)
        _, h = freqz(b, a, worN=[300.0, 3600.0], fs=8000)
        slope = (20 * np.log10(np.abs(h[1]) / np.abs(h[0]))) / np.log2(3600 / 300)
        assert slope == pytest.approx(3.0, rel=0.25)


class TestWhisperize:
    def test_deterministic_for_fixed_seed(self, vowel):
        a = whisperize(vowel, WhisperConfig(seed=3))
        b = whisperize(vowel, WhisperConfig(seed=3))
        assert a.samples.tobytes() == b.samples.tobytes()

    def test_seed_changes_output(self, vowel):
        a = whisperize(vowel, WhisperConfig(seed=3))
        b = whisperize(vowel, WhisperConfig(seed=4))
        assert not np.array_equal(a.samples, b.samples)

    def test_length_and_rate_preserved(self, vowel):
        out = whisperize(vowel)
        assert len(out) == len(vowel)
        assert out.sample_rate == vowel.sample_rate

    def test_short_input_lengths(self):
        rng = np.random.default_rng(0)
        for n in (10, 100, 599, 600, 601):
            buf = AudioBuffer(0.1 * rng.standard_normal(n), 24000)
            out = whisperize(buf, WhisperConfig(seed=1))
            assert len(out) == n
            assert np.all(np.isfinite(out.samples))

    def test_silence_maps_to_silence(self):
        out = whisperize(AudioBuffer(np.zeros(5000), 24000))
        assert len(out) == 5000
        assert_allclose(out.samples, 0.0)

    def test_voicing_drops(self, vowel):
        out = whisperize(vowel, WhisperConfig(seed=0))
        assert voicing_ratio(vowel) > 0.9
        assert voicing_ratio(out) < 0.3

    def test_peak_and_energy_controlled(self, vowel):
        out = whisperize(vowel, WhisperConfig(seed=0))
        assert np.max(np.abs(out.samples)) <= 4.0 * np.max(np.abs(vowel.samples))
        # noise excitation carries less energy through the envelope than
        # coherent harmonics sitting on the resonance peaks, so some level
        # drop is physical; this only guards against gross scaling bugs
        ratio = rms(out) / rms(vowel)
        assert 0.1 < ratio < 4.0

    def test_no_pre_emphasis_path(self, vowel):
        out = whisperize(vowel, WhisperConfig(seed=0, pre_emphasis=False))
        assert len(out) == len(vowel)
        assert voicing_ratio(out) < 0.35

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            whisperize(AudioBuffer(np.zeros(0), 24000))

    def test_order_must_fit_frame(self, vowel):
        cfg = WhisperConfig(frame_spec=FrameSpec(20, 10), lpc_order=26)
        with pytest.raises(ValueError):
            whisperize(vowel, cfg)

    def test_config_resolution(self):
        cfg = WhisperConfig()
        spec = cfg.resolve_frame_spec(24000)
        assert (spec.frame_len, spec.hop, spec.window) == (600, 300, "hann")
        assert cfg.resolve_order(24000) == 26
        custom = FrameSpec(512, 128)
        assert WhisperConfig(frame_spec=custom).resolve_frame_spec(24000) is custom
        assert WhisperConfig(lpc_order=12).resolve_order(24000) == 12


class TestEnhance:
    def test_rms_match(self, rng):
        buf = AudioBuffer(0.1 * rng.standard_normal(16000), 16000)
        out = enhance(buf)
        assert abs(segment_db(out.samples) - segment_db(buf.samples)) < 0.1

    def test_static_compression_halves_contrast(self):
        fs = 16000
        t = np.arange(fs) / fs
        tone = np.sin(2 * np.pi * 440 * t)
        x = np.concatenate([0.5 * tone, 0.05 * tone])  # 20 dB level step
        cfg = EnhanceConfig(ratio=2.0, attack_ms=0.0, release_ms=0.0, rms_match=False)
        out = enhance(AudioBuffer(x, fs), cfg).samples
        loud = segment_db(out[2000: fs - 2000])
        soft = segment_db(out[fs + 2000: 2 * fs - 2000])
        assert loud - soft == pytest.approx(10.0, abs=0.5)

    def test_ratio_one_is_linear(self, rng):
        x = 0.05 * rng.standard_normal(8000)
        cfg = EnhanceConfig(ratio=1.0, rms_match=False)
        one = enhance(AudioBuffer(x, 16000), cfg).samples
        two = enhance(AudioBuffer(2.0 * x, 16000), cfg).samples
        assert_allclose(two, 2.0 * one, atol=1e-12)

    def test_silence_passthrough(self):
        out = enhance(AudioBuffer(np.zeros(4000), 16000))
        assert_allclose(out.samples, 0.0)
        assert len(out) == 4000

    def test_shaping_gain_at_reference_points(self):
        # pure FIR path: +6 dB band boost plus +2 dB/oct tilt above 1 kHz
        fs, n = 16000, 4096
        x = np.zeros(n)
        x[n // 2] = 1.0
        cfg = EnhanceConfig(ratio=1.0, rms_match=False)
        out = enhance(AudioBuffer(x, fs), cfg).samples
        mag = np.abs(np.fft.rfft(out))
        k_2000 = 2000 * n // fs
        k_500 = 500 * n // fs
        gain_db = 20 * np.log10(mag[k_2000] / mag[k_500])
        assert gain_db == pytest.approx(8.0, abs=1.0)

    def test_centroid_rises_on_lowpass_noise(self, rng):
        from voxstyle.spectral import spectral_centroid, stft
        from scipy.signal import lfilter
        fs = 16000
        x = lfilter([1.0], [1.0, -0.95], rng.standard_normal(fs))
        buf = AudioBuffer(0.1 * x / np.max(np.abs(x)), fs)
        out = enhance(buf)
        spec = FrameSpec(512, 256)
        before = np.median(spectral_centroid(stft(buf, spec, 512)))
        after = np.median(spectral_centroid(stft(out, spec, 512)))
        assert after > before * 1.5

    def test_validation(self):
        with pytest.raises(ValueError):
            EnhanceConfig(ratio=0.5)
        with pytest.raises(ValueError):
            EnhanceConfig(band_lo=4000.0, band_hi=1000.0)
        with pytest.raises(ValueError):
            EnhanceConfig(fir_taps=256)
        with pytest.raises(ValueError):
            enhance(AudioBuffer(np.zeros(0), 16000))


class TestNoiseMixing:
    def test_snr_gain_values(self):
        assert snr_gain(1.0, 1.0, 0.0) == pytest.approx(1.0)
        assert snr_gain(1.0, 1.0, -4.0) == pytest.approx(1.5848931924611136, rel=1e-12)
        assert snr_gain(0.2, 0.1, 6.0) == pytest.approx(2.0 * 10 ** (-0.3), rel=1e-12)

    def test_mix_hits_target_exactly(self, rng):
        speech = AudioBuffer(0.1 * rng.standard_normal(24000), 24000)
        noise = AudioBuffer(rng.standard_normal(24000), 24000)
        mixed = mix_at_snr(speech, NoiseMixSpec(snr_db=-4.0, noise=noise))
        added = mixed.samples - speech.samples
        achieved = 20 * np.log10(rms(speech) / rms(added))
        assert achieved == pytest.approx(-4.0, abs=1e-6)

    @given(st.floats(-20.0, 20.0), st.integers(0, 2**31 - 1))
    @settings(max_examples=30, deadline=None)
    def test_snr_exact_property(self, snr, seed):
        r = np.random.default_rng(seed)
        speech = AudioBuffer(0.05 * r.standard_normal(4000), 16000)
        noise = AudioBuffer(r.standard_normal(4000), 16000)
        mixed = mix_at_snr(speech, NoiseMixSpec(snr_db=snr, noise=noise))
        added = mixed.samples - speech.samples
        achieved = 20 * np.log10(rms(speech) / rms(added))
        assert achieved == pytest.approx(snr, abs=1e-8)

    def test_short_noise_is_looped(self, rng):
        speech = AudioBuffer(0.1 * rng.standard_normal(1000), 8000)
        noise = AudioBuffer(rng.standard_normal(300), 8000)
        mixed = mix_at_snr(speech, NoiseMixSpec(snr_db=0.0, noise=noise))
        added = mixed.samples - speech.samples
        assert_allclose(added[:300], added[300:600], atol=1e-12)

    def test_rate_mismatch_rejected(self, rng):
        speech = AudioBuffer(rng.standard_normal(100), 8000)
        noise = AudioBuffer(rng.standard_normal(100), 16000)
        with pytest.raises(ValueError):
            mix_at_snr(speech, NoiseMixSpec(snr_db=0.0, noise=noise))

    def test_silent_inputs_rejected(self, rng):
        noise = AudioBuffer(rng.standard_normal(100), 8000)
        with pytest.raises(ValueError):
            mix_at_snr(AudioBuffer(np.zeros(100), 8000), NoiseMixSpec(0.0, noise))
        with pytest.raises(ValueError):
            NoiseMixSpec(0.0, AudioBuffer(np.zeros(100), 8000))

    def test_fit_noise_to(self):
        x = np.array([1.0, 2.0, 3.0])
        assert_allclose(fit_noise_to(x, 7), [1, 2, 3, 1, 2, 3, 1])
        assert_allclose(fit_noise_to(x, 2), [1, 2])
        assert fit_noise_to(x, 0).shape == (0,)


class TestEstimators:
    def test_whisper_converter_matches_function(self, vowel):
        est = WhisperConverter(seed=7)
        out = est.fit().transform(vowel)
        assert np.array_equal(out.samples, whisperize(vowel, WhisperConfig(seed=7)).samples)

    def test_get_set_params_and_clone(self):
        est = WhisperConverter()
        params = est.get_params()
        assert params["seed"] == 0
        assert params["freq_scale"] == 1.15
        est.set_params(seed=9, freq_scale=1.2)
        cloned = clone(est)
        assert cloned.get_params()["seed"] == 9
        assert cloned.get_params()["freq_scale"] == 1.2

    def test_list_transform(self, rng):
        bufs = [AudioBuffer(0.1 * rng.standard_normal(2000), 24000) for _ in range(2)]
        outs = WhisperConverter(seed=1).transform(bufs)
        assert isinstance(outs, list) and len(outs) == 2
        assert all(len(o) == 2000 for o in outs)

    def test_enhancer_matches_function(self, rng):
        buf = AudioBuffer(0.1 * rng.standard_normal(8000), 16000)
        out = IntelligibilityEnhancer(ratio=1.5).fit().transform(buf)
        assert np.array_equal(out.samples, enhance(buf, EnhanceConfig(ratio=1.5)).samples)

    def test_mixer_requires_noise(self, rng):
        with pytest.raises(ValueError):
            NoiseMixer().transform(AudioBuffer(rng.standard_normal(100), 8000))

    def test_mixer_matches_function(self, rng):
        speech = AudioBuffer(0.1 * rng.standard_normal(2000), 16000)
        noise = AudioBuffer(rng.standard_normal(2000), 16000)
        got = NoiseMixer(noise=noise, snr_db=-4.0).fit().transform(speech)
        want = mix_at_snr(speech, NoiseMixSpec(-4.0, noise))
        assert np.array_equal(got.samples, want.samples)
