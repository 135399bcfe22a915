"""Linear-prediction analysis/synthesis and pole-domain formant control.

The predictor polynomial convention is A(z) = 1 + a1*z^-1 + ... + ap*z^-p;
``coeffs`` arrays hold (a1..ap). Inverse filtering computes the prediction
error e[n] = x[n] + sum_i a_i x[n-i]; the synthesis filter 1/A(z) is its
exact zero-state inverse. Autocorrelation-method coefficients from
Levinson-Durbin are minimum phase, so each complex pole pair is a resonance
whose angle is a formant frequency and whose radius sets the bandwidth
BW = -(fs/pi) * ln(radius).
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.signal import lfilter

from .audio import AudioBuffer, FrameSpec, frame_count
from .errors import NumericError
from .validation import as_float_vector

PRE_EMPHASIS_COEF = 0.97


def default_order(sample_rate: int) -> int:
    """One pole pair per kHz plus two for spectral tilt (26 at 24 kHz)."""
    return sample_rate // 1000 + 2


def autocorrelate(frame, max_lag: int) -> np.ndarray:
    """r[k] = sum_n x[n] * x[n+k] for k = 0..max_lag."""
    x = as_float_vector(frame, "frame")
    if max_lag >= len(x):
        raise ValueError(f"max_lag {max_lag} must be < frame length {len(x)}")
    n = len(x)
    return np.array([np.dot(x[: n - k], x[k:]) for k in range(max_lag + 1)])


class LpcSolution(NamedTuple):
    coeffs: np.ndarray
    gain: float
    reflections: np.ndarray
    degenerate: bool


def levinson(r, order: int) -> LpcSolution:
    """Solve the Toeplitz normal equations by Levinson-Durbin recursion.

    Returns predictor coefficients (a1..ap), gain = sqrt(prediction error
    energy), the reflection coefficients, and a degeneracy flag. r[0] <= 0
    yields the all-zero predictor with zero gain, flagged degenerate. If the
    error energy hits zero mid-recursion (perfectly predictable input) the
    remaining stages are skipped.
    """
    r = as_float_vector(r, "r")
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if len(r) < order + 1:
        raise ValueError(f"need {order + 1} autocorrelation lags, got {len(r)}")

    if r[0] <= 0:
        return LpcSolution(np.zeros(order), 0.0, np.zeros(order), True)

    a = np.zeros(order)
    k = np.zeros(order)
    err = r[0]
    for i in range(1, order + 1):
        if err <= 0.0:
            err = 0.0
            break
        acc = r[i] + np.dot(a[: i - 1], r[i - 1: 0: -1])
        k[i - 1] = ki = -acc / err
        if i > 1:
            a[: i - 1] += ki * a[i - 2:: -1].copy()
        a[i - 1] = ki
        err *= 1.0 - ki * ki
    return LpcSolution(a, float(np.sqrt(max(err, 0.0))), k, False)


def inverse_filter(frame, coeffs, history=None) -> np.ndarray:
    """Prediction error of the frame under A(z).

    With no history the filter starts from zero state, so the first
    len(coeffs) outputs carry a startup transient. Passing the samples that
    preceded the frame removes it; the returned length always equals the
    frame length.
    """
    x = as_float_vector(frame, "frame")
    a = as_float_vector(coeffs, "coeffs")
    b = np.concatenate(([1.0], a))
    if history is None:
        return lfilter(b, [1.0], x)
    h = as_float_vector(history, "history")
    return lfilter(b, [1.0], np.concatenate([h, x]))[len(h):]


def synthesis_filter(excitation, coeffs, warn_unstable: bool = True) -> np.ndarray:
    """All-pole filtering 1/A(z), zero initial state.

    Exact inverse of :func:`inverse_filter`. Warns when A(z) is not minimum
    phase (the output may grow without bound).
    """
    e = as_float_vector(excitation, "excitation")
    a = as_float_vector(coeffs, "coeffs")
    if warn_unstable and len(a) and np.max(np.abs(_roots(a))) >= 1.0:
        warnings.warn("synthesis filter is not minimum phase", RuntimeWarning, stacklevel=2)
    out = lfilter([1.0], np.concatenate(([1.0], a)), e)
    if out.size and not np.all(np.isfinite(out)):
        raise NumericError("synthesis filter produced non-finite output")
    return out


def _roots(coeffs: np.ndarray) -> np.ndarray:
    try:
        return np.roots(np.concatenate(([1.0], coeffs)))
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"polynomial root finding failed: {exc}") from exc


@dataclass(frozen=True)
class PoleSet:
    """Conjugate-closed pole multiset, split into an upper-half-plane part
    and real poles. The lower-half conjugates are implicit."""

    upper: np.ndarray
    real: np.ndarray

    @property
    def order(self) -> int:
        return 2 * len(self.upper) + len(self.real)

    def all_poles(self) -> np.ndarray:
        return np.concatenate([self.upper, np.conj(self.upper), self.real.astype(complex)])


def poles(coeffs) -> PoleSet:
    """Roots of z^p * A(z) via companion-matrix eigenvalues.

    Real companion matrices give exactly real eigenvalues and exactly
    conjugate pairs, so the split below preserves conjugate closure.
    """
    a = as_float_vector(coeffs, "coeffs")
    if len(a) < 1:
        raise ValueError("order must be >= 1")
    roots = _roots(a)
    upper = roots[roots.imag > 0]
    lower = roots[roots.imag < 0]
    if len(upper) != len(lower):
        raise NumericError("root finder returned an unpaired complex root")
    return PoleSet(upper=upper, real=roots[roots.imag == 0].real)


def reconstruct(pole_set: PoleSet) -> np.ndarray:
    """Coefficients (a1..ap) of the monic polynomial with these roots."""
    poly = np.poly(pole_set.all_poles())
    return np.real(poly)[1:]


def modify_formants(pole_set: PoleSet, freq_scale: float, bw_exponent: float,
                    freq_cutoff: float, sample_rate: int) -> PoleSet:
    """Scale resonance frequencies below a cutoff and broaden bandwidths.

    Complex poles whose frequency (angle * fs / 2pi) lies below freq_cutoff
    get their angle multiplied by freq_scale (clamped just under pi);
    every complex pole's radius is raised to bw_exponent, which for
    bw_exponent > 1 shrinks the radius and widens the bandwidth
    -(fs/pi)*ln(radius). Real poles pass through untouched.
    """
    if freq_scale <= 0:
        raise ValueError(f"freq_scale must be positive, got {freq_scale}")
    if bw_exponent < 1:
        raise ValueError(f"bw_exponent must be >= 1, got {bw_exponent}")
    if freq_scale == 1.0 and bw_exponent == 1.0:
        return pole_set

    radius = np.abs(pole_set.upper)
    theta = np.angle(pole_set.upper)
    freq = theta * sample_rate / (2.0 * np.pi)
    scaled = np.where(freq < freq_cutoff, theta * freq_scale, theta)
    if np.any(scaled >= np.pi):
        warnings.warn("scaled formant frequency reached Nyquist; clamped", RuntimeWarning,
                      stacklevel=2)
        scaled = np.minimum(scaled, np.pi - 1e-6)
    new_radius = radius ** bw_exponent
    return PoleSet(upper=new_radius * np.exp(1j * scaled), real=pole_set.real)


def pre_emphasize(x, coef: float = PRE_EMPHASIS_COEF) -> np.ndarray:
    """High-pass conditioning filter 1 - coef*z^-1."""
    return lfilter([1.0, -coef], [1.0], as_float_vector(x, "x"))


def de_emphasize(x, coef: float = PRE_EMPHASIS_COEF) -> np.ndarray:
    """Inverse of :func:`pre_emphasize` (up to initial state)."""
    return lfilter([1.0], [1.0, -coef], as_float_vector(x, "x"))


@dataclass(frozen=True)
class LpcFrame:
    """Per-frame predictor: order, coefficients (a1..ap), Levinson gain, and
    the prediction error of the raw (unwindowed) frame."""

    order: int
    coeffs: np.ndarray
    gain: float
    residual: np.ndarray


def analyze_frames(buffer: AudioBuffer, spec: FrameSpec, order: int,
                   regularization: float = 1e-6) -> list[LpcFrame]:
    """Frame-wise LPC analysis.

    Coefficients come from the windowed frame's autocorrelation (the
    autocorrelation method, minimum phase for valid input); r[0] is inflated
    by the regularization factor to keep the recursion well conditioned. The
    stored residual is the raw frame inverse-filtered with those
    coefficients, primed with the samples preceding the frame so that no
    zero-state startup transient inflates its energy.
    """
    if order >= spec.frame_len:
        raise ValueError(f"order {order} must be < frame_len {spec.frame_len}")
    x = buffer.samples
    window = spec.window_values()
    out = []
    for i in range(frame_count(len(x), spec)):
        start = i * spec.hop
        raw = x[start: start + spec.frame_len]
        r = autocorrelate(raw * window, order)
        r[0] *= 1.0 + regularization
        solution = levinson(r, order)
        if solution.degenerate:
            residual = raw.copy()
        else:
            history = x[max(0, start - order): start]
            if len(history) < order:
                history = np.concatenate([np.zeros(order - len(history)), history])
            residual = inverse_filter(raw, solution.coeffs, history=history)
        out.append(LpcFrame(order, solution.coeffs, solution.gain, residual))
    return out


def lpc_frames_to_csv(lpc_frames, path) -> None:
    """Debug export: one row per frame with index, gain, coefficients."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        order = lpc_frames[0].order if lpc_frames else 0
        writer.writerow(["frame", "gain"] + [f"a{i + 1}" for i in range(order)])
        for i, fr in enumerate(lpc_frames):
            writer.writerow([i, repr(float(fr.gain))] + [repr(float(c)) for c in fr.coeffs])
