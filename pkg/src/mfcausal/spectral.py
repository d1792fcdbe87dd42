"""Short-time Fourier transform and related frequency-domain operations.

stft converts a real signal into a complex frames-by-frequencies matrix
(one-sided). zscore_per_frequency standardizes each frequency bin across
frames, which calibrates the feature scales before canonical correlation.
magnitude takes the elementwise modulus. bandstop removes a frequency band
with a zero-phase FIR filter, and psd is a Welch power spectrum for reports.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import signal as sps

from .errors import ValidationError
from .timeseries import TimeSeries, VAR_EPS

WINDOW_FNS = ("rectangular", "hann")


@dataclass
class STFTConfig:
    """STFT parameters.

    Attributes:
        window_len: window length W_t in seconds; bin spacing is 1/W_t.
        hop: hop between frame starts in seconds (overlap = window_len - hop).
        window_fn: "hann" (default) or "rectangular".
        sided: only "onesided" is supported (inputs are real).
    """

    window_len: float
    hop: float
    window_fn: str = "hann"
    sided: str = "onesided"

    def __post_init__(self):
        if not (self.window_len > 0 and self.hop > 0):
            raise ValidationError("window_len and hop must be positive")
        if self.hop > self.window_len + 1e-12:
            raise ValidationError(f"hop {self.hop} exceeds window_len {self.window_len}")
        if self.window_fn not in WINDOW_FNS:
            raise ValidationError(f"window_fn must be one of {WINDOW_FNS}")
        if self.sided != "onesided":
            raise ValidationError("only onesided spectrograms are supported")


@dataclass
class Spectrogram:
    """Complex (or real, after magnitude) time-frequency matrix.

    values is [n_frames, n_freqs]; frame_times are window-center times;
    freqs run from 0 to source_fs/2, strictly increasing.
    """

    values: np.ndarray
    frame_times: np.ndarray
    freqs: np.ndarray
    source_fs: float

    @property
    def n_frames(self):
        return self.values.shape[0]

    @property
    def n_freqs(self):
        return self.values.shape[1]


def window_samples(cfg, fs):
    """Window length in samples for a config at a given rate."""
    w = int(round(cfg.window_len * fs))
    if w < 2:
        raise ValidationError(f"window_len {cfg.window_len} s is under 2 samples at fs {fs}")
    return w


def window_values(window_fn, w):
    if window_fn == "rectangular":
        return np.ones(w)
    return sps.get_window("hann", w)


def stft(ts, cfg):
    """One-sided STFT with frames fully inside the signal (no padding).

    Frame k starts at sample k*hop and covers W_t*fs samples; its time stamp
    is the window center. Bin count is floor(W_t*fs/2) + 1.

    Raises:
        ValidationError: if the signal is shorter than one window.
    """
    w = window_samples(cfg, ts.fs)
    hop_n = max(1, int(round(cfg.hop * ts.fs)))
    if ts.n < w:
        raise ValidationError(f"signal length {ts.n} is shorter than one window ({w})")
    win = window_values(cfg.window_fn, w)
    starts = np.arange(0, ts.n - w + 1, hop_n)
    frames = sliding_window_view(ts.samples, w)[starts] * win
    values = np.fft.rfft(frames, axis=1)
    freqs = np.fft.rfftfreq(w, 1.0 / ts.fs)
    frame_times = ts.t0 + (starts + w // 2) / ts.fs
    return Spectrogram(values, frame_times, freqs, ts.fs)


def zscore_per_frequency(spec):
    """Standardize each frequency bin across frames.

    Complex case: mean-centered, then scaled by the square root of the mean
    squared modulus deviation, so each bin has zero mean and unit variance.
    Zero-variance bins are set to zeros and reported.

    Returns:
        (Spectrogram, degenerate) where degenerate lists the zeroed bin
        indices.
    """
    if spec.n_frames < 3:
        raise ValidationError(f"need at least 3 frames, got {spec.n_frames}")
    centered = spec.values - spec.values.mean(axis=0)
    scale = np.sqrt(np.mean(np.abs(centered) ** 2, axis=0))
    degenerate = np.flatnonzero(scale**2 <= VAR_EPS)
    safe = scale.copy()
    safe[degenerate] = np.inf
    out = centered / safe
    return Spectrogram(out, spec.frame_times, spec.freqs, spec.source_fs), list(degenerate)


def magnitude(spec):
    """Elementwise modulus; the result is a real-valued spectrogram."""
    return Spectrogram(np.abs(spec.values), spec.frame_times, spec.freqs, spec.source_fs)


def bandstop(ts, f_lo, f_hi):
    """Zero-phase FIR band-stop filter.

    The design band is widened by a transition allowance on both sides so the
    requested [f_lo, f_hi] interval is attenuated by at least 30 dB while the
    passband (beyond the transitions) stays within +-0.5 dB.
    """
    if not (0 < f_lo < f_hi < ts.fs / 2):
        raise ValidationError(f"invalid stop band [{f_lo}, {f_hi}] at fs {ts.fs}")
    delta = 0.5 * min(f_lo, f_hi - f_lo, 2.0)
    numtaps = int(np.ceil(1.65 * ts.fs / delta))
    max_taps = max(3, (ts.n - 2) // 3)
    numtaps = min(numtaps, max_taps)
    numtaps += (numtaps + 1) % 2  # type I (odd) so the Nyquist gain is free
    lo = max(f_lo - delta, 0.25 * f_lo)
    hi = min(f_hi + delta, 0.5 * (f_hi + ts.fs / 2))
    taps = sps.firwin(numtaps, [lo, hi], fs=ts.fs)
    padlen = min(3 * numtaps, ts.n - 1)
    out = sps.filtfilt(taps, 1.0, ts.samples, padtype="even", padlen=padlen)
    return TimeSeries(out, fs=ts.fs, t0=ts.t0, guard=ts.guard)


def psd(ts, seg_len):
    """Welch power spectral density.

    Args:
        ts: input series.
        seg_len: segment length in seconds; must fit inside the signal.

    Returns:
        (freqs, power) with power in units of signal variance per Hz.
    """
    nperseg = int(round(seg_len * ts.fs))
    if nperseg > ts.n:
        raise ValidationError(f"seg_len {seg_len} s exceeds signal duration")
    if nperseg < 2:
        raise ValidationError("seg_len too short")
    freqs, power = sps.welch(ts.samples, fs=ts.fs, nperseg=nperseg)
    return freqs, power
