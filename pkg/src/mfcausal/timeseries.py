"""Signal containers and basic operations.

TimeSeries is the unit of data everywhere in the package: a uniformly
sampled real sequence with a sampling rate and a start time. MultiTrialSeries
groups repeated trials of one channel, and MFPair holds the mixed-frequency
(high-rate, low-rate) channel pair with an exact integer rate ratio.

Operations here are pure functions returning new containers: anti-aliased
decimation, linear detrending, z-scoring, and lagged cross-correlation.
"""

from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from .errors import ValidationError

# Variance below this is treated as degenerate everywhere in the package.
VAR_EPS = 1e-12


@dataclass
class TimeSeries:
    """Uniformly sampled real signal.

    Attributes:
        samples: 1-D float array.
        fs: sampling rate in Hz (or cycles per year for calendar data).
        t0: time of the first sample, in the same time unit as 1/fs.
        guard: number of samples at each end flagged as filter transients;
            correlation statistics exclude these samples.
    """

    samples: np.ndarray
    fs: float
    t0: float = 0.0
    guard: int = 0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1:
            raise ValidationError("TimeSeries samples must be one-dimensional")
        if not np.all(np.isfinite(self.samples)):
            raise ValidationError("TimeSeries samples contain NaN or Inf")
        if not (np.isfinite(self.fs) and self.fs > 0):
            raise ValidationError(f"fs must be positive, got {self.fs}")
        if self.guard < 0 or 2 * self.guard > self.samples.size:
            raise ValidationError(f"guard {self.guard} exceeds series length")

    @property
    def n(self):
        return self.samples.size

    @property
    def duration(self):
        return self.n / self.fs

    def times(self):
        """Sample times: t0 + k/fs."""
        return self.t0 + np.arange(self.n) / self.fs


@dataclass
class MultiTrialSeries:
    """Repeated trials of one channel; equal length and fs across trials."""

    trials: list

    def __post_init__(self):
        if len(self.trials) == 0:
            raise ValidationError("MultiTrialSeries needs at least one trial")
        n0, fs0 = self.trials[0].n, self.trials[0].fs
        for k, tr in enumerate(self.trials):
            if tr.n != n0 or tr.fs != fs0:
                raise ValidationError(
                    f"trial {k} has length {tr.n} fs {tr.fs}, expected {n0} fs {fs0}"
                )

    @property
    def n_trials(self):
        return len(self.trials)

    @property
    def fs(self):
        return self.trials[0].fs

    @property
    def n(self):
        return self.trials[0].n

    def stack(self):
        """Trials as a [n_trials, n_samples] array."""
        return np.array([tr.samples for tr in self.trials])


@dataclass
class MFPair:
    """Mixed-frequency pair: high-rate channel, low-rate channel, ratio m.

    hf.fs must equal m * lf.fs exactly with integer m >= 2. When m is None
    it is derived from the two sampling rates.
    """

    hf: MultiTrialSeries
    lf: MultiTrialSeries
    m: int = None

    def __post_init__(self):
        if self.m is None:
            self.m = int(round(self.hf.fs / self.lf.fs))
        ratio = self.hf.fs / self.lf.fs
        if self.m < 2 or abs(ratio - self.m) > 1e-9 * self.m:
            raise ValidationError(
                f"hf.fs/lf.fs = {ratio} is not the integer ratio m = {self.m} >= 2"
            )
        if self.hf.n_trials != self.lf.n_trials:
            raise ValidationError(
                f"trial counts differ: hf {self.hf.n_trials}, lf {self.lf.n_trials}"
            )
        if abs(self.hf.trials[0].duration - self.lf.trials[0].duration) > 1.0 / self.lf.fs:
            raise ValidationError("hf and lf trial durations differ by more than one LF period")


def lowpass_decimate(ts, factor):
    """Anti-aliased decimation by an integer factor.

    A zero-phase FIR low-pass with cutoff at half the target rate is applied
    (forward-backward, reflect padding), then every factor-th sample is kept.
    Trailing samples that do not fill a whole decimation step are truncated.
    The output guard marks half a filter length of edge transients.

    Args:
        ts: input TimeSeries.
        factor: integer >= 2.

    Returns:
        TimeSeries at fs/factor with guard set to the transient width.
    """
    if int(factor) != factor or factor < 2:
        raise ValidationError(f"decimation factor must be an integer >= 2, got {factor}")
    factor = int(factor)
    if ts.n < 10 * factor:
        raise ValidationError(f"need at least {10 * factor} samples, got {ts.n}")
    target = ts.fs / factor
    numtaps = 33 * factor
    taps = sps.firwin(numtaps, 0.5 * target, fs=ts.fs)
    padlen = min(3 * numtaps, ts.n - 1)
    filtered = sps.filtfilt(taps, 1.0, ts.samples, padtype="even", padlen=padlen)
    out = filtered[: (ts.n // factor) * factor : factor]
    guard = int(np.ceil(numtaps / 2 / factor))
    return TimeSeries(out, fs=target, t0=ts.t0, guard=guard)


def detrend_linear(ts):
    """Remove the least-squares line; output has zero mean and zero slope."""
    if ts.n < 3:
        raise ValidationError("detrend_linear needs at least 3 samples")
    out = sps.detrend(ts.samples, type="linear")
    return TimeSeries(out, fs=ts.fs, t0=ts.t0, guard=ts.guard)


def zscore(ts):
    """Standardize to mean 0, unit variance (population convention).

    Raises:
        ValidationError: if the sample variance is at or below 1e-12.
    """
    mu = ts.samples.mean()
    var = np.mean((ts.samples - mu) ** 2)
    if var <= VAR_EPS:
        raise ValidationError(f"degenerate input: variance {var:.3g} <= {VAR_EPS}")
    out = (ts.samples - mu) / np.sqrt(var)
    return TimeSeries(out, fs=ts.fs, t0=ts.t0, guard=ts.guard)


XCorr = namedtuple("XCorr", ["lags", "values"])


def lagged_xcorr(x, y, max_lag, standardize=True):
    """Time-lagged normalized cross-correlation of two series.

    The lag grid step is 1/max(x.fs, y.fs). Positive lag means x leads y:
    the value at lag L correlates x(t - L) with y(t) over the samples where
    both series have coincident time points. Each lag is normalized locally
    (Pearson correlation over the overlapping pairs), so values lie in
    [-1, 1]. Lags with fewer than two overlapping pairs, or with degenerate
    variance in the overlap, are omitted. Guard samples of either series are
    excluded.

    Args:
        x, y: TimeSeries, possibly at different rates.
        max_lag: maximum |lag| in seconds.
        standardize: z-score both inputs first (does not change the values;
            kept as a documented switch).

    Returns:
        XCorr(lags, values) with only the populated lags.
    """
    if standardize:
        x, y = zscore(x), zscore(y)
    fs_hi = max(x.fs, y.fs)
    n_steps = int(np.floor(max_lag * fs_hi + 1e-9))
    lag_grid = np.arange(-n_steps, n_steps + 1) / fs_hi

    # Enumerate candidate pairs from the coarser series so every coincident
    # time point is covered once.
    if x.fs <= y.fs:
        base, other, base_is_x = x, y, True
    else:
        base, other, base_is_x = y, x, False
    bt = base.times()
    keep_b = np.arange(base.guard, base.n - base.guard)

    lags_out, values_out = [], []
    for lag in lag_grid:
        # pair x at time T - lag with y at time T
        shift = lag if base_is_x else -lag
        t_other = bt[keep_b] + shift
        idx = np.round((t_other - other.t0) * other.fs).astype(int)
        ok = (idx >= other.guard) & (idx < other.n - other.guard)
        match = np.abs(other.t0 + idx[ok] / other.fs - t_other[ok]) <= 0.5 / fs_hi - 1e-12
        b_idx = keep_b[ok][match]
        o_idx = idx[ok][match]
        if b_idx.size < 2:
            continue
        a = base.samples[b_idx]
        b = other.samples[o_idx]
        a = a - a.mean()
        b = b - b.mean()
        va, vb = np.mean(a**2), np.mean(b**2)
        if va <= VAR_EPS or vb <= VAR_EPS:
            continue
        lags_out.append(lag)
        values_out.append(np.mean(a * b) / np.sqrt(va * vb))
    return XCorr(np.array(lags_out), np.array(values_out))
