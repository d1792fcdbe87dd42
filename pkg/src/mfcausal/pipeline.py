"""Lag-CC pipeline: profiles, canonical frequencies, CC gain, and verdicts.

For each trial and lag, the HF signal's dense spectrogram is z-scored per
frequency, optionally reduced to magnitudes, aligned to the LF samples at
that lag, and fed to regularized CCA against the z-scored LF series. The
same computation on phase-randomized copies of both signals builds the
surrogate null; per-lag p-values and a consecutive-significant-lag rule
produce the direction verdict. Negative lags carry X-to-Y evidence (HF
history predicting LF future), positive lags the reverse.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from ._kernel import TrialKernel
from .cca import RegConfig
from .errors import ValidationError
from .spectral import STFTConfig, window_samples, window_values
from .surrogate import SurrogateConfig, cell_rng, phase_randomize
from .timeseries import MFPair, MultiTrialSeries, lowpass_decimate

CCA_MODES = ("complex", "magnitude")
TESTS = ("t", "ks")


@dataclass
class PipelineConfig:
    """Everything needed for one analysis run.

    Attributes:
        stft: STFT settings; hop must equal one LF sample interval.
        cca_mode: "complex" or "magnitude" (modulus after per-frequency
            z-scoring).
        reg: ridge strengths for CCA.
        lag_grid: (lag_min, lag_max, step) in seconds; step is at least one
            HF sample.
        surrogate: surrogate repetitions and seed.
        test: "t" or "ks" for observed-vs-null significance.
        alpha: significance level in (0, 0.5].
        k_consecutive: significant lags in a row needed for a verdict.
        pooled: pool covariances across trials instead of per-trial CCA
            (no CIs or p-values in that mode).
    """

    stft: STFTConfig
    cca_mode: str = "complex"
    reg: RegConfig = field(default_factory=RegConfig)
    lag_grid: tuple = (-0.5, 0.5, 0.025)
    surrogate: SurrogateConfig = field(default_factory=SurrogateConfig)
    test: str = "t"
    alpha: float = 0.05
    k_consecutive: int = 3
    pooled: bool = False

    def __post_init__(self):
        if self.cca_mode not in CCA_MODES:
            raise ValidationError(f"cca_mode must be one of {CCA_MODES}")
        if self.test not in TESTS:
            raise ValidationError(f"test must be one of {TESTS}")
        if not (0 < self.alpha <= 0.5):
            raise ValidationError(f"alpha {self.alpha} outside (0, 0.5]")
        if self.k_consecutive < 1:
            raise ValidationError("k_consecutive must be at least 1")
        lo, hi, step = self.lag_grid
        if step <= 0 or hi < lo:
            raise ValidationError(f"bad lag grid {self.lag_grid}")


@dataclass
class LagCCProfile:
    """Per-lag CC with cross-trial and surrogate statistics.

    cc is [n_trials, n_lags] (or [1, n_lags] in pooled mode); ci95 and
    surrogate_ci95 are [2, n_lags] (lower, upper) or None; p_values are raw
    per-lag one-sided p (multiple-comparison control happens in
    decide_direction); window_markers is (-W_t, +W_t).
    """

    lags: np.ndarray
    cc: np.ndarray
    mean_cc: np.ndarray
    ci95: np.ndarray
    surrogate_mean: np.ndarray
    surrogate_ci95: np.ndarray
    p_values: np.ndarray
    window_markers: tuple
    dropped_lags: list = field(default_factory=list)


@dataclass
class CanonicalFrequencyReport:
    """Trial-averaged |u| per frequency with thresholded peak list.

    peaks hold (freq, height) sorted by height, local maxima above
    median + 2*MAD; f0 is the top peak's frequency (None if no peak
    clears the threshold).
    """

    freqs: np.ndarray
    mean_abs_u: np.ndarray
    peaks: list
    f0: float


@dataclass
class CCGainReport:
    """Per-band CC change after band-stopping the HF signal.

    delta_cc is [n_bands, n_trials] (filtered minus baseline); baseline is
    the unfiltered per-trial CC at the probe lag.
    """

    bands: list
    delta_cc: np.ndarray
    baseline: np.ndarray


@dataclass
class DirectionVerdict:
    """Verdict plus the evidence behind it.

    support_x2y lists the significant lags beyond -W_t (after BH control),
    support_y2x those beyond +W_t. Peak lag/CC per side are taken over the
    full negative and positive half-axes of the mean profile.
    """

    verdict: str
    support_x2y: np.ndarray
    support_y2x: np.ndarray
    peak_lag_x2y: float
    peak_cc_x2y: float
    peak_lag_y2x: float
    peak_cc_y2x: float


def lag_array(lag_grid):
    lo, hi, step = lag_grid
    n = int(round((hi - lo) / step)) + 1
    return lo + step * np.arange(n)


def _validate_pair_cfg(pair, cfg):
    fs_hf = pair.hf.fs
    if abs(cfg.stft.hop - 1.0 / pair.lf.fs) > 1e-9:
        raise ValidationError(
            f"stft hop {cfg.stft.hop} must equal one LF sample interval "
            f"{1.0 / pair.lf.fs}"
        )
    if cfg.lag_grid[2] < 1.0 / fs_hf - 1e-12:
        raise ValidationError(
            f"lag step {cfg.lag_grid[2]} is below one HF sample {1.0 / fs_hf}"
        )


def _cond_setup(conditioning, domain, cfg, lf_trial, w_t, mode):
    """Per-trial conditioning features and the LF-index-to-row map."""
    z = conditioning
    j = np.arange(lf_trial.n)
    t_j = lf_trial.t0 + j / lf_trial.fs
    if domain == "time":
        feats = z.samples[:, None].astype(float)
        rows = np.round((t_j - z.t0) * z.fs).astype(int)
        rows[(rows < 0) | (rows >= z.n)] = -1
        return feats, rows
    if domain == "time-frequency":
        from ._kernel import dense_features

        wz = window_samples(STFTConfig(window_len=w_t, hop=w_t), z.fs)
        winz = window_values(cfg.stft.window_fn, wz)
        feats = dense_features(z.samples, wz, winz, mode)
        rows = np.round((t_j - z.t0) * z.fs).astype(int) - wz // 2
        return feats, rows
    raise ValidationError("conditioning domain must be time or time-frequency")


def _make_kernel(x_tr, y_tr, *, cfg, pair, w, win, cond=None):
    offset = int(round((y_tr.t0 - x_tr.t0) * pair.hf.fs))
    kwargs = dict(
        m=pair.m,
        w=w,
        win=win,
        mode=cfg.cca_mode,
        offset=offset,
        guard=y_tr.guard,
        lam_x=cfg.reg.lambda_x,
        lam_y=cfg.reg.lambda_y,
    )
    if cond is not None:
        feats, rows = cond
        kwargs.update(
            cond_feats=feats,
            cond_rows=rows,
            lam_z=max(cfg.reg.lambda_x, cfg.reg.lambda_y),
        )
    return TrialKernel(x_tr.samples, y_tr.samples, **kwargs)


def _pooled_cc(kernels, deltas, lam_x, lam_y):
    from ._kernel import _cell_solve

    cc = np.full(len(deltas), np.nan)
    for k, d in enumerate(deltas):
        parts = [tk.grams_at(int(d)) for tk in kernels]
        if any(p is None for p in parts):
            continue
        total = sum(p[3] for p in parts) - len(parts)
        Gxx = sum(p[0] for p in parts) / total
        gxy = sum(p[1] for p in parts) / total
        syy = sum(p[2] for p in parts) / total
        cc[k], _ = _cell_solve(Gxx, gxy, syy, lam_x, lam_y, want_u=False)
    return cc


def _profile_impl(pair, cfg, conditioning=None, domain=None):
    _validate_pair_cfg(pair, cfg)
    fs_hf = pair.hf.fs
    w = window_samples(cfg.stft, fs_hf)
    win = window_values(cfg.stft.window_fn, w)
    lags = lag_array(cfg.lag_grid)
    deltas = np.round(lags * fs_hf).astype(int)
    n_trials = pair.hf.n_trials
    n_reps = cfg.surrogate.n_reps
    seed = cfg.surrogate.seed

    conds = [None] * n_trials
    if conditioning is not None:
        if conditioning.n_trials != n_trials:
            raise ValidationError("conditioning series must be trial-aligned with the pair")
        conds = [
            _cond_setup(conditioning.trials[i], domain, cfg, pair.lf.trials[i],
                        cfg.stft.window_len, cfg.cca_mode)
            for i in range(n_trials)
        ]

    kernels = []
    obs = np.full((n_trials, len(lags)), np.nan)
    sur = np.full((n_trials, n_reps, len(lags)), np.nan)
    for i in range(n_trials):
        x_tr, y_tr = pair.hf.trials[i], pair.lf.trials[i]
        tk = _make_kernel(x_tr, y_tr, cfg=cfg, pair=pair, w=w, win=win, cond=conds[i])
        kernels.append(tk)
        obs[i] = tk.profile(deltas)
        for k in range(n_reps):
            rng = cell_rng(seed, i, k)
            xs = phase_randomize(x_tr, rng)
            ys = phase_randomize(y_tr, rng)
            tk_s = _make_kernel(xs, ys, cfg=cfg, pair=pair, w=w, win=win, cond=conds[i])
            sur[i, k] = tk_s.profile(deltas)

    valid = ~(np.any(np.isnan(obs), axis=0) | np.any(np.isnan(sur), axis=(0, 1)))
    dropped = [float(l) for l in lags[~valid]]
    lags = lags[valid]
    obs = obs[:, valid]
    sur = sur[:, :, valid]
    pool = sur.reshape(n_trials * n_reps, -1)

    if cfg.pooled:
        if conditioning is not None:
            raise ValidationError("pooled mode does not support conditioning")
        cc_pooled = _pooled_cc(kernels, deltas[valid], cfg.reg.lambda_x, cfg.reg.lambda_y)
        cc = cc_pooled[None, :]
        mean_cc = cc_pooled
        ci95 = None
        p_values = None
    else:
        cc = obs
        mean_cc = obs.mean(axis=0)
        if n_trials >= 2:
            sem = obs.std(axis=0, ddof=1) / np.sqrt(n_trials)
            ci95 = np.vstack([mean_cc - 1.96 * sem, mean_cc + 1.96 * sem])
        else:
            ci95 = None
        min_obs = 2 if cfg.test == "t" else 5
        if n_trials >= min_obs:
            p_values = np.array(
                [significance(obs[:, l], pool[:, l], cfg.test) for l in range(lags.size)]
            )
        else:
            p_values = None

    s_mean = pool.mean(axis=0)
    s_sem = pool.std(axis=0, ddof=1) / np.sqrt(pool.shape[0])
    surrogate_ci95 = np.vstack([s_mean - 1.96 * s_sem, s_mean + 1.96 * s_sem])
    return LagCCProfile(
        lags=lags,
        cc=cc,
        mean_cc=mean_cc,
        ci95=ci95,
        surrogate_mean=s_mean,
        surrogate_ci95=surrogate_ci95,
        p_values=p_values,
        window_markers=(-cfg.stft.window_len, cfg.stft.window_len),
        dropped_lags=dropped,
    )


def lag_cc_profile(pair, cfg):
    """Lag-CC profile of an MF pair with its surrogate null.

    Args:
        pair: MFPair (HF channel, LF channel).
        cfg: PipelineConfig; stft.hop must equal one LF sample interval.

    Returns:
        LagCCProfile over the configured lag grid (lags with insufficient
        overlap are dropped and recorded).
    """
    return _profile_impl(pair, cfg)


def conditional_lag_cc_profile(pair, conditioning, domain, cfg):
    """Lag-CC profile conditioned on a third signal.

    In the "time" domain the conditioning samples at each LF time are
    partialized out; in "time-frequency" the conditioning signal's own
    z-scored spectrogram (same window length, frames centered at the LF
    sample times) is partialized out.

    Args:
        pair: MFPair.
        conditioning: MultiTrialSeries, trial-aligned with the pair.
        domain: "time" or "time-frequency".
        cfg: PipelineConfig.

    Returns:
        LagCCProfile.
    """
    if domain not in ("time", "time-frequency"):
        raise ValidationError("conditioning domain must be time or time-frequency")
    return _profile_impl(pair, cfg, conditioning=conditioning, domain=domain)


def canonical_frequencies(pair, cfg, lag):
    """Trial-averaged CCA coefficient magnitudes |u| at one lag.

    Peaks are local maxima (endpoints included) above median + 2*MAD of the
    spectrum; f0 is the highest peak's frequency.
    """
    _validate_pair_cfg(pair, cfg)
    fs_hf = pair.hf.fs
    w = window_samples(cfg.stft, fs_hf)
    win = window_values(cfg.stft.window_fn, w)
    delta = int(round(lag * fs_hf))
    us = []
    for i in range(pair.hf.n_trials):
        tk = _make_kernel(pair.hf.trials[i], pair.lf.trials[i], cfg=cfg, pair=pair, w=w, win=win)
        rho, u = tk.cc_at(delta, want_u=True)
        if u is None:
            raise ValidationError(f"lag {lag} has insufficient overlap in trial {i}")
        us.append(np.abs(u))
    mean_abs_u = np.mean(us, axis=0)
    freqs = np.fft.rfftfreq(w, 1.0 / fs_hf)[1:]

    v = mean_abs_u
    is_peak = np.zeros(v.size, dtype=bool)
    if v.size >= 2:
        is_peak[0] = v[0] > v[1]
        is_peak[-1] = v[-1] > v[-2]
        if v.size > 2:
            is_peak[1:-1] = (v[1:-1] > v[:-2]) & (v[1:-1] > v[2:])
    med = np.median(v)
    mad = np.median(np.abs(v - med))
    thresh = med + 2 * mad
    peaks = [(float(freqs[i]), float(v[i])) for i in np.flatnonzero(is_peak) if v[i] > thresh]
    peaks.sort(key=lambda t: -t[1])
    f0 = peaks[0][0] if peaks else None
    return CanonicalFrequencyReport(freqs=freqs, mean_abs_u=mean_abs_u, peaks=peaks, f0=f0)


def cc_gain(pair, cfg, lag, bands):
    """CC change per trial when a frequency band is removed from HF.

    For each band, the HF trials are band-stopped and the CC at the probe
    lag recomputed; delta is filtered minus baseline. The baseline equals
    the lag_cc_profile value at the same lag (identical computation path).
    """
    from .spectral import bandstop

    _validate_pair_cfg(pair, cfg)
    fs_hf = pair.hf.fs
    for lo, hi in bands:
        if not (0 < lo < hi < fs_hf / 2):
            raise ValidationError(f"band [{lo}, {hi}] outside (0, {fs_hf / 2})")
    w = window_samples(cfg.stft, fs_hf)
    win = window_values(cfg.stft.window_fn, w)
    delta = int(round(lag * fs_hf))
    n_trials = pair.hf.n_trials

    def per_trial_cc(hf_trials):
        out = np.empty(n_trials)
        for i in range(n_trials):
            tk = _make_kernel(hf_trials[i], pair.lf.trials[i], cfg=cfg, pair=pair, w=w, win=win)
            rho, _ = tk.cc_at(delta)
            if np.isnan(rho):
                raise ValidationError(f"lag {lag} has insufficient overlap in trial {i}")
            out[i] = rho
        return out

    baseline = per_trial_cc(pair.hf.trials)
    delta_cc = np.empty((len(bands), n_trials))
    for b, (lo, hi) in enumerate(bands):
        filtered = [bandstop(tr, lo, hi) for tr in pair.hf.trials]
        delta_cc[b] = per_trial_cc(filtered) - baseline
    return CCGainReport(bands=[list(b) for b in bands], delta_cc=delta_cc, baseline=baseline)


def normalization_factor(hf, cfg, factor):
    """Self-predictability CC of the HF signal against its own decimation.

    Runs the pipeline at lag 0 with LF = lowpass_decimate(hf, factor);
    the per-trial CC calibrates how much of the raw CC a perfectly
    self-predictive signal could reach.

    Returns:
        per-trial array in (0, 1].
    """
    lf = MultiTrialSeries([lowpass_decimate(tr, factor) for tr in hf.trials])
    pair = MFPair(hf, lf, factor)
    cfg2 = replace(cfg, stft=replace(cfg.stft, hop=factor / hf.fs))
    fs_hf = hf.fs
    w = window_samples(cfg2.stft, fs_hf)
    win = window_values(cfg2.stft.window_fn, w)
    out = np.empty(hf.n_trials)
    for i in range(hf.n_trials):
        tk = _make_kernel(hf.trials[i], lf.trials[i], cfg=cfg2, pair=pair, w=w, win=win)
        rho, _ = tk.cc_at(0)
        if np.isnan(rho):
            raise ValidationError("insufficient overlap at lag 0")
        out[i] = rho
    return np.clip(out, 1e-12, 1.0)


def normalize_cc(raw_cc, factor):
    """Normalized CC = raw / factor, clipped to [0, 1]."""
    return np.clip(np.asarray(raw_cc, dtype=float) / np.asarray(factor, dtype=float), 0.0, 1.0)


def significance(observed, null, test="t"):
    """One-sided p for observed CC exceeding the surrogate null.

    test "t": Welch two-sample t, alternative observed > null (needs 2+
    observed values). test "ks": two-sample Kolmogorov-Smirnov (needs 5+
    per side).
    """
    observed = np.asarray(observed, dtype=float)
    null = np.asarray(null, dtype=float)
    if test == "t":
        if observed.size < 2 or null.size < 2:
            raise ValidationError("t test needs at least 2 values per sample")
        return float(stats.ttest_ind(observed, null, equal_var=False, alternative="greater").pvalue)
    if test == "ks":
        if observed.size < 5 or null.size < 5:
            raise ValidationError("ks test needs at least 5 values per sample")
        return float(stats.ks_2samp(observed, null).pvalue)
    raise ValidationError(f"test must be one of {TESTS}")


def _bh_mask(p, alpha):
    """Benjamini-Hochberg rejection mask at level alpha."""
    m = p.size
    order = np.argsort(p)
    thresholds = alpha * (np.arange(1, m + 1)) / m
    passed = p[order] <= thresholds
    mask = np.zeros(m, dtype=bool)
    if np.any(passed):
        kmax = int(np.max(np.flatnonzero(passed)))
        mask[order[: kmax + 1]] = True
    return mask


def _has_run(flags, k):
    run = 0
    for f in flags:
        run = run + 1 if f else 0
        if run >= k:
            return True
    return False


def _side_peak(lags, mean_cc, side_mask):
    if not np.any(side_mask):
        return None, None
    vals = np.where(side_mask, mean_cc, -np.inf)
    i = int(np.argmax(vals))
    return float(lags[i]), float(mean_cc[i])


def decide_direction(profile, w_t, alpha, k=3):
    """Direction verdict from a lag-CC profile.

    X to Y requires at least k consecutive BH-significant lags at lags below
    -W_t; Y to X symmetrically above +W_t; both gives "bidirectional",
    neither "none". Lags inside the +-W_t window are ignored (window-overlap
    ambiguity). Peak lag and CC per side are reported over the full negative
    and positive half-axes.
    """
    if profile.p_values is None:
        raise ValidationError("profile has no p-values (pooled or single-trial run)")
    if not (0 < alpha <= 0.5):
        raise ValidationError(f"alpha {alpha} outside (0, 0.5]")
    lags = profile.lags
    sig = _bh_mask(np.asarray(profile.p_values), alpha)
    neg = lags < -w_t - 1e-12
    pos = lags > w_t + 1e-12
    x2y = _has_run(sig[neg], k)
    y2x = _has_run(sig[pos], k)
    if x2y and y2x:
        verdict = "bidirectional"
    elif x2y:
        verdict = "X->Y"
    elif y2x:
        verdict = "Y->X"
    else:
        verdict = "none"
    peak_lag_n, peak_cc_n = _side_peak(lags, profile.mean_cc, lags < 0)
    peak_lag_p, peak_cc_p = _side_peak(lags, profile.mean_cc, lags > 0)
    return DirectionVerdict(
        verdict=verdict,
        support_x2y=lags[neg & sig],
        support_y2x=lags[pos & sig],
        peak_lag_x2y=peak_lag_n,
        peak_cc_x2y=peak_cc_n,
        peak_lag_y2x=peak_lag_p,
        peak_cc_y2x=peak_cc_p,
    )
