"""VAR simulation, stability, oscillator parameterization, and Granger causality.

This is the ground-truth layer: simulate_var generates multi-trial data from
a coefficient model, oscillator_coeffs builds AR diagonals whose poles sit at
chosen (modulus, frequency) pairs, time_domain_gc runs the regression-based
GC test, and spectral_gc_analytic evaluates the exact bivariate
frequency-domain GC from the model's transfer function.
"""

from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import NumericalError, ValidationError
from .timeseries import MultiTrialSeries, TimeSeries


@dataclass
class VARModel:
    """VAR(r) coefficients: x_t = sum_tau A[tau] x_(t-tau) + e_t.

    Attributes:
        n: dimension.
        r: order.
        A: list of r coefficient matrices [n, n].
        sigma_e: innovation covariance (None means identity).
        fs: sampling rate of the generated data in Hz.
    """

    n: int
    r: int
    A: list
    sigma_e: np.ndarray = None
    fs: float = 1.0

    def __post_init__(self):
        if len(self.A) != self.r:
            raise ValidationError(f"expected {self.r} coefficient matrices, got {len(self.A)}")
        self.A = [np.asarray(a, dtype=float) for a in self.A]
        for a in self.A:
            if a.shape != (self.n, self.n):
                raise ValidationError(f"coefficient matrix shape {a.shape} != ({self.n}, {self.n})")
        if self.sigma_e is None:
            self.sigma_e = np.eye(self.n)
        self.sigma_e = np.asarray(self.sigma_e, dtype=float)
        if self.sigma_e.shape != (self.n, self.n):
            raise ValidationError("sigma_e has wrong shape")
        if np.any(np.abs(self.sigma_e - self.sigma_e.T) > 1e-12):
            raise ValidationError("sigma_e must be symmetric")
        if np.linalg.eigvalsh(self.sigma_e)[0] <= 0:
            raise ValidationError("sigma_e must be positive definite")


@dataclass
class OscillatorSpec:
    """One or two damped-oscillator poles: pairs of (modulus r, frequency Hz)."""

    pairs: list
    fs: float

    def __post_init__(self):
        if len(self.pairs) not in (1, 2):
            raise ValidationError("OscillatorSpec takes one or two (r, f) pairs")
        for r, f in self.pairs:
            if not (0 < r < 1):
                raise ValidationError(f"pole modulus {r} must be in (0, 1)")
            if not (0 <= f < self.fs / 2):
                raise ValidationError(f"pole frequency {f} must be below fs/2")


@dataclass
class SGCProfile:
    """Frequency-resolved GC in both directions; nonnegative everywhere."""

    freqs: np.ndarray
    gc_xy: np.ndarray
    gc_yx: np.ndarray


Stability = namedtuple("Stability", ["stable", "margin"])
GCResult = namedtuple("GCResult", ["gc", "p"])


def _companion(A):
    n = A[0].shape[0]
    r = len(A)
    C = np.zeros((n * r, n * r))
    C[:n, :] = np.hstack(A)
    if r > 1:
        C[n:, :-n] = np.eye(n * (r - 1))
    return C


def check_stability(model):
    """Stability of the reverse characteristic polynomial det(I - sum A z^tau).

    Returns:
        Stability(stable, margin) where margin = min root modulus - 1; the
        model is stable when every root lies outside the unit circle
        (margin > 0).
    """
    ev = np.linalg.eigvals(_companion(model.A))
    rad = np.max(np.abs(ev)) if ev.size else 0.0
    margin = np.inf if rad == 0 else 1.0 / rad - 1.0
    return Stability(stable=margin > 0, margin=float(margin))


def simulate_var(model, n_samples, n_trials, burn_in=1000, seed=0):
    """Simulate a stable VAR with Gaussian innovations.

    Args:
        model: VARModel; must be stable.
        n_samples: samples per trial after burn-in.
        n_trials: number of independent trials.
        burn_in: discarded initial samples (must be >= 10 * order).
        seed: RNG seed; the run is deterministic per seed.

    Returns:
        list of n MultiTrialSeries, one per channel.
    """
    st = check_stability(model)
    if not st.stable:
        raise ValidationError(f"model is unstable (stability margin {st.margin:.4g})")
    if burn_in < 10 * model.r:
        raise ValidationError(f"burn_in {burn_in} below 10 * order = {10 * model.r}")
    n, r = model.n, model.r
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    chol = np.linalg.cholesky(model.sigma_e)
    steps = burn_in + n_samples
    noise = rng.standard_normal((steps, n, n_trials))
    noise = np.einsum("ij,tjk->tik", chol, noise)
    Astack = np.hstack(model.A)  # [n, n*r]
    hist = np.zeros((n * r, n_trials))
    out = np.empty((steps, n, n_trials))
    for t in range(steps):
        xt = Astack @ hist + noise[t]
        out[t] = xt
        if r > 0:
            hist = np.vstack([xt, hist[:-n]]) if r > 1 else xt.copy()
    data = out[burn_in:]
    channels = []
    for ch in range(n):
        trials = [TimeSeries(data[:, ch, k], fs=model.fs) for k in range(n_trials)]
        channels.append(MultiTrialSeries(trials))
    return channels


def oscillator_coeffs(spec):
    """AR diagonal coefficients for the requested pole pairs.

    One pair (r, f) gives the AR(2) sequence (2 r cos(theta), -r^2) with
    theta = 2 pi f / fs. Two pairs give the AR(4) product polynomial whose
    roots have moduli 1/r_i at angles +-theta_i.
    """
    fs = spec.fs
    if len(spec.pairs) == 1:
        r, f = spec.pairs[0]
        c = np.cos(2 * np.pi * f / fs)
        return np.array([2 * r * c, -r * r])
    (r1, f1), (r2, f2) = spec.pairs
    c1 = np.cos(2 * np.pi * f1 / fs)
    c2 = np.cos(2 * np.pi * f2 / fs)
    a1 = 2 * r1 * c1 + 2 * r2 * c2
    a2 = -(r1**2 + r2**2 + 4 * r1 * r2 * c1 * c2)
    a3 = 2 * r1 * r2 * (r2 * c1 + r1 * c2)
    a4 = -(r1**2) * (r2**2)
    return np.array([a1, a2, a3, a4])


def _gc_design(channels, target, regressors, order):
    """Pooled lagged design matrix and target vector across trials."""
    n_trials = channels[0].n_trials
    Xs, ys = [], []
    for k in range(n_trials):
        series = {ch: channels[ch].trials[k].samples for ch in regressors}
        tgt = channels[target].trials[k].samples
        n = tgt.size
        cols = [series[ch][order - tau : n - tau] for ch in regressors for tau in range(1, order + 1)]
        Xs.append(np.column_stack(cols))
        ys.append(tgt[order:])
    return np.vstack(Xs), np.concatenate(ys)


def time_domain_gc(channels, source, target, conditioning=(), order=1):
    """Time-domain Granger causality with an F-test.

    Fits the target's autoregression with and without the source's history
    (conditioning channels included in both models); gc is the log ratio of
    residual variances.

    Args:
        channels: list of MultiTrialSeries, one per channel.
        source, target: channel indices.
        conditioning: extra channel indices included in both regressions.
        order: regression order (lags per channel).

    Returns:
        GCResult(gc, p).
    """
    if source == target:
        raise ValidationError("source and target must differ")
    if order < 1:
        raise ValidationError("order must be at least 1")
    cond = [c for c in conditioning if c not in (source, target)]
    full_set = [target] + cond + [source]
    reduced_set = [target] + cond
    n_params = len(full_set) * order
    total = channels[0].n_trials * (channels[0].n - order)
    if total < 20 * n_params:
        raise ValidationError(
            f"{total} usable samples for {n_params} parameters; need >= {20 * n_params}"
        )
    Xf, y = _gc_design(channels, target, full_set, order)
    Xr, _ = _gc_design(channels, target, reduced_set, order)
    bf, rss_f, rank_f, _ = np.linalg.lstsq(Xf, y, rcond=None)
    br, rss_r, rank_r, _ = np.linalg.lstsq(Xr, y, rcond=None)
    if rank_f < Xf.shape[1] or rank_r < Xr.shape[1]:
        raise NumericalError("rank-deficient GC regression")
    rss_f = float(rss_f[0]) if rss_f.size else float(np.sum((y - Xf @ bf) ** 2))
    rss_r = float(rss_r[0]) if rss_r.size else float(np.sum((y - Xr @ br) ** 2))
    gc = float(np.log(rss_r / rss_f))
    q = order
    dof = y.size - Xf.shape[1]
    fstat = ((rss_r - rss_f) / q) / (rss_f / dof)
    p = float(stats.f.sf(max(fstat, 0.0), q, dof))
    return GCResult(gc=gc, p=p)


def spectral_gc_analytic(model, freqs=None):
    """Exact bivariate spectral GC of a stable VAR model.

    Uses the transfer function H(f) = (I - sum A e^(-i 2 pi f tau / fs))^(-1)
    and spectral density S = H sigma_e H*, with the standard noise-covariance
    partialization. gc_xy is the influence of channel 0 on channel 1.

    Args:
        model: bivariate VARModel.
        freqs: frequency grid; default 512 points on (0, fs/2].

    Returns:
        SGCProfile.
    """
    if model.n != 2:
        raise ValidationError("spectral_gc_analytic handles bivariate models only")
    st = check_stability(model)
    if not st.stable:
        raise ValidationError(f"model is unstable (stability margin {st.margin:.4g})")
    if freqs is None:
        freqs = model.fs / 2 * np.arange(1, 513) / 512.0
    freqs = np.asarray(freqs, dtype=float)
    sigma = model.sigma_e
    sxx, syy, sxy = sigma[0, 0], sigma[1, 1], sigma[0, 1]
    gc_xy = np.zeros(freqs.size)
    gc_yx = np.zeros(freqs.size)
    for i, f in enumerate(freqs):
        Af = np.eye(2, dtype=complex)
        for tau, Ak in enumerate(model.A, start=1):
            Af -= Ak * np.exp(-2j * np.pi * f * tau / model.fs)
        H = np.linalg.inv(Af)
        S = H @ sigma @ H.conj().T
        # Orthogonalizing the source innovation against the target innovation
        # shrinks its variance to the partialized value while the causal
        # transfer element stays the plain off-diagonal entry of H, so the
        # measure vanishes identically when the lagged cross-taps are zero.
        s_y_x = syy - sxy**2 / sxx
        gc_yx[i] = np.log(np.real(S[0, 0]) / np.real(S[0, 0] - s_y_x * np.abs(H[0, 1]) ** 2))
        s_x_y = sxx - sxy**2 / syy
        gc_xy[i] = np.log(np.real(S[1, 1]) / np.real(S[1, 1] - s_x_y * np.abs(H[1, 0]) ** 2))
    return SGCProfile(freqs=freqs, gc_xy=np.maximum(gc_xy, 0.0), gc_yx=np.maximum(gc_yx, 0.0))
