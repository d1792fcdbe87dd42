"""Stacked mixed-frequency VAR baseline and the runtime benchmark.

The stacked representation collects, for each LF interval, the m HF samples
inside it plus the LF sample into one (m+1)-dimensional observation at the
LF rate. A VAR fitted to that vector supports Wald tests of the HF -> LF and
LF -> HF coefficient blocks. benchmark times the spectral pipeline against
this baseline over growing trial counts.
"""

import time
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import NumericalError, ValidationError
from .vargc import VARModel


@dataclass
class StackedSeries:
    """LF-rate observations [n_rows, m+1]: m HF samples then the LF sample."""

    values: np.ndarray
    m: int
    fs: float
    t0: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != self.m + 1:
            raise ValidationError(
                f"stacked values must be [rows, m+1]; got {self.values.shape} with m={self.m}"
            )


@dataclass
class BenchmarkReport:
    """Wall times and log-log scaling slopes per method."""

    trial_counts: list
    times: dict
    slopes: dict
    threads: int = 1


def stack(pair):
    """Stack an MFPair into per-trial StackedSeries.

    Row t holds the m HF samples inside LF interval t followed by LF sample t.
    """
    m = pair.m
    out = []
    for hf_tr, lf_tr in zip(pair.hf.trials, pair.lf.trials):
        rows = min(lf_tr.n, hf_tr.n // m)
        hf_block = hf_tr.samples[: rows * m].reshape(rows, m)
        vals = np.column_stack([hf_block, lf_tr.samples[:rows]])
        out.append(StackedSeries(vals, m=m, fs=lf_tr.fs, t0=lf_tr.t0))
    return out


def unstack(ss):
    """Recover (hf_samples, lf_samples) from a StackedSeries."""
    return ss.values[:, : ss.m].ravel(), ss.values[:, ss.m]


def _pooled_fit(data, order):
    """Shared least-squares machinery: returns (model, design X, residuals)."""
    if order < 1:
        raise ValidationError("order must be at least 1")
    d = data[0].m + 1
    X_parts, Y_parts = [], []
    for ss in data:
        v = ss.values
        if v.shape[1] != d:
            raise ValidationError("stacked trials disagree on dimension")
        n = v.shape[0]
        if n <= order:
            continue
        lagged = [v[order - tau : n - tau] for tau in range(1, order + 1)]
        X_parts.append(np.hstack(lagged))
        Y_parts.append(v[order:])
    if not X_parts:
        raise ValidationError("no usable rows")
    X = np.vstack(X_parts)
    Y = np.vstack(Y_parts)
    if X.shape[0] < 20 * d * order:
        raise ValidationError(
            f"{X.shape[0]} rows for dimension {d} order {order}; need >= {20 * d * order}"
        )
    B, _, rank, _ = np.linalg.lstsq(X, Y, rcond=None)
    if rank < X.shape[1]:
        raise NumericalError("rank-deficient stacked VAR design")
    resid = Y - X @ B
    dof = max(X.shape[0] - X.shape[1], 1)
    sigma = resid.T @ resid / dof
    A = [B[tau * d : (tau + 1) * d].T for tau in range(order)]
    model = VARModel(n=d, r=order, A=A, sigma_e=0.5 * (sigma + sigma.T), fs=data[0].fs)
    return model, X, resid


def fit_stacked_var(data, order=1):
    """Pooled least-squares VAR fit over trials of stacked observations.

    Args:
        data: list of StackedSeries (equal m).
        order: VAR order r.

    Returns:
        VARModel of dimension m+1 at the LF rate, with residual covariance.

    Raises:
        ValidationError: under 20 * (m+1) * r usable rows.
        NumericalError: rank-deficient design.
    """
    model, _, _ = _pooled_fit(data, order)
    return model


MFVARTest = namedtuple("MFVARTest", ["stat", "p", "df"])


def mfvar_gc_test(data, direction, order=1, variant="wald"):
    """Test a directional coefficient block of the stacked VAR.

    direction "hf2lf" tests the HF components' lags in the LF equation;
    "lf2hf" tests the LF lags in the HF equations.

    Args:
        data: list of StackedSeries.
        direction: "hf2lf" or "lf2hf".
        order: VAR order.
        variant: "wald" (chi-squared) or "f" (small-sample F).

    Returns:
        MFVARTest(stat, p, df).
    """
    if direction not in ("hf2lf", "lf2hf"):
        raise ValidationError("direction must be hf2lf or lf2hf")
    model, X, resid = _pooled_fit(data, order)
    d = model.n
    m = d - 1
    n_rows = X.shape[0]
    sigma = resid.T @ resid / max(n_rows - X.shape[1], 1)
    XtX_inv = np.linalg.inv(X.T @ X)

    # coefficient layout: A[tau][i, j] multiplies regressor (tau*d + j) in
    # equation i; vec over (equation, regressor) pairs
    if direction == "hf2lf":
        eqs = [d - 1]
        srcs = list(range(m))
    else:
        eqs = list(range(m))
        srcs = [d - 1]
    terms = [(i, tau * d + j) for i in eqs for tau in range(order) for j in srcs]
    theta = np.array([model.A[c // d][i, c % d] for i, c in terms])
    q = len(terms)
    cov = np.empty((q, q))
    for a, (ia, ca) in enumerate(terms):
        for b, (ib, cb) in enumerate(terms):
            cov[a, b] = sigma[ia, ib] * XtX_inv[ca, cb]
    stat = float(theta @ np.linalg.solve(cov, theta))
    if variant == "wald":
        p = float(stats.chi2.sf(stat, q))
        return MFVARTest(stat=stat, p=p, df=q)
    if variant == "f":
        dof = n_rows * len(eqs) - X.shape[1] * len(eqs)
        fstat = stat / q
        p = float(stats.f.sf(fstat, q, dof))
        return MFVARTest(stat=fstat, p=p, df=q)
    raise ValidationError("variant must be wald or f")


def _slope(counts, times):
    lx, ly = np.log(np.asarray(counts, float)), np.log(np.asarray(times, float))
    return float(np.polyfit(lx, ly, 1)[0])


def benchmark(methods=("tfcca", "mfvar"), trial_counts=(2, 4, 8, 16, 32, 64),
              hf_samples=4000, lf_samples=800, seed=0, threads=1):
    """Time the pipeline and the stacked-VAR baseline over trial counts.

    Data come from a unidirectional bivariate VAR(1); the pipeline runs a
    single-lag analysis including 100 surrogate repetitions, matching the
    baseline's single-test workload.

    Args:
        methods: subset of {"tfcca", "mfvar"}.
        trial_counts: at least two counts spanning an 8x range.
        hf_samples, lf_samples: per-trial sizes (ratio defines m).
        seed: RNG seed for data generation.
        threads: recorded in the report (informational).

    Returns:
        BenchmarkReport with per-method times and log-log slopes.
    """
    from . import pipeline as pl
    from .spectral import STFTConfig
    from .surrogate import SurrogateConfig
    from .timeseries import MFPair, MultiTrialSeries, lowpass_decimate
    from .vargc import simulate_var

    counts = sorted(trial_counts)
    if len(counts) < 2 or counts[-1] < 8 * counts[0]:
        raise ValidationError("trial_counts must span at least an 8x range")
    for meth in methods:
        if meth not in ("tfcca", "mfvar"):
            raise ValidationError(f"unknown method {meth!r}")
    factor = int(round(hf_samples / lf_samples))
    fs_hf = 200.0
    A1 = np.array([[0.5, 0.0], [0.4, 0.3]])
    model = VARModel(n=2, r=1, A=[A1], fs=fs_hf)
    chans = simulate_var(model, n_samples=hf_samples, n_trials=counts[-1], seed=seed)
    lf_all = [lowpass_decimate(tr, factor) for tr in chans[1].trials]

    times = {meth: [] for meth in methods}
    for count in counts:
        hf = MultiTrialSeries(chans[0].trials[:count])
        lf = MultiTrialSeries(lf_all[:count])
        pair = MFPair(hf, lf)
        if "tfcca" in methods:
            cfg = pl.PipelineConfig(
                stft=STFTConfig(window_len=0.2, hop=factor / fs_hf, window_fn="rectangular"),
                lag_grid=(-0.1, -0.1, 0.025),
                surrogate=SurrogateConfig(n_reps=100, seed=seed),
            )
            t0 = time.perf_counter()
            pl.lag_cc_profile(pair, cfg)
            times["tfcca"].append(time.perf_counter() - t0)
        if "mfvar" in methods:
            t0 = time.perf_counter()
            stacked = stack(pair)
            mfvar_gc_test(stacked, "hf2lf", order=1)
            mfvar_gc_test(stacked, "lf2hf", order=1)
            times["mfvar"].append(time.perf_counter() - t0)
    slopes = {meth: _slope(counts, times[meth]) for meth in methods}
    return BenchmarkReport(trial_counts=list(counts), times=times, slopes=slopes, threads=threads)
