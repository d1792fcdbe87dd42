"""Internal fast path for lag-CC evaluation.

Computes, per trial, the exact result of the public composition
stft -> zscore_per_frequency -> (magnitude) -> align_lagged -> cca
using a dense frame grid (every HF sample is a frame start), one batched FFT
per signal, and a closed-form ridge CCA solve for the univariate-LF case.
The pipeline module drives this over trials, lags, and surrogates.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .timeseries import VAR_EPS

MIN_PAIRS = 10


def dense_features(x, w, win, mode):
    """Per-frequency z-scored dense TFR with the DC column stripped.

    Args:
        x: trial samples (1-D float array).
        w: window length in samples.
        win: window values, length w.
        mode: "complex" or "magnitude" (modulus taken after z-scoring).

    Returns:
        [n_positions, w//2] array; row s is the frame starting at sample s
        (center sample s + w//2).
    """
    frames = sliding_window_view(x, w) * win
    F = np.fft.rfft(frames, axis=1)
    D = F - F.mean(axis=0)
    scale = np.sqrt(np.mean(np.abs(D) ** 2, axis=0))
    scale[scale**2 <= VAR_EPS] = np.inf
    Z = D / scale
    if mode == "magnitude":
        Z = np.abs(Z)
    return Z[:, 1:]


def zscore_1d(y):
    mu = y.mean()
    var = np.mean((y - mu) ** 2)
    if var <= VAR_EPS:
        return np.zeros_like(y)
    return (y - mu) / np.sqrt(var)


def _cell_solve(Gxx, gxy, syy, lam_x, lam_y, want_u):
    """rho (and optionally u) from centered Grams with ridge fractions."""
    p = Gxx.shape[0]
    Gr = Gxx + lam_x * np.mean(np.real(np.diag(Gxx))) * np.eye(p)
    w = np.linalg.solve(Gr, gxy)
    num = np.real(np.conj(gxy) @ w)
    denom = syy * (1.0 + lam_y)
    rho = np.sqrt(np.clip(num / denom, 0.0, 1.0)) if denom > 0 else 0.0
    if not want_u:
        return rho, None
    nrm = np.real(np.conj(w) @ Gxx @ w)
    u = w / np.sqrt(nrm) if nrm > VAR_EPS else w
    k = int(np.argmax(np.abs(u)))
    if np.abs(u[k]) > 0:
        u = u * (np.conj(u[k]) / np.abs(u[k]))
    return rho, u


def _partialize(Xc, yc, Zc, n, lam_z):
    """Partialized Grams of (X, y) given conditioning rows Zc."""
    Gzz = Zc.conj().T @ Zc / (n - 1)
    pz = Gzz.shape[0]
    Gzz_r = Gzz + lam_z * np.mean(np.real(np.diag(Gzz))) * np.eye(pz)
    Gxz = Xc.conj().T @ Zc / (n - 1)
    gzy = Zc.conj().T @ yc / (n - 1)
    Bx = np.linalg.solve(Gzz_r, Gxz.conj().T)
    by = np.linalg.solve(Gzz_r, gzy)
    Gxx = Xc.conj().T @ Xc / (n - 1) - Gxz @ Bx
    gxy = Xc.conj().T @ yc / (n - 1) - Gxz @ by
    syy = np.real(np.conj(yc) @ yc) / (n - 1) - np.real(np.conj(gzy) @ by)
    Gxx = 0.5 * (Gxx + Gxx.conj().T)
    return Gxx, gxy, syy


class TrialKernel:
    """Lag-CC evaluator for one (HF trial, LF trial) pair.

    Precomputes the dense feature matrix and the per-lag row geometry, then
    answers cc (and coefficient) queries per integer HF-sample lag delta.
    """

    def __init__(self, x, y, *, m, w, win, mode, offset, guard, lam_x, lam_y,
                 cond_feats=None, cond_rows=None, lam_z=None):
        self.Z = dense_features(x, w, win, mode)
        self.ys = zscore_1d(y)
        self.m = m
        self.w_half = w // 2
        self.offset = offset
        self.lam_x = lam_x
        self.lam_y = lam_y
        self.lam_z = lam_z
        n_lf = y.size
        j = np.arange(guard, n_lf - guard)
        if cond_feats is not None:
            # cond_rows maps LF index j to a frame row of cond_feats
            zr = cond_rows[j]
            ok = (zr >= 0) & (zr < cond_feats.shape[0])
            j, zr = j[ok], zr[ok]
            self.cond_feats = cond_feats
            self.zrows = zr
        else:
            self.cond_feats = None
            self.zrows = None
        self.j = j

    def cc_at(self, delta, want_u=False):
        """CC at an integer HF-sample lag; NaN when under 10 pairs."""
        s = self.m * self.j + self.offset + delta - self.w_half
        ok = (s >= 0) & (s < self.Z.shape[0])
        rows, cols = s[ok], self.j[ok]
        n = rows.size
        if n < MIN_PAIRS:
            return np.nan, None
        Xg = self.Z[rows]
        yg = self.ys[cols]
        Xc = Xg - Xg.mean(axis=0)
        yc = yg - yg.mean()
        if self.cond_feats is not None:
            Zg = self.cond_feats[self.zrows[ok]]
            Zc = Zg - Zg.mean(axis=0)
            Gxx, gxy, syy = _partialize(Xc, yc, Zc, n, self.lam_z)
        else:
            Gxx = Xc.conj().T @ Xc / (n - 1)
            gxy = Xc.conj().T @ yc / (n - 1)
            syy = np.real(np.conj(yc) @ yc) / (n - 1)
        return _cell_solve(Gxx, gxy, syy, self.lam_x, self.lam_y, want_u)

    def profile(self, deltas, want_u=False):
        cc = np.full(len(deltas), np.nan)
        us = [None] * len(deltas) if want_u else None
        for k, d in enumerate(deltas):
            rho, u = self.cc_at(int(d), want_u=want_u)
            cc[k] = rho
            if want_u:
                us[k] = u
        return (cc, us) if want_u else cc

    def grams_at(self, delta):
        """Centered Grams at a lag, for pooled-covariance aggregation."""
        s = self.m * self.j + self.offset + delta - self.w_half
        ok = (s >= 0) & (s < self.Z.shape[0])
        rows, cols = s[ok], self.j[ok]
        n = rows.size
        if n < MIN_PAIRS:
            return None
        Xg = self.Z[rows]
        yg = self.ys[cols]
        Xc = Xg - Xg.mean(axis=0)
        yc = yg - yg.mean()
        return Xc.conj().T @ Xc, Xc.conj().T @ yc, float(np.conj(yc) @ yc), n
