"""Regularized canonical correlation analysis, partial CCA, and lag alignment.

The solver operates on real or complex data blocks through Hermitian sample
covariances. The leading canonical correlation is computed via the whitened
singular value decomposition Sxx^(-1/2) Sxy Syy^(-1/2), which is numerically
stabler than the raw generalized eigenproblem (the eigenproblem form is kept
in the test suite as an independent oracle).
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .timeseries import VAR_EPS

COND_LIMIT = 1e12


@dataclass
class DataBlock:
    """Observations-by-features matrix, real or complex.

    centered marks whether column means have already been removed; the
    solver centers uncentered blocks internally.
    """

    values: np.ndarray
    centered: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.ndim != 2:
            raise ValidationError("DataBlock values must be two-dimensional")
        if self.values.shape[1] < 1:
            raise ValidationError("DataBlock needs at least one column")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("DataBlock contains NaN or Inf")

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def n_cols(self):
        return self.values.shape[1]


@dataclass
class CovarianceSet:
    """Sample covariances Sxx [p,p], Syy [q,q], Sxy [p,q].

    Sxx and Syy are Hermitian positive semi-definite; Syx is Sxy's conjugate
    transpose and is not stored. Convention: S_ab = A^T conj(B) / (n - 1)
    on centered blocks.
    """

    Sxx: np.ndarray
    Syy: np.ndarray
    Sxy: np.ndarray
    hermitian: bool = True


@dataclass
class RegConfig:
    """Ridge strengths as fractions of the mean covariance diagonal."""

    lambda_x: float = 1e-3
    lambda_y: float = 1e-3

    def __post_init__(self):
        if self.lambda_x < 0 or self.lambda_y < 0:
            raise ValidationError("ridge strengths must be nonnegative")


@dataclass
class CCASolution:
    """Leading canonical correlation and coefficient vectors.

    rho = all_rhos[0]; u and v are scaled to unit canonical-variate variance
    (u ~ X u has variance 1 on the data), with u's largest-modulus entry made
    real-positive so coefficient spectra are comparable across trials.
    """

    rho: float
    u: np.ndarray
    v: np.ndarray
    all_rhos: np.ndarray


def _centered(block):
    vals = block.values
    if block.centered:
        return vals
    return vals - vals.mean(axis=0)


def covariances(X, Y):
    """Sample covariances of two equal-row blocks (unbiased, n-1).

    Complex columns follow S_ab = A^T conj(B) / (n - 1): for columns x and
    i*x the cross entry is -i*var(x). Hermitian symmetry of Sxx and Syy is
    enforced exactly.
    """
    if X.n_rows != Y.n_rows:
        raise ValidationError(f"row mismatch: {X.n_rows} vs {Y.n_rows}")
    if X.n_rows < 2:
        raise ValidationError("need at least 2 rows for covariances")
    Xc, Yc = _centered(X), _centered(Y)
    n = Xc.shape[0]
    Sxx = Xc.T @ np.conj(Xc) / (n - 1)
    Syy = Yc.T @ np.conj(Yc) / (n - 1)
    Sxy = Xc.T @ np.conj(Yc) / (n - 1)
    Sxx = 0.5 * (Sxx + Sxx.conj().T)
    Syy = 0.5 * (Syy + Syy.conj().T)
    return CovarianceSet(Sxx=Sxx, Syy=Syy, Sxy=Sxy)


def _ridge(G, lam):
    if lam <= 0 or G.shape[0] == 0:
        return G
    return G + lam * np.mean(np.real(np.diag(G))) * np.eye(G.shape[0])


def _isqrt_hermitian(G, name):
    """Inverse principal square root of a Hermitian PSD matrix."""
    evals, evecs = np.linalg.eigh(G)
    top = evals[-1]
    if top <= 0 or evals[0] <= 0 or top / evals[0] >= COND_LIMIT:
        raise NumericalError(
            f"{name} is singular or ill-conditioned after regularization "
            f"(eigenvalue range {evals[0]:.3g} .. {top:.3g})"
        )
    return (evecs / np.sqrt(evals)) @ evecs.conj().T


def _solve_from_grams(Gxx, Gyy, Gxy, reg):
    """Whitened-SVD CCA on standard Grams G_ab = A^H B / (n-1)."""
    Wx = _isqrt_hermitian(_ridge(Gxx, reg.lambda_x), "Sxx")
    Wy = _isqrt_hermitian(_ridge(Gyy, reg.lambda_y), "Syy")
    M = Wx @ Gxy @ Wy
    U, s, Vh = np.linalg.svd(M)
    all_rhos = np.clip(s, 0.0, 1.0)
    u = Wx @ U[:, 0]
    v = Wy @ Vh.conj().T[:, 0]

    # unit canonical-variate variance under the raw (unregularized) Grams
    for vec, G in ((u, Gxx), (v, Gyy)):
        nrm = np.real(np.conj(vec) @ G @ vec)
        if nrm > VAR_EPS:
            vec /= np.sqrt(nrm)
    k = int(np.argmax(np.abs(u)))
    if np.abs(u[k]) > 0:
        u = u * (np.conj(u[k]) / np.abs(u[k]))
    c = np.conj(u) @ Gxy @ v
    if np.abs(c) > 0:
        v = v * (np.conj(c) / np.abs(c))
    if not np.iscomplexobj(Gxy):
        u, v = np.real(u), np.real(v)
    return CCASolution(rho=float(all_rhos[0]), u=u, v=v, all_rhos=all_rhos)


def _grams(*blocks):
    mats = [_centered(b) for b in blocks]
    n = mats[0].shape[0]
    return mats, n


def cca(X, Y, reg=None):
    """Leading canonical correlation between two data blocks.

    Args:
        X, Y: DataBlocks with equal row counts.
        reg: RegConfig; defaults to lambda = 1e-3 of the mean diagonal.

    Returns:
        CCASolution with rho in [0, 1] and coefficient vectors u, v.

    Raises:
        NumericalError: if a regularized covariance block is singular or its
            condition number reaches 1e12 (the message names the block).
    """
    reg = reg or RegConfig()
    if X.n_rows != Y.n_rows:
        raise ValidationError(f"row mismatch: {X.n_rows} vs {Y.n_rows}")
    if X.n_rows < 3:
        raise ValidationError("need at least 3 rows for CCA")
    (Xc, Yc), n = _grams(X, Y)
    Gxx = Xc.conj().T @ Xc / (n - 1)
    Gyy = Yc.conj().T @ Yc / (n - 1)
    Gxy = Xc.conj().T @ Yc / (n - 1)
    return _solve_from_grams(Gxx, Gyy, Gxy, reg)


def partial_cca(X, Y, Z, reg=None):
    """CCA between X and Y after removing the linear influence of Z.

    The partialized covariance S_uv|z = S_uv - S_uz S_zz^(-1) S_zv feeds the
    same whitened-SVD solver. Z's covariance gets a ridge of
    max(lambda_x, lambda_y) before inversion. With zero regularization this
    equals plain CCA on the least-squares residuals of X|Z and Y|Z.
    """
    reg = reg or RegConfig()
    if not (X.n_rows == Y.n_rows == Z.n_rows):
        raise ValidationError(
            f"row mismatch: X {X.n_rows}, Y {Y.n_rows}, Z {Z.n_rows}"
        )
    if X.n_rows < 3:
        raise ValidationError("need at least 3 rows for CCA")
    (Xc, Yc, Zc), n = _grams(X, Y, Z)
    Gxx = Xc.conj().T @ Xc / (n - 1)
    Gyy = Yc.conj().T @ Yc / (n - 1)
    Gxy = Xc.conj().T @ Yc / (n - 1)
    Gzz = Zc.conj().T @ Zc / (n - 1)
    Gxz = Xc.conj().T @ Zc / (n - 1)
    Gyz = Yc.conj().T @ Zc / (n - 1)
    Gzz_r = _ridge(Gzz, max(reg.lambda_x, reg.lambda_y))
    cond = np.linalg.cond(Gzz_r)
    if not np.isfinite(cond) or cond >= COND_LIMIT:
        raise NumericalError(f"Szz is singular or ill-conditioned (cond {cond:.3g})")
    Bx = np.linalg.solve(Gzz_r, Gxz.conj().T)  # Gzz^-1 Gzx
    By = np.linalg.solve(Gzz_r, Gyz.conj().T)
    Gxx_p = Gxx - Gxz @ Bx
    Gyy_p = Gyy - Gyz @ By
    Gxy_p = Gxy - Gxz @ By
    Gxx_p = 0.5 * (Gxx_p + Gxx_p.conj().T)
    Gyy_p = 0.5 * (Gyy_p + Gyy_p.conj().T)
    return _solve_from_grams(Gxx_p, Gyy_p, Gxy_p, reg)


def align_lagged(hf_spec, lf, lag):
    """Pair spectrogram frames with LF samples at a signed lag.

    The frame paired with the LF sample at time T sits at T + lag, with the
    lag quantized to the HF sample grid. Negative lag therefore pairs HF
    history with each LF sample (HF past predicting LF future, the X to Y
    side). Pairs are kept when a frame exists within half an HF sample of
    the target time; LF guard samples are excluded.

    Args:
        hf_spec: Spectrogram of the HF signal (any frame grid; the pipeline
            uses a dense one so every HF-sample lag is representable).
        lf: low-rate TimeSeries.
        lag: lag in seconds.

    Returns:
        (X, Y): DataBlocks of matched frame rows and LF samples (one column).

    Raises:
        ValidationError: fewer than 10 overlapping pairs.
    """
    fs_hf = hf_spec.source_fs
    lag_q = np.round(lag * fs_hf) / fs_hf
    ft = hf_spec.frame_times
    if len(ft) < 2:
        raise ValidationError("spectrogram has fewer than 2 frames")
    hop = ft[1] - ft[0]
    j = np.arange(lf.guard, lf.n - lf.guard)
    target = lf.t0 + j / lf.fs + lag_q
    idx = np.round((target - ft[0]) / hop).astype(int)
    ok = (idx >= 0) & (idx < len(ft))
    ok[ok] &= np.abs(ft[idx[ok]] - target[ok]) <= 0.5 / fs_hf + 1e-12
    j, idx = j[ok], idx[ok]
    if j.size < 10:
        raise ValidationError(
            f"only {j.size} overlapping pairs at lag {lag}; need at least 10"
        )
    X = DataBlock(hf_spec.values[idx])
    Y = DataBlock(lf.samples[j][:, None])
    return X, Y
