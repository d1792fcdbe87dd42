"""Tests for covariance estimation, (partial) CCA, and lagged alignment."""

import numpy as np
import pytest

from mfcausal.cca import (
    CCASolution,
    DataBlock,
    RegConfig,
    align_lagged,
    cca,
    covariances,
    partial_cca,
)
from mfcausal.errors import NumericalError, ValidationError
from mfcausal.spectral import STFTConfig, Spectrogram, magnitude, stft, zscore_per_frequency
from mfcausal.timeseries import TimeSeries

from oracles import eig_cca_rhos, random_blocks, residualize


class TestCovariances:
    def test_unbiased_normalization(self):
        X = np.array([[1.0], [2.0], [3.0]])
        Y = np.array([[2.0], [4.0], [6.0]])
        cov = covariances(DataBlock(X), DataBlock(Y))
        assert cov.Sxx[0, 0] == pytest.approx(1.0)  # var of 1,2,3 with n-1
        assert cov.Syy[0, 0] == pytest.approx(4.0)
        assert cov.Sxy[0, 0] == pytest.approx(2.0)

    def test_complex_conjugation_convention(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(50) + 1j * rng.standard_normal(50)
        cov = covariances(DataBlock(x[:, None]), DataBlock((1j * x)[:, None]))
        xc = x - x.mean()
        var = np.sum(xc * np.conj(xc)).real / 49
        # Sxy pairs x with conj(i x), so the result is -i times var(x)
        assert cov.Sxy[0, 0] == pytest.approx(-1j * var, abs=1e-12)

    def test_hermitian_blocks(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((40, 4)) + 1j * rng.standard_normal((40, 4))
        cov = covariances(DataBlock(X), DataBlock(X.copy()))
        assert np.allclose(cov.Sxx, cov.Sxx.conj().T)
        assert cov.hermitian


class TestCCAAgainstEigOracle:
    def test_hundred_random_instances(self):
        rng = np.random.default_rng(42)
        worst = 0.0
        for i in range(100):
            complex_values = bool(i % 2)
            X, Y = random_blocks(rng, complex_values=complex_values)
            lam = [0.0, 1e-3, 0.1][i % 3]
            sol = cca(DataBlock(X), DataBlock(Y), RegConfig(lam, lam))
            rho_oracle = eig_cca_rhos(X, Y, lam, lam)[0]
            worst = max(worst, abs(sol.rho - rho_oracle))
        assert worst < 1e-8

    def test_all_rhos_match_oracle_spectrum(self):
        rng = np.random.default_rng(7)
        X, Y = random_blocks(rng, n=120, p=5, q=4)
        sol = cca(DataBlock(X), DataBlock(Y), RegConfig(0.0, 0.0))
        oracle = eig_cca_rhos(X, Y)[:4]
        assert np.allclose(sol.all_rhos, oracle, atol=1e-8)


class TestCCAProperties:
    def test_swap_symmetry(self):
        rng = np.random.default_rng(2)
        X, Y = random_blocks(rng, n=100, p=4, q=3)
        a = cca(DataBlock(X), DataBlock(Y))
        b = cca(DataBlock(Y), DataBlock(X))
        assert abs(a.rho - b.rho) < 1e-10

    def test_all_rhos_sorted_within_unit_interval(self):
        rng = np.random.default_rng(3)
        X, Y = random_blocks(rng, n=80, p=6, q=5)
        sol = cca(DataBlock(X), DataBlock(Y))
        assert np.all(sol.all_rhos[:-1] >= sol.all_rhos[1:] - 1e-15)
        assert np.all((sol.all_rhos >= 0) & (sol.all_rhos <= 1))

    def test_invariance_to_invertible_transforms_at_zero_ridge(self):
        rng = np.random.default_rng(4)
        X, Y = random_blocks(rng, n=150, p=4, q=3)
        T = rng.standard_normal((4, 4)) + 4 * np.eye(4)
        S = rng.standard_normal((3, 3)) + 4 * np.eye(3)
        base = cca(DataBlock(X), DataBlock(Y), RegConfig(0.0, 0.0))
        moved = cca(DataBlock(X @ T), DataBlock(Y @ S), RegConfig(0.0, 0.0))
        assert abs(base.rho - moved.rho) < 1e-8

    def test_rho_nonincreasing_in_ridge(self):
        rng = np.random.default_rng(5)
        X, Y = random_blocks(rng, n=90, p=5, q=2)
        rhos = [
            cca(DataBlock(X), DataBlock(Y), RegConfig(lam, lam)).rho
            for lam in (0.0, 1e-4, 1e-2, 1.0, 10.0)
        ]
        assert all(a >= b - 1e-12 for a, b in zip(rhos, rhos[1:]))

    def test_real_inputs_give_real_vectors(self):
        rng = np.random.default_rng(6)
        X, Y = random_blocks(rng, n=70, p=3, q=2)
        sol = cca(DataBlock(X), DataBlock(Y))
        assert not np.iscomplexobj(sol.u)
        assert not np.iscomplexobj(sol.v)

    def test_u_normalized_under_raw_gram_with_fixed_phase(self):
        rng = np.random.default_rng(8)
        X, Y = random_blocks(rng, n=100, p=4, q=2, complex_values=True)
        sol = cca(DataBlock(X), DataBlock(Y))
        Xc = X - X.mean(axis=0)
        Gxx = Xc.conj().T @ Xc / (X.shape[0] - 1)
        assert (sol.u.conj() @ Gxx @ sol.u).real == pytest.approx(1.0, abs=1e-9)
        top = sol.u[np.argmax(np.abs(sol.u))]
        assert top.imag == pytest.approx(0.0, abs=1e-12)
        assert top.real > 0


class TestCCAErrors:
    def test_row_mismatch(self):
        with pytest.raises(ValidationError):
            cca(DataBlock(np.zeros((10, 2))), DataBlock(np.zeros((9, 2))))

    def test_too_few_rows(self):
        with pytest.raises(ValidationError):
            cca(DataBlock(np.zeros((2, 1))), DataBlock(np.zeros((2, 1))))

    def test_singular_block_named_in_error(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal((50, 1))
        X = np.hstack([x, x])  # rank 1
        Y = rng.standard_normal((50, 1))
        with pytest.raises(NumericalError, match="Sxx"):
            cca(DataBlock(X), DataBlock(Y), RegConfig(0.0, 0.0))


class TestPartialCCA:
    def test_matches_residual_regression_oracle(self):
        rng = np.random.default_rng(10)
        worst = 0.0
        for i in range(30):
            n = int(rng.integers(60, 150))
            Z = rng.standard_normal((n, int(rng.integers(1, 4))))
            X, Y = random_blocks(rng, n=n, p=3, q=2)
            X = X + Z @ rng.standard_normal((Z.shape[1], 3))
            Y = Y + Z @ rng.standard_normal((Z.shape[1], 2))
            got = partial_cca(DataBlock(X), DataBlock(Y), DataBlock(Z), RegConfig(0.0, 0.0)).rho
            want = cca(DataBlock(residualize(X, Z)), DataBlock(residualize(Y, Z)),
                       RegConfig(0.0, 0.0)).rho
            worst = max(worst, abs(got - want))
        assert worst < 1e-6

    def test_conditioning_removes_shared_driver(self):
        rng = np.random.default_rng(11)
        n = 400
        z = rng.standard_normal((n, 1))
        X = z @ np.ones((1, 3)) + 0.1 * rng.standard_normal((n, 3))
        Y = z @ np.ones((1, 2)) + 0.1 * rng.standard_normal((n, 2))
        plain = cca(DataBlock(X), DataBlock(Y)).rho
        partial = partial_cca(DataBlock(X), DataBlock(Y), DataBlock(z)).rho
        assert plain > 0.9
        assert partial < 0.3

    def test_singular_conditioning_block_rejected(self):
        rng = np.random.default_rng(12)
        z = rng.standard_normal((50, 1))
        Z = np.hstack([z, z])
        X, Y = random_blocks(rng, n=50, p=2, q=2)
        with pytest.raises(NumericalError, match="Szz"):
            partial_cca(DataBlock(X), DataBlock(Y), DataBlock(Z), RegConfig(0.0, 0.0))


class TestAlignLagged:
    def make_spec(self, n_frames=200, fs=200.0, hop_s=0.005, t0=0.0):
        values = (np.arange(n_frames)[:, None] + np.zeros((1, 3))).astype(complex)
        frame_times = t0 + 0.1 + hop_s * np.arange(n_frames)
        freqs = np.array([0.0, 50.0, 100.0])
        return Spectrogram(values=values, frame_times=frame_times, freqs=freqs,
                           source_fs=fs)

    def test_zero_lag_pairs_frames_at_sample_times(self):
        rng = np.random.default_rng(13)
        hf = TimeSeries(rng.standard_normal(2000), fs=200.0)
        lf = TimeSeries(rng.standard_normal(400), fs=40.0)
        spec, _ = zscore_per_frequency(stft(hf, STFTConfig(window_len=0.2, hop=0.025)))
        X, Y = align_lagged(spec, lf, 0.0)
        assert X.values.shape[0] == Y.values.shape[0]
        # frames start at t = 0.1 and end at 9.9; LF samples run 0 .. 9.975,
        # so exactly the samples j = 4 .. 396 find a matching frame
        assert X.values.shape[0] == 393

    def test_lag_shifts_selected_rows(self):
        spec = self.make_spec()
        lf = TimeSeries(np.zeros(30), fs=40.0, t0=0.1)
        x0, _ = align_lagged(spec, lf, 0.0)
        xp, _ = align_lagged(spec, lf, 0.05)
        # +50 ms at a 5 ms frame spacing moves every row index by 10
        assert np.allclose(xp.values[:, 0] - x0.values[: xp.values.shape[0], 0], 10)

    def test_lag_quantized_to_hf_grid(self):
        spec = self.make_spec()
        lf = TimeSeries(np.zeros(30), fs=40.0, t0=0.1)
        a, _ = align_lagged(spec, lf, 0.0501)
        b, _ = align_lagged(spec, lf, 0.05)
        assert np.array_equal(a.values, b.values)

    def test_insufficient_overlap_rejected(self):
        spec = self.make_spec(n_frames=40)
        lf = TimeSeries(np.zeros(30), fs=40.0, t0=0.1)
        with pytest.raises(ValidationError):
            align_lagged(spec, lf, 0.9)


@pytest.fixture(scope="module")
def pair_trial(uni_x2y_small):
    hf = uni_x2y_small.hf.trials[0]
    lf = uni_x2y_small.lf.trials[0]
    return hf, lf


class TestKernelMatchesPublicComposition:
    """The internal per-trial kernel must reproduce stft -> zscore ->
    (magnitude) -> align -> cca exactly on a dense spectrogram."""

    @pytest.mark.parametrize("mode", ["complex", "magnitude"])
    @pytest.mark.parametrize("lag", [-0.1, -0.035, 0.0, 0.085])
    def test_rho_matches(self, pair_trial, mode, lag):
        from mfcausal._kernel import TrialKernel
        from mfcausal.timeseries import zscore

        hf, lf = pair_trial
        w = int(round(0.15 * hf.fs))
        dense = STFTConfig(window_len=0.15, hop=1.0 / hf.fs, window_fn="hann")
        spec, _ = zscore_per_frequency(stft(hf, dense))
        if mode == "magnitude":
            spec = magnitude(spec)
        lf_z = zscore(lf)
        X, Y = align_lagged(spec, lf_z, lag)
        Xs = DataBlock(X.values[:, 1:])  # drop the 0 Hz column
        public = cca(Xs, Y, RegConfig()).rho

        from mfcausal.spectral import window_values

        tk = TrialKernel(
            hf.samples, lf.samples, m=uni_m(hf, lf), w=w,
            win=window_values("hann", w), mode=mode,
            offset=int(round((lf.t0 - hf.t0) * hf.fs)), guard=lf.guard,
            lam_x=1e-3, lam_y=1e-3,
        )
        rho, u = tk.cc_at(int(round(lag * hf.fs)), want_u=True)
        assert rho == pytest.approx(public, abs=1e-10)

    def test_u_matches(self, pair_trial):
        from mfcausal._kernel import TrialKernel
        from mfcausal.spectral import window_values
        from mfcausal.timeseries import zscore

        hf, lf = pair_trial
        w = int(round(0.15 * hf.fs))
        dense = STFTConfig(window_len=0.15, hop=1.0 / hf.fs, window_fn="rectangular")
        spec, _ = zscore_per_frequency(stft(hf, dense))
        X, Y = align_lagged(spec, zscore(lf), -0.1)
        sol = cca(DataBlock(X.values[:, 1:]), Y, RegConfig())
        tk = TrialKernel(
            hf.samples, lf.samples, m=uni_m(hf, lf), w=w,
            win=window_values("rectangular", w), mode="complex",
            offset=int(round((lf.t0 - hf.t0) * hf.fs)), guard=lf.guard,
            lam_x=1e-3, lam_y=1e-3,
        )
        rho, u = tk.cc_at(int(round(-0.1 * hf.fs)), want_u=True)
        assert np.max(np.abs(u - sol.u)) < 1e-8


def uni_m(hf, lf):
    return int(round(hf.fs / lf.fs))
