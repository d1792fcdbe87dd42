"""Tests for the ground-truth system factories and nonlinear couplings."""

import numpy as np
import pytest
from scipy.signal import hilbert

from mfcausal.errors import SimulationError, ValidationError
from mfcausal.simulators import (
    AmplitudeModParams,
    LogisticParams,
    PACParams,
    RosslerLorenzParams,
    amplitude_modulate,
    make_bidirectional_var41,
    make_trivariate,
    make_unidirectional_var4,
    pac_modulate,
    rk4_step,
    simulate_logistic,
    simulate_rossler_lorenz,
)
from mfcausal.timeseries import TimeSeries
from mfcausal.vargc import OscillatorSpec, check_stability, oscillator_coeffs


def diag_coeffs(pairs, fs):
    return oscillator_coeffs(OscillatorSpec(pairs=pairs, fs=fs))


class TestUnidirectionalVar4:
    def test_structure_x2y(self):
        m = make_unidirectional_var4("x2y")
        assert (m.n, m.r, m.fs) == (2, 4, 200.0)
        dx = diag_coeffs([(0.9, 80), (0.8, 4)], 200.0)
        dy = diag_coeffs([(0.85, 15), (0.7, 2)], 200.0)
        for k in range(4):
            assert m.A[k][0, 0] == pytest.approx(dx[k], abs=1e-12)
            assert m.A[k][1, 1] == pytest.approx(dy[k], abs=1e-12)
        assert [m.A[k][1, 0] for k in range(4)] == [-0.4, 0.7, -0.1, 0.0]
        assert all(m.A[k][0, 1] == 0.0 for k in range(4))

    def test_structure_y2x(self):
        m = make_unidirectional_var4("y2x")
        assert [m.A[k][0, 1] for k in range(4)] == [0.05, -0.05, 0.1, 0.0]
        assert all(m.A[k][1, 0] == 0.0 for k in range(4))

    def test_direction_validated(self):
        with pytest.raises(ValidationError):
            make_unidirectional_var4("both")

    def test_frozen_leading_coefficient(self):
        m = make_unidirectional_var4("x2y")
        # 2*0.9*cos(2 pi 80/200) + 2*0.8*cos(2 pi 4/200)
        want = 2 * 0.9 * np.cos(0.8 * np.pi) + 2 * 0.8 * np.cos(0.04 * np.pi)
        assert m.A[0][0, 0] == pytest.approx(want, abs=1e-12)
        assert m.A[0][0, 0] == pytest.approx(0.1311529322282594, abs=1e-9)


class TestBidirectionalVar41:
    def test_structure(self):
        m = make_bidirectional_var41()
        assert (m.n, m.r, m.fs) == (2, 41, 200.0)
        dX = diag_coeffs([(0.8, 4)], 200.0)
        dY = diag_coeffs([(0.9, 15)], 200.0)
        assert m.A[0][0, 0] == pytest.approx(dX[0], abs=1e-12)
        assert m.A[1][0, 0] == pytest.approx(dX[1], abs=1e-12)
        assert m.A[0][1, 1] == pytest.approx(dY[0], abs=1e-12)
        assert m.A[1][1, 1] == pytest.approx(dY[1], abs=1e-12)
        assert m.A[0][0, 0] == pytest.approx(1.5873835221031647, abs=1e-9)

    def test_coupling_taps(self):
        m = make_bidirectional_var41()
        x2y = [m.A[k][1, 0] for k in range(41)]
        assert x2y[20:23] == [-0.175, 0.35, -0.175]
        assert all(v == 0.0 for i, v in enumerate(x2y) if i not in (20, 21, 22))
        y2x = [m.A[k][0, 1] for k in range(41)]
        want = [0.000, 0.001, -0.014, -0.039, 0.026, 0.098,
                0.026, -0.039, -0.014, 0.001, 0.000]
        assert y2x[30:41] == want
        assert all(v == 0.0 for i, v in enumerate(y2x) if not 30 <= i <= 40)


class TestTrivariate:
    def test_chain_structure(self):
        m = make_trivariate("chain")
        assert (m.n, m.r, m.fs) == (3, 4, 200.0)
        assert [m.A[k][1, 0] for k in range(3)] == [-0.7, 1.5, 1.0]
        assert [m.A[k][2, 1] for k in range(3)] == [-0.3, 0.4, -0.3]
        assert all(m.A[k][2, 0] == 0.0 for k in range(4))  # no direct X1 -> Y
        assert all(m.A[k][0, 1] == 0.0 for k in range(4))

    def test_chain_lf_intermediate_same_model(self):
        a = make_trivariate("chain")
        b = make_trivariate("chain_lf_intermediate")
        assert all(np.array_equal(x, y) for x, y in zip(a.A, b.A))

    def test_parallel_structure(self):
        m = make_trivariate("parallel")
        assert [m.A[k][2, 0] for k in range(3)] == [-0.4, 0.7, -0.1]
        assert [m.A[k][2, 1] for k in range(3)] == [-0.8, 1.5, -1.0]
        assert all(m.A[k][1, 0] == 0.0 for k in range(4))  # X1, X2 uncoupled
        assert all(m.A[k][0, 1] == 0.0 for k in range(4))

    def test_stokes_var3_structure(self):
        m = make_trivariate("stokes_var3")
        assert (m.n, m.r, m.fs) == (3, 3, 120.0)
        assert [m.A[k][1, 0] for k in range(3)] == [-0.356, 0.7136, -0.356]
        assert [m.A[k][2, 1] for k in range(3)] == [-0.3098, 0.5, -0.3098]
        assert check_stability(m).stable

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValidationError):
            make_trivariate("ring")


def slow_series(seed=0, n=1000, fs=200.0, f=2.0):
    rng = np.random.default_rng(seed)
    t = np.arange(n) / fs
    return TimeSeries(np.sin(2 * np.pi * f * t) + 0.2 * rng.standard_normal(n),
                      fs=fs)


class TestPACModulate:
    def test_zero_input_gives_zero_output(self):
        out = pac_modulate(TimeSeries(np.zeros(100), fs=200.0))
        assert np.array_equal(out.samples, np.zeros(100))

    def test_envelope_nonnegative(self):
        x0 = slow_series(1)
        env = x0.samples + abs(x0.samples.min())
        assert np.all(env >= 0)
        out = pac_modulate(x0)
        assert np.all(np.abs(out.samples) <= env + 1e-12)

    def test_memoryless(self):
        x0 = slow_series(2)
        base = pac_modulate(x0).samples
        bumped = x0.samples.copy()
        # index 301 avoids carrier zero crossings (sin is 0 at t = 1.5 s);
        # bumping upward keeps the minimum sample unchanged
        bumped[301] += 0.5
        assert x0.samples.min() == bumped.min()
        out = pac_modulate(TimeSeries(bumped, fs=x0.fs)).samples
        diff = np.flatnonzero(np.abs(out - base) > 1e-12)
        assert np.array_equal(diff, [301])

    def test_demodulation_recovers_slow_signal(self):
        x0 = slow_series(3, n=4000)
        out = pac_modulate(x0)
        env = np.abs(hilbert(out.samples))[200:-200]
        want = (x0.samples + abs(x0.samples.min()))[200:-200]
        assert np.corrcoef(env, want)[0, 1] > 0.95

    def test_power_concentrated_at_carrier(self):
        from mfcausal.spectral import psd
        out = pac_modulate(slow_series(4, n=4000))
        freqs, power = psd(out, seg_len=1.0)
        band = (freqs >= 80) & (freqs <= 100)
        assert np.sum(power[band]) / np.sum(power) > 0.8

    def test_carrier_must_be_below_nyquist(self):
        with pytest.raises(ValidationError):
            pac_modulate(slow_series(5), PACParams(f_a=120.0))


class TestAmplitudeModulate:
    def test_sigmoid_gain_form(self):
        x0 = slow_series(6)
        p = AmplitudeModParams(kind="sigmoid", k=2.0, t_c=1.0)
        out = amplitude_modulate(x0, p)
        t = x0.times()
        want = x0.samples / (1.0 + np.exp(-2.0 * (t - 1.0)))
        assert np.allclose(out.samples, want, atol=1e-12)

    def test_sigmoid_center_defaults_to_mid_trial(self):
        x0 = TimeSeries(np.ones(401), fs=200.0)
        out = amplitude_modulate(x0, AmplitudeModParams(kind="sigmoid", k=5.0))
        mid = 200  # duration 2 s, center at t = 1.0007... -> nearest sample
        assert out.samples[mid] == pytest.approx(0.5, abs=0.01)
        assert out.samples[-1] > 0.9
        assert out.samples[0] < 0.1

    def test_flat_sigmoid_at_zero_steepness(self):
        x0 = slow_series(7)
        out = amplitude_modulate(x0, AmplitudeModParams(kind="sigmoid", k=0.0))
        assert np.allclose(out.samples, 0.5 * x0.samples, atol=1e-12)

    def test_periodic_gain_form_and_positivity(self):
        x0 = slow_series(8)
        p = AmplitudeModParams(kind="periodic", f_m=0.5, d=0.8)
        out = amplitude_modulate(x0, p)
        t = x0.times()
        gain = 1.0 - 0.4 + 0.4 * np.sin(2 * np.pi * 0.5 * t)
        assert np.allclose(out.samples, x0.samples * gain, atol=1e-12)
        assert gain.min() > 0

    def test_shallow_depth_changes_little(self):
        x0 = slow_series(9)
        out = amplitude_modulate(x0, AmplitudeModParams(kind="periodic", d=0.01))
        assert np.max(np.abs(out.samples - x0.samples)) <= \
            0.01 * np.max(np.abs(x0.samples)) + 1e-12

    def test_memoryless(self):
        x0 = slow_series(10)
        p = AmplitudeModParams(kind="periodic", d=0.5)
        base = amplitude_modulate(x0, p).samples
        bumped = x0.samples.copy()
        bumped[123] += 1.0
        out = amplitude_modulate(TimeSeries(bumped, fs=x0.fs), p).samples
        diff = np.flatnonzero(np.abs(out - base) > 1e-12)
        assert np.array_equal(diff, [123])

    def test_params_validated(self):
        with pytest.raises(ValidationError):
            AmplitudeModParams(kind="linear")
        with pytest.raises(ValidationError):
            AmplitudeModParams(d=0.0)
        with pytest.raises(ValidationError):
            AmplitudeModParams(d=1.5)


class TestLogistic:
    def test_uncoupled_matches_direct_iteration(self):
        p = LogisticParams(gamma_xy=0.0, gamma_yx=0.0, discard=50)
        xs, ys = simulate_logistic(p, n=200, seed=3)
        rng = np.random.default_rng(np.random.SeedSequence(entropy=3))
        x, y = rng.uniform(0.0, 1.0, 2)
        tx, ty = [], []
        for _ in range(250):
            # same algebraic form as the coupled update so rounding matches
            x = x * (p.r_x - p.r_x * x)
            y = y * (p.r_y - p.r_y * y)
            tx.append(x)
            ty.append(y)
        assert np.array_equal(xs.samples, np.array(tx[50:]))
        assert np.array_equal(ys.samples, np.array(ty[50:]))

    def test_confined_to_unit_interval(self):
        xs, ys = simulate_logistic(LogisticParams(gamma_yx=0.32), n=500, seed=4)
        for s in (xs.samples, ys.samples):
            assert np.all((s > 0) & (s < 1))

    def test_length_rate_and_determinism(self):
        p = LogisticParams(gamma_xy=0.02, gamma_yx=0.1)
        a = simulate_logistic(p, n=300, seed=5)
        b = simulate_logistic(p, n=300, seed=5)
        assert a[0].n == 300
        assert a[0].fs == 1.0
        assert np.array_equal(a[0].samples, b[0].samples)
        assert np.array_equal(a[1].samples, b[1].samples)

    def test_escaping_map_raises(self):
        with pytest.raises(SimulationError):
            simulate_logistic(LogisticParams(r_x=4.5), n=100, seed=6)

    def test_negative_coupling_rejected(self):
        with pytest.raises(ValidationError):
            LogisticParams(gamma_xy=-0.1)


class TestRosslerLorenz:
    def test_uncoupled_lorenz_ignores_rossler_initials(self):
        p = RosslerLorenzParams(C=0.0, T=1.0)
        a = simulate_rossler_lorenz(p, initial=[1.0, 0.5, 0.2, 1.0, 1.0, 1.0])
        b = simulate_rossler_lorenz(p, initial=[-2.0, 3.0, 0.8, 1.0, 1.0, 1.0])
        for ch in (3, 4, 5):
            assert np.array_equal(a[ch].samples, b[ch].samples)
        assert not np.allclose(a[0].samples, b[0].samples)

    def test_coupled_trajectory_bounded(self):
        p = RosslerLorenzParams(C=2.0, T=2.0)
        chans = simulate_rossler_lorenz(p, seed=0)
        assert all(np.max(np.abs(ch.samples)) < 100 for ch in chans)
        assert chans[0].n == 200
        assert chans[0].fs == 100.0

    def test_step_halving_agreement(self):
        state = np.array([1.0, 0.5, 0.2, 0.3, -0.1, 0.8])
        coarse = state.copy()
        for _ in range(2000):
            coarse = rk4_step(coarse, 1e-3, 6.0, 2.0)
        fine = state.copy()
        for _ in range(4000):
            fine = rk4_step(fine, 5e-4, 6.0, 2.0)
        assert np.sqrt(np.mean((coarse - fine) ** 2)) < 1e-3

    def test_divergence_detected(self):
        p = RosslerLorenzParams(C=0.0, T=0.5)
        with pytest.raises(SimulationError):
            simulate_rossler_lorenz(p, initial=[0.0, 0.0, 0.1, 2e6, 2e6, 2e6])

    def test_dt_validation(self):
        with pytest.raises(ValidationError):
            RosslerLorenzParams(dt_int=2e-3, fs_out=100.0)
        with pytest.raises(ValidationError):
            RosslerLorenzParams(dt_int=3e-4, fs_out=100.0)

    def test_initial_shape_validated(self):
        with pytest.raises(ValidationError):
            simulate_rossler_lorenz(RosslerLorenzParams(T=0.1), initial=[1.0, 2.0])
