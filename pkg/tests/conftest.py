"""Shared fixtures: small simulated systems reused across test modules."""

import numpy as np
import pytest

import mfcausal as mf


@pytest.fixture(scope="session")
def uni_x2y_small():
    """Six 6-second trials of the unidirectional X-to-Y system, decimated x5."""
    model = mf.make_unidirectional_var4("x2y")
    x, y = mf.simulate_var(model, n_samples=1200, n_trials=6, seed=11)
    lf = mf.MultiTrialSeries([mf.lowpass_decimate(tr, 5) for tr in y.trials])
    return mf.MFPair(x, lf)


@pytest.fixture(scope="session")
def white_pair_small():
    """Independent white-noise HF/LF pair (no flow in either direction)."""
    rng = np.random.default_rng(5)
    hf = mf.MultiTrialSeries(
        [mf.TimeSeries(rng.standard_normal(1000), fs=200.0) for _ in range(4)]
    )
    lf = mf.MultiTrialSeries(
        [mf.TimeSeries(rng.standard_normal(200), fs=40.0) for _ in range(4)]
    )
    return mf.MFPair(hf, lf)
