"""Directed spectral information flow between mixed-frequency time series.

The core analysis correlates the time-frequency representation of a fast
signal with a slow signal at a grid of time lags via regularized canonical
correlation, reads direction from the lag asymmetry against a
phase-randomized surrogate null, and attributes the flow to driving
frequency bands. Ground-truth simulators, an analytic spectral
Granger-causality oracle, and a stacked mixed-frequency VAR baseline
support validation end to end.
"""

from .errors import (
    MFCausalError,
    NumericalError,
    SimulationError,
    UsageError,
    ValidationError,
)
from .timeseries import (
    MFPair,
    MultiTrialSeries,
    TimeSeries,
    detrend_linear,
    lagged_xcorr,
    lowpass_decimate,
    zscore,
)
from .spectral import (
    Spectrogram,
    STFTConfig,
    bandstop,
    magnitude,
    psd,
    stft,
    zscore_per_frequency,
)
from .cca import (
    CCASolution,
    CovarianceSet,
    DataBlock,
    RegConfig,
    align_lagged,
    cca,
    covariances,
    partial_cca,
)
from .surrogate import SurrogateConfig, cell_rng, phase_randomize
from .pipeline import (
    CanonicalFrequencyReport,
    CCGainReport,
    DirectionVerdict,
    LagCCProfile,
    PipelineConfig,
    canonical_frequencies,
    cc_gain,
    conditional_lag_cc_profile,
    decide_direction,
    lag_cc_profile,
    normalization_factor,
    normalize_cc,
    significance,
)
from .vargc import (
    OscillatorSpec,
    SGCProfile,
    VARModel,
    check_stability,
    oscillator_coeffs,
    simulate_var,
    spectral_gc_analytic,
    time_domain_gc,
)
from .simulators import (
    AmplitudeModParams,
    LogisticParams,
    PACParams,
    RosslerLorenzParams,
    amplitude_modulate,
    make_bidirectional_var41,
    make_trivariate,
    make_unidirectional_var4,
    pac_modulate,
    simulate_logistic,
    simulate_rossler_lorenz,
)
from .mfvar import (
    BenchmarkReport,
    StackedSeries,
    benchmark,
    fit_stacked_var,
    mfvar_gc_test,
    stack,
    unstack,
)
from .io import Dataset, RunResult, ingest_csv, load_channel, yoy_growth

__version__ = "0.1.0"
