"""Phase-randomized surrogate data.

A surrogate keeps the Fourier magnitude spectrum of the original signal (so
its autocovariance is preserved) while drawing fresh uniform phases, which
destroys any cross-signal temporal alignment. The DC and Nyquist bins keep
their original values, so the mean is preserved and the output is real.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .timeseries import TimeSeries


@dataclass
class SurrogateConfig:
    """Number of surrogate repetitions and the base seed.

    n_reps is bounded to [100, 500] by default; pass enforce_range=False to
    run outside that range (used by fast tests).
    """

    n_reps: int = 100
    seed: int = 0
    enforce_range: bool = True

    def __post_init__(self):
        if self.n_reps < 2:
            raise ValidationError("n_reps must be at least 2")
        if self.enforce_range and not (100 <= self.n_reps <= 500):
            raise ValidationError(
                f"n_reps {self.n_reps} outside [100, 500]; "
                "set enforce_range=False to override"
            )


def cell_rng(seed, trial, rep):
    """Deterministic per-(trial, repetition) generator.

    Derived via a spawn key so any parallel schedule over cells reproduces
    the serial results bit for bit.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(trial, rep)))


def phase_randomize(ts, rng):
    """One phase-randomized surrogate of a series.

    Args:
        ts: input TimeSeries (length >= 4).
        rng: numpy Generator supplying the phases.

    Returns:
        TimeSeries with identical length, fs, and bin-wise Fourier magnitudes.
    """
    if ts.n < 4:
        raise ValidationError("phase_randomize needs at least 4 samples")
    spec = np.fft.rfft(ts.samples)
    n_interior = len(spec) - 2 if ts.n % 2 == 0 else len(spec) - 1
    phases = rng.uniform(0.0, 2.0 * np.pi, n_interior)
    new = spec.copy()
    hi = 1 + n_interior
    new[1:hi] = np.abs(spec[1:hi]) * np.exp(1j * phases)
    out = np.fft.irfft(new, n=ts.n)
    return TimeSeries(out, fs=ts.fs, t0=ts.t0, guard=ts.guard)
