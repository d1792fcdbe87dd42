"""Ground-truth systems: VAR factories, nonlinear couplings, and chaotic maps.

The VAR factories return coefficient models whose diagonal blocks are damped
oscillators at chosen frequencies and whose off-diagonal taps define the
direction of influence. pac_modulate and amplitude_modulate wrap a simulated
signal in a nonlinear (but memoryless) envelope. simulate_logistic iterates
the coupled two-species logistic map, and simulate_rossler_lorenz integrates
the unidirectionally coupled Rossler-Lorenz system.
"""

from dataclasses import dataclass

import numpy as np

from .errors import SimulationError, ValidationError
from .timeseries import TimeSeries
from .vargc import OscillatorSpec, VARModel, oscillator_coeffs


@dataclass
class PACParams:
    """Carrier frequency for phase-amplitude coupling; offset is |min| per trial."""

    f_a: float = 90.0


@dataclass
class AmplitudeModParams:
    """Envelope for amplitude modulation.

    kind "sigmoid": gain = logistic(k * (t - t_c)); t_c defaults to mid-trial.
    kind "periodic": gain = 1 - d/2 + (d/2) sin(2 pi f_m t), strictly positive.
    """

    kind: str = "sigmoid"
    k: float = 1.0
    t_c: float = None
    f_m: float = 0.2
    d: float = 0.8

    def __post_init__(self):
        if self.kind not in ("sigmoid", "periodic"):
            raise ValidationError("kind must be sigmoid or periodic")
        if not (0 < self.d <= 1):
            raise ValidationError("depth d must be in (0, 1]")


@dataclass
class LogisticParams:
    """Coupled logistic map parameters.

    gamma_xy couples Y into X's equation (Y drives X); gamma_yx couples X
    into Y's equation (X drives Y).
    """

    r_x: float = 3.7
    r_y: float = 3.8
    gamma_xy: float = 0.0
    gamma_yx: float = 0.0
    discard: int = 100

    def __post_init__(self):
        if self.gamma_xy < 0 or self.gamma_yx < 0:
            raise ValidationError("coupling strengths must be nonnegative")


@dataclass
class RosslerLorenzParams:
    """Rossler (timescale alpha) driving Lorenz through C * x2^2."""

    alpha: float = 6.0
    C: float = 2.0
    dt_int: float = 1e-3
    fs_out: float = 100.0
    T: float = 20.0

    def __post_init__(self):
        if self.dt_int > 1.0 / (10 * self.fs_out):
            raise ValidationError("dt_int must be at most 1/(10 * fs_out)")
        step = 1.0 / (self.fs_out * self.dt_int)
        if abs(step - round(step)) > 1e-9:
            raise ValidationError("1/dt_int must be an integer multiple of fs_out")


def _pair_diag(r1, f1, r2, f2, fs):
    return oscillator_coeffs(OscillatorSpec(pairs=[(r1, f1), (r2, f2)], fs=fs))


def _single_diag(r, f, fs):
    return oscillator_coeffs(OscillatorSpec(pairs=[(r, f)], fs=fs))


def make_unidirectional_var4(direction="x2y"):
    """Bivariate VAR(4), fs 200 Hz; X oscillates at 80 and 4 Hz, Y at 15 and 2 Hz.

    direction "x2y" puts taps (-0.4, 0.7, -0.1) on Y's equation from X;
    "y2x" puts taps (0.05, -0.05, 0.1) on X's equation from Y.
    """
    fs = 200.0
    dx = _pair_diag(0.9, 80, 0.8, 4, fs)
    dy = _pair_diag(0.85, 15, 0.7, 2, fs)
    A = [np.zeros((2, 2)) for _ in range(4)]
    for k in range(4):
        A[k][0, 0] = dx[k]
        A[k][1, 1] = dy[k]
    if direction == "x2y":
        A[0][1, 0] = -0.4
        A[1][1, 0] = 0.7
        A[2][1, 0] = -0.1
    elif direction == "y2x":
        A[0][0, 1] = 0.05
        A[1][0, 1] = -0.05
        A[2][0, 1] = 0.1
    else:
        raise ValidationError("direction must be x2y or y2x")
    return VARModel(n=2, r=4, A=A, fs=fs)


def make_bidirectional_var41():
    """Bivariate VAR(41), fs 200 Hz: X (4 Hz) and Y (15 Hz) excite each other.

    X drives Y through taps at lags 21-23 (0.105-0.115 s) and Y drives X
    through an 11-tap band-pass at lags 31-41 (0.155-0.205 s).
    """
    fs = 200.0
    dX = _single_diag(0.8, 4, fs)
    dY = _single_diag(0.9, 15, fs)
    A = [np.zeros((2, 2)) for _ in range(41)]
    A[0][0, 0], A[1][0, 0] = dX
    A[0][1, 1], A[1][1, 1] = dY
    A[20][1, 0] = -0.175
    A[21][1, 0] = 0.35
    A[22][1, 0] = -0.175
    taps = [0.000, 0.001, -0.014, -0.039, 0.026, 0.098,
            0.026, -0.039, -0.014, 0.001, 0.000]
    for i, t in enumerate(taps):
        A[30 + i][0, 1] = t
    return VARModel(n=2, r=41, A=A, fs=fs)


TRIVARIATE_KINDS = ("chain", "chain_lf_intermediate", "parallel", "stokes_var3")


def make_trivariate(kind):
    """Trivariate ground-truth systems.

    chain: X1 -> X2 -> Y (VAR(4), fs 200). chain_lf_intermediate is the same
    model; the intermediate channel is meant to be decimated downstream.
    parallel: X1 -> Y and X2 -> Y with X1, X2 uncoupled. stokes_var3: a
    generic VAR(3) chain at fs 120.
    """
    if kind not in TRIVARIATE_KINDS:
        raise ValidationError(f"kind must be one of {TRIVARIATE_KINDS}")
    if kind == "stokes_var3":
        fs = 120.0
        d1 = _single_diag(0.9, 40, fs)
        d2 = _single_diag(0.7, 10, fs)
        d3 = _single_diag(0.8, 50, fs)
        A = [np.zeros((3, 3)) for _ in range(3)]
        A[0][0, 0], A[1][0, 0] = d1
        A[0][1, 1], A[1][1, 1] = d2
        A[0][2, 2], A[1][2, 2] = d3
        A[0][1, 0], A[1][1, 0], A[2][1, 0] = -0.356, 0.7136, -0.356
        A[0][2, 1], A[1][2, 1], A[2][2, 1] = -0.3098, 0.5, -0.3098
        return VARModel(n=3, r=3, A=A, fs=fs)
    fs = 200.0
    d1 = _pair_diag(0.95, 80, 0.7, 5, fs)
    d2 = _single_diag(0.85, 15, fs)
    dy = _pair_diag(0.85, 10, 0.7, 2, fs)
    A = [np.zeros((3, 3)) for _ in range(4)]
    for k in range(4):
        A[k][0, 0] = d1[k]
        A[k][2, 2] = dy[k]
    A[0][1, 1], A[1][1, 1] = d2
    if kind in ("chain", "chain_lf_intermediate"):
        A[0][1, 0], A[1][1, 0], A[2][1, 0] = -0.7, 1.5, 1.0
        A[0][2, 1], A[1][2, 1], A[2][2, 1] = -0.3, 0.4, -0.3
    else:  # parallel
        A[0][2, 0], A[1][2, 0], A[2][2, 0] = -0.4, 0.7, -0.1
        A[0][2, 1], A[1][2, 1], A[2][2, 1] = -0.8, 1.5, -1.0
    return VARModel(n=3, r=4, A=A, fs=fs)


def pac_modulate(x0, p=None):
    """Amplitude-modulate a carrier with the (offset-positive) input signal.

    output(t) = (x0(t) + |min x0|) * sin(2 pi f_a t); the envelope is
    nonnegative, so the slow signal rides on the carrier's amplitude.
    """
    p = p or PACParams()
    if p.f_a >= x0.fs / 2:
        raise ValidationError(f"carrier {p.f_a} Hz is at or above Nyquist {x0.fs / 2}")
    const = np.abs(np.min(x0.samples))
    t = x0.times()
    out = (x0.samples + const) * np.sin(2 * np.pi * p.f_a * t)
    return TimeSeries(out, fs=x0.fs, t0=x0.t0, guard=x0.guard)


def amplitude_modulate(x0, p=None):
    """Multiply by a strictly positive slow gain (sigmoid or periodic)."""
    p = p or AmplitudeModParams()
    t = x0.times()
    if p.kind == "sigmoid":
        t_c = p.t_c if p.t_c is not None else x0.t0 + x0.duration / 2
        gain = 1.0 / (1.0 + np.exp(-p.k * (t - t_c)))
    else:
        gain = 1.0 - p.d / 2 + (p.d / 2) * np.sin(2 * np.pi * p.f_m * t)
    out = x0.samples * gain
    return TimeSeries(out, fs=x0.fs, t0=x0.t0, guard=x0.guard)


def simulate_logistic(p, n, seed=0):
    """Iterate the coupled logistic map from uniform random initials.

    X(t+1) = X(t) (r_x - r_x X(t) - gamma_xy Y(t))
    Y(t+1) = Y(t) (r_y - r_y Y(t) - gamma_yx X(t))

    Trajectories must stay inside (0, 1); on escape the initial conditions
    are resampled, up to 100 retries. The first p.discard points are dropped.

    Returns:
        (TimeSeries X, TimeSeries Y) at fs = 1.
    """
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    total = n + p.discard
    for _ in range(100):
        x = np.empty(total + 1)
        y = np.empty(total + 1)
        x[0], y[0] = rng.uniform(0.0, 1.0, 2)
        escaped = False
        for t in range(total):
            x[t + 1] = x[t] * (p.r_x - p.r_x * x[t] - p.gamma_xy * y[t])
            y[t + 1] = y[t] * (p.r_y - p.r_y * y[t] - p.gamma_yx * x[t])
            if not (0.0 < x[t + 1] < 1.0 and 0.0 < y[t + 1] < 1.0):
                escaped = True
                break
        if not escaped:
            xs = x[1 + p.discard : 1 + total]
            ys = y[1 + p.discard : 1 + total]
            return TimeSeries(xs, fs=1.0), TimeSeries(ys, fs=1.0)
    raise SimulationError("no bounded logistic trajectory found after 100 retries")


def _rl_deriv(state, alpha, C):
    x1, x2, x3, y1, y2, y3 = state
    dx1 = -alpha * (x2 + x3)
    dx2 = alpha * (x1 + 0.2 * x2)
    dx3 = alpha * (0.2 + x3 * (x1 - 5.7))
    dy1 = 10.0 * (-y1 + y2)
    dy2 = 28.0 * y1 - y2 - y1 * y3 + C * (x2 * x2)
    dy3 = y1 * y2 - (8.0 / 3.0) * y3
    return np.array([dx1, dx2, dx3, dy1, dy2, dy3])


def rk4_step(state, dt, alpha, C):
    k1 = _rl_deriv(state, alpha, C)
    k2 = _rl_deriv(state + 0.5 * dt * k1, alpha, C)
    k3 = _rl_deriv(state + 0.5 * dt * k2, alpha, C)
    k4 = _rl_deriv(state + dt * k3, alpha, C)
    return state + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


TRANSIENT_SECONDS = 10.0


def simulate_rossler_lorenz(p, seed=0, initial=None):
    """Integrate the coupled Rossler-Lorenz system (fixed-step RK4).

    The first 10 s are discarded as a transient; the solution is sampled at
    fs_out. Initial values are standard normal draws from the seed unless
    given explicitly.

    Returns:
        list of six TimeSeries: x1, x2, x3, y1, y2, y3 at fs_out.

    Raises:
        SimulationError: if any state coordinate exceeds 1e6 or stops being
            finite.
    """
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    state = np.asarray(initial, dtype=float) if initial is not None else rng.standard_normal(6)
    if state.shape != (6,):
        raise ValidationError("initial state must have 6 coordinates")
    stride = int(round(1.0 / (p.fs_out * p.dt_int)))
    n_keep = int(round(p.T * p.fs_out))
    n_skip = int(round(TRANSIENT_SECONDS * p.fs_out))
    total_outputs = n_skip + n_keep
    frames = np.empty((total_outputs, 6))
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(total_outputs):
            frames[i] = state
            for _ in range(stride):
                state = rk4_step(state, p.dt_int, p.alpha, p.C)
            if not np.all(np.isfinite(state)) or np.max(np.abs(state)) > 1e6:
                raise SimulationError(f"trajectory diverged at output sample {i}")
    kept = frames[n_skip:]
    return [TimeSeries(kept[:, ch], fs=p.fs_out) for ch in range(6)]
