"""Command-line driver: simulate, analyze, gain, sgc, mfvar, benchmark, ingest.

Every run writes a single JSON document embedding the fully resolved config
(including the seed and package version) so results can be reproduced from
the output alone. Failures print {"error": {"category", "message"}} to
stderr and exit with the category's code. The MFCAUSAL_SEED environment
variable supplies a default seed; explicit --seed flags win.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import io as io_mod
from .cca import RegConfig
from .errors import MFCausalError, UsageError, ValidationError
from .pipeline import (
    PipelineConfig,
    canonical_frequencies,
    cc_gain,
    conditional_lag_cc_profile,
    decide_direction,
    lag_cc_profile,
)
from .spectral import STFTConfig
from .surrogate import SurrogateConfig
from .timeseries import (
    MFPair,
    MultiTrialSeries,
    TimeSeries,
    detrend_linear,
    lowpass_decimate,
)

SYSTEMS = (
    "uni-x2y", "uni-y2x", "bidir41", "chain", "chain-lf", "parallel",
    "stokes3", "pac", "ampmod-sigmoid", "ampmod-periodic", "logistic-uni",
    "logistic-bi", "rossler-lorenz",
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _resolve_seed(args):
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    env = os.environ.get("MFCAUSAL_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"MFCAUSAL_SEED must be an integer, got {env!r}") from None
    return 0


def _parse_lags(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"--lags expects MIN:MAX:STEP, got {text!r}")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"--lags expects numbers, got {text!r}") from None
    return lo, hi, step


def _parse_band(text):
    parts = text.split(":")
    if len(parts) != 2:
        raise UsageError(f"--band expects LO:HI, got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise UsageError(f"--band expects numbers, got {text!r}") from None
    return lo, hi


def _decimated(mts, factor):
    return MultiTrialSeries([lowpass_decimate(tr, factor) for tr in mts.trials])


def _subsampled(mts, factor):
    return MultiTrialSeries(
        [TimeSeries(tr.samples[::factor], fs=tr.fs / factor, t0=tr.t0) for tr in mts.trials]
    )


def build_system(system, trials, seconds, seed):
    """Simulate a named ground-truth system into channels plus a roles map."""
    from . import simulators as sim
    from .vargc import simulate_var

    if system in ("uni-x2y", "uni-y2x", "bidir41"):
        if system == "bidir41":
            model = sim.make_bidirectional_var41()
        else:
            model = sim.make_unidirectional_var4(system.split("-")[1])
        x, y = simulate_var(model, int(round(seconds * model.fs)), trials, seed=seed)
        return {"x": x, "y": _decimated(y, 5)}, {"hf": "x", "lf": "y"}

    if system in ("chain", "chain-lf", "parallel", "stokes3"):
        kind = {
            "chain": "chain",
            "chain-lf": "chain_lf_intermediate",
            "parallel": "parallel",
            "stokes3": "stokes_var3",
        }[system]
        model = sim.make_trivariate(kind)
        factor = 3 if system == "stokes3" else 5
        x1, x2, x3 = simulate_var(model, int(round(seconds * model.fs)), trials, seed=seed)
        cond = _decimated(x2, factor) if system == "chain-lf" else x2
        channels = {"x1": x1, "x2": cond, "y": _decimated(x3, factor)}
        return channels, {"hf": "x1", "lf": "y", "condition": "x2"}

    if system == "pac":
        model = sim.make_bidirectional_var41()
        x, y = simulate_var(model, int(round(seconds * model.fs)), trials, seed=seed)
        xa = MultiTrialSeries([sim.pac_modulate(tr) for tr in x.trials])
        return {"xa": xa, "y": _decimated(y, 5)}, {"hf": "xa", "lf": "y"}

    if system in ("ampmod-sigmoid", "ampmod-periodic"):
        model = sim.make_bidirectional_var41()
        x, y = simulate_var(model, int(round(seconds * model.fs)), trials, seed=seed)
        params = sim.AmplitudeModParams(kind=system.split("-")[1])
        xm = MultiTrialSeries([sim.amplitude_modulate(tr, params) for tr in x.trials])
        return {"xm": xm, "y": _decimated(y, 5)}, {"hf": "xm", "lf": "y"}

    if system in ("logistic-uni", "logistic-bi"):
        gammas = (0.0, 0.32) if system == "logistic-uni" else (0.02, 0.1)
        p = sim.LogisticParams(gamma_xy=gammas[0], gamma_yx=gammas[1])
        n = int(round(seconds))
        xs, ys = [], []
        for i in range(trials):
            x, y = sim.simulate_logistic(p, n, seed=(seed, i))
            xs.append(x)
            ys.append(y)
        lf = _subsampled(MultiTrialSeries(ys), 5)
        return {"x": MultiTrialSeries(xs), "y": lf}, {"hf": "x", "lf": "y"}

    if system == "rossler-lorenz":
        p = sim.RosslerLorenzParams(T=seconds)
        xs, ys = [], []
        for i in range(trials):
            states = sim.simulate_rossler_lorenz(p, seed=(seed, i))
            xs.append(states[1])
            ys.append(states[4])
        return (
            {"x2": MultiTrialSeries(xs), "y": _decimated(MultiTrialSeries(ys), 5)},
            {"hf": "x2", "lf": "y"},
        )

    raise UsageError(f"unknown system {system!r}; choose from {', '.join(SYSTEMS)}")


def _pipeline_config(args, lf_fs, seed, lag_grid):
    return PipelineConfig(
        stft=STFTConfig(window_len=args.window, hop=1.0 / lf_fs, window_fn=args.window_fn),
        cca_mode=args.mode,
        reg=RegConfig(),
        lag_grid=lag_grid,
        surrogate=SurrogateConfig(n_reps=getattr(args, "surrogates", 100), seed=seed),
        test=getattr(args, "test", "t"),
        alpha=getattr(args, "alpha", 0.05),
    )


def cmd_simulate(args):
    seed = _resolve_seed(args)
    channels, roles = build_system(args.system, args.trials, args.seconds, seed)
    config = {
        "command": "simulate",
        "system": args.system,
        "trials": args.trials,
        "seconds": args.seconds,
        "seed": seed,
    }
    io_mod.write_json(args.out, io_mod.channels_payload(channels, roles, config))
    return 0


def cmd_analyze(args):
    t_start = time.perf_counter()
    seed = _resolve_seed(args)
    hf = io_mod.load_channel(args.hf, "hf")
    lf = io_mod.load_channel(args.lf, "lf")
    pair = MFPair(hf, lf)
    cfg = _pipeline_config(args, lf.fs, seed, _parse_lags(args.lags))

    if args.condition:
        domain = {"time": "time", "tf": "time-frequency"}[args.condition_domain]
        cond = io_mod.load_channel(args.condition, "condition")
        profile = conditional_lag_cc_profile(pair, cond, domain, cfg)
    else:
        profile = lag_cc_profile(pair, cfg)
    t_profile = time.perf_counter()

    verdict = decide_direction(profile, args.window, args.alpha, k=cfg.k_consecutive)
    canonical = {}
    if verdict.peak_lag_x2y is not None:
        canonical["negative_peak"] = canonical_frequencies(pair, cfg, verdict.peak_lag_x2y)
    if verdict.peak_lag_y2x is not None:
        canonical["positive_peak"] = canonical_frequencies(pair, cfg, verdict.peak_lag_y2x)

    config = {
        "command": "analyze",
        "hf": args.hf,
        "lf": args.lf,
        "condition": args.condition,
        "condition_domain": args.condition_domain if args.condition else None,
        "window": args.window,
        "window_fn": args.window_fn,
        "mode": args.mode,
        "lags": list(_parse_lags(args.lags)),
        "surrogates": args.surrogates,
        "test": args.test,
        "alpha": args.alpha,
        "seed": seed,
    }
    run = io_mod.RunResult(
        config=config,
        results=io_mod.jsonable(
            {"profile": profile, "verdict": verdict, "canonical": canonical}
        ),
        timings={
            "profile_s": t_profile - t_start,
            "total_s": time.perf_counter() - t_start,
            "threads": args.threads,
        },
    )
    io_mod.write_json(args.out, run)
    return 0


def cmd_gain(args):
    t_start = time.perf_counter()
    seed = _resolve_seed(args)
    hf = io_mod.load_channel(args.hf, "hf")
    lf = io_mod.load_channel(args.lf, "lf")
    pair = MFPair(hf, lf)
    bands = [_parse_band(b) for b in args.band]
    cfg = _pipeline_config(args, lf.fs, seed, (args.lag, args.lag, 1.0))
    report = cc_gain(pair, cfg, args.lag, bands)
    config = {
        "command": "gain",
        "hf": args.hf,
        "lf": args.lf,
        "window": args.window,
        "window_fn": args.window_fn,
        "mode": args.mode,
        "lag": args.lag,
        "bands": [list(b) for b in bands],
        "seed": seed,
    }
    run = io_mod.RunResult(
        config=config,
        results=io_mod.jsonable({"gain": report}),
        timings={"total_s": time.perf_counter() - t_start, "threads": args.threads},
    )
    io_mod.write_json(args.out, run)
    return 0


def cmd_sgc(args):
    from .vargc import VARModel, spectral_gc_analytic

    t_start = time.perf_counter()
    spec = io_mod.read_json(args.model)
    for key in ("fs", "A"):
        if key not in spec:
            raise ValidationError(f"model file needs key {key!r}")
    A = [np.asarray(a, dtype=float) for a in spec["A"]]
    sigma = np.asarray(spec["sigma_e"], dtype=float) if "sigma_e" in spec else None
    model = VARModel(n=A[0].shape[0], r=len(A), A=A, sigma_e=sigma, fs=float(spec["fs"]))
    freqs = model.fs / 2 * np.arange(1, args.freqs + 1) / args.freqs
    prof = spectral_gc_analytic(model, freqs)
    run = io_mod.RunResult(
        config={"command": "sgc", "model": args.model, "freqs": args.freqs},
        results=io_mod.jsonable(
            {"freqs": prof.freqs, "gc_xy": prof.gc_xy, "gc_yx": prof.gc_yx}
        ),
        timings={"total_s": time.perf_counter() - t_start},
    )
    io_mod.write_json(args.out, run)
    return 0


def cmd_mfvar(args):
    from .mfvar import mfvar_gc_test, stack

    t_start = time.perf_counter()
    hf = io_mod.load_channel(args.hf, "hf")
    lf = io_mod.load_channel(args.lf, "lf")
    stacked = stack(MFPair(hf, lf))
    res = mfvar_gc_test(stacked, args.direction, order=args.order, variant=args.variant)
    run = io_mod.RunResult(
        config={
            "command": "mfvar",
            "hf": args.hf,
            "lf": args.lf,
            "order": args.order,
            "direction": args.direction,
            "variant": args.variant,
        },
        results={"stat": float(res.stat), "p": float(res.p), "df": io_mod.jsonable(res.df)},
        timings={"total_s": time.perf_counter() - t_start},
    )
    io_mod.write_json(args.out, run)
    return 0


def cmd_benchmark(args):
    from .mfvar import benchmark

    t_start = time.perf_counter()
    seed = _resolve_seed(args)
    try:
        counts = [int(t) for t in args.trials.split(",")]
    except ValueError:
        raise UsageError(f"--trials expects comma-separated integers, got {args.trials!r}") from None
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    report = benchmark(methods=methods, trial_counts=counts, seed=seed, threads=args.threads)
    run = io_mod.RunResult(
        config={
            "command": "benchmark",
            "trials": counts,
            "methods": list(methods),
            "seed": seed,
            "threads": args.threads,
        },
        results=io_mod.jsonable(report),
        timings={"total_s": time.perf_counter() - t_start},
    )
    io_mod.write_json(args.out, run)
    return 0


def cmd_ingest(args):
    schema = {"date_col": args.date_col, "value_col": args.value_col, "period": args.period}
    ts = io_mod.ingest_csv(args.csv, schema)
    transforms = []
    if args.yoy:
        ts = io_mod.yoy_growth(ts, int(round(ts.fs)))
        transforms.append("yoy")
    if args.detrend:
        ts = detrend_linear(ts)
        transforms.append("detrend")
    name = args.name or os.path.splitext(os.path.basename(args.csv))[0]
    payload = {
        "version": io_mod.PACKAGE_VERSION,
        "kind": "dataset",
        "name": name,
        "columns": {
            args.value_col: {"fs": ts.fs, "t0": ts.t0, "values": io_mod.jsonable(ts.samples)}
        },
        "provenance": {"source": args.csv, "schema": schema, "transforms": transforms},
    }
    io_mod.write_json(args.out, payload)
    return 0


PERIODS_HELP = ("monthly", "quarterly", "yearly")


def _add_analysis_flags(p, with_lags=True):
    p.add_argument("--hf", required=True, help="channel bundle (or path:channel)")
    p.add_argument("--lf", required=True, help="channel bundle (or path:channel)")
    p.add_argument("--window", type=float, required=True, help="STFT window length in seconds")
    p.add_argument("--window-fn", default="hann", choices=("hann", "rectangular"))
    p.add_argument("--mode", default="complex", choices=("complex", "magnitude"))
    if with_lags:
        p.add_argument("--lags", required=True, help="lag grid MIN:MAX:STEP in seconds")
        p.add_argument("--surrogates", type=int, default=100)
        p.add_argument("--test", default="t", choices=("t", "ks"))
        p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)


def build_parser():
    parser = _Parser(prog="mfcausal", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate a ground-truth system into a channel bundle")
    p.add_argument("--system", required=True, choices=SYSTEMS)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seconds", type=float, default=20.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="lag-CC profile, verdict, and canonical frequencies")
    _add_analysis_flags(p)
    p.add_argument("--condition", default=None, help="conditioning bundle (or path:channel)")
    p.add_argument("--condition-domain", default="tf", choices=("time", "tf"))
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("gain", help="CC change after band-stopping the HF signal")
    _add_analysis_flags(p, with_lags=False)
    p.add_argument("--band", action="append", required=True, help="LO:HI in Hz (repeatable)")
    p.add_argument("--lag", type=float, required=True, help="probe lag in seconds")
    p.set_defaults(func=cmd_gain)

    p = sub.add_parser("sgc", help="analytic spectral GC of a bivariate VAR model file")
    p.add_argument("--model", required=True, help="JSON file with fs, A, optional sigma_e")
    p.add_argument("--freqs", type=int, default=512)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sgc)

    p = sub.add_parser("mfvar", help="stacked-VAR directional coefficient test")
    p.add_argument("--hf", required=True)
    p.add_argument("--lf", required=True)
    p.add_argument("--order", type=int, default=1)
    p.add_argument("--direction", required=True, choices=("hf2lf", "lf2hf"))
    p.add_argument("--variant", default="wald", choices=("wald", "f"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mfvar)

    p = sub.add_parser("benchmark", help="wall-time scaling of the pipeline and the baseline")
    p.add_argument("--trials", default="2,4,8,16,32,64")
    p.add_argument("--methods", default="tfcca,mfvar")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("ingest", help="read a calendar CSV into a normalized dataset file")
    p.add_argument("--csv", required=True)
    p.add_argument("--date-col", default="date")
    p.add_argument("--value-col", default="value")
    p.add_argument("--period", required=True, choices=sorted(PERIODS_HELP))
    p.add_argument("--yoy", action="store_true", help="convert to year-over-year growth")
    p.add_argument("--detrend", action="store_true", help="remove a linear trend")
    p.add_argument("--name", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    return parser


def main(argv=None):
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError("a subcommand is required (see --help)")
        return args.func(args)
    except MFCausalError as exc:
        payload = {"error": {"category": exc.category, "message": str(exc)}}
        print(json.dumps(payload), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
