"""Serialization, channel bundles, CSV ingestion, and calendar transforms.

Run outputs are single JSON documents with top-level keys config, results,
timings, and version. Simulated data travel as channel bundles: one JSON
file holding named multi-trial channels plus a roles map saying which
channel is the HF signal, the LF signal, and (optionally) the conditioning
signal. Calendar data use cycles-per-year as the sampling-rate unit so
monthly/quarterly/yearly ratios are exact integers.
"""

import json
import os
import re
from dataclasses import dataclass, field, is_dataclass, asdict

import numpy as np

from .errors import ValidationError
from .timeseries import TimeSeries, MultiTrialSeries

PACKAGE_VERSION = "0.1.0"

PERIODS = {"monthly": (1, 12.0), "quarterly": (3, 4.0), "yearly": (12, 1.0)}

_DATE_RE = re.compile(r"^(\d{4})(?:-(\d{2}))?(?:-\d{2})?$")


@dataclass
class Dataset:
    """Named collection of uniformly sampled columns.

    columns maps a label to a TimeSeries (rates may differ between
    columns); provenance records where the data came from and what was
    done to them.
    """

    name: str
    columns: dict
    provenance: dict = field(default_factory=dict)


@dataclass
class RunResult:
    """One run's resolved config, results, and wall-clock timings."""

    config: dict
    results: dict
    timings: dict
    version: str = PACKAGE_VERSION


def jsonable(obj):
    """Recursively convert numpy containers/scalars to plain JSON types."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            raise ValidationError("complex arrays are not serializable")
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    raise ValidationError(f"cannot serialize {type(obj).__name__}")


def to_json(payload):
    """Canonical JSON text: sorted keys, no NaN/inf anywhere."""
    try:
        return json.dumps(jsonable(payload), sort_keys=True, indent=2, allow_nan=False)
    except ValueError as exc:
        raise ValidationError(f"payload contains non-finite values: {exc}") from exc


def write_json(path, payload):
    text = to_json(payload)
    try:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    except OSError as exc:
        raise ValidationError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return text


def _reject_constant(token):
    raise ValidationError(f"non-finite value {token} in JSON input")


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh, parse_constant=_reject_constant)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from exc


def channels_payload(channels, roles, config=None):
    """Bundle named MultiTrialSeries channels into a serializable dict."""
    chan_obj = {}
    for name, mts in channels.items():
        chan_obj[name] = {
            "fs": mts.fs,
            "t0": mts.trials[0].t0,
            "guard": mts.trials[0].guard,
            "trials": [tr.samples for tr in mts.trials],
        }
    return {
        "version": PACKAGE_VERSION,
        "kind": "channels",
        "config": config or {},
        "channels": chan_obj,
        "roles": dict(roles),
    }


def _channel_series(obj):
    return MultiTrialSeries(
        [
            TimeSeries(np.asarray(tr, dtype=float), fs=float(obj["fs"]),
                       t0=float(obj["t0"]), guard=int(obj.get("guard", 0)))
            for tr in obj["trials"]
        ]
    )


def load_channel(spec, role):
    """Load one channel from a bundle file.

    spec is either a path (the bundle's roles map picks the channel for
    the given role) or "path:channel" to name the channel explicitly.
    """
    path, name = spec, None
    if not os.path.exists(spec) and ":" in spec:
        path, name = spec.rsplit(":", 1)
    bundle = read_json(path)
    if "channels" not in bundle:
        raise ValidationError(f"{path} is not a channel bundle")
    if name is None:
        name = bundle.get("roles", {}).get(role)
        if name is None:
            raise ValidationError(
                f"{path} has no '{role}' role; use path:channel to pick one"
            )
    if name not in bundle["channels"]:
        raise ValidationError(f"channel {name!r} not in {path}")
    return _channel_series(bundle["channels"][name])


def _parse_date(token, row):
    m = _DATE_RE.match(token.strip())
    if not m:
        raise ValidationError(f"row {row}: unparseable date {token!r}")
    year = int(m.group(1))
    month = int(m.group(2)) if m.group(2) else 1
    if not (1 <= month <= 12):
        raise ValidationError(f"row {row}: month out of range in {token!r}")
    return year * 12 + (month - 1)


def ingest_csv(path, schema):
    """Read a calendar-indexed CSV column as a TimeSeries.

    Args:
        path: CSV file with a header row.
        schema: dict with date_col, value_col, and period (monthly,
            quarterly, or yearly).

    Returns:
        TimeSeries with fs in cycles per year (12, 4, or 1) and t0 in
        years (e.g. 1995.25 for 1995-04).

    Raises:
        ValidationError: gaps, duplicates, misordered dates, or
            non-numeric values, naming the offending row.
    """
    import csv

    period = schema.get("period")
    if period not in PERIODS:
        raise ValidationError(f"period must be one of {sorted(PERIODS)}")
    step, fs = PERIODS[period]
    date_col, value_col = schema["date_col"], schema["value_col"]

    values, prev_idx, first_idx = [], None, None
    try:
        handle = open(path, newline="")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror or exc}") from exc
    with handle as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or date_col not in reader.fieldnames \
                or value_col not in reader.fieldnames:
            raise ValidationError(
                f"{path} must have columns {date_col!r} and {value_col!r}"
            )
        for row_num, row in enumerate(reader, start=2):
            idx = _parse_date(row[date_col], row_num)
            try:
                val = float(row[value_col])
            except (TypeError, ValueError):
                raise ValidationError(
                    f"row {row_num}: non-numeric value {row[value_col]!r}"
                ) from None
            if not np.isfinite(val):
                raise ValidationError(f"row {row_num}: non-finite value")
            if prev_idx is not None:
                if idx == prev_idx:
                    raise ValidationError(f"row {row_num}: duplicate date")
                if idx < prev_idx + step:
                    raise ValidationError(
                        f"row {row_num}: dates must advance by one {period} period"
                    )
                if idx > prev_idx + step:
                    missing = prev_idx + step
                    raise ValidationError(
                        f"row {row_num}: gap before this row "
                        f"(expected {missing // 12:04d}-{missing % 12 + 1:02d})"
                    )
            else:
                first_idx = idx
            prev_idx = idx
            values.append(val)
    if not values:
        raise ValidationError(f"{path} has no data rows")
    t0 = first_idx // 12 + (first_idx % 12) / 12.0
    return TimeSeries(np.asarray(values), fs=fs, t0=t0)


def yoy_growth(ts, periods_per_year):
    """Year-over-year percent growth: (value / value one year ago - 1) * 100.

    The output is shorter by one year of samples and starts one year later.

    Raises:
        ValidationError: series not longer than one year, or a prior value
            is <= 0 (growth undefined).
    """
    p = int(periods_per_year)
    if p < 1 or ts.n <= p:
        raise ValidationError("series must be longer than one year")
    prior = ts.samples[:-p]
    if np.any(prior <= 0):
        raise ValidationError("year-ago values must be positive for growth rates")
    vals = (ts.samples[p:] / prior - 1.0) * 100.0
    return TimeSeries(vals, fs=ts.fs, t0=ts.t0 + p / ts.fs, guard=0)
