"""
Outdoor temperature traces
==========================
1) synth_weather       – daily profile with its minimum at 06:00 and maximum at 15:00
2) ingest_weather_csv  – (timestamp, temp_C) CSV resampled onto the planning grid
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from ..core.errors import InstanceFormatError
from ..core.model import TimeGrid


COLDEST_HOUR = 6.0
WARMEST_HOUR = 15.0

MAX_GAP = pd.Timedelta(hours=1)


def synth_weather(grid: TimeGrid, low: float, high: float) -> np.ndarray:
    if high < low:
        raise ValueError(f"weather high {high} must be >= low {low}")

    hours = (np.arange(grid.K) * grid.dt_hours) % 24.0
    swing = high - low
    rise = WARMEST_HOUR - COLDEST_HOUR
    fall = 24.0 - rise

    out = np.empty(grid.K)
    warming = (hours >= COLDEST_HOUR) & (hours <= WARMEST_HOUR)

    frac = (hours[warming] - COLDEST_HOUR) / rise
    out[warming] = low + swing * (1.0 - np.cos(math.pi * frac)) / 2.0

    frac = ((hours[~warming] - WARMEST_HOUR) % 24.0) / fall
    out[~warming] = high - swing * (1.0 - np.cos(math.pi * frac)) / 2.0

    return out


def _gap_spans(stamps: pd.Series, start: pd.Timestamp, end: pd.Timestamp) -> List[str]:
    before = stamps[stamps < start]
    inside = stamps[(stamps >= start) & (stamps <= end)]
    after = stamps[stamps > end]

    chain = [before.iloc[-1] if len(before) else start]
    chain += list(inside)
    chain.append(after.iloc[0] if len(after) else end)

    spans: List[str] = []

    for a, b in zip(chain[:-1], chain[1:]):
        lo, hi = max(a, start), min(b, end)

        if hi - lo > MAX_GAP:
            spans.append(f"{lo.isoformat()}..{hi.isoformat()}")

    return spans


def ingest_weather_csv(
    path: Union[str, Path],
    grid: TimeGrid,
    start: Optional[str] = None,
    verbose: bool = False,
) -> np.ndarray:
    """Nearest-neighbour resample of a (timestamp, temp_C) file onto K intervals.

    The horizon starts at `start` (or the first timestamp). Any stretch longer
    than one hour without a reading, the horizon edges included, is an error.
    """
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise InstanceFormatError(f"cannot read weather CSV {path}: {exc}", ("weather",)) from exc

    if frame.shape[1] < 2 or frame.empty:
        raise InstanceFormatError(f"weather CSV {path} needs (timestamp, temp_C) columns", ("weather",))

    frame = frame.iloc[:, :2]
    frame.columns = ["timestamp", "temp_c"]
    frame["timestamp"] = pd.to_datetime(frame["timestamp"], errors="coerce")
    frame["temp_c"] = pd.to_numeric(frame["temp_c"], errors="coerce")
    bad = frame[frame.isna().any(axis=1)]

    if not bad.empty:
        raise InstanceFormatError(
            f"weather CSV {path}: unparseable row(s) at line(s) {[int(k) + 2 for k in bad.index[:5]]}",
            ("weather",),
        )

    frame = frame.drop_duplicates("timestamp").sort_values("timestamp").reset_index(drop=True)

    begin = pd.Timestamp(start) if start is not None else frame["timestamp"].iloc[0]
    step = pd.Timedelta(hours=grid.dt_hours)
    targets = pd.DatetimeIndex([begin + k * step for k in range(grid.K)])
    end = targets[-1]

    spans = _gap_spans(frame["timestamp"], begin, end)

    if spans:
        raise InstanceFormatError(
            f"weather CSV {path} has gaps longer than 1 h: {', '.join(spans)}", ("weather",)
        )

    series = frame.set_index("timestamp")["temp_c"]
    values = series.reindex(targets, method="nearest").to_numpy(dtype=float)

    if verbose:
        print(f"[weather] file={path} rows={len(frame)} K={grid.K} min={values.min():.2f} max={values.max():.2f}")

    return values
