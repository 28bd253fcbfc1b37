from __future__ import annotations

from typing import Dict, List, Union

import numpy as np

from ..core.model import BasicApplianceParams, HomeSpec, TimeGrid
from ..kernel.lp_model import BINARY, EQ, LE
from .blocks import BlockBuilder, LinearConstraintBlock, p_meta, var_name


# Shared by WM, oven and dryer: they differ only in parameters.
BINARY_TAG = "wm_i"


def _resolve(home: HomeSpec, appliance: Union[str, BasicApplianceParams]) -> BasicApplianceParams:
    params = home.basic(appliance) if isinstance(appliance, str) else appliance

    if params.window_length < params.duration:
        raise ValueError(
            f"home {home.id} {params.name}: window [{params.window_start}, {params.window_end}] "
            f"shorter than duration {params.duration}"
        )

    return params


def _transition_times(params: BasicApplianceParams, grid: TimeGrid) -> List[int]:
    times = list(range(params.window_start, params.window_end + 1))

    if params.window_end + 1 < grid.K:
        times.append(params.window_end + 1)

    return times


def build_basic_appliance_block(
    home: HomeSpec,
    appliance: Union[str, BasicApplianceParams],
    grid: TimeGrid,
) -> LinearConstraintBlock:
    """Uninterruptible run of `duration` intervals inside the allowed window.

    Start-up flags z live on the window, shut-down flags y on the window plus
    the interval right after it.
    """
    params = _resolve(home, appliance)
    K = grid.K
    i = home.id
    name = params.name
    window = range(params.window_start, params.window_end + 1)

    b = BlockBuilder(f"h{i}.{name}")

    p = [b.declare(p_meta(i, name, t)) for t in range(K)]
    on = [b.var(var_name(i, name, "x", t), BINARY, 0.0, 1.0, BINARY_TAG) for t in range(K)]
    start = {t: b.var(var_name(i, name, "z", t), BINARY, 0.0, 1.0, BINARY_TAG) for t in window}
    stop = {
        t: b.var(var_name(i, name, "y", t), BINARY, 0.0, 1.0, BINARY_TAG)
        for t in _transition_times(params, grid)
    }

    b.row("wm_a", [(p[t], 1.0) for t in window], EQ, params.power_kwh * params.duration)

    for t in range(K):
        b.row("wm_b", [(p[t], 1.0), (on[t], -params.power_kwh)], EQ, 0.0, t)

    for t in range(K):
        if t not in start:
            b.row("wm_c", [(on[t], 1.0)], EQ, 0.0, t)

    for t in stop:
        coefs = [(on[t], 1.0), (stop[t], 1.0)]

        if t - 1 >= 0:
            coefs.append((on[t - 1], -1.0))
        if t in start:
            coefs.append((start[t], -1.0))

        b.row("wm_d", coefs, EQ, 0.0, t)

    for t in window:
        b.row("wm_e", [(start[t], 1.0), (on[t], -1.0)], LE, 0.0, t)

    for t in window:
        b.row("wm_f", [(stop[t], 1.0), (on[t], 1.0)], LE, 1.0, t)

    b.row("wm_g", [(start[t], 1.0) for t in window], LE, 1.0)
    b.row("wm_h", [(stop[t], 1.0) for t in window], LE, 1.0)

    return b.build()


def basic_point(
    home: HomeSpec,
    appliance: Union[str, BasicApplianceParams],
    grid: TimeGrid,
    p_kwh: np.ndarray,
) -> Dict[str, float]:
    params = _resolve(home, appliance)
    i = home.id
    name = params.name
    on = np.round(np.asarray(p_kwh, dtype=float) / params.power_kwh)

    out: Dict[str, float] = {}

    for t in range(grid.K):
        out[var_name(i, name, "p", t)] = float(p_kwh[t])
        out[var_name(i, name, "x", t)] = float(on[t])

    for t in range(params.window_start, params.window_end + 1):
        prev = on[t - 1] if t > 0 else 0.0
        out[var_name(i, name, "z", t)] = float(max(on[t] - prev, 0.0))

    for t in _transition_times(params, grid):
        prev = on[t - 1] if t > 0 else 0.0
        out[var_name(i, name, "y", t)] = float(max(prev - on[t], 0.0))

    return out


def baseline_start(params: BasicApplianceParams) -> int:
    start = params.window_start if params.preferred_start is None else params.preferred_start
    return min(start, params.window_end - params.duration + 1)


def run_profile(params: BasicApplianceParams, grid: TimeGrid, start: int) -> np.ndarray:
    if not params.window_start <= start <= params.window_end - params.duration + 1:
        raise ValueError(f"{params.name}: start {start} does not fit the window")

    p = np.zeros(grid.K)
    p[start:start + params.duration] = params.power_kwh
    return p


def feasible_starts(params: BasicApplianceParams) -> range:
    return range(params.window_start, params.window_end - params.duration + 2)
