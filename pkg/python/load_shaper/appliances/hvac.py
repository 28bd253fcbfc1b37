from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Dict, Optional

import numpy as np

from ..core.model import COOLING, HEATING, KWH_TO_JOULES, HomeSpec, HvacParams, TimeGrid
from ..kernel.lp_model import EQ, GE, LE
from .blocks import BlockBuilder, LinearConstraintBlock, p_meta, var_name


APPLIANCE = "hvac"

# Big-M linking set temperature and ON/OFF status (degC).
M_H = 100.0


@dataclass(frozen=True, eq=False)
class ThermostatTrace:
    t_expected: np.ndarray      # T_e(0..K), degC
    on: np.ndarray              # a_e(t), 0/1
    s_plus: np.ndarray          # s+*(t), degC
    s_minus: np.ndarray         # s-*(t), degC
    p_kwh: np.ndarray           # desirable HVAC energy per interval


def thermal_gain_per_kwh(hvac: HvacParams) -> float:
    """Room temperature change (degC) per kWh drawn, signed by mode."""
    return hvac.alpha * hvac.mode * hvac.gamma2 * KWH_TO_JOULES


def _require_hvac(home: HomeSpec) -> HvacParams:
    if home.hvac is None:
        raise ValueError(f"home {home.id} has no HVAC")

    return home.hvac


def _thermostat_fires(hvac: HvacParams, temp: float) -> bool:
    if hvac.mode == HEATING:
        return temp <= hvac.t_low

    return temp >= hvac.t_upper


def temperature_path(hvac: HvacParams, weather: np.ndarray, grid: TimeGrid, p_kwh: np.ndarray) -> np.ndarray:
    temps = np.empty(grid.K + 1)
    temps[0] = hvac.t_init
    gain = thermal_gain_per_kwh(hvac)

    for t in range(grid.K):
        temps[t + 1] = temps[t] + hvac.gamma1 * (weather[t] - temps[t]) + gain * p_kwh[t]

    return temps


def simulate_thermostat_baseline(
    home: HomeSpec,
    weather: np.ndarray,
    grid: TimeGrid,
    forced_on: Optional[np.ndarray] = None,
) -> ThermostatTrace:
    """Expected room temperature under the home's own thermostat rule.

    `forced_on` replaces the rule with a given ON/OFF sequence.
    """
    hvac = _require_hvac(home)
    K = grid.K
    per_interval = grid.kw_to_kwh(hvac.nominal_kw)
    gain = thermal_gain_per_kwh(hvac)

    temps = np.empty(K + 1)
    on = np.zeros(K)
    temps[0] = hvac.t_init

    for t in range(K):
        if forced_on is not None:
            on[t] = float(forced_on[t])
        else:
            on[t] = 1.0 if _thermostat_fires(hvac, temps[t]) else 0.0

        temps[t + 1] = temps[t] + hvac.gamma1 * (weather[t] - temps[t]) + gain * on[t] * per_interval

    inside = temps[:K]

    return ThermostatTrace(
        t_expected=temps,
        on=on,
        s_plus=np.maximum(inside - hvac.t_upper, 0.0),
        s_minus=np.maximum(hvac.t_low - inside, 0.0),
        p_kwh=on * per_interval,
    )


def build_hvac_block(
    home: HomeSpec,
    weather: np.ndarray,
    grid: TimeGrid,
    mode: Optional[int] = None,
    trace: Optional[ThermostatTrace] = None,
) -> LinearConstraintBlock:
    hvac = _require_hvac(home)
    mode = hvac.mode if mode is None else mode

    if mode not in (HEATING, COOLING):
        raise ValueError(f"HVAC mode must be 1 (heating) or -1 (cooling), got {mode!r}")

    if mode != hvac.mode:
        hvac = replace(hvac, mode=mode)
        home = replace(home, hvac=hvac)
        trace = None

    if trace is None:
        trace = simulate_thermostat_baseline(home, weather, grid)

    K = grid.K
    i = home.id
    gain = thermal_gain_per_kwh(hvac)
    per_interval = grid.kw_to_kwh(hvac.nominal_kw)

    b = BlockBuilder(f"h{i}.{APPLIANCE}")

    temp = [
        b.var(var_name(i, APPLIANCE, "T_in", t), lower=-math.inf, upper=math.inf)
        for t in range(1, K + 1)
    ]
    temp.insert(0, b.var(var_name(i, APPLIANCE, "T_in", 0), lower=hvac.t_init, upper=hvac.t_init))

    for t in range(K):
        a = b.var(var_name(i, APPLIANCE, "a", t), lower=0.0, upper=1.0, tag="hvac_k")
        p = b.declare(p_meta(i, APPLIANCE, t))
        s_minus = b.var(var_name(i, APPLIANCE, "s_minus", t), tag="hvac_j")
        s_plus = b.var(var_name(i, APPLIANCE, "s_plus", t), tag="hvac_j")
        t_set = b.var(var_name(i, APPLIANCE, "T_set", t), lower=-math.inf, upper=math.inf)

        b.row(
            "hvac_b",
            [(temp[t + 1], 1.0), (temp[t], -(1.0 - hvac.gamma1)), (p, -gain)],
            EQ,
            hvac.gamma1 * weather[t],
            t,
        )
        b.row("hvac_c", [(p, 1.0), (a, -per_interval)], EQ, 0.0, t)
        b.row("hvac_d", [(temp[t], 1.0), (s_minus, 1.0)], GE, hvac.t_low, t)
        b.row("hvac_e", [(temp[t], 1.0), (s_plus, -1.0)], LE, hvac.t_upper, t)
        b.row("hvac_f", [(s_minus, 1.0)], LE, trace.s_minus[t] + hvac.eps, t)
        b.row("hvac_g", [(s_plus, 1.0)], LE, trace.s_plus[t] + hvac.eps, t)

        if mode == HEATING:
            b.row("hvac_h", [(t_set, 1.0), (temp[t], -1.0), (a, -M_H)], GE, -M_H, t)
            b.row("hvac_i", [(temp[t], 1.0), (t_set, -1.0), (a, M_H)], GE, 0.0, t)
        else:
            b.row("hvac_h", [(temp[t], 1.0), (t_set, -1.0), (a, -M_H)], GE, -M_H, t)
            b.row("hvac_i", [(temp[t], 1.0), (t_set, -1.0), (a, -M_H)], LE, 0.0, t)

    return b.build()


def hvac_point(
    home: HomeSpec,
    weather: np.ndarray,
    grid: TimeGrid,
    p_kwh: np.ndarray,
) -> Dict[str, float]:
    """Complete HVAC state implied by a load vector."""
    hvac = _require_hvac(home)
    i = home.id
    per_interval = grid.kw_to_kwh(hvac.nominal_kw)
    temps = temperature_path(hvac, weather, grid, p_kwh)

    out = {var_name(i, APPLIANCE, "T_in", t): float(temps[t]) for t in range(grid.K + 1)}

    for t in range(grid.K):
        out[var_name(i, APPLIANCE, "a", t)] = float(p_kwh[t] / per_interval)
        out[var_name(i, APPLIANCE, "p", t)] = float(p_kwh[t])
        out[var_name(i, APPLIANCE, "s_minus", t)] = max(hvac.t_low - temps[t], 0.0)
        out[var_name(i, APPLIANCE, "s_plus", t)] = max(temps[t] - hvac.t_upper, 0.0)
        out[var_name(i, APPLIANCE, "T_set", t)] = float(temps[t])

    return out
