from __future__ import annotations

from typing import Dict

import numpy as np

from ..core.model import EvParams, HomeSpec, TimeGrid
from ..kernel.lp_model import EQ, GE, LE
from .blocks import BlockBuilder, LinearConstraintBlock, p_meta, var_name


APPLIANCE = "ev"

# Trip energy per mile driven (kWh).
KWH_PER_MILE = 0.346


def _require_ev(home: HomeSpec) -> EvParams:
    if home.ev is None:
        raise ValueError(f"home {home.id} has no EV")

    return home.ev


def trip_times(ev: EvParams) -> np.ndarray:
    return np.flatnonzero(np.asarray(ev.trip_kwh, dtype=float) > 0)


def build_ev_block(home: HomeSpec, grid: TimeGrid) -> LinearConstraintBlock:
    ev = _require_ev(home)
    K = grid.K
    i = home.id
    kwh_per_amp = ev.kwh_per_amp(grid.dt_hours)
    trips = np.asarray(ev.trip_kwh, dtype=float)
    away = set(int(t) for t in trip_times(ev))

    b = BlockBuilder(f"h{i}.{APPLIANCE}")

    charge = [b.var(var_name(i, APPLIANCE, "x", 0), lower=ev.initial_kwh, upper=ev.initial_kwh)]
    charge += [b.var(var_name(i, APPLIANCE, "x", t)) for t in range(1, K)]
    charge.append(b.var(var_name(i, APPLIANCE, "x", K), upper=ev.battery_kwh))

    for t in range(K):
        p = b.declare(p_meta(i, APPLIANCE, t))
        amps = b.var(var_name(i, APPLIANCE, "I", t))

        b.row("ev_a", [(charge[t], 1.0)], LE, ev.battery_kwh, t)
        b.row("ev_b", [(charge[t], 1.0)], GE, trips[t], t)
        b.row("ev_c", [(p, 1.0), (amps, -kwh_per_amp)], EQ, 0.0, t)
        b.row("ev_d", [(p, 1.0)], GE, 0.0, t)
        b.row("ev_e", [(amps, 1.0)], LE, ev.max_current_a, t)

        if t in away:
            b.row("ev_f", [(amps, 1.0)], EQ, 0.0, t)

        b.row("ev_g", [(charge[t + 1], 1.0), (charge[t], -1.0), (p, -1.0)], EQ, -trips[t], t)

    return b.build()


def ev_point(home: HomeSpec, grid: TimeGrid, p_kwh: np.ndarray) -> Dict[str, float]:
    ev = _require_ev(home)
    i = home.id
    kwh_per_amp = ev.kwh_per_amp(grid.dt_hours)
    trips = np.asarray(ev.trip_kwh, dtype=float)

    out: Dict[str, float] = {}
    level = ev.initial_kwh
    out[var_name(i, APPLIANCE, "x", 0)] = level

    for t in range(grid.K):
        out[var_name(i, APPLIANCE, "p", t)] = float(p_kwh[t])
        out[var_name(i, APPLIANCE, "I", t)] = float(p_kwh[t]) / kwh_per_amp
        level = level + float(p_kwh[t]) - trips[t]
        out[var_name(i, APPLIANCE, "x", t + 1)] = level

    return out


def full_recharge_charging(home: HomeSpec, grid: TimeGrid) -> np.ndarray:
    """Charge at maximum current whenever parked until the battery is full again."""
    ev = _require_ev(home)
    trips = np.asarray(ev.trip_kwh, dtype=float)
    cap = ev.kwh_per_amp(grid.dt_hours) * ev.max_current_a

    p = np.zeros(grid.K)
    level = ev.initial_kwh

    for t in range(grid.K):
        if trips[t] > 0:
            if level < trips[t] - 1e-9:
                raise ValueError(
                    f"home {home.id}: battery holds {level:.3f} kWh before a {trips[t]:.3f} kWh trip at t={t}"
                )
        else:
            p[t] = min(cap, max(ev.battery_kwh - level, 0.0))

        level = level + p[t] - trips[t]

    return p
