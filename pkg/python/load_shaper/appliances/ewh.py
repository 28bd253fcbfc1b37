from __future__ import annotations

from typing import Dict

import numpy as np

from ..core.errors import InstanceFormatError
from ..core.model import EwhParams, HomeSpec, TimeGrid
from ..kernel.lp_model import EQ, GE, LE
from .blocks import BlockBuilder, LinearConstraintBlock, p_meta, var_name


APPLIANCE = "ewh"


def _require_ewh(home: HomeSpec) -> EwhParams:
    if home.ewh is None:
        raise ValueError(f"home {home.id} has no EWH")

    if home.ewh.t_desired <= home.ewh.t_tap:
        raise InstanceFormatError(
            f"t_desired {home.ewh.t_desired} must exceed t_tap {home.ewh.t_tap}",
            ("ewh", "t_desired"),
        )

    return home.ewh


def build_ewh_block(home: HomeSpec, grid: TimeGrid) -> LinearConstraintBlock:
    ewh = _require_ewh(home)
    K = grid.K
    i = home.id
    kg_per_kwh = ewh.kg_per_kwh()
    cap_kwh = grid.kw_to_kwh(ewh.max_power_kw)
    demand = np.asarray(ewh.demand_kg, dtype=float)

    b = BlockBuilder(f"h{i}.{APPLIANCE}")

    stock = [b.var(var_name(i, APPLIANCE, "x", 0), lower=ewh.initial_kg, upper=ewh.initial_kg)]
    stock += [b.var(var_name(i, APPLIANCE, "x", t)) for t in range(1, K)]
    stock.append(b.var(var_name(i, APPLIANCE, "x", K), upper=ewh.tank_capacity_kg))

    for t in range(K):
        p = b.declare(p_meta(i, APPLIANCE, t))
        z = b.var(var_name(i, APPLIANCE, "z", t))

        b.row("ewh_a", [(stock[t], 1.0)], LE, ewh.tank_capacity_kg, t)
        b.row("ewh_b", [(stock[t], 1.0)], GE, demand[t], t)
        b.row("ewh_c", [(p, 1.0)], LE, cap_kwh, t)
        b.row("ewh_d", [(p, 1.0)], GE, 0.0, t)
        b.row("ewh_e", [(z, 1.0), (p, -kg_per_kwh)], EQ, 0.0, t)
        b.row("ewh_f", [(stock[t], 1.0)], GE, 0.0, t)
        b.row("ewh_g", [(stock[t + 1], 1.0), (stock[t], -1.0), (z, -1.0)], EQ, -demand[t], t)

    return b.build()


def ewh_point(home: HomeSpec, grid: TimeGrid, p_kwh: np.ndarray) -> Dict[str, float]:
    ewh = _require_ewh(home)
    i = home.id
    kg_per_kwh = ewh.kg_per_kwh()
    demand = np.asarray(ewh.demand_kg, dtype=float)

    out: Dict[str, float] = {}
    stock = ewh.initial_kg
    out[var_name(i, APPLIANCE, "x", 0)] = stock

    for t in range(grid.K):
        z = kg_per_kwh * float(p_kwh[t])
        out[var_name(i, APPLIANCE, "p", t)] = float(p_kwh[t])
        out[var_name(i, APPLIANCE, "z", t)] = z
        stock = stock + z - demand[t]
        out[var_name(i, APPLIANCE, "x", t + 1)] = stock

    return out


def latest_start_heating(home: HomeSpec, grid: TimeGrid) -> np.ndarray:
    """Heat each draw as late as possible at full power.

    Raises ValueError when the draws cannot be met from the initial stock.
    """
    ewh = _require_ewh(home)
    K = grid.K
    demand = np.asarray(ewh.demand_kg, dtype=float)
    z_max = ewh.kg_per_kwh() * grid.kw_to_kwh(ewh.max_power_kw)

    heat = np.zeros(K)
    owed = 0.0

    for t in range(K - 1, -1, -1):
        if t + 1 < K:
            owed += demand[t + 1]

        heat[t] = min(owed, z_max)
        owed -= heat[t]

    owed += demand[0]

    if owed > ewh.initial_kg + 1e-9:
        raise ValueError(
            f"home {home.id}: hot-water draws need {owed - ewh.initial_kg:.2f} kg more than "
            f"can be heated in time"
        )

    return heat / ewh.kg_per_kwh()
