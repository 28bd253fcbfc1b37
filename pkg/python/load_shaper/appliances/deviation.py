from __future__ import annotations

from typing import Dict, Mapping, Optional, Sequence

import numpy as np

from ..core.model import HomeSpec, TimeGrid
from ..kernel.lp_model import GE
from .blocks import BlockBuilder, LinearConstraintBlock, p_meta, p_name, u_name


NONNEG_TAG = "dev_nonneg"


def build_deviation_block(
    home: HomeSpec,
    grid: TimeGrid,
    appliances: Optional[Sequence[str]] = None,
) -> LinearConstraintBlock:
    """u+ >= |p - p_bar| as two inequalities per appliance and interval."""
    names = list(appliances) if appliances is not None else home.appliance_names
    i = home.id

    b = BlockBuilder(f"h{i}.dev")

    for name in names:
        if name not in home.baseline:
            raise ValueError(f"home {i}: no baseline for appliance {name!r}")

        base = np.asarray(home.baseline[name], dtype=float)

        for t in range(grid.K):
            p = b.declare(p_meta(i, name, t))
            u = b.var(u_name(i, name, t), tag=NONNEG_TAG)

            b.row("dev_pos", [(u, 1.0), (p, -1.0)], GE, -base[t], f"{name},{t}")
            b.row("dev_neg", [(u, 1.0), (p, 1.0)], GE, base[t], f"{name},{t}")

    return b.build()


def deviation_point(
    home: HomeSpec,
    grid: TimeGrid,
    loads: Mapping[str, np.ndarray],
) -> Dict[str, float]:
    i = home.id
    out: Dict[str, float] = {}

    for name, p in loads.items():
        u = np.abs(np.asarray(p, dtype=float) - np.asarray(home.baseline[name], dtype=float))

        for t in range(grid.K):
            out[p_name(i, name, t)] = float(p[t])
            out[u_name(i, name, t)] = float(u[t])

    return out
