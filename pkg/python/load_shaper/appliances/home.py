from __future__ import annotations

from typing import Dict, Iterable, Mapping, Optional, Sequence

import numpy as np

from ..core.errors import AuditError
from ..core.model import CommunityInstance, HomeSpec, Schedule, TimeGrid, schedule_residuals
from .basic import basic_point, build_basic_appliance_block
from .blocks import LinearConstraintBlock, check_membership, merge_blocks
from .deviation import build_deviation_block, deviation_point
from .ev import build_ev_block, ev_point
from .ewh import build_ewh_block, ewh_point
from .hvac import ThermostatTrace, build_hvac_block, hvac_point


def appliance_block(
    home: HomeSpec,
    name: str,
    weather: np.ndarray,
    grid: TimeGrid,
    trace: Optional[ThermostatTrace] = None,
) -> LinearConstraintBlock:
    if name == "hvac":
        return build_hvac_block(home, weather, grid, trace=trace)
    if name == "ewh":
        return build_ewh_block(home, grid)
    if name == "ev":
        return build_ev_block(home, grid)

    return build_basic_appliance_block(home, name, grid)


def assemble_home_polyhedron(
    home: HomeSpec,
    weather: np.ndarray,
    grid: TimeGrid,
    exclude: Iterable[str] = (),
) -> LinearConstraintBlock:
    """X_i: every appliance block plus the deviation block on a shared namespace.

    Blocks named in `exclude` are left out; their loads stay in the deviation
    block, so the set only grows.
    """
    skip = set(exclude)
    blocks = [
        appliance_block(home, name, weather, grid)
        for name in home.appliance_names
        if name not in skip
    ]
    blocks.append(build_deviation_block(home, grid))

    return merge_blocks(blocks, f"h{home.id}")


def appliance_point(
    home: HomeSpec,
    name: str,
    weather: np.ndarray,
    grid: TimeGrid,
    p_kwh: np.ndarray,
) -> Dict[str, float]:
    if name == "hvac":
        return hvac_point(home, weather, grid, p_kwh)
    if name == "ewh":
        return ewh_point(home, grid, p_kwh)
    if name == "ev":
        return ev_point(home, grid, p_kwh)

    return basic_point(home, name, grid, p_kwh)


def home_point(
    home: HomeSpec,
    weather: np.ndarray,
    grid: TimeGrid,
    loads: Mapping[str, np.ndarray],
) -> Dict[str, float]:
    """Full X_i assignment implied by per-appliance loads, with u+ = |p - p_bar|."""
    missing = [n for n in home.appliance_names if n not in loads]

    if missing:
        raise ValueError(f"home {home.id}: loads missing for {missing}")

    point: Dict[str, float] = {}

    for name in home.appliance_names:
        point.update(appliance_point(home, name, weather, grid, np.asarray(loads[name], dtype=float)))

    point.update(deviation_point(home, grid, loads))
    return point


def baseline_point(home: HomeSpec, weather: np.ndarray, grid: TimeGrid) -> Dict[str, float]:
    return home_point(home, weather, grid, home.baseline)


def audit_home_loads(
    home: HomeSpec,
    weather: np.ndarray,
    grid: TimeGrid,
    loads: Mapping[str, np.ndarray],
    block: Optional[LinearConstraintBlock] = None,
    tol: float = 1e-6,
) -> None:
    block = block or assemble_home_polyhedron(home, weather, grid)
    violated = check_membership(home_point(home, weather, grid, loads), block, tol=tol)

    if violated:
        raise AuditError(f"home {home.id}: schedule violates {violated}", home=home.id, tags=violated)


def audit_home_baseline(
    home: HomeSpec,
    weather: np.ndarray,
    grid: TimeGrid,
    block: Optional[LinearConstraintBlock] = None,
) -> None:
    audit_home_loads(home, weather, grid, home.baseline, block=block)


def schedule_loads(instance: CommunityInstance, schedule: Schedule, i: int) -> Dict[str, np.ndarray]:
    names = instance.appliance_names
    home = instance.homes[i]
    return {name: schedule.p[i, names.index(name)] for name in home.appliance_names}


def audit_schedule(
    instance: CommunityInstance,
    schedule: Schedule,
    blocks: Optional[Sequence[LinearConstraintBlock]] = None,
    tol: float = 1e-6,
) -> None:
    """Raises AuditError unless every home is in X_i and a + sum p = Q holds."""
    residuals = schedule_residuals(instance, schedule)
    bad = {k: v for k, v in residuals.items() if v > tol}

    if bad:
        raise AuditError(f"schedule residuals exceed {tol}: {bad}", tags=sorted(bad))

    for i, home in enumerate(instance.homes):
        block = blocks[i] if blocks is not None else None
        audit_home_loads(
            home, instance.weather, instance.grid, schedule_loads(instance, schedule, i), block=block, tol=tol
        )
