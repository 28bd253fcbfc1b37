"""
WM tightness demo
=================
1) small_wm_home          – K=5 home whose only appliance is a 2-interval washing machine
2) wm_vertices            – every integer point of its block, ordered by start time
3) fractional_wm_point    – LP-feasible point with x = 2/3 across the window
4) convex_combination_lp  – solve  alpha*A + (1 - alpha)*B = target  for alpha in [0, 1]
5) wm_tightness_report    – the above as one dict (`cli enumerate-wm`)

The block has exactly two integer points, yet its LP relaxation also holds
a point that no mix of the two reaches. That gap is what the restricted master
closes by working over convex combinations of columns.
"""
from __future__ import annotations

import math
import time
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from ..appliances.basic import BINARY_TAG, build_basic_appliance_block, run_profile
from ..appliances.blocks import LinearConstraintBlock, check_membership, enumerate_feasible_points, var_name
from ..core.model import BasicApplianceParams, HomeSpec, TimeGrid
from ..kernel.lp_model import CONTINUOUS, EQ, LpModel, LpSolution, VarMeta
from ..kernel.simplex import solve_lp


APPLIANCE = "wm"


def small_wm_home(
    K: int = 5,
    window: Tuple[int, int] = (1, 3),
    duration: int = 2,
    power_kwh: float = 1.5,
) -> Tuple[HomeSpec, TimeGrid]:
    grid = TimeGrid(K=K)
    params = BasicApplianceParams(APPLIANCE, power_kwh, duration, window[0], window[1])
    home = HomeSpec(
        id=0,
        basics=(params,),
        weights={APPLIANCE: 1.0},
        baseline={APPLIANCE: run_profile(params, grid, window[0])},
    )
    return home, grid


def _start_of(point: Mapping[str, float], home: HomeSpec, grid: TimeGrid) -> int:
    for t in range(grid.K):
        if point[var_name(home.id, APPLIANCE, "x", t)] > 0.5:
            return t

    return grid.K


def wm_vertices(home: HomeSpec, grid: TimeGrid) -> List[Dict[str, float]]:
    block = build_basic_appliance_block(home, APPLIANCE, grid)
    points = enumerate_feasible_points(block)
    return sorted(points, key=lambda pt: _start_of(pt, home, grid))


def fractional_wm_point(home: HomeSpec, grid: TimeGrid, level: float = 2.0 / 3.0) -> Dict[str, float]:
    """x = level on the whole window, one fractional start and one fractional stop after it."""
    params = home.basic(APPLIANCE)
    i = home.id
    window = range(params.window_start, params.window_end + 1)
    after = params.window_end + 1

    point: Dict[str, float] = {}

    for t in range(grid.K):
        on = level if t in window else 0.0
        point[var_name(i, APPLIANCE, "x", t)] = on
        point[var_name(i, APPLIANCE, "p", t)] = on * params.power_kwh

    for t in window:
        point[var_name(i, APPLIANCE, "z", t)] = level if t == params.window_start else 0.0
        point[var_name(i, APPLIANCE, "y", t)] = 0.0

    if after < grid.K:
        point[var_name(i, APPLIANCE, "y", after)] = level

    return point


def convex_combination_lp(
    a: Mapping[str, float],
    b: Mapping[str, float],
    target: Mapping[str, float],
    names: Sequence[str],
    config: Optional[dict] = None,
) -> LpSolution:
    """One-variable feasibility LP; status "infeasible" means target is not on segment [A, B]."""
    model = LpModel("convex_combination")
    alpha = model.add_var(VarMeta("alpha", CONTINUOUS, 0.0, 1.0))

    for name in names:
        model.add_row([(alpha, a[name] - b[name])], EQ, target[name] - b[name], f"mix[{name}]")

    return solve_lp(model, config=config)


def _loads(point: Mapping[str, float], home: HomeSpec, grid: TimeGrid) -> List[float]:
    return [point[var_name(home.id, APPLIANCE, "p", t)] for t in range(grid.K)]


def wm_tightness_report(home: Optional[HomeSpec] = None, grid: Optional[TimeGrid] = None) -> dict:
    started = time.perf_counter()

    if home is None or grid is None:
        home, grid = small_wm_home()

    block: LinearConstraintBlock = build_basic_appliance_block(home, APPLIANCE, grid)
    vertices = wm_vertices(home, grid)
    frac = fractional_wm_point(home, grid)

    report = {
        "points": len(vertices),
        "starts": [_start_of(pt, home, grid) for pt in vertices],
        "loads": [_loads(pt, home, grid) for pt in vertices],
        "fractional_relaxed_violations": check_membership(frac, block, relaxed=True),
        "fractional_violations": check_membership(frac, block),
        "alpha_status": None,
        "alpha": math.nan,
    }

    if len(vertices) == 2:
        sol = convex_combination_lp(vertices[0], vertices[1], frac, block.var_names)
        report["alpha_status"] = sol.status
        report["alpha"] = float(sol.x[0]) if sol.is_optimal else math.nan

    report["wall_s"] = time.perf_counter() - started
    report["integrality_tag"] = BINARY_TAG
    return report
