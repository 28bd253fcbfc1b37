"""
Restricted master heuristic
===========================
1) start the pool with every home's baseline column
2) loop: relaxed master -> age/prune idle columns -> price every home ->
   admit negative reduced costs -> Lagrangian bound -> stop on the gap
3) integer master over the learned pool; one column per home
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..appliances.home import audit_schedule
from ..core.model import CommunityInstance, Schedule, objective_value
from ..core.settings import SOLVER_CONFIG
from ..kernel.lp_model import MipSolution
from .master import (
    Column,
    ColumnPool,
    RestrictedMaster,
    lagrangian_bound,
    prune_columns,
    recover_schedule,
    selected_columns,
)
from .pricing import HomePricer, PricingResult, reduced_cost_admit


CONVERGED = "converged"
ITERATION_LIMIT = "iteration_limit"
TIME_LIMIT = "time_limit"

TRACE_COLUMNS = ["iter", "z_rrmp", "xi", "rel_gap", "cols_total", "cols_pruned", "wall_ms"]


@dataclass(frozen=True)
class CgState:
    iter: int
    z_rrmp: float
    xi: float                   # best Lagrangian bound so far
    rel_gap: float
    cols_total: int
    cols_pruned: int
    admitted: int
    wall_ms: float
    columns_per_home: Tuple[int, ...] = ()


@dataclass(frozen=True, eq=False)
class DwResult:
    schedule: Schedule
    obj: float
    xi: float
    status: str
    history: List[CgState] = field(default_factory=list)
    final: Optional[MipSolution] = None
    columns_final: int = 0
    wall_s: float = 0.0

    @property
    def iterations(self) -> int:
        return len(self.history)

    @property
    def rel_gap(self) -> float:
        return self.history[-1].rel_gap if self.history else math.inf


def relative_gap(z: float, xi: float) -> float:
    if abs(z - xi) <= 1e-9:
        return 0.0

    return abs(z - xi) / max(abs(xi), 1e-10)


def _price_all(
    pricers: Sequence[HomePricer],
    sigma3: np.ndarray,
    workers: int,
    pool: Optional[ThreadPoolExecutor],
) -> List[PricingResult]:
    if pool is None or workers <= 1:
        return [p.price(sigma3) for p in pricers]

    # map keeps input order, so merging stays by ascending home index
    return list(pool.map(lambda p: p.price(sigma3), pricers))


def run_restricted_master_heuristic(
    instance: CommunityInstance,
    eps: Optional[float] = None,
    kappa: Optional[float] = None,
    max_iters: Optional[int] = None,
    time_limit: Optional[float] = None,
    config: Optional[dict] = None,
    verbose: Optional[bool] = None,
) -> DwResult:
    cfg = {**SOLVER_CONFIG, **(config or {})}
    eps = cfg["cg_eps"] if eps is None else float(eps)
    kappa = cfg["cg_kappa"] if kappa is None else float(kappa)
    max_iters = cfg["cg_max_iters"] if max_iters is None else int(max_iters)
    verbose = cfg["verbose"] if verbose is None else verbose
    workers = int(cfg["pricing_workers"])

    if not eps > 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    if not kappa >= 1:
        raise ValueError(f"kappa must be >= 1 or inf, got {kappa}")

    started = time.perf_counter()
    deadline = None if time_limit is None else started + float(time_limit)
    lp_cfg = {**cfg, "verbose": False}

    pricers = [
        HomePricer(i, home, instance.weather, instance.grid, lp_cfg)
        for i, home in enumerate(instance.homes)
    ]

    pool = ColumnPool(instance.N)

    for pricer in pricers:
        pool.add(Column.from_pricing(pricer.baseline_result(), baseline=True))

    master = RestrictedMaster(instance, pool, lp_cfg)
    history: List[CgState] = []
    best_xi = -math.inf
    status = ITERATION_LIMIT
    executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None

    try:
        for it in range(1, max_iters + 1):
            sol = master.solve_relaxed()
            duals = master.duals(sol)

            stale = prune_columns(pool, kappa)
            master.drop_columns(stale)

            results = _price_all(pricers, duals.sigma3, workers, executor)
            admitted = 0

            for i, result in enumerate(results):
                if reduced_cost_admit(result.value, float(duals.sigma4[i]), cfg["rc_tol"]):
                    master.add_column(Column.from_pricing(result))
                    admitted += 1

            xi = lagrangian_bound(duals.sigma3, [r.bound for r in results], instance.target)
            best_xi = max(best_xi, xi)
            gap = relative_gap(sol.obj, best_xi)

            state = CgState(
                iter=it,
                z_rrmp=sol.obj,
                xi=best_xi,
                rel_gap=gap,
                cols_total=pool.total,
                cols_pruned=len(stale),
                admitted=admitted,
                wall_ms=(time.perf_counter() - started) * 1000.0,
                columns_per_home=tuple(pool.sizes()),
            )
            history.append(state)

            if verbose:
                print(
                    f"[cg] iter={it} z_rrmp={sol.obj:.6g} xi={best_xi:.6g} rel_gap={gap:.2e} "
                    f"cols={pool.total} admitted={admitted} pruned={len(stale)}"
                )

            if gap <= eps or admitted == 0:
                status = CONVERGED
                break

            if deadline is not None and time.perf_counter() >= deadline:
                status = TIME_LIMIT
                break
    finally:
        if executor is not None:
            executor.shutdown()

    remaining = None if deadline is None else max(deadline - time.perf_counter(), 1.0)
    mip = master.solve_integer(time_limit=remaining)
    chosen = selected_columns(pool, mip.x)

    schedule = recover_schedule(instance, pool, mip.x)
    audit_schedule(instance, schedule, [p.block for p in pricers])
    obj = objective_value(instance, schedule)
    wall = time.perf_counter() - started

    print(
        f"[rmp] N={instance.N} K={instance.grid.K} status={status} iters={len(history)} "
        f"obj={obj:.6g} xi={best_xi:.6g} cols={pool.total} final={mip.status} "
        f"picked_new={sum(1 for c in chosen if not c.baseline)} wall_s={wall:.2f}"
    )

    return DwResult(
        schedule=schedule,
        obj=obj,
        xi=best_xi,
        status=status,
        history=history,
        final=mip,
        columns_final=pool.total,
        wall_s=wall,
    )


def trace_frame(history: Sequence[CgState]) -> pd.DataFrame:
    rows = [{k: getattr(s, k) for k in TRACE_COLUMNS} for s in history]
    return pd.DataFrame(rows, columns=TRACE_COLUMNS)


def write_trace_csv(history: Sequence[CgState], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    trace_frame(history).to_csv(path, index=False)
    return path
