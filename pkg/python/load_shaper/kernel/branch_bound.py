from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from ..core.settings import SOLVER_CONFIG
from .lp_model import (
    INFEASIBLE,
    NODE_LIMIT,
    NUMERICAL_ERROR,
    OPTIMAL,
    TIME_LIMIT,
    UNBOUNDED,
    Basis,
    LpModel,
    MipSolution,
    is_feasible,
)
from .simplex import solve_lp


NODE_LOG_EVERY = 1000


@dataclass(order=True)
class _Node:
    bound: float
    seq: int
    changes: Tuple[Tuple[int, float, float], ...] = field(compare=False, default=())
    basis: Optional[Basis] = field(compare=False, default=None)


def _gap(obj: float, bound: float) -> float:
    return abs(obj - bound) / max(abs(bound), 1e-10)


def _apply(lo: np.ndarray, hi: np.ndarray, changes) -> Tuple[np.ndarray, np.ndarray]:
    lo = lo.copy()
    hi = hi.copy()

    for j, low, up in changes:
        lo[j] = low
        hi[j] = up

    return lo, hi


def solve_mip(
    model: LpModel,
    rel_gap: float = 0.0,
    node_limit: Optional[int] = None,
    time_limit: Optional[float] = None,
    *,
    incumbent: Optional[np.ndarray] = None,
    root_basis: Optional[Basis] = None,
    config: Optional[dict] = None,
    verbose: Optional[bool] = None,
) -> MipSolution:
    """Best-bound branch and bound, branching on the most fractional variable.

    `incumbent`, when feasible, seeds the upper bound. The reported bound is a
    valid lower bound even when a limit stops the search.
    """
    cfg = {**SOLVER_CONFIG, **(config or {})}
    verbose = cfg["verbose"] if verbose is None else verbose
    int_tol = float(cfg["int_tol"])
    lp_cfg = {**cfg, "verbose": False}

    started = time.perf_counter()
    deadline = None if time_limit is None else started + float(time_limit)

    lo0, hi0 = model.bounds()
    integral = model.integer_mask()
    int_idx = np.flatnonzero(integral)

    lo0 = lo0.copy()
    hi0 = hi0.copy()
    lo0[int_idx] = np.ceil(lo0[int_idx] - int_tol)
    hi0[int_idx] = np.floor(hi0[int_idx] + int_tol)

    best_x: Optional[np.ndarray] = None
    best_obj = math.inf

    if incumbent is not None:
        x0 = np.asarray(incumbent, dtype=float)

        if x0.shape == (model.n_vars,) and is_feasible(model, x0, tol=1e-6):
            best_x, best_obj = x0.copy(), model.objective(x0)

    heap = [_Node(-math.inf, 0, (), root_basis)]
    seq = 1
    nodes = 0
    branches = 0
    bound = -math.inf
    floor = math.inf            # LP values of nodes dropped without being closed
    root_out: Optional[Basis] = None
    status: Optional[str] = None

    while heap:
        node = heap[0]
        lower = min(node.bound, floor)
        bound = max(bound, min(lower, best_obj))

        if best_x is not None:
            prune_eps = 1e-9 * (1.0 + abs(best_obj))

            if node.bound >= best_obj - prune_eps:
                heap.clear()
                break

            if _gap(best_obj, lower) <= rel_gap:
                status = OPTIMAL
                break

        if node_limit is not None and nodes >= node_limit:
            status = NODE_LIMIT
            break

        remaining = None

        if deadline is not None:
            remaining = deadline - time.perf_counter()

            if remaining <= 0:
                status = TIME_LIMIT
                break

        heapq.heappop(heap)
        lo, hi = _apply(lo0, hi0, node.changes)
        sol = solve_lp(model, lower=lo, upper=hi, basis=node.basis, time_limit=remaining, config=lp_cfg)
        nodes += 1

        if nodes == 1:
            root_out = sol.basis

            if sol.status == UNBOUNDED:
                return MipSolution(status=UNBOUNDED, nodes=nodes)

        if sol.status == INFEASIBLE:
            continue

        if sol.status != OPTIMAL:
            floor = min(floor, node.bound)
            continue

        if sol.obj >= best_obj - 1e-9 * (1.0 + abs(best_obj)):
            continue

        if best_x is not None and _gap(best_obj, sol.obj) <= rel_gap:
            floor = min(floor, sol.obj)
            continue

        values = sol.x[int_idx]
        frac = np.abs(values - np.round(values))

        if frac.size == 0 or float(frac.max()) <= int_tol:
            x = sol.x.copy()
            x[int_idx] = np.round(values)
            obj = model.objective(x)

            if obj < best_obj:
                best_x, best_obj = x, obj

                if verbose:
                    print(f"[bnb] model={model.name} nodes={nodes} incumbent={obj:.6g}")

            continue

        k = int(np.argmax(frac))
        j = int(int_idx[k])
        v = float(sol.x[j])

        down = node.changes + ((j, lo[j], math.floor(v)),)
        up = node.changes + ((j, math.ceil(v), hi[j]),)

        heapq.heappush(heap, _Node(sol.obj, seq, down, sol.basis))
        heapq.heappush(heap, _Node(sol.obj, seq + 1, up, sol.basis))
        seq += 2
        branches += 1

        if verbose and nodes % NODE_LOG_EVERY == 0:
            print(
                f"[bnb] model={model.name} nodes={nodes} open={len(heap)} "
                f"bound={bound:.6g} incumbent={best_obj:.6g}"
            )

    if status is None:
        # Tree exhausted: every open node was closed or pruned.
        bound = max(bound, min(floor, best_obj))

        if best_x is None:
            status = INFEASIBLE if not math.isfinite(floor) else NUMERICAL_ERROR
        else:
            status = OPTIMAL if not math.isfinite(floor) or _gap(best_obj, bound) <= rel_gap else NUMERICAL_ERROR
    elif status == OPTIMAL:
        bound = max(bound, min(heap[0].bound if heap else best_obj, floor))

    if best_x is not None:
        bound = min(bound, best_obj)

    return MipSolution(
        status=status,
        x=best_x,
        obj=best_obj,
        bound=bound,
        nodes=nodes,
        branches=branches,
        root_basis=root_out,
    )
