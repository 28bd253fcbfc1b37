"""
Centralized model
=================
One MILP over every home: s(t) >= |a(t)| through two rows, the coupling
a(t) + sum_ij p_ij(t) = Q(t), and each home's X_i on a shared namespace.
Serves as the oracle the restricted master heuristic is measured against.

With `run_rows` each run-once appliance also gets start weights w_s >= 0,
sum_s w_s = 1 and x(t) = sum of w_s over the starts covering t. Every integer
point satisfies them with w the indicator of its start; the LP relaxation is
cut down to convex combinations of whole runs.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from ..appliances.basic import baseline_start, feasible_starts
from ..appliances.blocks import LinearConstraintBlock, add_block_to_model, p_name, point_vector, u_name, var_name
from ..appliances.home import assemble_home_polyhedron, audit_schedule, baseline_point
from ..core.model import CommunityInstance, HomeSpec, Schedule, TimeGrid, objective_value
from ..core.settings import SOLVER_CONFIG
from ..kernel.branch_bound import solve_mip
from ..kernel.lp_model import CONTINUOUS, EQ, GE, OPTIMAL, LpModel, VarMeta
from ..kernel.simplex import solve_lp


# =========================================================
# Types
# =========================================================

@dataclass(eq=False)
class CentralizedModel:
    model: LpModel
    s_idx: np.ndarray                   # K
    a_idx: np.ndarray                   # K
    p_idx: np.ndarray                   # N x M x K, -1 where a home lacks the slot
    u_idx: np.ndarray                   # N x M x K
    coupling_rows: np.ndarray           # K
    blocks: List[LinearConstraintBlock]
    home_index: List[Dict[str, int]]
    run_idx: List[Dict[str, np.ndarray]]    # home -> appliance -> w per feasible start


@dataclass(frozen=True, eq=False)
class CentralizedResult:
    schedule: Optional[Schedule]
    obj: float
    bound: float
    status: str
    nodes: int
    wall_s: float

    @property
    def rel_gap(self) -> float:
        if not math.isfinite(self.obj) or not math.isfinite(self.bound):
            return math.inf

        return abs(self.obj - self.bound) / max(abs(self.bound), 1e-10)


# =========================================================
# Assembly
# =========================================================

def _add_run_rows(model: LpModel, home: HomeSpec, grid: TimeGrid, index: Dict[str, int]) -> Dict[str, np.ndarray]:
    runs: Dict[str, np.ndarray] = {}

    for params in home.basics:
        tag = f"h{home.id}.{params.name}"
        starts = list(feasible_starts(params))
        w = np.array([
            model.add_var(VarMeta(f"{tag}.w[{s}]", CONTINUOUS, 0.0, 1.0)) for s in starts
        ])
        model.add_row([(int(j), 1.0) for j in w], EQ, 1.0, f"{tag}.run_pick")

        for t in range(grid.K):
            entries = [(index[var_name(home.id, params.name, "x", t)], 1.0)]
            entries += [(int(w[k]), -1.0) for k, s in enumerate(starts) if s <= t < s + params.duration]
            model.add_row(entries, EQ, 0.0, f"{tag}.run_link[{t}]")

        runs[params.name] = w

    return runs


def build_centralized_ip(instance: CommunityInstance, run_rows: bool = True) -> CentralizedModel:
    K = instance.grid.K
    names = instance.appliance_names
    model = LpModel("centralized")

    s_idx = np.array([model.add_var(VarMeta(f"s[{t}]", CONTINUOUS, 0.0, math.inf), 1.0) for t in range(K)])
    a_idx = np.array([model.add_var(VarMeta(f"a[{t}]", CONTINUOUS, -math.inf, math.inf)) for t in range(K)])

    for t in range(K):
        model.add_row([(s_idx[t], 1.0), (a_idx[t], -1.0)], GE, 0.0, f"abs_pos[{t}]")
    for t in range(K):
        model.add_row([(s_idx[t], 1.0), (a_idx[t], 1.0)], GE, 0.0, f"abs_neg[{t}]")

    shape = (instance.N, len(names), K)
    p_idx = np.full(shape, -1, dtype=int)
    u_idx = np.full(shape, -1, dtype=int)
    blocks: List[LinearConstraintBlock] = []
    home_index: List[Dict[str, int]] = []
    run_idx: List[Dict[str, np.ndarray]] = []

    for i, home in enumerate(instance.homes):
        block = assemble_home_polyhedron(home, instance.weather, instance.grid)
        costs = {
            u_name(home.id, name, t): home.weights[name]
            for name in home.appliance_names
            for t in range(K)
        }
        index = add_block_to_model(model, block, costs)

        for name in home.appliance_names:
            m = names.index(name)
            p_idx[i, m] = [index[p_name(home.id, name, t)] for t in range(K)]
            u_idx[i, m] = [index[u_name(home.id, name, t)] for t in range(K)]

        blocks.append(block)
        home_index.append(index)
        run_idx.append(_add_run_rows(model, home, instance.grid, index) if run_rows else {})

    coupling = []

    for t in range(K):
        entries = [(a_idx[t], 1.0)]
        entries += [(int(j), 1.0) for j in p_idx[:, :, t].ravel() if j >= 0]
        coupling.append(model.add_row(entries, EQ, instance.target[t], f"coupling[{t}]"))

    return CentralizedModel(
        model=model,
        s_idx=s_idx,
        a_idx=a_idx,
        p_idx=p_idx,
        u_idx=u_idx,
        coupling_rows=np.array(coupling),
        blocks=blocks,
        home_index=home_index,
        run_idx=run_idx,
    )


def baseline_assignment(instance: CommunityInstance, cm: CentralizedModel) -> np.ndarray:
    x = np.zeros(cm.model.n_vars)

    for i, home in enumerate(instance.homes):
        point = baseline_point(home, instance.weather, instance.grid)
        vec = point_vector(cm.blocks[i], point)
        cols = [cm.home_index[i][v.name] for v in cm.blocks[i].vars]
        x[cols] = vec

        for params in home.basics:
            if params.name in cm.run_idx[i]:
                x[cm.run_idx[i][params.name][baseline_start(params) - params.window_start]] = 1.0

    a = instance.target - instance.baseline_tensor().sum(axis=(0, 1))
    x[cm.a_idx] = a
    x[cm.s_idx] = np.abs(a)
    return x


def extract_schedule(instance: CommunityInstance, cm: CentralizedModel, x: np.ndarray) -> Schedule:
    present = cm.p_idx >= 0
    p = np.where(present, x[np.where(present, cm.p_idx, 0)], 0.0)
    base = instance.baseline_tensor()

    # tightest u+ for the returned loads
    u_plus = np.where(present, np.abs(p - base), 0.0)
    return Schedule.from_loads(instance, p, u_plus)


# =========================================================
# Solve
# =========================================================

def solve_centralized(
    instance: CommunityInstance,
    rel_gap: float = 1e-4,
    time_limit: Optional[float] = None,
    node_limit: Optional[int] = None,
    config: Optional[dict] = None,
    verbose: bool = True,
) -> CentralizedResult:
    cfg = {**SOLVER_CONFIG, **(config or {})}
    started = time.perf_counter()

    cm = build_centralized_ip(instance)
    incumbent = baseline_assignment(instance, cm)

    mip = solve_mip(
        cm.model,
        rel_gap=rel_gap,
        node_limit=node_limit,
        time_limit=time_limit,
        incumbent=incumbent,
        config=cfg,
    )

    schedule = None
    obj = math.inf

    if mip.has_incumbent:
        schedule = extract_schedule(instance, cm, mip.x)
        audit_schedule(instance, schedule, cm.blocks)
        obj = objective_value(instance, schedule)

    wall = time.perf_counter() - started

    if verbose:
        print(
            f"[central] N={instance.N} K={instance.grid.K} vars={cm.model.n_vars} rows={cm.model.n_rows} "
            f"status={mip.status} obj={obj:.6g} bound={mip.bound:.6g} nodes={mip.nodes} wall_s={wall:.2f}"
        )

    return CentralizedResult(
        schedule=schedule,
        obj=obj,
        bound=min(mip.bound, obj),
        status=mip.status,
        nodes=mip.nodes,
        wall_s=wall,
    )


def lp_relaxation_bound(instance: CommunityInstance, config: Optional[dict] = None) -> float:
    """Plain LP relaxation of the centralized model (no run rows, no convexification)."""
    cm = build_centralized_ip(instance, run_rows=False)
    sol = solve_lp(cm.model, config=config)

    if sol.status != OPTIMAL:
        return -math.inf

    return sol.obj
