"""
Restricted master
=================
Columns are known points of each home's X_i. The master picks a convex
combination per home (relaxed) or exactly one column per home (integer):

  min  sum_t s(t) + sum_ig cost_ig lam_ig
  s.t. s(t) - a(t) >= 0, s(t) + a(t) >= 0                 (sigma1, sigma2)
       a(t) + sum_ig load_ig(t) lam_ig = Q(t)             (sigma3)
       sum_g lam_ig = 1                       for each i  (sigma4)
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..core.errors import SolverError
from ..core.model import CommunityInstance, Schedule
from ..core.settings import SOLVER_CONFIG
from ..kernel.branch_bound import solve_mip
from ..kernel.lp_model import (
    BINARY,
    CONTINUOUS,
    EQ,
    GE,
    Basis,
    LpModel,
    LpSolution,
    MipSolution,
    VarMeta,
)
from ..kernel.simplex import solve_lp
from .pricing import PricingResult


# =========================================================
# Types
# =========================================================

@dataclass(eq=False)
class Column:
    home: int                           # position in the community
    loads: Dict[str, np.ndarray]
    u_plus: Dict[str, np.ndarray]
    master_cost: float
    load: np.ndarray                    # K
    zero_age: int = 0
    baseline: bool = False
    serial: int = -1                    # admission order within the home
    var: int = -1                       # lambda index in the master model

    @classmethod
    def from_pricing(cls, result: PricingResult, baseline: bool = False) -> "Column":
        return cls(
            home=result.home,
            loads=result.loads,
            u_plus=result.u_plus,
            master_cost=result.master_cost,
            load=result.load,
            baseline=baseline,
        )


@dataclass(frozen=True, eq=False)
class DualPrices:
    sigma1: np.ndarray      # K
    sigma2: np.ndarray      # K
    sigma3: np.ndarray      # K
    sigma4: np.ndarray      # N


@dataclass(eq=False)
class ColumnPool:
    N: int
    by_home: List[List[Column]] = field(default_factory=list)
    admitted: int = 0

    def __post_init__(self):
        if not self.by_home:
            self.by_home = [[] for _ in range(self.N)]

    def add(self, column: Column) -> Column:
        column.serial = len(self.by_home[column.home])
        self.by_home[column.home].append(column)
        self.admitted += 1
        return column

    def columns(self, i: int) -> List[Column]:
        return self.by_home[i]

    def all(self) -> List[Column]:
        return [c for cols in self.by_home for c in cols]

    @property
    def total(self) -> int:
        return sum(len(c) for c in self.by_home)

    def sizes(self) -> List[int]:
        return [len(c) for c in self.by_home]

    def discard(self, columns: Sequence[Column]) -> None:
        gone = set(id(c) for c in columns)
        self.by_home = [[c for c in cols if id(c) not in gone] for cols in self.by_home]


# =========================================================
# Master model
# =========================================================

class RestrictedMaster:
    """Relaxed / integer master over the pool; keeps the basis across edits."""

    def __init__(self, instance: CommunityInstance, pool: ColumnPool, config: Optional[dict] = None):
        self.instance = instance
        self.pool = pool
        self.cfg = {**SOLVER_CONFIG, **(config or {})}

        empty = [i for i, cols in enumerate(pool.by_home) if not cols]

        if empty:
            raise SolverError(f"restricted master needs >= 1 column per home; empty for homes {empty}")

        K = instance.grid.K
        model = LpModel("rmp")

        self.s_idx = [model.add_var(VarMeta(f"s[{t}]", CONTINUOUS, 0.0, math.inf), 1.0) for t in range(K)]
        self.a_idx = [model.add_var(VarMeta(f"a[{t}]", CONTINUOUS, -math.inf, math.inf)) for t in range(K)]

        for t in range(K):
            model.add_row([(self.s_idx[t], 1.0), (self.a_idx[t], -1.0)], GE, 0.0, f"abs_pos[{t}]")
        for t in range(K):
            model.add_row([(self.s_idx[t], 1.0), (self.a_idx[t], 1.0)], GE, 0.0, f"abs_neg[{t}]")

        self.coupling_rows = [
            model.add_row([(self.a_idx[t], 1.0)], EQ, instance.target[t], f"coupling[{t}]")
            for t in range(K)
        ]
        self.convexity_rows = [model.add_row([], EQ, 1.0, f"convexity[h{home.id}]") for home in instance.homes]

        self.model = model
        self.basis: Optional[Basis] = None
        self.last: Optional[LpSolution] = None

        for column in pool.all():
            self._attach(column)

    # ---------------------------------------------------------
    # Column edits
    # ---------------------------------------------------------

    def _attach(self, column: Column) -> None:
        home = self.instance.homes[column.home]
        entries = [(self.coupling_rows[t], float(v)) for t, v in enumerate(column.load)]
        entries.append((self.convexity_rows[column.home], 1.0))
        meta = VarMeta(f"lam[h{home.id}.g{column.serial}]", CONTINUOUS, 0.0, math.inf)
        column.var = self.model.add_column(column.master_cost, entries, meta)

        if self.basis is not None:
            self.basis = Basis(self.basis.var_status + ("L",), self.basis.row_status)

    def add_column(self, column: Column) -> Column:
        self.pool.add(column)
        self._attach(column)
        return column

    def drop_columns(self, columns: Sequence[Column]) -> None:
        if not columns:
            return

        x = self.last.x if self.last is not None and self.last.x is not None else None
        mapping = self.model.remove_columns([c.var for c in columns], x=x, tol=self.cfg["feas_tol"])

        for column in self.pool.all():
            column.var = int(mapping[column.var])

        if self.basis is not None:
            kept = tuple(s for j, s in enumerate(self.basis.var_status) if mapping[j] >= 0)
            self.basis = Basis(kept, self.basis.row_status)

        if self.last is not None and self.last.x is not None:
            keep = mapping[:len(self.last.x)] >= 0
            self.last = LpSolution(
                status=self.last.status,
                x=self.last.x[keep],
                duals=self.last.duals,
                obj=self.last.obj,
                iterations=self.last.iterations,
            )

        self.pool.discard(columns)

    # ---------------------------------------------------------
    # Solves
    # ---------------------------------------------------------

    def solve_relaxed(self, time_limit: Optional[float] = None) -> LpSolution:
        sol = solve_lp(self.model, basis=self.basis, time_limit=time_limit, config={**self.cfg, "verbose": False})

        if not sol.is_optimal:
            # warm start is optional; retry cold before giving up
            sol = solve_lp(self.model, time_limit=time_limit, config={**self.cfg, "verbose": False})

        if not sol.is_optimal:
            raise SolverError(f"relaxed master ended with status {sol.status}")

        self.basis = sol.basis
        self.last = sol
        self._age(sol.x)
        return sol

    def _age(self, x: np.ndarray) -> None:
        tol = self.cfg["feas_tol"]

        for column in self.pool.all():
            if x[column.var] <= tol:
                column.zero_age += 1
            else:
                column.zero_age = 0

    def last_weight(self, column: Column) -> float:
        x = self.last.x if self.last is not None else None

        if x is None or column.var >= len(x):
            return 0.0

        return float(x[column.var])

    def duals(self, sol: Optional[LpSolution] = None) -> DualPrices:
        sol = sol or self.last
        K = self.instance.grid.K
        y = sol.duals

        return DualPrices(
            sigma1=y[:K].copy(),
            sigma2=y[K:2 * K].copy(),
            sigma3=y[2 * K:3 * K].copy(),
            sigma4=y[3 * K:].copy(),
        )

    def selection_vector(self, chosen: Sequence[Column]) -> np.ndarray:
        """Master point that picks exactly the given column of every home."""
        x = np.zeros(self.model.n_vars)
        load = np.zeros(self.instance.grid.K)

        for column in chosen:
            x[column.var] = 1.0
            load += column.load

        a = self.instance.target - load
        x[self.a_idx] = a
        x[self.s_idx] = np.abs(a)
        return x

    def solve_integer(
        self,
        rel_gap: Optional[float] = None,
        time_limit: Optional[float] = None,
    ) -> MipSolution:
        rel_gap = self.cfg["final_rmp_gap"] if rel_gap is None else rel_gap
        time_limit = self.cfg["final_rmp_time_s"] if time_limit is None else time_limit

        model = self.model.copy()
        model.name = "rmp_int"

        for column in self.pool.all():
            meta = model.vars[column.var]
            model.vars[column.var] = VarMeta(meta.name, BINARY, 0.0, 1.0)

        candidates = [self.selection_vector([c for c in self.pool.all() if c.baseline])]

        if self.last is not None and self.last.x is not None:
            heaviest = [max(cols, key=self.last_weight) for cols in self.pool.by_home]
            candidates.append(self.selection_vector(heaviest))

        incumbent = min(candidates, key=model.objective)

        return solve_mip(
            model,
            rel_gap=rel_gap,
            time_limit=time_limit,
            incumbent=incumbent,
            root_basis=self.basis,
            config=self.cfg,
        )


def build_relaxed_rmp(pool: ColumnPool, instance: CommunityInstance) -> LpModel:
    return RestrictedMaster(instance, pool).model


# =========================================================
# Bound, pruning, recovery
# =========================================================

def lagrangian_bound(sigma3: np.ndarray, values: Sequence[float], target: np.ndarray) -> float:
    """xi = sum_t Q(t) sigma3(t) + sum_i L_i; valid for any sigma3 with |sigma3| <= 1."""
    return float(np.dot(target, sigma3)) + float(np.sum(values))


def prune_columns(pool: ColumnPool, kappa: float) -> List[Column]:
    """Columns idle for kappa straight solves; baseline columns always stay."""
    if math.isinf(kappa):
        return []

    removed: List[Column] = []

    for cols in pool.by_home:
        stale = [c for c in cols if c.zero_age >= kappa and not c.baseline]

        if len(stale) == len(cols):
            stale = stale[1:]

        removed.extend(stale)

    return removed


def recover_schedule(
    instance: CommunityInstance,
    pool: ColumnPool,
    weights: np.ndarray,
) -> Schedule:
    """x_i = sum_g lam_ig x_ig; fractional weights may leave X_i."""
    names = instance.appliance_names
    K = instance.grid.K
    p = np.zeros((instance.N, len(names), K))
    u = np.zeros_like(p)

    for column in pool.all():
        lam = float(weights[column.var])

        if lam == 0.0:
            continue

        for name, vec in column.loads.items():
            m = names.index(name)
            p[column.home, m] += lam * vec
            u[column.home, m] += lam * column.u_plus[name]

    return Schedule.from_loads(instance, p, u)


def selected_columns(pool: ColumnPool, weights: np.ndarray, tol: float = 1e-6) -> List[Column]:
    chosen: List[Column] = []

    for i, cols in enumerate(pool.by_home):
        picked = [c for c in cols if weights[c.var] > 1.0 - tol]

        if len(picked) != 1:
            raise SolverError(f"integer master picked {len(picked)} columns for home position {i}")

        chosen.append(picked[0])

    return chosen
