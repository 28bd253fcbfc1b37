"""
Per-home pricing
================
min sum_j c_ij u+_ij - sigma3 . sum_j p_ij over X_i.

X_i is a product of appliance sets (the deviation rows only pair p_ij with
u+_ij), so the problem splits:
1) HVAC, EWH and EV carry no integers: one LP over their blocks
2) each run-once appliance (WM, oven, dryer) takes its cheapest feasible start
3) L_i is the sum of the parts and is exact, so bound == value
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from ..appliances.basic import feasible_starts, run_profile
from ..appliances.blocks import block_to_model, merge_blocks, p_name, u_name
from ..appliances.deviation import build_deviation_block
from ..appliances.home import appliance_block, assemble_home_polyhedron
from ..core.errors import SolverError
from ..core.model import HomeSpec, TimeGrid
from ..core.settings import SOLVER_CONFIG
from ..kernel.lp_model import Basis
from ..kernel.simplex import solve_lp


@dataclass(frozen=True, eq=False)
class PricingResult:
    home: int                       # position in the community
    loads: Dict[str, np.ndarray]    # appliance -> p (K)
    u_plus: Dict[str, np.ndarray]   # appliance -> |p - p_bar| (K)
    master_cost: float
    load: np.ndarray                # sum over appliances, K
    value: float                    # L_i at the returned point
    bound: float                    # lower bound on L_i
    lp_iterations: int = 0


def reduced_cost_admit(value: float, sigma4: float, tol: Optional[float] = None) -> bool:
    """A point enters the pool only if its reduced cost L_i - sigma4 is below -tol."""
    tol = SOLVER_CONFIG["rc_tol"] if tol is None else tol
    return value < sigma4 - tol


class HomePricer:
    """Owns home i's compiled pricing parts; reprices them for each new sigma3.

    `block` is the full X_i, kept for audits. The continuous LP keeps its last
    optimal basis between calls so each solve starts warm.
    """

    def __init__(
        self,
        position: int,
        home: HomeSpec,
        weather: np.ndarray,
        grid: TimeGrid,
        config: Optional[dict] = None,
    ):
        self.position = position
        self.home = home
        self.grid = grid
        self.cfg = {**SOLVER_CONFIG, **(config or {})}

        self.block = assemble_home_polyhedron(home, weather, grid)

        self.names: List[str] = home.appliance_names
        self.weights = np.array([home.weights[n] for n in self.names])
        self.baseline = np.array([home.baseline[n] for n in self.names])

        basic = {b.name for b in home.basics}
        self.flex = [n for n in self.names if n not in basic]
        self.flex_rows = [self.names.index(n) for n in self.flex]
        self.model = None
        self._basis: Optional[Basis] = None

        if self.flex:
            parts = [appliance_block(home, n, weather, grid) for n in self.flex]
            parts.append(build_deviation_block(home, grid, self.flex))
            sub = merge_blocks(parts, f"h{home.id}.flex")
            self.model, index = block_to_model(sub, name=f"pricing.h{home.id}")

            K = grid.K
            self.p_cols = np.array([[index[p_name(home.id, n, t)] for t in range(K)] for n in self.flex], dtype=int)
            self.u_cols = np.array([[index[u_name(home.id, n, t)] for t in range(K)] for n in self.flex], dtype=int)

        # run-once appliances: one candidate profile per feasible start
        self.runs = []

        for params in home.basics:
            k = self.names.index(params.name)
            profiles = np.array([run_profile(params, grid, s) for s in feasible_starts(params)])
            dev = self.weights[k] * np.abs(profiles - self.baseline[k]).sum(axis=1)
            self.runs.append((k, profiles, dev))

    def baseline_result(self) -> PricingResult:
        return self._result(self.baseline, np.zeros(self.grid.K))

    def price(self, sigma3: np.ndarray) -> PricingResult:
        sigma3 = np.asarray(sigma3, dtype=float)

        if sigma3.shape != (self.grid.K,):
            raise ValueError(f"sigma3 must have length {self.grid.K}, got {sigma3.shape}")

        p = np.zeros_like(self.baseline)
        iterations = 0

        if self.model is not None:
            c = np.zeros(self.model.n_vars)
            c[self.u_cols] = self.weights[self.flex_rows][:, None]
            c[self.p_cols] = -sigma3[None, :]
            self.model.set_objective(c)

            sol = solve_lp(self.model, basis=self._basis, config=self.cfg)

            if not sol.is_optimal:
                raise SolverError(f"home {self.home.id}: pricing LP ended {sol.status}")

            self._basis = sol.basis
            iterations = sol.iterations
            p[self.flex_rows] = np.maximum(sol.x[self.p_cols], 0.0)

        for k, profiles, dev in self.runs:
            # argmin keeps the earliest start on ties
            p[k] = profiles[int(np.argmin(dev - profiles @ sigma3))]

        return self._result(p, sigma3, lp_iterations=iterations)

    def _result(self, p: np.ndarray, sigma3: np.ndarray, lp_iterations: int = 0) -> PricingResult:
        u = np.abs(p - self.baseline)
        master_cost = float(np.sum(self.weights[:, None] * u))
        load = p.sum(axis=0)
        value = master_cost - float(sigma3 @ load)

        return PricingResult(
            home=self.position,
            loads={n: p[k].copy() for k, n in enumerate(self.names)},
            u_plus={n: u[k] for k, n in enumerate(self.names)},
            master_cost=master_cost,
            load=load,
            value=value,
            bound=value,
            lp_iterations=lp_iterations,
        )


def solve_pricing(
    home: HomeSpec,
    weather: np.ndarray,
    grid: TimeGrid,
    sigma3: np.ndarray,
    config: Optional[dict] = None,
) -> PricingResult:
    """One-shot pricing of a single home."""
    return HomePricer(0, home, weather, grid, config).price(sigma3)
