from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..core.settings import SOLVER_CONFIG
from .lp_model import (
    EQ,
    GE,
    INFEASIBLE,
    ITERATION_LIMIT,
    LE,
    NUMERICAL_ERROR,
    OPTIMAL,
    TIME_LIMIT,
    UNBOUNDED,
    Basis,
    LpModel,
    LpSolution,
)


# =========================================================
# Constants
# =========================================================

BASIC = 0
AT_LOWER = 1
AT_UPPER = 2
FREE_ZERO = 3

_STATUS_CODE = {"B": BASIC, "L": AT_LOWER, "U": AT_UPPER, "Z": FREE_ZERO}
_STATUS_CHAR = {v: k for k, v in _STATUS_CODE.items()}

DEGENERATE_STEP = 1e-12
RATIO_TIE = 1e-12


# =========================================================
# Presolve (singleton rows -> bounds)
# =========================================================

@dataclass
class _Presolved:
    keep: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    lo_src: np.ndarray
    hi_src: np.ndarray
    singleton: Dict[int, Tuple[int, float, str]] = field(default_factory=dict)


def _presolve(
    A: sp.csr_matrix,
    b: np.ndarray,
    senses: Sequence[str],
    lo: np.ndarray,
    hi: np.ndarray,
    tol: float,
) -> Optional[_Presolved]:
    """Turn one-entry rows into bounds. Returns None when bounds cross."""
    n = A.shape[1]
    lo_src = np.full(n, -1, dtype=int)
    hi_src = np.full(n, -1, dtype=int)
    singleton: Dict[int, Tuple[int, float, str]] = {}
    keep: List[int] = []

    indptr, indices, data = A.indptr, A.indices, A.data

    for r, sense in enumerate(senses):
        start, end = indptr[r], indptr[r + 1]
        count = end - start

        if count == 0:
            slack = b[r]
            scale = tol * (1.0 + abs(b[r]))

            if (sense == LE and slack < -scale) or (sense == GE and slack > scale) or (
                sense == EQ and abs(slack) > scale
            ):
                return None

            continue

        if count > 1:
            keep.append(r)
            continue

        j = int(indices[start])
        a = float(data[start])
        val = b[r] / a

        if sense == EQ:
            side = "E"
        elif (sense == LE) == (a > 0):
            side = "U"
        else:
            side = "L"

        if side in ("L", "E") and val >= lo[j]:
            lo[j] = val
            lo_src[j] = r

        if side in ("U", "E") and val <= hi[j]:
            hi[j] = val
            hi_src[j] = r

        singleton[r] = (j, a, side)

    crossed = lo - hi

    if np.any(crossed > tol * (1.0 + np.abs(np.where(np.isfinite(lo), lo, 0.0)))):
        return None

    snap = crossed > 0
    hi[snap] = lo[snap]

    return _Presolved(
        keep=np.asarray(keep, dtype=int),
        lo=lo,
        hi=hi,
        lo_src=lo_src,
        hi_src=hi_src,
        singleton=singleton,
    )


# =========================================================
# Revised simplex core
# =========================================================

class _Core:
    """Bounded primal revised simplex on  A x = b,  lo <= x <= hi  (slacks included)."""

    def __init__(self, A, b, c, lo, hi, cfg: dict, deadline: Optional[float], max_iters: int):
        self.A = sp.csc_matrix(A)
        self.AT = self.A.T.tocsr()
        self.m, self.N = self.A.shape
        self.b = b
        self.c = c
        self.lo = lo
        self.hi = hi

        self.feas_tol = float(cfg["feas_tol"])
        self.dual_tol = float(cfg["rc_tol"])
        self.pivot_tol = float(cfg["pivot_tol"])
        self.refactor_every = int(cfg["refactor_every"])
        self.stall_limit = int(cfg["stall_limit"])
        self.deadline = deadline
        self.max_iters = max_iters

        sq = self.A.multiply(self.A).sum(axis=0)
        self.col_norm = np.sqrt(1.0 + np.asarray(sq, dtype=float).ravel())
        self.fixed = (hi - lo) <= 0.0

        self.state = np.full(self.N, AT_LOWER, dtype=int)
        self.x = np.zeros(self.N)
        self.basic = np.arange(self.N - self.m, self.N)
        self.lu = None
        self.etas: List[Tuple[int, np.ndarray]] = []
        self.iterations = 0

    # ---------------------------------------------------------
    # Basis handling
    # ---------------------------------------------------------

    def _set_nonbasic(self, j: int, hint: int) -> None:
        lo, hi = self.lo[j], self.hi[j]

        if hint == AT_UPPER and math.isfinite(hi):
            self.state[j], self.x[j] = AT_UPPER, hi
        elif hint == AT_LOWER and math.isfinite(lo):
            self.state[j], self.x[j] = AT_LOWER, lo
        elif math.isfinite(lo):
            self.state[j], self.x[j] = AT_LOWER, lo
        elif math.isfinite(hi):
            self.state[j], self.x[j] = AT_UPPER, hi
        else:
            self.state[j], self.x[j] = FREE_ZERO, 0.0

    def load(self, basic: Sequence[int], hints: Sequence[int]) -> bool:
        basic_set = set(int(j) for j in basic)

        for j in range(self.N):
            if j not in basic_set:
                self._set_nonbasic(j, hints[j])

        self.basic = np.asarray(basic, dtype=int)
        self.state[self.basic] = BASIC
        return self.refactor()

    def load_slack_basis(self) -> bool:
        n = self.N - self.m
        return self.load(range(n, self.N), [AT_LOWER] * self.N)

    def refactor(self) -> bool:
        B = sp.csc_matrix(self.A[:, self.basic])

        try:
            self.lu = splu(B)
        except RuntimeError:
            return False

        self.etas = []
        self.recompute_basics()
        return bool(np.all(np.isfinite(self.x[self.basic])))

    def recompute_basics(self) -> None:
        xn = self.x.copy()
        xn[self.basic] = 0.0
        self.x[self.basic] = self.ftran(self.b - self.A @ xn)

    def ftran(self, v: np.ndarray) -> np.ndarray:
        w = self.lu.solve(np.asarray(v, dtype=float))

        for r, alpha in self.etas:
            wr = w[r] / alpha[r]
            w -= alpha * wr
            w[r] = wr

        return w

    def btran(self, v: np.ndarray) -> np.ndarray:
        v = np.array(v, dtype=float)

        for r, alpha in reversed(self.etas):
            v[r] = (v[r] - (alpha @ v - alpha[r] * v[r])) / alpha[r]

        return self.lu.solve(v, trans="T")

    def column(self, j: int) -> np.ndarray:
        v = np.zeros(self.m)
        start, end = self.A.indptr[j], self.A.indptr[j + 1]
        v[self.A.indices[start:end]] = self.A.data[start:end]
        return v

    # ---------------------------------------------------------
    # Iteration
    # ---------------------------------------------------------

    def duals(self) -> np.ndarray:
        return self.btran(self.c[self.basic])

    def run(self) -> str:
        degenerate = 0
        bland = False

        while True:
            if self.iterations >= self.max_iters:
                return ITERATION_LIMIT

            if self.deadline is not None and time.perf_counter() > self.deadline:
                return TIME_LIMIT

            B = self.basic
            xb = self.x[B]
            lob = self.lo[B]
            hib = self.hi[B]

            with np.errstate(invalid="ignore"):
                below = xb < lob - self.feas_tol * (1.0 + np.abs(lob))
                above = xb > hib + self.feas_tol * (1.0 + np.abs(hib))

            phase1 = bool(below.any() or above.any())

            if phase1:
                y = self.btran(above.astype(float) - below.astype(float))
                d = -(self.AT @ y)
            else:
                y = self.btran(self.c[B])
                d = self.c - self.AT @ y

            st = self.state
            tol = self.dual_tol
            eligible = (
                ((st == AT_LOWER) & (d < -tol))
                | ((st == AT_UPPER) & (d > tol))
                | ((st == FREE_ZERO) & (np.abs(d) > tol))
            ) & ~self.fixed

            cand = np.flatnonzero(eligible)

            if cand.size == 0:
                # Decisions are only final on a fresh factorization.
                if self.etas:
                    if not self.refactor():
                        return NUMERICAL_ERROR
                    continue

                return INFEASIBLE if phase1 else OPTIMAL

            if bland:
                j = int(cand[0])
            else:
                score = np.abs(d[cand]) / self.col_norm[cand]
                j = int(cand[int(np.argmax(score))])

            direction = 1.0 if d[j] < 0 else -1.0
            alpha = self.ftran(self.column(j))
            delta = -direction * alpha

            theta = self.hi[j] - self.lo[j]
            if not math.isfinite(theta):
                theta = math.inf

            dec = delta < -self.pivot_tol
            inc = delta > self.pivot_tol
            feasible = ~below & ~above

            lim = np.full(self.m, math.inf)
            to_upper = np.zeros(self.m, dtype=bool)

            with np.errstate(invalid="ignore", divide="ignore"):
                m1 = dec & feasible & np.isfinite(lob)
                lim[m1] = (xb[m1] - lob[m1]) / -delta[m1]

                m2 = inc & feasible & np.isfinite(hib)
                lim[m2] = (hib[m2] - xb[m2]) / delta[m2]
                to_upper[m2] = True

                m3 = inc & below
                lim[m3] = (lob[m3] - xb[m3]) / delta[m3]

                m4 = dec & above
                lim[m4] = (xb[m4] - hib[m4]) / -delta[m4]
                to_upper[m4] = True

            np.maximum(lim, 0.0, out=lim)
            t_min = float(lim.min()) if self.m else math.inf

            leave = -1

            if t_min < theta:
                ties = np.flatnonzero(lim <= t_min + RATIO_TIE)

                if bland:
                    leave = int(ties[np.argmin(B[ties])])
                else:
                    leave = int(ties[np.argmax(np.abs(delta[ties]))])

                theta = t_min

            if not math.isfinite(theta):
                return UNBOUNDED if not phase1 else NUMERICAL_ERROR

            self.x[j] += direction * theta
            self.x[B] += theta * delta

            if leave < 0:
                if direction > 0:
                    self.state[j], self.x[j] = AT_UPPER, self.hi[j]
                else:
                    self.state[j], self.x[j] = AT_LOWER, self.lo[j]
            else:
                out = int(B[leave])

                if to_upper[leave]:
                    self.state[out], self.x[out] = AT_UPPER, self.hi[out]
                else:
                    self.state[out], self.x[out] = AT_LOWER, self.lo[out]

                self.basic[leave] = j
                self.state[j] = BASIC
                self.etas.append((leave, alpha))

                if len(self.etas) >= self.refactor_every and not self.refactor():
                    return NUMERICAL_ERROR

            self.iterations += 1

            if theta <= DEGENERATE_STEP:
                degenerate += 1
                bland = bland or degenerate >= self.stall_limit
            else:
                degenerate = 0
                bland = False


# =========================================================
# Helpers
# =========================================================

def _warm_basis(
    basis: Optional[Basis],
    pre: _Presolved,
    n: int,
    m: int,
) -> Optional[Tuple[List[int], List[int]]]:
    if basis is None or len(basis.var_status) != n or len(basis.row_status) != m:
        return None

    vs = list(basis.var_status)
    rs = basis.row_status

    for r, (j, _, side) in pre.singleton.items():
        if rs[r] != "B" and vs[j] == "B":
            vs[j] = "U" if side == "U" else "L"

    keep = pre.keep
    mr = len(keep)

    basic = [j for j in range(n) if vs[j] == "B"]
    basic += [n + k for k, r in enumerate(keep) if rs[r] == "B"]

    if len(basic) > mr:
        basic = basic[:mr]
    elif len(basic) < mr:
        have = set(basic)

        for k in range(mr):
            if len(basic) == mr:
                break
            if n + k not in have:
                basic.append(n + k)

    hints = [_STATUS_CODE[s] for s in vs] + [_STATUS_CODE[rs[r]] for r in keep]
    return basic, hints


def _solve_bounds_only(c, lo, hi) -> Tuple[str, np.ndarray]:
    x = np.zeros_like(c)

    for j, cj in enumerate(c):
        if cj > 0:
            x[j] = lo[j]
        elif cj < 0:
            x[j] = hi[j]
        else:
            x[j] = lo[j] if math.isfinite(lo[j]) else (hi[j] if math.isfinite(hi[j]) else 0.0)

    if not np.all(np.isfinite(x)):
        return UNBOUNDED, x

    return OPTIMAL, x


def _row_violation(model: LpModel, x: np.ndarray) -> float:
    act = model.matrix() @ x
    worst = 0.0

    for r, sense in enumerate(model.senses):
        diff = act[r] - model.rhs[r]

        if sense == LE:
            v = diff
        elif sense == GE:
            v = -diff
        else:
            v = abs(diff)

        worst = max(worst, v / (1.0 + abs(model.rhs[r])))

    return worst


# =========================================================
# Public API
# =========================================================

def solve_lp(
    model: LpModel,
    *,
    lower: Optional[np.ndarray] = None,
    upper: Optional[np.ndarray] = None,
    basis: Optional[Basis] = None,
    max_iters: Optional[int] = None,
    time_limit: Optional[float] = None,
    config: Optional[dict] = None,
) -> LpSolution:
    """Solve the LP relaxation of `model` (integrality ignored).

    `lower` / `upper` override the declared bounds (used by branch and bound);
    `basis` is a warm start from an earlier solve of a structurally similar model.
    """
    cfg = {**SOLVER_CONFIG, **(config or {})}

    n, m = model.n_vars, model.n_rows
    A = model.matrix()
    b = model.rhs_vector()
    c = model.costs()

    lo0, hi0 = model.bounds()
    lo = np.array(lo0 if lower is None else lower, dtype=float)
    hi = np.array(hi0 if upper is None else upper, dtype=float)

    pre = _presolve(A, b, model.senses, lo, hi, cfg["feas_tol"])

    if pre is None:
        return LpSolution(status=INFEASIBLE)

    keep = pre.keep
    mr = len(keep)

    if mr == 0:
        status, x_struct = _solve_bounds_only(c, pre.lo, pre.hi)

        if status != OPTIMAL:
            return LpSolution(status=status)

        state = np.where(
            np.isclose(x_struct, pre.hi) & (c < 0), AT_UPPER, AT_LOWER
        )
        d = c.copy()
        y = np.zeros(0)
        iterations = 0
    else:
        senses = [model.senses[r] for r in keep]
        slack_lo = np.array([-math.inf if s == GE else 0.0 for s in senses])
        slack_hi = np.array([0.0 if s != LE else math.inf for s in senses])

        A_full = sp.hstack([A[keep], sp.identity(mr, format="csr")], format="csc")
        c_full = np.concatenate([c, np.zeros(mr)])
        lo_full = np.concatenate([pre.lo, slack_lo])
        hi_full = np.concatenate([pre.hi, slack_hi])

        deadline = None if time_limit is None else time.perf_counter() + float(time_limit)
        iters = int(cfg["max_lp_iters"] if max_iters is None else max_iters)

        core = _Core(A_full, b[keep], c_full, lo_full, hi_full, cfg, deadline, iters)

        warm = _warm_basis(basis, pre, n, m)
        loaded = core.load(*warm) if warm is not None else False

        if not loaded and not core.load_slack_basis():
            return LpSolution(status=NUMERICAL_ERROR)

        status = core.run()
        iterations = core.iterations

        if status != OPTIMAL:
            return LpSolution(status=status, iterations=iterations)

        y = core.duals()
        d_full = c_full - core.AT @ y
        d = d_full[:n]
        state = core.state
        x_struct = core.x[:n].copy()

    if _row_violation(model, x_struct) > 1e-6:
        return LpSolution(status=NUMERICAL_ERROR, iterations=iterations)

    duals = np.zeros(m)
    duals[keep] = y
    rc = np.array(d[:n], dtype=float)

    var_status = [_STATUS_CHAR[int(s)] for s in state[:n]]
    row_status = ["B"] * m

    for k, r in enumerate(keep):
        row_status[r] = _STATUS_CHAR[int(state[n + k])]

    for r, (j, a, side) in pre.singleton.items():
        owns = (state[j] == AT_LOWER and pre.lo_src[j] == r) or (
            state[j] == AT_UPPER and pre.hi_src[j] == r
        )

        if owns:
            duals[r] = rc[j] / a
            rc[j] = 0.0
            var_status[j] = "B"
            row_status[r] = "U" if model.senses[r] == GE else "L"

    obj = float(c @ x_struct) + model.obj_offset

    if cfg.get("verbose"):
        print(f"[lp] model={model.name} rows={m} cols={n} status=optimal iters={iterations} obj={obj:.6g}")

    return LpSolution(
        status=OPTIMAL,
        x=x_struct,
        duals=duals,
        reduced_costs=rc,
        obj=obj,
        iterations=iterations,
        basis=Basis(var_status=tuple(var_status), row_status=tuple(row_status)),
    )
