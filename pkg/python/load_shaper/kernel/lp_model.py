from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from ..core.errors import SolverError


# =========================================================
# Constants
# =========================================================

CONTINUOUS = "continuous"
BINARY = "binary"
INTEGER = "integer"

VAR_KINDS = (CONTINUOUS, BINARY, INTEGER)

LE = "<="
GE = ">="
EQ = "="

SENSES = (LE, GE, EQ)

# LpSolution / MipSolution status values
OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"
NUMERICAL_ERROR = "numerical_error"
TIME_LIMIT = "time_limit"
NODE_LIMIT = "node_limit"


# =========================================================
# Types
# =========================================================

@dataclass(frozen=True)
class VarMeta:
    name: str
    kind: str = CONTINUOUS
    lower: float = 0.0
    upper: float = math.inf

    def __post_init__(self):
        if self.kind not in VAR_KINDS:
            raise ValueError(f"Invalid variable kind: {self.name}.kind={self.kind!r}")

        if math.isnan(self.lower) or math.isnan(self.upper) or self.lower > self.upper:
            raise ValueError(f"Invalid bounds for {self.name}: [{self.lower}, {self.upper}]")

        if self.kind == BINARY and (self.lower < 0 or self.upper > 1):
            raise ValueError(f"Binary var {self.name} must have bounds within [0, 1]")

    @property
    def is_integral(self) -> bool:
        return self.kind != CONTINUOUS


@dataclass(frozen=True, eq=False)
class Basis:
    """Simplex basis keyed by model position.

    `var_status` / `row_status` hold "B" (basic), "L" (at lower), "U" (at upper)
    or "Z" (free, nonbasic at zero). Row status refers to the row's slack.
    """

    var_status: Tuple[str, ...]
    row_status: Tuple[str, ...]


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: str
    x: Optional[np.ndarray] = None
    duals: Optional[np.ndarray] = None          # d obj / d rhs, one per row
    reduced_costs: Optional[np.ndarray] = None
    obj: float = math.nan
    iterations: int = 0
    basis: Optional[Basis] = None

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL


@dataclass(frozen=True, eq=False)
class MipSolution:
    status: str
    x: Optional[np.ndarray] = None
    obj: float = math.inf
    bound: float = -math.inf
    nodes: int = 0
    branches: int = 0
    root_basis: Optional[Basis] = None

    @property
    def rel_gap(self) -> float:
        if self.x is None or not math.isfinite(self.bound):
            return math.inf

        return abs(self.obj - self.bound) / max(abs(self.bound), 1e-10)

    @property
    def has_incumbent(self) -> bool:
        return self.x is not None


# =========================================================
# Model
# =========================================================

class LpModel:
    """min c'x + offset  s.t.  rows (<=, >=, =)  and  lower <= x <= upper."""

    def __init__(self, name: str = "lp"):
        self.name = name
        self.vars: List[VarMeta] = []
        self.cost: List[float] = []
        self.row_names: List[str] = []
        self.senses: List[str] = []
        self.rhs: List[float] = []
        self.obj_offset: float = 0.0

        self._ri: List[int] = []
        self._ci: List[int] = []
        self._vals: List[float] = []
        self._cache: Dict[str, object] = {}

    # ---------------------------------------------------------
    # Sizes
    # ---------------------------------------------------------

    @property
    def n_vars(self) -> int:
        return len(self.vars)

    @property
    def n_rows(self) -> int:
        return len(self.rhs)

    @property
    def nnz(self) -> int:
        return len(self._vals)

    # ---------------------------------------------------------
    # Construction
    # ---------------------------------------------------------

    def add_var(self, meta: VarMeta, cost: float = 0.0) -> int:
        self.vars.append(meta)
        self.cost.append(float(cost))
        self._cache.clear()
        return len(self.vars) - 1

    def add_row(
        self,
        entries: Iterable[Tuple[int, float]],
        sense: str,
        rhs: float,
        name: str = "",
    ) -> int:
        if sense not in SENSES:
            raise ValueError(f"Invalid row sense: {sense!r}")

        row = len(self.rhs)

        for j, coef in entries:
            if not 0 <= j < len(self.vars):
                raise ValueError(f"Row {name or row} references unknown var index {j}")

            if coef != 0.0:
                self._ri.append(row)
                self._ci.append(int(j))
                self._vals.append(float(coef))

        self.senses.append(sense)
        self.rhs.append(float(rhs))
        self.row_names.append(name or f"r{row}")
        self._cache.clear()
        return row

    def add_column(
        self,
        cost: float,
        entries: Iterable[Tuple[int, float]],
        meta: Optional[VarMeta] = None,
    ) -> int:
        entries = list(entries)

        for i, _ in entries:
            if not 0 <= i < self.n_rows:
                raise ValueError(f"Column references unknown row index {i}")

        j = self.add_var(meta or VarMeta(f"col{len(self.vars)}"), cost)

        for i, coef in entries:
            if coef != 0.0:
                self._ri.append(int(i))
                self._ci.append(j)
                self._vals.append(float(coef))

        self._cache.clear()
        return j

    def remove_columns(
        self,
        ids: Sequence[int],
        x: Optional[np.ndarray] = None,
        tol: float = 1e-9,
    ) -> np.ndarray:
        """Drop variables; returns the old -> new index map (-1 for removed).

        With `x` given, refuses to drop a var carrying nonzero weight in it.
        """
        drop = set(int(j) for j in ids)

        for j in drop:
            if not 0 <= j < self.n_vars:
                raise SolverError(f"remove_columns: unknown var index {j}")

            if x is not None and abs(float(x[j])) > tol:
                raise SolverError(
                    f"remove_columns: var {self.vars[j].name} has nonzero weight {float(x[j]):.3g}"
                )

        keep_entry = [c not in drop for c in self._ci]
        surviving_rows = {r for r, k in zip(self._ri, keep_entry) if k}

        for r, sense in enumerate(self.senses):
            if sense == EQ and abs(self.rhs[r]) > 0 and r not in surviving_rows:
                raise SolverError(
                    f"remove_columns: row {self.row_names[r]} would be left empty with rhs {self.rhs[r]}"
                )

        mapping = np.full(self.n_vars, -1, dtype=int)
        nxt = 0

        for j in range(self.n_vars):
            if j not in drop:
                mapping[j] = nxt
                nxt += 1

        self.vars = [v for j, v in enumerate(self.vars) if j not in drop]
        self.cost = [c for j, c in enumerate(self.cost) if j not in drop]
        self._ri = [r for r, k in zip(self._ri, keep_entry) if k]
        self._vals = [v for v, k in zip(self._vals, keep_entry) if k]
        self._ci = [int(mapping[c]) for c, k in zip(self._ci, keep_entry) if k]
        self._cache.clear()

        return mapping

    def set_objective(self, costs: Sequence[float], offset: float = 0.0) -> None:
        if len(costs) != self.n_vars:
            raise ValueError(f"objective length {len(costs)} != n_vars {self.n_vars}")

        self.cost = [float(c) for c in costs]
        self.obj_offset = float(offset)
        self._cache.pop("c", None)

    def set_bounds(self, j: int, lower: float, upper: float) -> None:
        v = self.vars[j]
        self.vars[j] = VarMeta(v.name, v.kind, lower, upper)
        self._cache.pop("bounds", None)

    # ---------------------------------------------------------
    # Compiled views
    # ---------------------------------------------------------

    def matrix(self) -> sp.csr_matrix:
        if "A" not in self._cache:
            self._cache["A"] = sp.csr_matrix(
                (self._vals, (self._ri, self._ci)),
                shape=(self.n_rows, self.n_vars),
            )

        return self._cache["A"]

    def costs(self) -> np.ndarray:
        if "c" not in self._cache:
            self._cache["c"] = np.asarray(self.cost, dtype=float)

        return self._cache["c"]

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        if "bounds" not in self._cache:
            lo = np.array([v.lower for v in self.vars], dtype=float)
            hi = np.array([v.upper for v in self.vars], dtype=float)
            self._cache["bounds"] = (lo, hi)

        return self._cache["bounds"]

    def rhs_vector(self) -> np.ndarray:
        return np.asarray(self.rhs, dtype=float)

    def integer_mask(self) -> np.ndarray:
        return np.array([v.is_integral for v in self.vars], dtype=bool)

    def column(self, j: int) -> List[Tuple[int, float]]:
        return [(r, v) for r, c, v in zip(self._ri, self._ci, self._vals) if c == j]

    def var_index(self) -> Dict[str, int]:
        if "names" not in self._cache:
            self._cache["names"] = {v.name: j for j, v in enumerate(self.vars)}

        return self._cache["names"]

    def objective(self, x: np.ndarray) -> float:
        return float(self.costs() @ np.asarray(x, dtype=float)) + self.obj_offset

    def copy(self) -> "LpModel":
        out = LpModel(self.name)
        out.vars = list(self.vars)
        out.cost = list(self.cost)
        out.row_names = list(self.row_names)
        out.senses = list(self.senses)
        out.rhs = list(self.rhs)
        out.obj_offset = self.obj_offset
        out._ri = list(self._ri)
        out._ci = list(self._ci)
        out._vals = list(self._vals)
        return out


# =========================================================
# Audits / export
# =========================================================

def verify_solution(model: LpModel, x: np.ndarray, tol: float = 1e-6) -> Dict[str, float]:
    """Max residual per row family (<=, >=, =), bounds and integrality.

    Every value is >= 0; the point is feasible within tol iff all are <= tol.
    """
    x = np.asarray(x, dtype=float)

    if x.shape != (model.n_vars,):
        raise ValueError(f"verify_solution: x has shape {x.shape}, expected ({model.n_vars},)")

    act = model.matrix() @ x
    b = model.rhs_vector()
    senses = np.asarray(model.senses, dtype=object)
    lo, hi = model.bounds()

    le = senses == LE
    ge = senses == GE
    eq = senses == EQ

    frac = np.abs(x - np.round(x))
    integral = model.integer_mask()

    return {
        "le": float(np.max(act[le] - b[le], initial=0.0)),
        "ge": float(np.max(b[ge] - act[ge], initial=0.0)),
        "eq": float(np.max(np.abs(act[eq] - b[eq]), initial=0.0)),
        "bounds": float(max(np.max(lo - x, initial=0.0), np.max(x - hi, initial=0.0), 0.0)),
        "integrality": float(np.max(frac[integral], initial=0.0)),
    }


def is_feasible(model: LpModel, x: np.ndarray, tol: float = 1e-6) -> bool:
    return all(v <= tol for v in verify_solution(model, x, tol).values())


def _lp_name(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "_.[]" else "_" for ch in name)


def _lp_terms(pairs: Iterable[Tuple[float, str]]) -> str:
    parts: List[str] = []

    for coef, name in pairs:
        sign = "-" if coef < 0 else "+"
        parts.append(f"{sign} {abs(coef):.12g} {name}")

    text = " ".join(parts) or "0"
    return text[2:] if text.startswith("+ ") else text


def dump_lp_text(model: LpModel) -> str:
    """CPLEX-LP style text with row tags as constraint names."""
    names = [_lp_name(v.name) for v in model.vars]
    c = model.costs()
    A = model.matrix().tocsr()
    lo, hi = model.bounds()

    lines = [f"\\ {model.name}", "Minimize"]
    lines.append(" obj: " + _lp_terms((c[j], names[j]) for j in range(model.n_vars) if c[j] != 0))
    lines.append("Subject To")

    for r in range(model.n_rows):
        start, end = A.indptr[r], A.indptr[r + 1]
        lhs = _lp_terms((A.data[k], names[A.indices[k]]) for k in range(start, end))
        lines.append(f" {_lp_name(model.row_names[r])}: {lhs} {model.senses[r]} {model.rhs[r]:.12g}")

    lines.append("Bounds")

    for j, v in enumerate(model.vars):
        low = "-inf" if math.isinf(lo[j]) else f"{lo[j]:.12g}"
        up = "+inf" if math.isinf(hi[j]) else f"{hi[j]:.12g}"
        lines.append(f" {low} <= {names[j]} <= {up}")

    ints = [names[j] for j, v in enumerate(model.vars) if v.kind == INTEGER]
    bins = [names[j] for j, v in enumerate(model.vars) if v.kind == BINARY]

    if ints:
        lines.append("General")
        lines.extend(f" {n}" for n in ints)

    if bins:
        lines.append("Binary")
        lines.extend(f" {n}" for n in bins)

    lines.append("End")
    return "\n".join(lines) + "\n"
