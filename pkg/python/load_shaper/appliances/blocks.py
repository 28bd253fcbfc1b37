from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ..kernel.lp_model import (
    BINARY,
    CONTINUOUS,
    EQ,
    GE,
    LE,
    OPTIMAL,
    LpModel,
    VarMeta,
)
from ..kernel.simplex import solve_lp


# =========================================================
# Constants
# =========================================================

MEMBERSHIP_TOL = 1e-6

MAX_ENUMERATION_BINARIES = 20

_PATTERN_CHUNK = 1 << 16


# =========================================================
# Variable naming
# =========================================================

def var_name(home_id: int, appliance: str, symbol: str, t: Optional[int] = None) -> str:
    base = f"h{home_id}.{appliance}.{symbol}"
    return base if t is None else f"{base}[{t}]"


def p_name(home_id: int, appliance: str, t: int) -> str:
    return var_name(home_id, appliance, "p", t)


def u_name(home_id: int, appliance: str, t: int) -> str:
    return var_name(home_id, appliance, "u_plus", t)


def p_meta(home_id: int, appliance: str, t: int) -> VarMeta:
    """Load variable shared by an appliance block and the deviation block."""
    return VarMeta(p_name(home_id, appliance, t), CONTINUOUS, 0.0, math.inf)


# =========================================================
# Types
# =========================================================

@dataclass(frozen=True)
class Row:
    coefs: Tuple[Tuple[str, float], ...]
    sense: str
    rhs: float
    tag: str                # equation label, e.g. "ewh_g"
    label: str              # unique row name, e.g. "h3.ewh.ewh_g[12]"


@dataclass(frozen=True, eq=False)
class LinearConstraintBlock:
    tag: str
    vars: Tuple[VarMeta, ...]
    rows: Tuple[Row, ...]
    bound_tags: Tuple[str, ...] = ()
    var_tags: Dict[str, str] = field(default_factory=dict)

    @property
    def var_names(self) -> List[str]:
        return [v.name for v in self.vars]

    @property
    def row_tags(self) -> List[str]:
        seen: List[str] = []

        for r in self.rows:
            if r.tag not in seen:
                seen.append(r.tag)

        return seen

    @property
    def tags(self) -> List[str]:
        return self.row_tags + [t for t in self.bound_tags if t not in self.row_tags]

    def row_count(self, tag: str) -> int:
        return sum(1 for r in self.rows if r.tag == tag)

    @property
    def n_binaries(self) -> int:
        return sum(1 for v in self.vars if v.kind == BINARY)


class BlockBuilder:
    """Accumulates vars and rows for one block; rows may only use declared vars."""

    def __init__(self, tag: str):
        self.tag = tag
        self._vars: Dict[str, VarMeta] = {}
        self._rows: List[Row] = []
        self._bound_tags: List[str] = []
        self._var_tags: Dict[str, str] = {}

    def var(
        self,
        name: str,
        kind: str = CONTINUOUS,
        lower: float = 0.0,
        upper: float = math.inf,
        tag: Optional[str] = None,
    ) -> str:
        return self.declare(VarMeta(name, kind, lower, upper), tag)

    def declare(self, meta: VarMeta, tag: Optional[str] = None) -> str:
        prev = self._vars.get(meta.name)

        if prev is not None and prev != meta:
            raise ValueError(f"namespace collision in block {self.tag}: {prev} vs {meta}")

        self._vars[meta.name] = meta

        if tag is not None:
            self._var_tags[meta.name] = tag

            if tag not in self._bound_tags:
                self._bound_tags.append(tag)

        return meta.name

    def row(
        self,
        tag: str,
        coefs: Iterable[Tuple[str, float]],
        sense: str,
        rhs: float,
        t: Optional[Union[int, str]] = None,
    ) -> None:
        terms = tuple((name, float(c)) for name, c in coefs if c != 0.0)

        for name, _ in terms:
            if name not in self._vars:
                raise ValueError(f"row {tag} in block {self.tag} references undeclared var {name}")

        label = f"{self.tag}.{tag}" if t is None else f"{self.tag}.{tag}[{t}]"
        self._rows.append(Row(terms, sense, float(rhs), tag, label))

    def build(self) -> LinearConstraintBlock:
        return LinearConstraintBlock(
            tag=self.tag,
            vars=tuple(self._vars.values()),
            rows=tuple(self._rows),
            bound_tags=tuple(self._bound_tags),
            var_tags=dict(self._var_tags),
        )


# =========================================================
# Block operations
# =========================================================

def merge_blocks(blocks: Sequence[LinearConstraintBlock], tag: str) -> LinearConstraintBlock:
    builder = BlockBuilder(tag)
    rows: List[Row] = []
    labels = set()

    for block in blocks:
        for meta in block.vars:
            builder.declare(meta, block.var_tags.get(meta.name))

        for row in block.rows:
            if row.label in labels:
                raise ValueError(f"namespace collision: duplicate row {row.label}")

            labels.add(row.label)
            rows.append(row)

    merged = builder.build()
    return LinearConstraintBlock(
        tag=tag,
        vars=merged.vars,
        rows=tuple(rows),
        bound_tags=merged.bound_tags,
        var_tags=merged.var_tags,
    )


def _row_residual(row: Row, x: Mapping[str, float]) -> float:
    act = sum(c * x[name] for name, c in row.coefs)

    if row.sense == LE:
        return act - row.rhs
    if row.sense == GE:
        return row.rhs - act

    return abs(act - row.rhs)


def check_membership(
    x: Mapping[str, float],
    block: LinearConstraintBlock,
    tol: float = MEMBERSHIP_TOL,
    relaxed: bool = False,
) -> List[str]:
    """Violated equation tags; an empty list means the point is a member.

    `relaxed=True` skips integrality (LP-relaxation membership).
    """
    missing = [v.name for v in block.vars if v.name not in x]

    if missing:
        raise ValueError(f"point is missing {len(missing)} var(s), e.g. {missing[:3]}")

    violated: List[str] = []

    def flag(tag: str) -> None:
        if tag not in violated:
            violated.append(tag)

    for row in block.rows:
        if _row_residual(row, x) > tol:
            flag(row.tag)

    for meta in block.vars:
        value = float(x[meta.name])
        tag = block.var_tags.get(meta.name, "bounds")

        if value < meta.lower - tol or value > meta.upper + tol:
            flag(tag)

        if not relaxed and meta.kind != CONTINUOUS and abs(value - round(value)) > tol:
            flag(tag)

    return violated


def add_block_to_model(
    model: LpModel,
    block: LinearConstraintBlock,
    costs: Optional[Mapping[str, float]] = None,
) -> Dict[str, int]:
    costs = costs or {}
    index: Dict[str, int] = {}

    for meta in block.vars:
        index[meta.name] = model.add_var(meta, costs.get(meta.name, 0.0))

    for row in block.rows:
        model.add_row(((index[n], c) for n, c in row.coefs), row.sense, row.rhs, row.label)

    return index


def block_to_model(
    block: LinearConstraintBlock,
    costs: Optional[Mapping[str, float]] = None,
    name: Optional[str] = None,
) -> Tuple[LpModel, Dict[str, int]]:
    model = LpModel(name or block.tag)
    index = add_block_to_model(model, block, costs)
    return model, index


def point_vector(block: LinearConstraintBlock, x: Mapping[str, float]) -> np.ndarray:
    return np.array([float(x[v.name]) for v in block.vars])


def point_dict(block: LinearConstraintBlock, vec: np.ndarray) -> Dict[str, float]:
    return {v.name: float(vec[k]) for k, v in enumerate(block.vars)}


# =========================================================
# Enumeration
# =========================================================

def _binary_patterns(count: int, start: int, stop: int) -> np.ndarray:
    ids = np.arange(start, stop, dtype=np.int64)[:, None]
    return ((ids >> np.arange(count, dtype=np.int64)) & 1).astype(np.int8)


def enumerate_feasible_points(
    block: LinearConstraintBlock,
    max_binaries: int = MAX_ENUMERATION_BINARIES,
    tol: float = MEMBERSHIP_TOL,
) -> List[Dict[str, float]]:
    """Every binary assignment with a feasible continuous completion.

    Rows that touch only binaries screen patterns in bulk; the survivors get
    an LP over the continuous part.
    """
    binaries = [v for v in block.vars if v.kind == BINARY]
    others = [v for v in block.vars if v.kind != BINARY]

    if any(v.kind != CONTINUOUS for v in others):
        raise ValueError("enumeration supports binary and continuous variables only")

    B = len(binaries)

    if B > max_binaries:
        raise ValueError(f"{B} binaries exceed the enumeration limit of {max_binaries}")

    pos = {v.name: k for k, v in enumerate(binaries)}
    lo = np.array([v.lower for v in binaries])
    hi = np.array([v.upper for v in binaries])

    pure_rows = [r for r in block.rows if all(name in pos for name, _ in r.coefs)]
    mixed = len(pure_rows) < len(block.rows) or bool(others)

    dense = np.zeros((len(pure_rows), B))
    rhs = np.array([r.rhs for r in pure_rows])
    senses = np.array([r.sense for r in pure_rows], dtype=object)

    for k, row in enumerate(pure_rows):
        for name, c in row.coefs:
            dense[k, pos[name]] += c

    survivors: List[np.ndarray] = []
    total = 1 << B

    for start in range(0, total, _PATTERN_CHUNK):
        pats = _binary_patterns(B, start, min(total, start + _PATTERN_CHUNK))
        ok = np.all((pats >= lo - tol) & (pats <= hi + tol), axis=1)

        if len(pure_rows):
            act = pats @ dense.T
            ok &= np.all(np.where(senses == LE, act <= rhs + tol, True), axis=1)
            ok &= np.all(np.where(senses == GE, act >= rhs - tol, True), axis=1)
            ok &= np.all(np.where(senses == EQ, np.abs(act - rhs) <= tol, True), axis=1)

        survivors.extend(pats[ok])

    if not mixed:
        return [{v.name: float(p[k]) for k, v in enumerate(binaries)} for p in survivors]

    model, index = block_to_model(block, name=f"{block.tag}.enum")
    base_lo, base_hi = model.bounds()
    bin_cols = np.array([index[v.name] for v in binaries], dtype=int)

    points: List[Dict[str, float]] = []
    basis = None

    for pattern in survivors:
        lo_fix = base_lo.copy()
        hi_fix = base_hi.copy()
        lo_fix[bin_cols] = pattern
        hi_fix[bin_cols] = pattern

        sol = solve_lp(model, lower=lo_fix, upper=hi_fix, basis=basis)

        if sol.status != OPTIMAL:
            continue

        basis = sol.basis
        points.append({v.name: float(sol.x[index[v.name]]) for v in block.vars})

    return points
