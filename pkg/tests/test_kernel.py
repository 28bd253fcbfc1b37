import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from load_shaper.core.errors import SolverError
from load_shaper.kernel.branch_bound import solve_mip
from load_shaper.kernel.lp_model import (
    BINARY,
    CONTINUOUS,
    EQ,
    GE,
    INFEASIBLE,
    LE,
    OPTIMAL,
    UNBOUNDED,
    LpModel,
    VarMeta,
    dump_lp_text,
    is_feasible,
    verify_solution,
)
from load_shaper.kernel.simplex import solve_lp


def _lp(costs, kinds=None, upper=math.inf) -> LpModel:
    model = LpModel("t")
    kinds = kinds or [CONTINUOUS] * len(costs)

    for j, (c, kind) in enumerate(zip(costs, kinds)):
        hi = 1.0 if kind == BINARY else upper
        model.add_var(VarMeta(f"x{j}", kind, 0.0, hi), c)

    return model


# =========================================================
# solve_lp
# =========================================================

def test_single_bound_row_has_unit_dual():
    model = _lp([1.0])
    model.add_row([(0, 1.0)], GE, 3.0, "floor")
    sol = solve_lp(model)

    assert sol.status == OPTIMAL
    assert sol.x[0] == pytest.approx(3.0)
    assert sol.duals[0] == pytest.approx(1.0)


def test_le_row_dual_is_the_objective_derivative():
    model = _lp([-1.0, -1.0])
    model.add_row([(0, 1.0), (1, 1.0)], LE, 1.0, "cap")
    sol = solve_lp(model)

    assert sol.obj == pytest.approx(-1.0)
    # d obj / d rhs; the magnitude is 1 and the sign is that of a <= row in a min
    assert sol.duals[0] == pytest.approx(-1.0)


def test_contradictory_rows_are_infeasible():
    model = _lp([1.0])
    model.add_row([(0, 1.0)], GE, 1.0)
    model.add_row([(0, 1.0)], LE, 0.0)

    assert solve_lp(model).status == INFEASIBLE


def test_unbounded_direction_is_reported():
    model = _lp([-1.0, 0.0])
    model.add_row([(0, 1.0), (1, -1.0)], LE, 1.0)

    assert solve_lp(model).status == UNBOUNDED


def test_equality_rows_and_free_variables():
    model = LpModel("free")
    s = model.add_var(VarMeta("s", CONTINUOUS, 0.0, math.inf), 1.0)
    a = model.add_var(VarMeta("a", CONTINUOUS, -math.inf, math.inf))
    p = model.add_var(VarMeta("p", CONTINUOUS, 0.0, 2.0))
    model.add_row([(s, 1.0), (a, -1.0)], GE, 0.0)
    model.add_row([(s, 1.0), (a, 1.0)], GE, 0.0)
    model.add_row([(a, 1.0), (p, 1.0)], EQ, 5.0)
    sol = solve_lp(model)

    assert sol.status == OPTIMAL
    assert sol.obj == pytest.approx(3.0)
    assert sol.x[p] == pytest.approx(2.0)
    # raising the target by one costs one more unit of |a|
    assert sol.duals[2] == pytest.approx(1.0)


@given(st.integers(0, 10_000), st.integers(2, 6), st.integers(1, 5))
def test_random_lp_strong_duality(seed, n, m):
    rng = np.random.default_rng(seed)
    A = rng.uniform(0.1, 5.0, size=(m, n))
    b = rng.uniform(1.0, 10.0, size=m)
    c = rng.uniform(-5.0, 5.0, size=n)
    upper = rng.uniform(0.5, 3.0, size=n)

    model = LpModel("dual")

    for j in range(n):
        model.add_var(VarMeta(f"x{j}", CONTINUOUS, 0.0, float(upper[j])), float(c[j]))
    for r in range(m):
        model.add_row([(j, float(A[r, j])) for j in range(n)], LE, float(b[r]))

    sol = solve_lp(model)
    assert sol.status == OPTIMAL

    y, rc = sol.duals, sol.reduced_costs
    dual_obj = float(b @ y) + float(np.sum(np.where(rc > 0, rc * 0.0, rc * upper)))

    assert abs(sol.obj - dual_obj) <= 1e-6 * (1.0 + abs(sol.obj))
    assert np.all(y <= 1e-7)
    np.testing.assert_allclose(rc, c - A.T @ y, atol=1e-7)

    slack = b - A @ sol.x
    assert np.all(np.abs(slack * y) <= 1e-6)
    assert verify_solution(model, sol.x)["le"] <= 1e-7


def test_solve_is_deterministic():
    rng = np.random.default_rng(3)
    model = LpModel("det")

    for j in range(8):
        model.add_var(VarMeta(f"x{j}", CONTINUOUS, 0.0, 4.0), float(rng.normal()))
    for r in range(5):
        model.add_row([(j, float(rng.uniform(0.1, 2.0))) for j in range(8)], LE, 6.0)

    first, second = solve_lp(model), solve_lp(model)

    assert first.obj == second.obj
    np.testing.assert_array_equal(first.x, second.x)


# =========================================================
# Column edits
# =========================================================

def _master_like() -> LpModel:
    model = _lp([1.0, 3.0])
    model.add_row([(0, 1.0), (1, 1.0)], EQ, 1.0, "convexity")
    return model


def test_add_then_remove_unused_column_is_a_no_op():
    model = _master_like()
    before = solve_lp(model)
    j = model.add_column(10.0, [(0, 1.0)], VarMeta("spare"))
    mid = solve_lp(model)
    mapping = model.remove_columns([j], x=mid.x)
    after = solve_lp(model)

    assert mid.x[j] == pytest.approx(0.0)
    assert mapping.tolist() == [0, 1, -1]
    assert after.obj == pytest.approx(before.obj)


def test_negative_reduced_cost_column_improves_the_objective():
    model = _master_like()
    before = solve_lp(model)
    y = before.duals[0]
    model.add_column(y - 0.5, [(0, 1.0)])
    after = solve_lp(model, basis=None)

    assert after.obj < before.obj - 0.25


def test_remove_refuses_weighted_column():
    model = _master_like()
    sol = solve_lp(model)

    with pytest.raises(SolverError, match="nonzero weight"):
        model.remove_columns([0], x=sol.x)


def test_remove_refuses_to_empty_a_fixed_row():
    model = _master_like()

    with pytest.raises(SolverError, match="left empty"):
        model.remove_columns([0, 1])


def test_warm_start_after_adding_a_column():
    model = _master_like()
    first = solve_lp(model)
    model.add_column(0.5, [(0, 1.0)])
    basis = type(first.basis)(first.basis.var_status + ("L",), first.basis.row_status)
    warm = solve_lp(model, basis=basis)
    cold = solve_lp(model)

    assert warm.obj == pytest.approx(cold.obj) == pytest.approx(0.5)


# =========================================================
# verify_solution / LP text
# =========================================================

def test_verify_solution_flags_and_tolerates():
    model = _lp([1.0, 1.0], [BINARY, CONTINUOUS])
    model.add_row([(0, 1.0), (1, 1.0)], LE, 1.0)

    assert is_feasible(model, np.array([1.0, 0.0]))
    assert verify_solution(model, np.array([1.0, 0.5]))["le"] == pytest.approx(0.5)
    assert verify_solution(model, np.array([0.5, 0.0]))["integrality"] == pytest.approx(0.5)
    assert is_feasible(model, np.array([1.0, 0.5e-6]), tol=1e-6)


def test_lp_text_names_rows_and_binaries():
    model = _lp([1.0, -2.0], [BINARY, CONTINUOUS])
    model.add_row([(0, 1.0), (1, 1.0)], LE, 1.0, "h0.wm.wm_g")
    text = dump_lp_text(model)

    assert "Minimize" in text and "Subject To" in text
    assert "h0.wm.wm_g:" in text
    assert "Binary\n x0" in text
    assert text.endswith("End\n")


# =========================================================
# solve_mip
# =========================================================

def test_knapsack_pick_two_best():
    model = _lp([-3.0, -2.0, -2.0], [BINARY] * 3)
    model.add_row([(0, 1.0), (1, 1.0), (2, 1.0)], LE, 2.0)
    mip = solve_mip(model)

    assert mip.status == OPTIMAL
    assert mip.obj == pytest.approx(-5.0)
    assert mip.x[0] == pytest.approx(1.0)
    assert mip.bound <= mip.obj + 1e-9


def test_integral_lp_closes_at_the_root():
    model = _lp([-1.0, 2.0], [BINARY, BINARY])
    model.add_row([(0, 1.0), (1, 1.0)], LE, 2.0)
    mip = solve_mip(model)

    assert mip.obj == pytest.approx(-1.0)
    assert mip.branches == 0


def test_infeasible_mip_without_incumbent():
    model = _lp([1.0, 1.0], [BINARY, BINARY])
    model.add_row([(0, 2.0), (1, 2.0)], EQ, 1.0)
    mip = solve_mip(model)

    assert mip.status == INFEASIBLE
    assert not mip.has_incumbent


def test_node_limit_keeps_a_valid_bound():
    rng = np.random.default_rng(5)
    n = 10
    model = _lp(list(-rng.uniform(1, 10, n)), [BINARY] * n)
    model.add_row([(j, float(rng.uniform(1, 10))) for j in range(n)], LE, 17.0)
    full = solve_mip(model)
    capped = solve_mip(model, node_limit=2)

    assert capped.bound <= full.obj + 1e-9


def _brute_force(c, A, b) -> float:
    n = len(c)
    pats = np.array(list(itertools.product((0.0, 1.0), repeat=n)))
    ok = np.all(pats @ A.T <= b + 1e-9, axis=1)
    return float((pats[ok] @ c).min())


@pytest.mark.parametrize("seed", range(100))
def test_random_binary_programs_match_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 11))
    m = int(rng.integers(1, 11))
    c = rng.uniform(-5.0, 5.0, size=n).round(3)
    A = rng.uniform(0.0, 5.0, size=(m, n)).round(3)
    b = rng.uniform(1.0, 10.0, size=m).round(3)

    model = _lp(list(c), [BINARY] * n)

    for r in range(m):
        model.add_row([(j, float(A[r, j])) for j in range(n)], LE, float(b[r]))

    mip = solve_mip(model, rel_gap=0.0)

    assert mip.status == OPTIMAL
    assert mip.obj == pytest.approx(_brute_force(c, A, b), abs=1e-6)
    assert verify_solution(model, mip.x)["integrality"] <= 1e-6
