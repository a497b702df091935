import math

import numpy as np
import pytest

from dbsteer.simplex import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    LinearProgram,
    LpOptions,
    LpTimeoutError,
    check_feasible,
    solve_lp,
)

from _oracles import lp_vertex_oracle

INF = np.inf


def lp(c, sense, a, relations, b, lower=None, upper=None):
    c = np.atleast_1d(np.asarray(c, dtype=float))
    n = c.shape[0]
    return LinearProgram(
        c=c, sense=sense,
        a=np.asarray(a, dtype=float).reshape(-1, n),
        relations=tuple(relations),
        b=np.asarray(b, dtype=float),
        lower=np.zeros(n) if lower is None else np.asarray(lower, dtype=float),
        upper=np.full(n, INF) if upper is None else np.asarray(upper, dtype=float),
    )


def test_single_upper_bound():
    sol = solve_lp(lp([1.0], "max", [[1.0]], ["<="], [5.0]))
    assert sol.status == OPTIMAL
    assert sol.x[0] == pytest.approx(5.0)
    assert sol.objective_value == pytest.approx(5.0)


def test_two_variable_hand_solution():
    sol = solve_lp(lp([1.0, 1.0], "max", [[1, 0], [0, 1]], ["<=", "<="], [1.0, 2.0]))
    assert sol.status == OPTIMAL
    assert np.allclose(sol.x, [1.0, 2.0], atol=1e-9)
    assert sol.objective_value == pytest.approx(3.0)


def test_contradictory_rows_infeasible():
    sol = solve_lp(lp([1.0], "max", [[1], [1]], ["<=", ">="], [1.0, 2.0]))
    assert sol.status == INFEASIBLE
    assert sol.x is None


def test_unbounded_detected():
    sol = solve_lp(lp([1.0, 0.0], "max", [[0, 1]], ["<="], [1.0]))
    assert sol.status == UNBOUNDED


def test_equality_rows():
    sol = solve_lp(lp([1.0, 2.0], "min", [[1, 1]], ["="], [4.0]))
    assert sol.status == OPTIMAL
    assert sol.objective_value == pytest.approx(4.0)
    assert np.allclose(sol.x, [4.0, 0.0], atol=1e-9)


def test_shifted_lower_bounds():
    # min x + y with x >= -2, y in [3, 10], x + y >= 2: the row binds at 2
    sol = solve_lp(
        lp([1.0, 1.0], "min", [[1, 1]], [">="], [2.0], lower=[-2.0, 3.0], upper=[INF, 10.0])
    )
    assert sol.status == OPTIMAL
    assert sol.objective_value == pytest.approx(2.0)
    assert sol.x[0] >= -2.0 - 1e-9 and sol.x[1] >= 3.0 - 1e-9
    assert sol.x.sum() == pytest.approx(2.0)


def test_lower_bound_optimum():
    # min x + y with no rows binding: optimum at the lower bounds
    sol = solve_lp(
        lp([1.0, 1.0], "min", [[1, 1]], ["<="], [100.0], lower=[-2.0, 3.0], upper=[INF, 10.0])
    )
    assert sol.status == OPTIMAL
    assert np.allclose(sol.x, [-2.0, 3.0], atol=1e-9)
    assert sol.objective_value == pytest.approx(1.0)


def test_dimension_mismatch_rejected_before_solving():
    with pytest.raises(ValueError, match="width"):
        LinearProgram(
            c=np.array([1.0, 1.0]), sense="max",
            a=np.array([[1.0, 0.0, 3.0]]), relations=("<=",), b=np.array([1.0]),
            lower=np.zeros(2), upper=np.array([INF, INF]),
        )


def test_deterministic_repeat():
    rng = np.random.default_rng(4)
    a = rng.normal(size=(6, 4))
    b = rng.uniform(1, 5, size=6)
    c = rng.normal(size=4)
    program = lp(c, "max", a, ["<="] * 6, b, upper=[10.0] * 4)
    s1 = solve_lp(program)
    s2 = solve_lp(program)
    assert s1.iterations == s2.iterations
    assert np.array_equal(s1.x, s2.x)


def test_feasibility_of_reported_optimum():
    rng = np.random.default_rng(8)
    for _ in range(20):
        n = int(rng.integers(2, 5))
        m = int(rng.integers(1, 6))
        program = lp(
            rng.normal(size=n), "max", rng.normal(size=(m, n)),
            ["<="] * m, rng.uniform(0.5, 4.0, size=m), upper=rng.uniform(1, 8, size=n),
        )
        sol = solve_lp(program)
        if sol.status == OPTIMAL:
            assert check_feasible(program, sol.x, tol=1e-7)


def _random_lp(rng):
    n = int(rng.integers(2, 7))
    m = int(rng.integers(1, 7))
    a = rng.normal(scale=2.0, size=(m, n))
    relations = [rng.choice(["<=", ">="]) for _ in range(m)]
    b = rng.normal(scale=3.0, size=m)
    c = rng.normal(scale=2.0, size=n)
    sense = rng.choice(["max", "min"])
    lower = rng.uniform(-2.0, 0.0, size=n)
    upper = lower + rng.uniform(1.0, 6.0, size=n)
    return lp(c, sense, a, relations, b, lower=lower, upper=upper)


def test_random_lps_match_vertex_enumeration():
    rng = np.random.default_rng(123)
    solved = 0
    for _ in range(40):
        program = _random_lp(rng)
        expected_status, expected_obj, _ = lp_vertex_oracle(program)
        sol = solve_lp(program)
        assert sol.status == expected_status
        if sol.status == OPTIMAL:
            assert sol.objective_value == pytest.approx(expected_obj, abs=1e-6)
            # weak-duality self check on each optimal solve
            assert abs(sol.objective_value - sol.dual_objective) <= 1e-6
            solved += 1
    assert solved >= 10  # the generator must produce a healthy mix


def test_deadline_abort():
    rng = np.random.default_rng(9)
    n, m = 10, 4000
    program = lp(
        rng.uniform(0, 1, size=n), "max", rng.uniform(0, 1, size=(m, n)),
        ["<="] * m, rng.uniform(5, 9, size=m), upper=np.full(n, 5.0),
    )
    import time

    with pytest.raises(LpTimeoutError):
        solve_lp(program, LpOptions(deadline=time.perf_counter() - 1.0))
