"""Best-first branch-and-bound for linear programs with binary variables.

Nodes are ordered by their parent's relaxation bound, branching picks the
most fractional binary (lowest index on ties), and every tie-break is
deterministic, so repeated solves of the same program explore the same tree.
No cuts and no rounding heuristics: incumbents come only from integral
relaxation solutions, which keeps the solver's scaling behavior honest.
"""
from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .simplex import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    LinearProgram,
    LpOptions,
    LpTimeoutError,
    solve_lp,
)

FEASIBLE_TIME_LIMIT = "feasible_time_limit"

_PRUNE_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class MixedIntegerProgram:
    """A linear program whose ``binary_indices`` variables must be 0 or 1."""

    base: LinearProgram
    binary_indices: tuple[int, ...]

    def __post_init__(self) -> None:
        idx = tuple(self.binary_indices)
        if len(set(idx)) != len(idx):
            raise ValueError("binary indices must be unique")
        n = self.base.n_vars
        for i in idx:
            if not 0 <= i < n:
                raise ValueError(f"binary index {i} out of range for {n} variables")
            if self.base.lower[i] != 0.0 or self.base.upper[i] != 1.0:
                raise ValueError(f"binary variable {i} must have bounds [0, 1]")
        object.__setattr__(self, "binary_indices", idx)


@dataclass(frozen=True)
class MilpOptions:
    time_limit_s: float = 1500.0
    gap_tol: float = 1e-6
    # Optional secondary objective weight on the continuous variables,
    # applied in the minimizing direction; 0 leaves the objective untouched.
    tie_break_weight: float = 0.0
    integrality_tol: float = 1e-6
    lp_options: LpOptions = field(default_factory=LpOptions)


@dataclass(frozen=True, eq=False)
class MilpSolution:
    status: str
    x: Optional[np.ndarray]
    objective_value: float
    nodes_explored: int
    gap: float
    wall_time_s: float
    has_incumbent: bool


def solve_milp(
    mip: MixedIntegerProgram,
    options: MilpOptions | None = None,
    on_node: Optional[Callable[[float, float], None]] = None,
) -> MilpSolution:
    """Solve to proven optimality or return the best incumbent at the limit.

    ``on_node`` (mainly for tests) receives ``(parent_bound, relaxation
    objective)`` for every node whose relaxation solved, both in the internal
    minimization direction.
    """
    opt = options or MilpOptions()
    lp = mip.base
    binaries = np.array(mip.binary_indices, dtype=np.int64)
    start = time.perf_counter()
    deadline = start + opt.time_limit_s

    sign = 1.0 if lp.sense == "min" else -1.0
    c_eff = sign * lp.c
    if opt.tie_break_weight:
        cont = np.ones(lp.n_vars, dtype=bool)
        cont[binaries] = False
        c_eff = c_eff + opt.tie_break_weight * cont

    lp_int = LinearProgram(
        c=c_eff, sense="min", a=lp.a, relations=lp.relations, b=lp.b,
        lower=lp.lower, upper=lp.upper,
    )
    lp_opt = replace(opt.lp_options, deadline=deadline)

    best_x: Optional[np.ndarray] = None
    best_obj = math.inf  # internal minimization value of the incumbent
    nodes_explored = 0
    timed_out = False

    counter = 0
    heap: list[tuple[float, int, np.ndarray, np.ndarray]] = []
    heapq.heappush(heap, (-math.inf, counter, lp.lower.copy(), lp.upper.copy()))

    while heap:
        if time.perf_counter() > deadline:
            timed_out = True
            break
        bound, _, lower, upper = heapq.heappop(heap)
        if bound >= best_obj - _PRUNE_EPS:
            continue  # cannot beat the incumbent
        try:
            res = solve_lp(lp_int.with_bounds(lower, upper), lp_opt)
        except LpTimeoutError:
            timed_out = True
            heapq.heappush(heap, (bound, counter + 1, lower, upper))
            break
        nodes_explored += 1
        if res.status == INFEASIBLE:
            continue
        if res.status == UNBOUNDED:
            raise ValueError("MILP relaxation is unbounded; add variable bounds")
        relax_obj = res.objective_value
        if on_node is not None:
            on_node(bound, relax_obj)
        if relax_obj >= best_obj - _PRUNE_EPS:
            continue

        frac = np.abs(res.x[binaries] - np.round(res.x[binaries])) if binaries.size else np.zeros(0)
        if binaries.size == 0 or np.all(frac <= opt.integrality_tol):
            x = res.x.copy()
            if binaries.size:
                x[binaries] = np.round(x[binaries])
            cand = float(c_eff @ x)
            if cand < best_obj:
                best_obj = cand
                best_x = x
            continue

        j = int(binaries[int(np.argmax(frac))])  # argmax keeps lowest index on ties
        for fixed in (0.0, 1.0):
            child_lower = lower.copy()
            child_upper = upper.copy()
            if fixed == 0.0:
                child_upper[j] = 0.0
            else:
                child_lower[j] = 1.0
            counter += 1
            heapq.heappush(heap, (relax_obj, counter, child_lower, child_upper))

    wall = time.perf_counter() - start
    open_bounds = [entry[0] for entry in heap]
    lower_bound = min(open_bounds) if open_bounds else best_obj
    lower_bound = min(lower_bound, best_obj)

    if best_x is None:
        if timed_out or heap:
            return MilpSolution(
                status=FEASIBLE_TIME_LIMIT, x=None, objective_value=math.nan,
                nodes_explored=nodes_explored, gap=math.inf, wall_time_s=wall,
                has_incumbent=False,
            )
        return MilpSolution(
            status=INFEASIBLE, x=None, objective_value=math.nan,
            nodes_explored=nodes_explored, gap=math.inf, wall_time_s=wall,
            has_incumbent=False,
        )

    gap = max(0.0, (best_obj - lower_bound) / max(1.0, abs(best_obj)))
    status = OPTIMAL if (not heap or gap <= opt.gap_tol) else FEASIBLE_TIME_LIMIT
    objective = float(lp.c @ best_x)
    return MilpSolution(
        status=status, x=best_x, objective_value=objective,
        nodes_explored=nodes_explored, gap=gap, wall_time_s=wall,
        has_incumbent=True,
    )
