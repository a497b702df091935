"""Builds and solves the current-steering LP and MILP for one lead.

Two formulations over the same data (transfer matrix rows aligned with a
labeled point cloud):

* LP: maximize the summed field over target points subject to per-contact
  and total current limits, with the field at constraint points capped at
  the constraint threshold. The relaxation parameter ``theta`` is the
  fraction of constraint points whose cap is enforced; the exempt set is
  chosen greedily (highest achieved field in a full-constraint pre-solve).
* MILP: binary dummies mark missed targets and activated constraints; the
  objective is the average missed-target fraction plus the average
  activated-constraint fraction, with a tiny total-current term so the
  minimal-current solution wins among otherwise equal optima.

Safety limits (per-contact and total current caps) are hard constraints in
both formulations and re-validated on every decoded solution.
"""
from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .branch_bound import (
    FEASIBLE_TIME_LIMIT,
    MilpOptions,
    MilpSolution,
    MixedIntegerProgram,
    solve_milp,
)
from .clouds import LabeledCloud
from .fields import TransferMatrix
from .simplex import (
    GREATER_EQUAL,
    INFEASIBLE,
    LESS_EQUAL,
    OPTIMAL,
    LinearProgram,
    LpOptions,
    solve_lp,
)

LP = "lp"
MILP = "milp"

# Tolerance for counting a point as activated when recomputing beta from
# fields; matches the feasibility slack a decoded dummy variable can carry.
ACTIVATION_ATOL = 1e-6

_SAFETY_ATOL = 1e-9


class DegenerateProblemError(ValueError):
    """Raised when a formulation is undefined for the given label counts."""


@dataclass(frozen=True, eq=False)
class StimulationProblem:
    """Transfer matrix, labeled points, thresholds, and current limits."""

    transfer: TransferMatrix
    cloud: LabeledCloud
    e_th_t: float = 0.2
    e_th_c: float = 0.2
    i_max_contact_mA: float = 5.0
    i_max_total_mA: float = 8.0
    theta: float = 1.0

    def __post_init__(self) -> None:
        if self.transfer.point_count != len(self.cloud):
            raise ValueError(
                f"transfer has {self.transfer.point_count} rows but cloud has "
                f"{len(self.cloud)} points"
            )
        if not (self.e_th_t > 0 and self.e_th_c > 0):
            raise ValueError("thresholds must be > 0")
        if not 0 < self.i_max_contact_mA <= self.i_max_total_mA:
            raise ValueError("need 0 < i_max_contact <= i_max_total")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")


@dataclass(frozen=True, eq=False)
class CurrentDistribution:
    """Per-contact currents (mA) and their proportions of the total."""

    u_mA: np.ndarray
    normalized: np.ndarray

    def __post_init__(self) -> None:
        u = np.asarray(self.u_mA, dtype=float)
        normalized = np.asarray(self.normalized, dtype=float)
        if np.any(u < 0):
            raise ValueError("currents must be non-negative (unipolar operation)")
        if normalized.shape != u.shape:
            raise ValueError("normalized vector must match the current vector")
        object.__setattr__(self, "u_mA", u)
        object.__setattr__(self, "normalized", normalized)
        u.setflags(write=False)
        normalized.setflags(write=False)

    @classmethod
    def from_currents(cls, u_mA: np.ndarray | Sequence[float]) -> "CurrentDistribution":
        u = np.asarray(u_mA, dtype=float).copy()
        # Solver round-off can leave currents a hair below zero.
        u[(u < 0) & (u > -_SAFETY_ATOL)] = 0.0
        total = float(u.sum())
        normalized = u / total if total > 0 else np.zeros_like(u)
        return cls(u_mA=u, normalized=normalized)

    @property
    def total_mA(self) -> float:
        return float(self.u_mA.sum())

    def check_limits(self, i_max_contact_mA: float, i_max_total_mA: float) -> None:
        if np.any(self.u_mA > i_max_contact_mA + _SAFETY_ATOL):
            raise ValueError("a contact current exceeds the per-contact limit")
        if self.total_mA > i_max_total_mA + _SAFETY_ATOL:
            raise ValueError("total current exceeds the total limit")


@dataclass(frozen=True)
class SolverStats:
    status: str
    iterations: int
    wall_time_s: float
    nodes: Optional[int] = None
    gap: Optional[float] = None


@dataclass(frozen=True, eq=False)
class OptimizationReport:
    distribution: CurrentDistribution
    beta: float
    objective: float
    solver_stats: SolverStats
    method: str
    theta: Optional[float] = None
    exempted_constraint_ids: Optional[tuple[int, ...]] = None
    input_digest: str = ""

    def __post_init__(self) -> None:
        if not (0.0 <= self.beta <= 1.0 or math.isnan(self.beta)):
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")


def _count_exempt(theta: float, n_constraint: int) -> int:
    # ceil((1 - theta) * n_c) with protection against float dust like
    # 0.4 * 10 evaluating to 4.000000000000001.
    return int(math.ceil((1.0 - theta) * n_constraint - 1e-9))


def build_lp_arrays(
    values: np.ndarray,
    is_target: np.ndarray,
    *,
    e_th_t: float = 0.2,
    e_th_c: float = 0.2,
    i_max_contact_mA: float = 5.0,
    i_max_total_mA: float = 8.0,
    theta: float = 1.0,
    lp_options: LpOptions | None = None,
) -> tuple[LinearProgram, tuple[int, ...]]:
    """Assemble the field-maximization LP and its constraint-exemption plan.

    Returns the program together with the point indices (into the full
    cloud) whose constraint rows were exempted for this ``theta``.
    """
    values = np.asarray(values, dtype=float)
    is_target = np.asarray(is_target, dtype=bool)
    n_contacts = values.shape[1]
    target_rows = values[is_target]
    constraint_idx = np.flatnonzero(~is_target)
    if target_rows.shape[0] == 0:
        raise DegenerateProblemError("LP objective undefined without target points")

    n_c = constraint_idx.size
    n_exempt = min(_count_exempt(theta, n_c), n_c)
    exempted: tuple[int, ...] = ()
    if n_c and n_exempt == n_c:
        exempted = tuple(int(i) for i in constraint_idx)
    elif n_exempt > 0:
        # Rank by the field achieved when every constraint row is enforced.
        full_lp, _ = build_lp_arrays(
            values, is_target, e_th_t=e_th_t, e_th_c=e_th_c,
            i_max_contact_mA=i_max_contact_mA, i_max_total_mA=i_max_total_mA,
            theta=1.0,
        )
        pre = solve_lp(full_lp, lp_options)
        if pre.status != OPTIMAL:  # cannot happen: u = 0 is always feasible
            raise RuntimeError(f"constraint-ranking pre-solve returned {pre.status}")
        achieved = values[constraint_idx] @ pre.x
        # Highest achieved field first; ties resolved by point index.
        order = np.lexsort((constraint_idx, -achieved))
        exempted = tuple(int(constraint_idx[i]) for i in order[:n_exempt])

    keep = np.array([i for i in constraint_idx if i not in set(exempted)], dtype=np.int64)
    rows = [np.ones((1, n_contacts))]
    rhs = [np.array([i_max_total_mA])]
    if keep.size:
        rows.append(values[keep])
        rhs.append(np.full(keep.size, e_th_c))
    a = np.vstack(rows)
    lp = LinearProgram(
        c=target_rows.sum(axis=0),
        sense="max",
        a=a,
        relations=tuple([LESS_EQUAL] * a.shape[0]),
        b=np.concatenate(rhs),
        lower=np.zeros(n_contacts),
        upper=np.full(n_contacts, i_max_contact_mA),
    )
    return lp, exempted


def build_milp_arrays(
    values: np.ndarray,
    is_target: np.ndarray,
    *,
    e_th_t: float = 0.2,
    e_th_c: float = 0.2,
    i_max_contact_mA: float = 5.0,
    i_max_total_mA: float = 8.0,
) -> MixedIntegerProgram:
    """Assemble the dummy-variable MILP.

    Variables are the contact currents followed by one binary per target
    point then one per constraint point (in cloud order). A relaxation
    constant per row keeps the big-M values as small as validity allows,
    and a small total-current term breaks ties toward minimal current.
    """
    values = np.asarray(values, dtype=float)
    is_target = np.asarray(is_target, dtype=bool)
    n_points, n_contacts = values.shape
    t_idx = np.flatnonzero(is_target)
    c_idx = np.flatnonzero(~is_target)
    n_t, n_c = t_idx.size, c_idx.size
    if n_t == 0 and n_c == 0:
        raise DegenerateProblemError("MILP undefined without any labeled points")

    n_vars = n_contacts + n_t + n_c
    a = np.zeros((n_t + n_c + 1, n_vars))
    b = np.empty(n_t + n_c + 1)
    relations: list[str] = []

    # Target rows: field + L * d_i >= threshold; L equal to the threshold is
    # sufficient because fields are non-negative.
    for k, i in enumerate(t_idx):
        a[k, :n_contacts] = values[i]
        a[k, n_contacts + k] = e_th_t
        b[k] = e_th_t
        relations.append(GREATER_EQUAL)

    # Constraint rows: field - L * d_j <= threshold; L is the largest field
    # any feasible current can produce above the threshold.
    max_field = i_max_total_mA * values[c_idx].max(axis=1) if n_c else np.zeros(0)
    big_m = np.maximum(max_field - e_th_c, 1e-9)
    for k, j in enumerate(c_idx):
        r = n_t + k
        a[r, :n_contacts] = values[j]
        a[r, n_contacts + n_t + k] = -big_m[k]
        b[r] = e_th_c
        relations.append(LESS_EQUAL)

    a[-1, :n_contacts] = 1.0
    b[-1] = i_max_total_mA
    relations.append(LESS_EQUAL)

    epsilon = 1e-6 / (n_contacts * i_max_contact_mA)
    c = np.concatenate([
        np.full(n_contacts, epsilon),
        np.full(n_t, 1.0 / n_t) if n_t else np.zeros(0),
        np.full(n_c, 1.0 / n_c) if n_c else np.zeros(0),
    ])
    lower = np.zeros(n_vars)
    upper = np.concatenate([
        np.full(n_contacts, i_max_contact_mA), np.ones(n_t + n_c),
    ])
    base = LinearProgram(
        c=c, sense="min", a=a, relations=tuple(relations), b=b,
        lower=lower, upper=upper,
    )
    return MixedIntegerProgram(base=base, binary_indices=tuple(range(n_contacts, n_vars)))


def activation_counts(
    fields: np.ndarray,
    is_target: np.ndarray,
    e_th_t: float,
    e_th_c: float,
    atol: float = ACTIVATION_ATOL,
) -> tuple[int, int]:
    """(missed targets, activated constraints) from superposed field norms.

    A target counts as activated at ``e_th_t - atol`` and a constraint as
    activated only strictly above ``e_th_c + atol``, mirroring the slack a
    solver's feasibility tolerance allows on the MILP dummy rows.
    """
    fields = np.asarray(fields, dtype=float)
    is_target = np.asarray(is_target, dtype=bool)
    n_t_missed = int(np.count_nonzero(fields[is_target] < e_th_t - atol))
    n_c_activated = int(np.count_nonzero(fields[~is_target] > e_th_c + atol))
    return n_t_missed, n_c_activated


def _beta_from_fractions(miss_frac: Optional[float], act_frac: Optional[float]) -> float:
    # Degenerate problems (one label absent) contribute zero for the missing
    # term; the regular case averages the two fractions.
    return 0.5 * ((miss_frac or 0.0) + (act_frac or 0.0))


def beta_from_fields(
    fields: np.ndarray, is_target: np.ndarray, e_th_t: float, e_th_c: float
) -> float:
    is_target = np.asarray(is_target, dtype=bool)
    n_t = int(is_target.sum())
    n_c = int((~is_target).sum())
    miss, act = activation_counts(fields, is_target, e_th_t, e_th_c)
    return _beta_from_fractions(
        miss / n_t if n_t else None, act / n_c if n_c else None
    )


def _digest(values: np.ndarray, is_target: np.ndarray, params: dict) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(values).tobytes())
    h.update(np.ascontiguousarray(is_target).tobytes())
    h.update(repr(sorted(params.items())).encode())
    return h.hexdigest()


@dataclass(frozen=True)
class OptimizeOptions:
    time_limit_s: float = 1500.0
    gap_tol: float = 1e-6
    lp_options: LpOptions = LpOptions()


def optimize_arrays(
    values: np.ndarray,
    is_target: np.ndarray,
    *,
    method: str = MILP,
    e_th_t: float = 0.2,
    e_th_c: float = 0.2,
    i_max_contact_mA: float = 5.0,
    i_max_total_mA: float = 8.0,
    theta: float = 1.0,
    options: OptimizeOptions | None = None,
) -> OptimizationReport:
    """Build, solve, and decode one steering problem from raw arrays."""
    if method not in (LP, MILP):
        raise ValueError(f"method must be 'lp' or 'milp', got {method!r}")
    opts = options or OptimizeOptions()
    values = np.asarray(values, dtype=float)
    is_target = np.asarray(is_target, dtype=bool)
    n_contacts = values.shape[1]
    n_t = int(is_target.sum())
    n_c = int((~is_target).sum())
    params = dict(
        method=method, e_th_t=e_th_t, e_th_c=e_th_c,
        i_max_contact_mA=i_max_contact_mA, i_max_total_mA=i_max_total_mA,
        theta=theta if method == LP else None,
    )
    digest = _digest(values, is_target, params)

    started = time.perf_counter()
    if method == LP:
        lp, exempted = build_lp_arrays(
            values, is_target, e_th_t=e_th_t, e_th_c=e_th_c,
            i_max_contact_mA=i_max_contact_mA, i_max_total_mA=i_max_total_mA,
            theta=theta, lp_options=opts.lp_options,
        )
        sol = solve_lp(lp, opts.lp_options)
        wall = time.perf_counter() - started
        if sol.status != OPTIMAL:
            distribution = CurrentDistribution.from_currents(np.zeros(n_contacts))
            beta = beta_from_fields(np.zeros(values.shape[0]), is_target, e_th_t, e_th_c)
            stats = SolverStats(sol.status, sol.iterations, wall)
            return OptimizationReport(
                distribution=distribution, beta=beta, objective=math.nan,
                solver_stats=stats, method=LP, theta=theta,
                exempted_constraint_ids=exempted, input_digest=digest,
            )
        distribution = CurrentDistribution.from_currents(sol.x)
        distribution.check_limits(i_max_contact_mA, i_max_total_mA)
        fields = values @ distribution.u_mA
        beta = beta_from_fields(fields, is_target, e_th_t, e_th_c)
        stats = SolverStats(sol.status, sol.iterations, wall)
        return OptimizationReport(
            distribution=distribution, beta=beta, objective=sol.objective_value,
            solver_stats=stats, method=LP, theta=theta,
            exempted_constraint_ids=exempted, input_digest=digest,
        )

    mip = build_milp_arrays(
        values, is_target, e_th_t=e_th_t, e_th_c=e_th_c,
        i_max_contact_mA=i_max_contact_mA, i_max_total_mA=i_max_total_mA,
    )
    milp_opts = MilpOptions(
        time_limit_s=opts.time_limit_s, gap_tol=opts.gap_tol, lp_options=opts.lp_options
    )
    sol = solve_milp(mip, milp_opts)
    wall = time.perf_counter() - started
    stats = SolverStats(sol.status, sol.nodes_explored, wall, nodes=sol.nodes_explored, gap=sol.gap)
    if not sol.has_incumbent:
        distribution = CurrentDistribution.from_currents(np.zeros(n_contacts))
        beta = beta_from_fields(np.zeros(values.shape[0]), is_target, e_th_t, e_th_c)
        return OptimizationReport(
            distribution=distribution, beta=beta, objective=math.nan,
            solver_stats=stats, method=MILP, input_digest=digest,
        )
    u = sol.x[:n_contacts]
    distribution = CurrentDistribution.from_currents(u)
    distribution.check_limits(i_max_contact_mA, i_max_total_mA)
    d_target = sol.x[n_contacts:n_contacts + n_t]
    d_constraint = sol.x[n_contacts + n_t:]
    beta = _beta_from_fractions(
        float(d_target.mean()) if n_t else None,
        float(d_constraint.mean()) if n_c else None,
    )
    return OptimizationReport(
        distribution=distribution, beta=beta, objective=sol.objective_value,
        solver_stats=stats, method=MILP, input_digest=digest,
    )


def build_lp(
    problem: StimulationProblem, lp_options: LpOptions | None = None
) -> tuple[LinearProgram, tuple[int, ...]]:
    return build_lp_arrays(
        problem.transfer.values, problem.cloud.is_target,
        e_th_t=problem.e_th_t, e_th_c=problem.e_th_c,
        i_max_contact_mA=problem.i_max_contact_mA,
        i_max_total_mA=problem.i_max_total_mA,
        theta=problem.theta, lp_options=lp_options,
    )


def build_milp(problem: StimulationProblem) -> MixedIntegerProgram:
    return build_milp_arrays(
        problem.transfer.values, problem.cloud.is_target,
        e_th_t=problem.e_th_t, e_th_c=problem.e_th_c,
        i_max_contact_mA=problem.i_max_contact_mA,
        i_max_total_mA=problem.i_max_total_mA,
    )


def optimize(
    problem: StimulationProblem,
    method: str = MILP,
    options: OptimizeOptions | None = None,
) -> OptimizationReport:
    """Solve a StimulationProblem with the requested formulation."""
    return optimize_arrays(
        problem.transfer.values, problem.cloud.is_target,
        method=method, e_th_t=problem.e_th_t, e_th_c=problem.e_th_c,
        i_max_contact_mA=problem.i_max_contact_mA,
        i_max_total_mA=problem.i_max_total_mA,
        theta=problem.theta, options=options,
    )
