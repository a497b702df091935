"""Dense two-phase simplex solver for small linear programs.

Designed for the problem sizes this package produces (a handful of current
variables, up to a few thousand constraint rows once relaxation binaries are
added): dense tableau updates, Phase I with artificial variables for an
initial basis, Dantzig pricing with lowest-index tie-breaks, and a permanent
switch to Bland's rule after a degenerate stall so every solve terminates
deterministically.

Conventions: variable lower bounds must be finite (variables are shifted so
the internal problem is in x >= 0 form); finite upper bounds become extra
rows. Tolerances follow the package defaults of 1e-9 for pivots and 1e-7 for
feasibility.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

LESS_EQUAL = "<="
GREATER_EQUAL = ">="
EQUAL = "="
_RELATIONS = (LESS_EQUAL, GREATER_EQUAL, EQUAL)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_BLAND_STALL_LIMIT = 50


class LpTimeoutError(RuntimeError):
    """Raised when a solve exceeds the caller-provided deadline."""


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """min or max of c @ x subject to row constraints and variable bounds."""

    c: np.ndarray
    sense: str
    a: np.ndarray
    relations: tuple[str, ...]
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        n = c.shape[0]
        a = np.asarray(self.a, dtype=float)
        if a.size == 0:
            a = a.reshape(0, n)
        b = np.atleast_1d(np.asarray(self.b, dtype=float)) if np.size(self.b) else np.zeros(0)
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {self.sense!r}")
        if a.ndim != 2 or a.shape[1] != n:
            raise ValueError(f"constraint matrix width {a.shape} does not match c ({n})")
        if a.shape[0] != b.shape[0] or a.shape[0] != len(self.relations):
            raise ValueError("constraint rows, relations, and rhs lengths must agree")
        bad = {r for r in self.relations if r not in _RELATIONS}
        if bad:
            raise ValueError(f"unknown relations {sorted(bad)}")
        if lower.shape != (n,) or upper.shape != (n,):
            raise ValueError("bounds must have one (lower, upper) pair per variable")
        if not np.all(np.isfinite(lower)):
            raise ValueError("lower bounds must be finite")
        if np.any(upper < lower):
            raise ValueError("upper bounds must be >= lower bounds")
        for name, arr in (("c", c), ("a", a), ("b", b)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
        for name, arr in (("c", c), ("a", a), ("b", b), ("lower", lower), ("upper", upper)):
            object.__setattr__(self, name, arr)
            arr.setflags(write=False)

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]

    @property
    def n_rows(self) -> int:
        return self.a.shape[0]

    def with_bounds(self, lower: np.ndarray, upper: np.ndarray) -> "LinearProgram":
        return LinearProgram(
            c=self.c, sense=self.sense, a=self.a, relations=self.relations,
            b=self.b, lower=lower, upper=upper,
        )


@dataclass(frozen=True)
class LpOptions:
    pivot_tol: float = 1e-9
    feas_tol: float = 1e-7
    max_iterations: Optional[int] = None
    deadline: Optional[float] = None  # absolute time.perf_counter() value


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: str
    x: Optional[np.ndarray]
    objective_value: float
    iterations: int
    dual_objective: float = math.nan


class _Tableau:
    """Simplex tableau with an attached reduced-cost row."""

    def __init__(self, body: np.ndarray, basis: np.ndarray, options: LpOptions):
        self.body = body            # m x (n_cols + 1), last column is the rhs
        self.basis = basis          # basic variable index per row
        self.opt = options
        self.iterations = 0
        self._bland = False
        self._stall = 0

    @property
    def n_cols(self) -> int:
        return self.body.shape[1] - 1

    def set_costs(self, costs: np.ndarray) -> None:
        row = np.concatenate([costs, [0.0]])
        for i, var in enumerate(self.basis):
            cv = costs[var]
            if cv != 0.0:
                row -= cv * self.body[i]
        self.cost_row = row

    @property
    def objective(self) -> float:
        return -self.cost_row[-1]

    def _entering(self, allowed: np.ndarray) -> Optional[int]:
        reduced = self.cost_row[:-1]
        candidates = np.flatnonzero(allowed & (reduced < -self.opt.pivot_tol))
        if candidates.size == 0:
            return None
        if self._bland:
            return int(candidates[0])
        best = candidates[np.argmin(reduced[candidates])]
        return int(best)

    def _leaving(self, col: int) -> Optional[int]:
        column = self.body[:, col]
        rhs = self.body[:, -1]
        rows = np.flatnonzero(column > self.opt.pivot_tol)
        if rows.size == 0:
            return None
        ratios = rhs[rows] / column[rows]
        best = np.min(ratios)
        ties = rows[ratios <= best + 1e-12]
        # Bland-compatible leaving rule: smallest basic variable index.
        return int(ties[np.argmin(self.basis[ties])])

    def pivot(self, row: int, col: int) -> None:
        body = self.body
        pivot_row = body[row] / body[row, col]
        body[row] = pivot_row
        factors = body[:, col].copy()
        factors[row] = 0.0
        body -= np.outer(factors, pivot_row)
        body[:, col] = 0.0
        body[row, col] = 1.0
        self.cost_row -= self.cost_row[col] * pivot_row
        self.cost_row[col] = 0.0
        self.basis[row] = col

    def run(self, allowed: np.ndarray, iteration_cap: int) -> str:
        """Iterate to optimality; returns 'optimal' or 'unbounded'."""
        while True:
            # checked every pivot: the clock read is far cheaper than a pivot
            if self.opt.deadline is not None and time.perf_counter() > self.opt.deadline:
                raise LpTimeoutError("simplex deadline exceeded")
            col = self._entering(allowed)
            if col is None:
                return OPTIMAL
            row = self._leaving(col)
            if row is None:
                return UNBOUNDED
            before = self.objective
            self.pivot(row, col)
            self.iterations += 1
            if self.iterations > iteration_cap:
                raise RuntimeError("simplex iteration cap exceeded; solver bug likely")
            if not self._bland:
                if self.objective > before - 1e-12:
                    self._stall += 1
                    if self._stall > _BLAND_STALL_LIMIT:
                        self._bland = True
                else:
                    self._stall = 0


def solve_lp(lp: LinearProgram, options: LpOptions | None = None) -> LpSolution:
    """Solve a linear program, returning an optimal vertex or a status.

    Deterministic: identical inputs produce identical pivots, solutions, and
    iteration counts. On optimal solves, ``dual_objective`` carries the dual
    bound recovered from the final basis (equal to the primal objective up to
    round-off), which callers use as a self-check.
    """
    opt = options or LpOptions()
    n = lp.n_vars
    sign = -1.0 if lp.sense == "max" else 1.0
    c_int = sign * lp.c

    # Shift to x >= 0 and turn finite upper bounds into rows.
    lo = lp.lower
    rows_a = [lp.a] if lp.n_rows else []
    rows_b = [lp.b - lp.a @ lo] if lp.n_rows else []
    relations = list(lp.relations)
    finite_ub = np.flatnonzero(np.isfinite(lp.upper))
    if finite_ub.size:
        bound_rows = np.zeros((finite_ub.size, n))
        bound_rows[np.arange(finite_ub.size), finite_ub] = 1.0
        rows_a.append(bound_rows)
        rows_b.append(lp.upper[finite_ub] - lo[finite_ub])
        relations.extend([LESS_EQUAL] * finite_ub.size)
    a = np.vstack(rows_a) if rows_a else np.zeros((0, n))
    b = np.concatenate(rows_b) if rows_b else np.zeros(0)
    m = a.shape[0]

    if m == 0:
        # Bounds-free or fully unbounded-above problem: optimum sits at the
        # lower bounds unless some cost coefficient rewards growing forever.
        if np.any(c_int < -opt.pivot_tol):
            return LpSolution(UNBOUNDED, None, math.nan, 0)
        x = lo.copy()
        obj = float(lp.c @ x)
        return LpSolution(OPTIMAL, x, obj, 0, dual_objective=obj)

    # Flip rows to non-negative rhs.
    flip = b < 0
    a = np.where(flip[:, None], -a, a)
    b = np.where(flip, -b, b)
    relations = [
        {LESS_EQUAL: GREATER_EQUAL, GREATER_EQUAL: LESS_EQUAL, EQUAL: EQUAL}[r] if f else r
        for r, f in zip(relations, flip)
    ]

    # Standard-form columns: structural, slack/surplus, artificial.
    needs_artificial = [r != LESS_EQUAL for r in relations]
    n_art = sum(needs_artificial)
    n_cols = n + m + n_art
    body = np.zeros((m, n_cols + 1))
    body[:, :n] = a
    body[:, -1] = b
    basis = np.zeros(m, dtype=np.int64)
    art_col_of_row = np.full(m, -1, dtype=np.int64)
    slack_col_of_row = np.full(m, -1, dtype=np.int64)
    art = n + m
    for i, rel in enumerate(relations):
        slack = n + i
        slack_col_of_row[i] = slack
        if rel == LESS_EQUAL:
            body[i, slack] = 1.0
            basis[i] = slack
        elif rel == GREATER_EQUAL:
            body[i, slack] = -1.0
            body[i, art] = 1.0
            basis[i] = art
            art_col_of_row[i] = art
            art += 1
        else:
            body[i, slack] = 0.0  # placeholder column stays unused for '='
            body[i, art] = 1.0
            basis[i] = art
            art_col_of_row[i] = art
            art += 1

    tableau = _Tableau(body, basis, opt)
    cap = opt.max_iterations or (1000 + 50 * (m + n_cols))
    artificial_mask = np.zeros(n_cols, dtype=bool)
    artificial_mask[n + m:] = True

    # Phase I: minimize the artificial total to find a feasible basis.
    if n_art:
        phase1_costs = np.zeros(n_cols)
        phase1_costs[artificial_mask] = 1.0
        tableau.set_costs(phase1_costs)
        status = tableau.run(~artificial_mask, cap)
        if status != OPTIMAL or tableau.objective > opt.feas_tol:
            return LpSolution(INFEASIBLE, None, math.nan, tableau.iterations)
        # Pivot lingering artificials out of the basis; drop redundant rows.
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if not artificial_mask[tableau.basis[i]]:
                continue
            row = tableau.body[i, :n + m]
            pivots = np.flatnonzero(np.abs(row) > opt.pivot_tol)
            if pivots.size:
                tableau.pivot(i, int(pivots[0]))
            else:
                keep[i] = False
        if not keep.all():
            tableau.body = tableau.body[keep]
            tableau.basis = tableau.basis[keep]

    # Phase II on the real objective; artificials may never re-enter.
    phase2_costs = np.zeros(n_cols)
    phase2_costs[:n] = c_int
    tableau.set_costs(phase2_costs)
    status = tableau.run(~artificial_mask, cap)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, None, math.nan, tableau.iterations)

    x_std = np.zeros(n_cols)
    x_std[tableau.basis] = tableau.body[:, -1]
    x = x_std[:n] + lo
    objective = float(lp.c @ x)

    # Dual values read off the reduced costs of each row's identity column.
    kept_rows = tableau.basis.shape[0]
    y = np.zeros(m)
    reduced = tableau.cost_row[:-1]
    for i in range(m):
        if art_col_of_row[i] >= 0:
            y[i] = -reduced[art_col_of_row[i]]
        else:
            y[i] = -reduced[slack_col_of_row[i]]
    dual_internal = float(y @ b) + float(c_int @ lo)
    dual_objective = sign * dual_internal

    return LpSolution(OPTIMAL, x, objective, tableau.iterations, dual_objective=dual_objective)


def check_feasible(lp: LinearProgram, x: np.ndarray, tol: float = 1e-7) -> bool:
    """True if x satisfies every row and bound of lp within tol."""
    if np.any(x < lp.lower - tol) or np.any(x > lp.upper + tol):
        return False
    if lp.n_rows == 0:
        return True
    lhs = lp.a @ x
    for value, rel, rhs in zip(lhs, lp.relations, lp.b):
        if rel == LESS_EQUAL and value > rhs + tol:
            return False
        if rel == GREATER_EQUAL and value < rhs - tol:
            return False
        if rel == EQUAL and abs(value - rhs) > tol:
            return False
    return True
