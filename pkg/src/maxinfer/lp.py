"""Dense linear programming sized for the l1-minimization reformulation
(~2p variables, ~2p constraints).

The solver is HiGHS dual simplex (via scipy), which is deterministic for a
fixed input; every Optimal result is re-verified here against primal
feasibility, dual feasibility, and the duality gap before being returned,
so callers can trust the certificate without knowing the backend.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

FEAS_TOL = 1e-8
DUAL_TOL = 1e-6

_SENSE_ALIASES = {
    "<=": "le", "le": "le", "<": "le",
    "=": "eq", "==": "eq", "eq": "eq",
    ">=": "ge", "ge": "ge", ">": "ge",
}


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


class LpError(RuntimeError):
    """Numerical failure inside the solver (no status applies)."""


@dataclass(frozen=True)
class LpProblem:
    """min c'x  s.t.  A x (sense) b,  lower <= x <= upper.

    senses holds one of '<=', '=', '>=' per row. Variable lower bounds
    default to 0 and uppers to +inf; pass arrays to override.
    """

    objective: np.ndarray
    constraints: np.ndarray
    bounds: np.ndarray
    senses: Sequence[str]
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float)
        a = np.asarray(self.constraints, dtype=float)
        b = np.asarray(self.bounds, dtype=float)
        if a.ndim != 2:
            raise ValueError("constraint matrix must be 2-d")
        if c.ndim != 1 or a.shape[1] != c.size:
            raise ValueError("objective length must match constraint columns")
        if b.shape != (a.shape[0],) or len(self.senses) != a.shape[0]:
            raise ValueError("bounds/senses length must match constraint rows")
        senses = tuple(_SENSE_ALIASES.get(s) for s in self.senses)
        if any(s is None for s in senses):
            raise ValueError("senses must be one of '<=', '=', '>='")
        lower = np.zeros(c.size) if self.lower is None else np.asarray(self.lower, float)
        upper = np.full(c.size, np.inf) if self.upper is None else np.asarray(self.upper, float)
        if lower.shape != (c.size,) or upper.shape != (c.size,):
            raise ValueError("variable bound vectors must have one entry per variable")
        if np.any(lower > upper):
            raise ValueError("variable lower bound exceeds upper bound")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "constraints", a)
        object.__setattr__(self, "bounds", b)
        object.__setattr__(self, "senses", senses)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def n_vars(self) -> int:
        return self.objective.size

    @property
    def n_rows(self) -> int:
        return self.constraints.shape[0]


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    x: Optional[np.ndarray]
    objective_value: float
    feasibility_residual: float = float("nan")
    duality_gap: float = float("nan")
    row_duals: Optional[np.ndarray] = None
    reduced_costs: Optional[np.ndarray] = None
    iterations: int = 0


def _split_rows(problem: LpProblem):
    le = [i for i, s in enumerate(problem.senses) if s == "le"]
    ge = [i for i, s in enumerate(problem.senses) if s == "ge"]
    eq = [i for i, s in enumerate(problem.senses) if s == "eq"]
    return le, ge, eq


def solve_lp(
    problem: LpProblem,
    iteration_limit: int = 50_000,
    presolve: bool = True,
    sparse: bool = False,
) -> LpSolution:
    """Solve the LP; Optimal results carry a verified certificate.

    Raises LpError if the backend reports a numerical breakdown, or if an
    allegedly optimal point fails the feasibility/duality-gap checks.
    """
    a = problem.constraints
    le, ge, eq = _split_rows(problem)
    blocks = []
    if le:
        blocks.append(a[le])
    if ge:
        blocks.append(-a[ge])
    a_ub = np.vstack(blocks) if blocks else None
    b_ub = (
        np.concatenate([problem.bounds[le], -problem.bounds[ge]])
        if (le or ge)
        else None
    )
    a_eq = a[eq] if eq else None
    b_eq = problem.bounds[eq] if eq else None
    if sparse:
        if a_ub is not None:
            a_ub = sp.csc_matrix(a_ub)
        if a_eq is not None:
            a_eq = sp.csc_matrix(a_eq)

    res = linprog(
        problem.objective,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=np.column_stack([problem.lower, problem.upper]),
        method="highs-ds",
        options={"maxiter": iteration_limit, "presolve": presolve},
    )
    if res.status == 2:
        return LpSolution(LpStatus.INFEASIBLE, None, float("nan"), iterations=res.nit)
    if res.status == 3:
        return LpSolution(LpStatus.UNBOUNDED, None, float("nan"), iterations=res.nit)
    if res.status == 1:
        return LpSolution(LpStatus.ITERATION_LIMIT, None, float("nan"), iterations=res.nit)
    if res.status != 0:
        raise LpError(f"solver failure: {res.message}")

    x = np.asarray(res.x, dtype=float)
    feas = _primal_residual(problem, x)
    gap, row_duals, red_costs = _duality_gap(problem, res, le, ge, eq)
    obj = float(problem.objective @ x)
    if feas > FEAS_TOL * (1.0 + float(np.max(np.abs(problem.bounds), initial=0.0))):
        raise LpError(f"optimal point violates feasibility: residual {feas:.3e}")
    if gap > DUAL_TOL * (1.0 + abs(obj)):
        raise LpError(f"duality gap too large: {gap:.3e}")
    return LpSolution(
        status=LpStatus.OPTIMAL,
        x=x,
        objective_value=obj,
        feasibility_residual=feas,
        duality_gap=gap,
        row_duals=row_duals,
        reduced_costs=red_costs,
        iterations=res.nit,
    )


def _primal_residual(problem: LpProblem, x: np.ndarray) -> float:
    ax = problem.constraints @ x
    worst = 0.0
    for i, s in enumerate(problem.senses):
        d = ax[i] - problem.bounds[i]
        if s == "le":
            worst = max(worst, d)
        elif s == "ge":
            worst = max(worst, -d)
        else:
            worst = max(worst, abs(d))
    lo = float(np.max(problem.lower - x, initial=0.0))
    hi_gap = problem.upper - x
    hi = float(np.max(np.where(np.isfinite(problem.upper), -hi_gap, 0.0), initial=0.0))
    return max(worst, lo, hi)


def _duality_gap(problem: LpProblem, res, le, ge, eq):
    m = problem.n_rows
    row_duals = np.zeros(m)
    if le or ge:
        marg = np.asarray(res.ineqlin.marginals, dtype=float)
        for out_pos, i in enumerate(le):
            row_duals[i] = marg[out_pos]
        for out_pos, i in enumerate(ge):
            row_duals[i] = -marg[len(le) + out_pos]
    if eq:
        marg_eq = np.asarray(res.eqlin.marginals, dtype=float)
        for out_pos, i in enumerate(eq):
            row_duals[i] = marg_eq[out_pos]
    lower_marg = np.asarray(res.lower.marginals, dtype=float)
    upper_marg = np.asarray(res.upper.marginals, dtype=float)
    dual_obj = float(row_duals @ problem.bounds)
    finite_lo = np.isfinite(problem.lower)
    finite_hi = np.isfinite(problem.upper)
    dual_obj += float(lower_marg[finite_lo] @ problem.lower[finite_lo])
    dual_obj += float(upper_marg[finite_hi] @ problem.upper[finite_hi])
    gap = abs(float(problem.objective @ res.x) - dual_obj)
    reduced = lower_marg + upper_marg
    return gap, row_duals, reduced


def dump_lp(problem: LpProblem) -> str:
    """Plain-text dump (objective row, then one constraint row per line)."""
    buf = io.StringIO()
    buf.write("min " + " ".join(format(v, ".12g") for v in problem.objective) + "\n")
    sym = {"le": "<=", "eq": "=", "ge": ">="}
    for i in range(problem.n_rows):
        row = " ".join(format(v, ".12g") for v in problem.constraints[i])
        buf.write(f"{row} {sym[problem.senses[i]]} {format(problem.bounds[i], '.12g')}\n")
    bounds_line = " ".join(
        f"[{format(lo, '.12g')},{format(hi, '.12g')}]"
        for lo, hi in zip(problem.lower, problem.upper)
    )
    buf.write("vars " + bounds_line + "\n")
    return buf.getvalue()
