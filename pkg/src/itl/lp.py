"""Solver-agnostic linear programs in bounded, equality-constrained form.

    optimize   c @ x
    subject to A_eq @ x = b_eq,  lower <= x <= upper

:func:`solve` runs HiGHS (dual simplex, through :func:`scipy.optimize.linprog`)
and then re-checks the answer itself: primal residuals, dual feasibility and
the duality gap. A result that fails the check is retried with presolve and
then with the interior-point method; if every attempt fails it is reported as
``SOLVER_FAILURE`` rather than trusted.

Dual values are sensitivities of the *stated* objective: for a maximization
``upper_duals[v]`` is d(objective)/d(upper bound of v).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

FEASIBILITY_TOL = 1e-6
OPTIMALITY_TOL = 1e-6


@dataclass(frozen=True)
class Tolerances:
    """Certificate tolerances: feasibility absolute, optimality relative to 1 + |objective|."""

    feasibility: float = FEASIBILITY_TOL
    optimality: float = OPTIMALITY_TOL

    def __post_init__(self) -> None:
        if not (self.feasibility > 0 and self.optimality > 0):
            raise ValueError("tolerances must be > 0")


class Sense(Enum):
    MAXIMIZE = "max"
    MINIMIZE = "min"


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    SOLVER_FAILURE = "solver_failure"


class LpProblem:
    """Incrementally built LP with name lookups for variables and rows."""

    def __init__(self, name: str = "lp", sense: Sense = Sense.MAXIMIZE):
        self.name = name
        self.sense = sense
        self.var_names: list[str] = []
        self._lower: list[float] = []
        self._upper: list[float] = []
        self._var_index: dict[str, int] = {}
        self.objective: dict[int, float] = {}
        self.row_names: list[str] = []
        self._row_index: dict[str, int] = {}
        self.rhs: list[float] = []
        self._rows: list[np.ndarray] = []
        self._cols: list[np.ndarray] = []
        self._vals: list[np.ndarray] = []

    # -- variables -------------------------------------------------------------

    def add_variable(self, name: str, lower: float = -math.inf, upper: float = math.inf) -> int:
        if name in self._var_index:
            raise ValueError(f"duplicate variable {name!r}")
        if lower > upper:
            raise ValueError(f"variable {name!r}: lower bound {lower} > upper bound {upper}")
        self._var_index[name] = len(self.var_names)
        self.var_names.append(name)
        self._lower.append(float(lower))
        self._upper.append(float(upper))
        return self._var_index[name]

    def add_variables(
        self, names: Sequence[str], lower: Sequence[float], upper: Sequence[float]
    ) -> np.ndarray:
        return np.array([self.add_variable(n, lo, up) for n, lo, up in zip(names, lower, upper)], dtype=int)

    def variable_index(self, name: str) -> int:
        return self._var_index[name]

    @property
    def lower(self) -> np.ndarray:
        return np.array(self._lower)

    @property
    def upper(self) -> np.ndarray:
        return np.array(self._upper)

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    # -- objective and rows -------------------------------------------------------

    def set_objective(self, coefficients: Mapping[str, float], sense: Sense | None = None) -> None:
        self.objective = {self._var_index[n]: float(c) for n, c in coefficients.items()}
        if sense is not None:
            self.sense = sense

    def add_equality(self, name: str, coefficients: Mapping[str, float], rhs: float = 0.0) -> int:
        idx = np.array([self._var_index[n] for n in coefficients], dtype=int)
        vals = np.array(list(coefficients.values()), dtype=float)
        return self._append_rows([name], np.zeros(len(idx), dtype=int), idx, vals, [rhs])[0]

    def add_equalities(
        self,
        names: Sequence[str],
        matrix: sp.spmatrix | np.ndarray,
        columns: Sequence[int],
        rhs: Sequence[float] | None = None,
    ) -> list[int]:
        """Add one row per entry of ``names``; ``matrix[:, k]`` multiplies variable ``columns[k]``."""
        coo = sp.coo_matrix(matrix)
        keep = coo.data != 0
        columns = np.asarray(columns, dtype=int)
        rhs = [0.0] * len(names) if rhs is None else rhs
        return self._append_rows(names, coo.row[keep], columns[coo.col[keep]], coo.data[keep], rhs)

    def _append_rows(self, names, local_rows, cols, vals, rhs) -> list[int]:
        if len(names) != len(rhs):
            raise ValueError("names and rhs differ in length")
        if len(cols) and (cols.min() < 0 or cols.max() >= self.n_vars):
            raise ValueError("coefficient references unknown variable")
        start = len(self.row_names)
        for k, n in enumerate(names):
            if n in self._row_index:
                raise ValueError(f"duplicate constraint {n!r}")
            self._row_index[n] = start + k
        self.row_names.extend(names)
        self.rhs.extend(float(r) for r in rhs)
        self._rows.append(np.asarray(local_rows, dtype=int) + start)
        self._cols.append(np.asarray(cols, dtype=int))
        self._vals.append(np.asarray(vals, dtype=float))
        return list(range(start, start + len(names)))

    def constraint_index(self, name: str) -> int:
        return self._row_index[name]

    @property
    def n_rows(self) -> int:
        return len(self.row_names)

    @property
    def a_eq(self) -> sp.csr_matrix:
        if not self._rows:
            return sp.csr_matrix((0, self.n_vars))
        return sp.csr_matrix(
            (np.concatenate(self._vals), (np.concatenate(self._rows), np.concatenate(self._cols))),
            shape=(self.n_rows, self.n_vars),
        )

    @property
    def c(self) -> np.ndarray:
        c = np.zeros(self.n_vars)
        for j, v in self.objective.items():
            c[j] = v
        return c

    def row(self, name: str) -> dict[str, float]:
        """Nonzero coefficients of a constraint row, by variable name."""
        r = self.a_eq.getrow(self._row_index[name]).tocoo()
        return {self.var_names[j]: v for j, v in zip(r.col, r.data)}


@dataclass
class LpSolution:
    status: LpStatus
    objective_value: float = math.nan
    x: np.ndarray | None = None
    var_names: list[str] = field(default_factory=list)
    row_names: list[str] = field(default_factory=list)
    row_duals: np.ndarray | None = None
    lower_duals_arr: np.ndarray | None = None
    upper_duals_arr: np.ndarray | None = None
    message: str = ""

    @property
    def variable_values(self) -> dict[str, float]:
        if self.x is None:
            return {}
        return dict(zip(self.var_names, self.x.tolist()))

    @property
    def duals(self) -> dict[str, float]:
        """Equality-row duals by constraint name."""
        if self.row_duals is None:
            return {}
        return dict(zip(self.row_names, self.row_duals.tolist()))

    @property
    def lower_duals(self) -> dict[str, float]:
        if self.lower_duals_arr is None:
            return {}
        return dict(zip(self.var_names, self.lower_duals_arr.tolist()))

    @property
    def upper_duals(self) -> dict[str, float]:
        if self.upper_duals_arr is None:
            return {}
        return dict(zip(self.var_names, self.upper_duals_arr.tolist()))

    def value(self, name: str) -> float:
        return float(self.x[self.var_names.index(name)])


_TIGHT = {"primal_feasibility_tolerance": 1e-9, "dual_feasibility_tolerance": 1e-9}

# Tried in order until one passes the certificate check. Dual simplex without
# presolve is fastest on dense PTDF rows but now and then drifts a few 1e-6
# off the equality rows; presolve or interior point (with crossover) fix that.
_ATTEMPTS = (
    ("highs-ds", {"presolve": False, **_TIGHT}),
    ("highs-ds", {"presolve": True, **_TIGHT}),
    ("highs-ipm", {"presolve": True, **_TIGHT}),
)


def solve(problem: LpProblem, feas_tol: float = FEASIBILITY_TOL, opt_tol: float = OPTIMALITY_TOL) -> LpSolution:
    """Solve ``problem`` and certify the answer.

    An answer that fails the certificate is re-solved with the next HiGHS
    configuration; if none passes the status is ``SOLVER_FAILURE``.
    """
    sol = LpSolution(LpStatus.SOLVER_FAILURE, message="not attempted")
    for method, options in _ATTEMPTS:
        sol = _solve_once(problem, method, options)
        if sol.status is not LpStatus.OPTIMAL:
            if sol.status is not LpStatus.SOLVER_FAILURE:
                return sol
            continue
        problem_gap = certificate_violation(problem, sol, feas_tol, opt_tol)
        if not problem_gap:
            return sol
        sol.status = LpStatus.SOLVER_FAILURE
        sol.message = f"{method}: {problem_gap}"
    return sol


def _solve_once(problem: LpProblem, method: str, options: dict) -> LpSolution:
    sign = 1.0 if problem.sense is Sense.MINIMIZE else -1.0
    c = problem.c
    a = problem.a_eq
    b = np.array(problem.rhs)
    lo, up = problem.lower, problem.upper
    bounds = np.column_stack([lo, up]) if problem.n_vars else None
    try:
        res = linprog(
            sign * c,
            A_eq=a if problem.n_rows else None,
            b_eq=b if problem.n_rows else None,
            bounds=bounds,
            method=method,
            options=options,
        )
    except ValueError as exc:
        return LpSolution(LpStatus.SOLVER_FAILURE, message=str(exc))

    base = dict(var_names=list(problem.var_names), row_names=list(problem.row_names))
    if res.status == 2:
        return LpSolution(LpStatus.INFEASIBLE, message=res.message, **base)
    if res.status == 3:
        return LpSolution(LpStatus.UNBOUNDED, message=res.message, **base)
    if res.status != 0:
        return LpSolution(LpStatus.SOLVER_FAILURE, message=res.message, **base)

    x = np.asarray(res.x, dtype=float)
    y = sign * np.asarray(res.eqlin.marginals) if problem.n_rows else np.zeros(0)
    zl = sign * np.asarray(res.lower.marginals)
    zu = sign * np.asarray(res.upper.marginals)
    zl[~np.isfinite(lo)] = 0.0
    zu[~np.isfinite(up)] = 0.0
    return LpSolution(
        LpStatus.OPTIMAL,
        objective_value=float(c @ x),
        x=x,
        row_duals=y,
        lower_duals_arr=zl,
        upper_duals_arr=zu,
        message=res.message,
        **base,
    )


def certificate_violation(
    problem: LpProblem, sol: LpSolution, feas_tol: float = FEASIBILITY_TOL, opt_tol: float = OPTIMALITY_TOL
) -> str:
    """Empty string if ``sol`` is a verified optimum of ``problem``, else a reason."""
    x, y, zl, zu = sol.x, sol.row_duals, sol.lower_duals_arr, sol.upper_duals_arr
    lo, up, c, a = problem.lower, problem.upper, problem.c, problem.a_eq
    b = np.array(problem.rhs)
    scale = 1.0 + abs(sol.objective_value)

    if np.any(x < lo - feas_tol) or np.any(x > up + feas_tol):
        return "bound violation"
    if problem.n_rows and np.max(np.abs(a @ x - b)) > feas_tol:
        return f"equality residual {np.max(np.abs(a @ x - b)):.3g}"

    # stationarity: c = A^T y + zl + zu with signs fixed by the objective sense
    s = 1.0 if problem.sense is Sense.MAXIMIZE else -1.0
    if np.any(s * zl > opt_tol) or np.any(s * zu < -opt_tol):
        return "dual sign violation"
    resid = c - (a.T @ y if problem.n_rows else 0.0) - zl - zu
    if np.max(np.abs(resid), initial=0.0) > opt_tol * max(1.0, np.max(np.abs(c), initial=0.0)):
        return "dual infeasibility"

    # complementary slackness against the bound each dual is attached to
    for z, bound in ((zl, lo), (zu, up)):
        active = np.abs(z) > opt_tol
        if np.any(np.abs(x[active] - bound[active]) * np.abs(z[active]) > feas_tol * scale):
            return "complementary slackness violation"

    dual_obj = float(b @ y) if problem.n_rows else 0.0
    fl, fu = np.isfinite(lo), np.isfinite(up)
    dual_obj += float(zl[fl] @ lo[fl]) + float(zu[fu] @ up[fu])
    if abs(dual_obj - sol.objective_value) > opt_tol * scale:
        return f"duality gap {abs(dual_obj - sol.objective_value):.3g}"
    return ""


# -- fixed-format MPS -------------------------------------------------------------

def _mps_field(text: str, width: int) -> str:
    return text.ljust(width)


def _mps_number(value: float) -> str:
    """Most precise ``g`` rendering that fits the 12-character value field."""
    for digits in range(12, 0, -1):
        text = f"{value:.{digits}g}"
        if len(text) <= 12:
            return text.rjust(12)
    raise ValueError(f"cannot fit {value!r} into an MPS field")


def write_mps(problem: LpProblem, stream: IO[str]) -> dict[str, str]:
    """Write ``problem`` in fixed-format MPS.

    Fixed MPS limits names to 8 characters, so variables become ``C0000001``...
    and rows ``R0000001``...; the original names are listed in leading ``*``
    comment lines. Returns the mapping from MPS name to original name.
    """
    cols = {f"C{j + 1:07d}": n for j, n in enumerate(problem.var_names)}
    rows = {f"R{i + 1:07d}": n for i, n in enumerate(problem.row_names)}
    col_keys, row_keys = list(cols), list(rows)
    w = stream.write
    for k, v in list(cols.items()) + list(rows.items()):
        w(f"* {k} {v}\n")
    w(f"NAME          {problem.name[:8]}\n")
    w("OBJSENSE\n")
    w(f"    {'MAX' if problem.sense is Sense.MAXIMIZE else 'MIN'}\n")
    w("ROWS\n")
    w(" N  OBJ\n")
    for r in row_keys:
        w(f" E  {r}\n")
    w("COLUMNS\n")
    a = problem.a_eq.tocsc()
    c = problem.c
    for j, name in enumerate(col_keys):
        entries = []
        if c[j] != 0:
            entries.append(("OBJ", c[j]))
        for k in range(a.indptr[j], a.indptr[j + 1]):
            entries.append((row_keys[a.indices[k]], a.data[k]))
        for rname, val in entries:
            w(f"    {_mps_field(name, 8)}  {_mps_field(rname, 8)}  {_mps_number(val)}\n")
    w("RHS\n")
    for i, r in enumerate(row_keys):
        if problem.rhs[i] != 0:
            w(f"    {_mps_field('RHS', 8)}  {_mps_field(r, 8)}  {_mps_number(problem.rhs[i])}\n")
    w("BOUNDS\n")
    for j, name in enumerate(col_keys):
        lo, up = problem._lower[j], problem._upper[j]
        if lo == -math.inf and up == math.inf:
            w(f" FR {_mps_field('BND', 8)}  {name}\n")
            continue
        if lo == up:
            w(f" FX {_mps_field('BND', 8)}  {_mps_field(name, 8)}  {_mps_number(lo)}\n")
            continue
        if lo == -math.inf:
            w(f" MI {_mps_field('BND', 8)}  {name}\n")
        elif lo != 0:
            w(f" LO {_mps_field('BND', 8)}  {_mps_field(name, 8)}  {_mps_number(lo)}\n")
        if up != math.inf:
            w(f" UP {_mps_field('BND', 8)}  {_mps_field(name, 8)}  {_mps_number(up)}\n")
    w("ENDATA\n")
    return {**cols, **rows}


def read_mps(lines: Iterable[str]) -> LpProblem:
    """Read back the subset of fixed MPS produced by :func:`write_mps`."""
    names: dict[str, str] = {}
    section = None
    sense = Sense.MINIMIZE
    row_order: list[str] = []
    coefs: dict[str, dict[str, float]] = {}
    col_order: list[str] = []
    obj: dict[str, float] = {}
    rhs: dict[str, float] = {}
    bounds: dict[str, list[float]] = {}
    for raw in lines:
        line = raw.rstrip("\n")
        if line.startswith("*"):
            parts = line[1:].split(maxsplit=1)
            if len(parts) == 2:
                names[parts[0]] = parts[1]
            continue
        if not line.strip():
            continue
        if not line.startswith(" "):
            section = line.split()[0]
            continue
        tok = line.split()
        if section == "OBJSENSE":
            sense = Sense.MAXIMIZE if tok[0] == "MAX" else Sense.MINIMIZE
        elif section == "ROWS" and tok[0] == "E":
            row_order.append(tok[1])
            coefs[tok[1]] = {}
        elif section == "COLUMNS":
            col, row, val = tok[0], tok[1], float(tok[2])
            if col not in bounds:
                col_order.append(col)
                bounds[col] = [0.0, math.inf]
            if row == "OBJ":
                obj[col] = val
            else:
                coefs[row][col] = val
        elif section == "RHS":
            rhs[tok[1]] = float(tok[2])
        elif section == "BOUNDS":
            kind, col = tok[0], tok[2]
            if col not in bounds:
                col_order.append(col)
                bounds[col] = [0.0, math.inf]
            if kind == "FR":
                bounds[col] = [-math.inf, math.inf]
            elif kind == "MI":
                bounds[col][0] = -math.inf
            elif kind == "LO":
                bounds[col][0] = float(tok[3])
            elif kind == "UP":
                bounds[col][1] = float(tok[3])
            elif kind == "FX":
                bounds[col] = [float(tok[3])] * 2
    lp = LpProblem(sense=sense)
    for col in col_order:
        lp.add_variable(names.get(col, col), *bounds[col])
    lp.set_objective({names.get(k, k): v for k, v in obj.items()})
    for r in row_order:
        lp.add_equality(names.get(r, r), {names.get(k, k): v for k, v in coefs[r].items()}, rhs.get(r, 0.0))
    return lp
