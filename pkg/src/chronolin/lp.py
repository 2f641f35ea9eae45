"""Self-contained bounded-variable primal simplex plus branch and bound.

The LPs solved here are small and built row by row, so the model API is
append-oriented and the solver favours robustness over speed: dense
algebra, Bland's rule after degenerate stalling, and per-solution
verification of row and bound residuals.

Debug dumps (``dump``) print one row per line as ``name: coeffs rel rhs``;
the exact layout is for diffing in tests, not a stability contract.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

INF = math.inf

FEAS_TOL = 1e-7          # row feasibility
BOUND_TOL = 1e-9         # variable bound feasibility
COST_TOL = 1e-9          # reduced-cost optimality
INT_TOL = 1e-6           # MILP integrality
PIVOT_TOL = 1e-10        # below this a pivot is numerically unsafe
DEGEN_LIMIT = 50         # degenerate pivots before Bland's rule engages


class NumericalInstability(Exception):
    def __init__(self, msg: str, model=None):
        if model is not None:
            msg = f"{msg}\n--- model ---\n{dump(model)}"
        super().__init__(msg)


@dataclass
class Column:
    name: str
    lb: float = -INF
    ub: float = INF
    binary: bool = False


@dataclass
class Row:
    coeffs: dict[int, float]
    rel: str                  # '<=' | '>=' | '='
    rhs: float
    name: str = ""


@dataclass
class LinearProgramModel:
    columns: list[Column] = field(default_factory=list)
    rows: list[Row] = field(default_factory=list)
    sense: str = "min"
    objective: dict[int, float] = field(default_factory=dict)

    def add_col(self, name: str, lb: float = -INF, ub: float = INF,
                binary: bool = False) -> int:
        if binary:
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        self.columns.append(Column(name, lb, ub, binary))
        return len(self.columns) - 1

    def add_row(self, coeffs: dict[int, float], rel: str, rhs: float,
                name: str = "") -> int:
        assert rel in ("<=", ">=", "=")
        self.rows.append(Row({c: float(w) for c, w in coeffs.items() if w != 0},
                             rel, float(rhs), name))
        return len(self.rows) - 1

    def set_objective(self, sense: str, coeffs: dict[int, float]) -> None:
        assert sense in ("min", "max")
        self.sense = sense
        self.objective = {c: float(w) for c, w in coeffs.items() if w != 0}

    def copy(self) -> "LinearProgramModel":
        return LinearProgramModel(
            columns=[replace(c) for c in self.columns],
            rows=[Row(dict(r.coeffs), r.rel, r.rhs, r.name) for r in self.rows],
            sense=self.sense,
            objective=dict(self.objective))


@dataclass
class LpSolution:
    status: str               # 'optimal' | 'infeasible' | 'unbounded'
    objective: float = math.nan
    values: np.ndarray | None = None
    node_limit_hit: bool = False

    def __getitem__(self, col: int) -> float:
        return float(self.values[col])


def dump(model: LinearProgramModel) -> str:
    lines = [f"{model.sense}: " + " ".join(
        f"{w:+g}*{model.columns[c].name}" for c, w in sorted(model.objective.items()))]
    for col in model.columns:
        kind = " bin" if col.binary else ""
        lines.append(f"col {col.name} in [{col.lb:g}, {col.ub:g}]{kind}")
    for i, row in enumerate(model.rows):
        terms = " ".join(f"{w:+g}*{model.columns[c].name}"
                         for c, w in sorted(row.coeffs.items()))
        lines.append(f"{row.name or f'r{i}'}: {terms} {row.rel} {row.rhs:g}")
    return "\n".join(lines)


# --------------------------------------------------------------- simplex core

_BASIC, _AT_LB, _AT_UB, _FREE = 0, 1, 2, 3


class _Simplex:
    """min c.x  s.t.  A x = b,  l <= x <= u  (slacks included in x)."""

    def __init__(self, A: np.ndarray, b: np.ndarray, lb: np.ndarray,
                 ub: np.ndarray, model=None):
        self.A = A
        self.b = b
        self.lb = lb
        self.ub = ub
        self.m, self.n = A.shape
        self.model = model

    def _basic_values(self, basis, x):
        if self.m == 0:
            return
        nonbasic = [j for j in range(self.n) if j not in set(basis)]
        rhs = self.b - self.A[:, nonbasic] @ x[nonbasic] if nonbasic else self.b.copy()
        try:
            x[basis] = np.linalg.solve(self.A[:, basis], rhs)
        except np.linalg.LinAlgError as exc:
            raise NumericalInstability("singular basis", self.model) from exc

    def solve(self, c: np.ndarray, basis: list[int], status: np.ndarray,
              x: np.ndarray):
        """Returns ('optimal'|'unbounded', obj). Mutates basis/status/x."""
        degen = 0
        bland = False
        for _ in range(20000):
            if self.m:
                B = self.A[:, basis]
                try:
                    y = np.linalg.solve(B.T, c[basis])
                except np.linalg.LinAlgError as exc:
                    raise NumericalInstability("singular basis", self.model) from exc
            else:
                y = np.zeros(0)
            entering, direction = self._price(c, y, status, bland)
            if entering is None:
                self._basic_values(basis, x)
                return "optimal", float(c @ x)
            d = (np.linalg.solve(self.A[:, basis], self.A[:, entering])
                 if self.m else np.zeros(0))
            step, leaving, hit_upper = self._ratio(entering, direction, d,
                                                   basis, x, bland)
            if step == INF:
                return "unbounded", -INF
            if step <= 1e-12:
                degen += 1
                if degen >= DEGEN_LIMIT:
                    bland = True
            else:
                degen = 0
            # move
            delta = direction * step
            x[entering] += delta
            if self.m:
                x[basis] -= d * delta
            if leaving is None:
                status[entering] = _AT_UB if direction > 0 else _AT_LB
            else:
                pivot = d[leaving]
                if abs(pivot) < PIVOT_TOL:
                    raise NumericalInstability(
                        f"pivot magnitude {abs(pivot):.2e} below tolerance",
                        self.model)
                out = basis[leaving]
                status[out] = _AT_UB if hit_upper else _AT_LB
                x[out] = self.ub[out] if hit_upper else self.lb[out]
                basis[leaving] = entering
                status[entering] = _BASIC
        raise NumericalInstability("simplex iteration limit exceeded", self.model)

    def _price(self, c, y, status, bland):
        best, best_score, best_dir = None, COST_TOL, 0.0
        for j in range(self.n):
            st = status[j]
            if st == _BASIC:
                continue
            r = c[j] - (y @ self.A[:, j] if self.m else 0.0)
            if st == _AT_LB:
                score, direction = -r, 1.0
            elif st == _AT_UB:
                score, direction = r, -1.0
            else:  # free
                score, direction = abs(r), (1.0 if r < 0 else -1.0)
            if score > COST_TOL:
                if bland:
                    return j, direction
                if score > best_score:
                    best, best_score, best_dir = j, score, direction
        return best, best_dir

    def _ratio(self, entering, direction, d, basis, x, bland):
        step = INF
        leaving = None
        hit_upper = False
        # bound flip of the entering variable itself
        span = self.ub[entering] - self.lb[entering]
        if span < INF:
            step = span
        for i in range(self.m):
            delta = -direction * d[i]
            j = basis[i]
            if delta < -PIVOT_TOL:                      # basic value decreasing
                if self.lb[j] > -INF:
                    t = (x[j] - self.lb[j]) / (-delta)
                    if t < step - 1e-12 or (t < step + 1e-12 and _prefer(
                            bland, basis, leaving, i, d)):
                        step, leaving, hit_upper = max(t, 0.0), i, False
            elif delta > PIVOT_TOL:                     # increasing
                if self.ub[j] < INF:
                    t = (self.ub[j] - x[j]) / delta
                    if t < step - 1e-12 or (t < step + 1e-12 and _prefer(
                            bland, basis, leaving, i, d)):
                        step, leaving, hit_upper = max(t, 0.0), i, True
        return step, leaving, hit_upper


def _prefer(bland, basis, current, candidate, d):
    if current is None:
        return True
    if bland:
        return basis[candidate] < basis[current]
    return abs(d[candidate]) > abs(d[current])


def _standardize(model: LinearProgramModel, relax_binaries: bool = True):
    ns = len(model.columns)
    m = len(model.rows)
    n = ns + m
    A = np.zeros((m, n))
    b = np.zeros(m)
    lb = np.full(n, -INF)
    ub = np.full(n, INF)
    for j, col in enumerate(model.columns):
        lb[j], ub[j] = col.lb, col.ub
    for i, row in enumerate(model.rows):
        for cidx, w in row.coeffs.items():
            A[i, cidx] = w
        b[i] = row.rhs
        s = ns + i
        A[i, s] = 1.0
        if row.rel == "<=":
            lb[s], ub[s] = 0.0, INF
        elif row.rel == ">=":
            lb[s], ub[s] = -INF, 0.0
        else:
            lb[s], ub[s] = 0.0, 0.0
    return A, b, lb, ub, ns


def lp_solve(model: LinearProgramModel) -> LpSolution:
    """Solve the continuous relaxation (binary columns treated as [0,1])."""
    for col in model.columns:
        if col.lb > col.ub + BOUND_TOL:
            return LpSolution("infeasible")
    A, b, lb, ub, ns = _standardize(model)
    m, n = A.shape

    # initial point: nonbasics at the bound nearest zero, slacks basic
    x = np.zeros(n)
    status = np.full(n, _FREE, dtype=int)
    for j in range(n):
        if lb[j] > -INF and (abs(lb[j]) <= abs(ub[j]) or ub[j] == INF):
            x[j], status[j] = lb[j], _AT_LB
        elif ub[j] < INF:
            x[j], status[j] = ub[j], _AT_UB

    basis: list[int] = []
    art_cols: list[int] = []
    art_data = []
    for i in range(m):
        s = ns + i
        resid = b[i] - A[i, :ns] @ x[:ns]
        if lb[s] - BOUND_TOL <= resid <= ub[s] + BOUND_TOL:
            x[s] = resid
            status[s] = _BASIC
            basis.append(s)
        else:
            x[s] = min(max(resid, lb[s]), ub[s])
            status[s] = _AT_LB if x[s] == lb[s] else _AT_UB
            gap = resid - x[s]
            art_data.append((i, math.copysign(1.0, gap), abs(gap)))
            basis.append(-1)  # placeholder

    if art_data:
        k = len(art_data)
        A = np.hstack([A, np.zeros((m, k))])
        lb = np.concatenate([lb, np.zeros(k)])
        ub = np.concatenate([ub, np.full(k, INF)])
        x = np.concatenate([x, np.zeros(k)])
        status = np.concatenate([status, np.full(k, _BASIC, dtype=int)])
        for t, (i, sign, mag) in enumerate(art_data):
            col = n + t
            A[i, col] = sign
            x[col] = mag
            basis[i] = col
        sx = _Simplex(A, b, lb, ub, model)
        c1 = np.zeros(A.shape[1])
        c1[n:] = 1.0
        st, obj = sx.solve(c1, basis, status, x)
        if st != "optimal" or obj > FEAS_TOL:
            return LpSolution("infeasible")
        lb[n:] = 0.0
        ub[n:] = 0.0

    c = np.zeros(A.shape[1])
    sign = 1.0 if model.sense == "min" else -1.0
    for cidx, w in model.objective.items():
        c[cidx] = sign * w
    sx2 = _Simplex(A, b, lb, ub, model)
    st, obj = sx2.solve(c, basis, status, x)
    if st == "unbounded":
        return LpSolution("unbounded")
    values = x[:ns].copy()
    _verify(model, values)
    true_obj = sum(w * values[cidx] for cidx, w in model.objective.items())
    return LpSolution("optimal", float(true_obj), values)


def _verify(model: LinearProgramModel, values: np.ndarray) -> None:
    for j, col in enumerate(model.columns):
        if values[j] < col.lb - 1e-6 or values[j] > col.ub + 1e-6:
            raise NumericalInstability(
                f"solution violates bound on {col.name}", model)
        values[j] = min(max(values[j], col.lb), col.ub)
    for row in model.rows:
        lhs = sum(w * values[c] for c, w in row.coeffs.items())
        err = lhs - row.rhs
        ok = (err <= FEAS_TOL if row.rel == "<=" else
              err >= -FEAS_TOL if row.rel == ">=" else abs(err) <= FEAS_TOL)
        if not ok:
            raise NumericalInstability(
                f"solution violates row {row.name} by {err:.2e}", model)


# ------------------------------------------------------------ branch and bound

def mip_solve(model: LinearProgramModel, node_limit: int = 100_000) -> LpSolution:
    """Depth-first branch and bound on the most-fractional binary column."""
    binaries = [j for j, col in enumerate(model.columns) if col.binary]
    if not binaries:
        return lp_solve(model)
    sense = 1.0 if model.sense == "min" else -1.0

    best: LpSolution | None = None
    nodes = 0
    limit_hit = False
    stack: list[dict[int, tuple[float, float]]] = [{}]
    while stack:
        fixes = stack.pop()
        nodes += 1
        if nodes > node_limit:
            limit_hit = True
            break
        node_model = model.copy()
        for j, (lo, hi) in fixes.items():
            node_model.columns[j].lb = lo
            node_model.columns[j].ub = hi
        rel = lp_solve(node_model)
        if rel.status == "infeasible":
            continue
        if rel.status == "unbounded":
            return LpSolution("unbounded")
        if best is not None and sense * rel.objective >= sense * best.objective - 1e-9:
            continue
        frac = [(abs(rel.values[j] - round(rel.values[j])), j) for j in binaries]
        worst = max(frac)
        if worst[0] <= INT_TOL:
            vals = rel.values.copy()
            for j in binaries:
                vals[j] = round(vals[j])
            obj = sum(w * vals[c] for c, w in model.objective.items())
            cand = LpSolution("optimal", float(obj), vals)
            if best is None or sense * cand.objective < sense * best.objective:
                best = cand
            continue
        j = worst[1]
        up = dict(fixes)
        up[j] = (1.0, 1.0)
        down = dict(fixes)
        down[j] = (0.0, 0.0)
        stack.append(up)     # popped second
        stack.append(down)   # explore the floor branch first
    if best is None:
        return LpSolution("infeasible", node_limit_hit=limit_hit)
    best.node_limit_hit = limit_hit
    return best


def quadratic_objective_shim(model: LinearProgramModel,
                             terms: list[tuple[int, int, float]]):
    """Linearize binary*continuous objective products.

    Each (b, x, coeff) adds a column z standing for b*x, constrained with
    big-M rows from x's finite bounds, and coeff*z joins the objective.
    Returns (model', z column indices).
    """
    out = model.copy()
    zcols = []
    for bcol, xcol, coeff in terms:
        xc = out.columns[xcol]
        if xc.lb == -INF or xc.ub == INF:
            raise ValueError(
                f"column {xc.name} in a product term must have finite bounds")
        lo, hi = xc.lb, xc.ub
        z = out.add_col(f"z({out.columns[bcol].name}*{xc.name})",
                        min(lo, 0.0), max(hi, 0.0))
        out.add_row({z: 1.0, xcol: -1.0, bcol: -lo}, "<=", -lo)   # z <= x - L(1-b)
        out.add_row({z: 1.0, xcol: -1.0, bcol: -hi}, ">=", -hi)   # z >= x - U(1-b)
        out.add_row({z: 1.0, bcol: -hi}, "<=", 0.0)               # z <= U b
        out.add_row({z: 1.0, bcol: -lo}, ">=", 0.0)               # z >= L b
        out.objective[z] = out.objective.get(z, 0.0) + float(coeff)
        zcols.append(z)
    return out, zcols
