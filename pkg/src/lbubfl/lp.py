"""LP relaxation of the bounded facility location integer program.

Variables are ordered ``y_0 .. y_{m-1}`` followed by ``x_ij`` in
facility-major order (``m + i * n + j``).  The description is solver
neutral: ``solve_lp`` runs HiGHS by default, or the dense simplex in this
module (``method="simplex"``) which is meant for small cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .core import InfeasibleError, Instance, InvariantViolation

FEAS_TOL = 1e-7
PIVOT_TOL = 1e-10


@dataclass(frozen=True)
class LPDescription:
    """min c.x  s.t.  A_ub x <= b_ub,  0 <= x <= 1."""

    c: np.ndarray
    A_ub: sparse.csr_matrix
    b_ub: np.ndarray
    n_facilities: int
    n_clients: int
    row_groups: dict  # name -> (start, stop)
    var_names: tuple

    @property
    def n_vars(self) -> int:
        return len(self.c)

    @property
    def n_rows(self) -> int:
        return self.A_ub.shape[0]

    def to_text(self) -> str:
        """Plain rows/columns listing for cross-checking with other tools."""
        lines = [f"minimize {self.n_vars} vars {self.n_rows} rows"]
        lines.append("obj " + " ".join(f"{v}:{c:.12g}" for v, c in zip(self.var_names, self.c)
                                       if c != 0))
        A = self.A_ub.tocsr()
        for r in range(self.n_rows):
            lo, hi = A.indptr[r], A.indptr[r + 1]
            terms = " ".join(f"{A.data[k]:+.12g}*{self.var_names[A.indices[k]]}"
                             for k in range(lo, hi))
            lines.append(f"r{r} {terms} <= {self.b_ub[r]:.12g}")
        lines.append("bounds 0 <= all <= 1")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class FractionalSolution:
    x: np.ndarray  # (n_facilities, n_clients)
    y: np.ndarray
    objective: float
    dist_fc: np.ndarray

    def avg_connection_cost(self, j: int) -> float:
        """Average connection cost sum_i x_ij c(i, j) paid by client ``j``."""
        if not 0 <= j < self.x.shape[1]:
            raise IndexError(f"unknown client {j}")
        return max(0.0, float(self.x[:, j] @ self.dist_fc[:, j]))

    def avg_connection_costs(self) -> np.ndarray:
        return np.maximum(0.0, (self.x * self.dist_fc).sum(axis=0))

    def invariant_errors(self, lower: int, upper: int) -> list[str]:
        out = []
        cover = self.x.sum(axis=0)
        if np.any(cover < 1 - FEAS_TOL):
            out.append(f"coverage below 1 for clients {np.flatnonzero(cover < 1 - FEAS_TOL)}")
        load = self.x.sum(axis=1)
        if np.any(load < lower * self.y - FEAS_TOL) or np.any(load > upper * self.y + FEAS_TOL):
            out.append("load outside [L y, U y]")
        if np.any(self.x > self.y[:, None] + 1e-9):
            out.append("x_ij exceeds y_i")
        return out


def avg_connection_cost(frac: FractionalSolution, j: int) -> float:
    return frac.avg_connection_cost(j)


def build_relaxation(inst: Instance) -> LPDescription:
    """Assemble the relaxation; raises InfeasibleError if no k*L <= |C| <= k*U."""
    if not inst.is_feasible():
        raise InfeasibleError(
            f"no k <= {inst.n_facilities} with k*{inst.lower} <= {inst.n_clients} "
            f"<= k*{inst.upper}")
    m, n = inst.n_facilities, inst.n_clients
    L, U = inst.lower, inst.upper
    nv = m + m * n

    def xv(i, j):
        return m + i * n + j

    rows, cols, vals = [], [], []
    b = []
    r = 0
    groups = {}
    # coverage: -sum_i x_ij <= -1
    for j in range(n):
        for i in range(m):
            rows.append(r); cols.append(xv(i, j)); vals.append(-1.0)
        b.append(-1.0); r += 1
    groups["coverage"] = (0, r)
    start = r
    # upper: sum_j x_ij - U y_i <= 0
    for i in range(m):
        for j in range(n):
            rows.append(r); cols.append(xv(i, j)); vals.append(1.0)
        rows.append(r); cols.append(i); vals.append(-float(U))
        b.append(0.0); r += 1
    # lower: L y_i - sum_j x_ij <= 0
    for i in range(m):
        for j in range(n):
            rows.append(r); cols.append(xv(i, j)); vals.append(-1.0)
        rows.append(r); cols.append(i); vals.append(float(L))
        b.append(0.0); r += 1
    groups["bounds"] = (start, r)
    start = r
    # linking: x_ij - y_i <= 0
    for i in range(m):
        for j in range(n):
            rows.append(r); cols.append(xv(i, j)); vals.append(1.0)
            rows.append(r); cols.append(i); vals.append(-1.0)
            b.append(0.0); r += 1
    groups["linking"] = (start, r)

    A = sparse.csr_matrix((vals, (rows, cols)), shape=(r, nv))
    c = np.concatenate([inst.open_cost, inst.fc.ravel()])
    names = tuple([f"y{i}" for i in range(m)]
                  + [f"x{i}_{j}" for i in range(m) for j in range(n)])
    return LPDescription(c, A, np.asarray(b), m, n, groups, names)


def solve_lp(desc: LPDescription, dist_fc: np.ndarray | None = None,
             method: str = "highs") -> FractionalSolution:
    """Optimal solution of the relaxation.

    ``dist_fc`` defaults to the connection-cost block of the objective.
    Raises InfeasibleError when the LP has no feasible point.
    """
    m, n = desc.n_facilities, desc.n_clients
    if method == "highs":
        res = linprog(desc.c, A_ub=desc.A_ub, b_ub=desc.b_ub, bounds=(0, 1),
                      method="highs")
        if res.status == 2:
            raise InfeasibleError("LP relaxation is infeasible")
        if res.status == 3:
            raise InvariantViolation("LP relaxation reported unbounded")
        if res.status != 0:
            raise RuntimeError(f"LP solver failed: {res.message}")
        z = np.clip(res.x, 0.0, 1.0)
        obj = float(res.fun)
    elif method == "simplex":
        z, obj = dense_simplex(desc.c, desc.A_ub.toarray(), desc.b_ub,
                               upper=np.ones(desc.n_vars))
        z = np.clip(z, 0.0, 1.0)
    else:
        raise ValueError(f"unknown LP method {method!r}")
    y = z[:m].copy()
    x = z[m:].reshape(m, n).copy()
    if dist_fc is None:
        dist_fc = desc.c[m:].reshape(m, n)
    return FractionalSolution(x, y, obj, np.asarray(dist_fc))


def solve_relaxation(inst: Instance, method: str = "highs") -> FractionalSolution:
    frac = solve_lp(build_relaxation(inst), inst.fc, method=method)
    bad = frac.invariant_errors(inst.lower, inst.upper)
    if bad:
        raise InvariantViolation("LP solution violates constraints: " + "; ".join(bad))
    return frac


# --- dense two-phase simplex ------------------------------------------------

def dense_simplex(c, A_ub, b_ub, upper=None, max_iter=50_000):
    """Minimise c.x s.t. A_ub x <= b_ub, 0 <= x <= upper with a tableau simplex.

    Dantzig pricing with a switch to Bland's rule after a run of degenerate
    pivots.  Returns ``(x, objective)``; raises InfeasibleError or
    InvariantViolation (unbounded).
    """
    c = np.asarray(c, float)
    A = np.asarray(A_ub, float)
    b = np.asarray(b_ub, float)
    nv = len(c)
    if upper is not None:
        ub = np.asarray(upper, float)
        keep = np.isfinite(ub)
        A = np.vstack([A, np.eye(nv)[keep]])
        b = np.concatenate([b, ub[keep]])
    mrows = A.shape[0]
    # slacks for every row; rows with negative rhs are negated and get an artificial
    neg = b < 0
    A = A.copy()
    b = b.copy()
    sl = np.eye(mrows)
    A[neg] *= -1
    b[neg] *= -1
    sl[neg] *= -1
    n_art = int(neg.sum())
    art = np.zeros((mrows, n_art))
    art[np.flatnonzero(neg), np.arange(n_art)] = 1.0
    T = np.hstack([A, sl, art, b[:, None]])
    ncol = nv + mrows + n_art
    basis = np.empty(mrows, dtype=int)
    basis[~neg] = nv + np.flatnonzero(~neg)
    basis[neg] = nv + mrows + np.arange(n_art)

    if n_art:
        cost1 = np.zeros(ncol)
        cost1[nv + mrows:] = 1.0
        _run_simplex(T, basis, cost1, ncol, max_iter)
        if cost1[basis] @ T[:, -1] > FEAS_TOL * max(1.0, np.abs(b).max()):
            raise InfeasibleError("LP is infeasible")
        # drive remaining artificials out of the basis
        for r in np.flatnonzero(basis >= nv + mrows):
            row = T[r, :nv + mrows]
            cand = np.flatnonzero(np.abs(row) > PIVOT_TOL)
            if len(cand):
                _pivot(T, basis, r, cand[0])
        T = np.delete(T, np.s_[nv + mrows:ncol], axis=1)
        ncol = nv + mrows
        keep_rows = basis < ncol
        T, basis = T[keep_rows], basis[keep_rows]

    cost2 = np.zeros(ncol)
    cost2[:nv] = c
    _run_simplex(T, basis, cost2, ncol, max_iter)
    sol = np.zeros(ncol)
    sol[basis] = T[:, -1]
    x = sol[:nv]
    return x, float(c @ x)


def _pivot(T, basis, r, col):
    T[r] /= T[r, col]
    others = np.flatnonzero(np.abs(T[:, col]) > 0)
    others = others[others != r]
    T[others] -= np.outer(T[others, col], T[r])
    basis[r] = col


def _run_simplex(T, basis, cost, ncol, max_iter):
    degenerate_run = 0
    bland = False
    for _ in range(max_iter):
        reduced = cost[:ncol] - cost[basis] @ T[:, :ncol]
        if bland:
            cand = np.flatnonzero(reduced < -PIVOT_TOL)
            if not len(cand):
                return
            col = cand[0]
        else:
            col = int(np.argmin(reduced))
            if reduced[col] >= -PIVOT_TOL:
                return
        colv = T[:, col]
        pos = colv > PIVOT_TOL
        if not pos.any():
            raise InvariantViolation("LP is unbounded")
        ratios = np.full(len(colv), np.inf)
        ratios[pos] = T[pos, -1] / colv[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + PIVOT_TOL)
        r = ties[np.argmin(basis[ties])] if bland else ties[0]
        degenerate_run = degenerate_run + 1 if best <= PIVOT_TOL else 0
        if degenerate_run > 50:
            bland = True
        _pivot(T, basis, r, col)
    raise RuntimeError("simplex iteration limit reached")
