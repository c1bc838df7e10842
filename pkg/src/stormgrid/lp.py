"""Linear programs and a dense bounded-variable two-phase primal simplex.

Problems are ``min c'x`` subject to rows ``a_i'x (<=|=|>=) b_i`` and bounds
``lb <= x <= ub`` (infinite bounds allowed). Each row gets a slack so that
``A x + s = b`` with slack bounds encoding the row sense; rows whose slack
cannot absorb the initial residual get an artificial variable, and phase 1
minimizes the artificial sum.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

SENSES = ("<=", "=", ">=")


class SimplexError(RuntimeError):
    """Numerical breakdown of the simplex (singular basis after refactorization)."""


@dataclass
class LpProblem:
    """Variable catalog, objective and constraint rows with provenance tags.

    Rows are stored as coordinate triplets; ``matrix()`` assembles them.
    ``row_tags[k]`` / ``var_tags[j]`` are dicts naming the model equation and
    indices a row or bound instantiates.
    """

    names: list[str] = field(default_factory=list)
    lb: list[float] = field(default_factory=list)
    ub: list[float] = field(default_factory=list)
    cost: list[float] = field(default_factory=list)
    var_tags: list[dict] = field(default_factory=list)
    senses: list[str] = field(default_factory=list)
    rhs: list[float] = field(default_factory=list)
    row_tags: list[dict] = field(default_factory=list)
    _rows: list[int] = field(default_factory=list, repr=False)
    _cols: list[int] = field(default_factory=list, repr=False)
    _vals: list[float] = field(default_factory=list, repr=False)

    @property
    def n_vars(self) -> int:
        return len(self.names)

    @property
    def n_rows(self) -> int:
        return len(self.senses)

    def add_var(self, name: str, lb: float = 0.0, ub: float = np.inf, cost: float = 0.0, tag: dict | None = None) -> int:
        if lb > ub:
            raise ValueError(f"variable {name}: lower bound {lb} exceeds upper bound {ub}")
        self.names.append(name)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.cost.append(float(cost))
        self.var_tags.append(tag or {})
        return len(self.names) - 1

    def add_row(self, coefs: dict[int, float], sense: str, rhs: float, tag: dict | None = None) -> int:
        if sense not in SENSES:
            raise ValueError(f"row sense must be one of {SENSES}, got {sense!r}")
        k = len(self.senses)
        for j, v in coefs.items():
            if not 0 <= j < self.n_vars:
                raise ValueError(f"row {k} references unknown variable {j}")
            if v != 0:
                self._rows.append(k)
                self._cols.append(j)
                self._vals.append(float(v))
        self.senses.append(sense)
        self.rhs.append(float(rhs))
        self.row_tags.append(tag or {})
        return k

    def matrix(self) -> sparse.csr_matrix:
        return sparse.csr_matrix((self._vals, (self._rows, self._cols)), shape=(self.n_rows, self.n_vars))

    @classmethod
    def from_arrays(cls, c, A=None, senses=None, b=None, lb=None, ub=None) -> "LpProblem":
        c = np.asarray(c, float)
        n = len(c)
        lb = np.zeros(n) if lb is None else np.broadcast_to(np.asarray(lb, float), (n,))
        ub = np.full(n, np.inf) if ub is None else np.broadcast_to(np.asarray(ub, float), (n,))
        lp = cls()
        for j in range(n):
            lp.add_var(f"x{j}", lb[j], ub[j], c[j])
        if A is not None:
            A = np.atleast_2d(np.asarray(A, float))
            for i, row in enumerate(A):
                lp.add_row({j: v for j, v in enumerate(row) if v != 0}, senses[i], b[i])
        return lp

    def row_activity(self, x) -> np.ndarray:
        return self.matrix() @ np.asarray(x, float)

    def residuals(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Row violation and bound violation (both >= 0) of a point."""
        x = np.asarray(x, float)
        ax = self.row_activity(x)
        b = np.asarray(self.rhs)
        s = np.asarray(self.senses)
        viol = np.where(s == "<=", np.maximum(ax - b, 0), np.where(s == ">=", np.maximum(b - ax, 0), np.abs(ax - b)))
        bviol = np.maximum(np.asarray(self.lb) - x, 0) + np.maximum(x - np.asarray(self.ub), 0)
        return viol, bviol

    def objective(self, x) -> float:
        return float(np.asarray(self.cost) @ np.asarray(x, float))

    def to_dict(self) -> dict[str, Any]:
        def num(v):
            return v if np.isfinite(v) else ("inf" if v > 0 else "-inf")

        A = self.matrix().tocoo()
        return {
            "variables": [
                {"name": n, "lb": num(l), "ub": num(u), "cost": c, "tag": t}
                for n, l, u, c, t in zip(self.names, self.lb, self.ub, self.cost, self.var_tags)
            ],
            "rows": [{"sense": s, "rhs": r, "tag": t} for s, r, t in zip(self.senses, self.rhs, self.row_tags)],
            "coefficients": [[int(i), int(j), float(v)] for i, j, v in zip(A.row, A.col, A.data)],
        }


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None
    objective: float | None
    iterations: int
    phase1_iterations: int = 0
    max_residual: float = 0.0


class _Tableau:
    """Dense bounded-variable simplex state for ``A x = b``, ``L <= x <= U``."""

    refactor_every = 50
    degenerate_limit = 1000

    def __init__(self, A, b, L, U, basis, x, tol):
        self.A = A
        self.b = b
        self.L = L
        self.U = U
        self.basis = basis
        self.x = x  # values of all columns; basic entries kept in sync
        self.tol = tol
        self.iterations = 0
        self.refactor()

    def refactor(self):
        B = self.A[:, self.basis]
        try:
            self.T = np.linalg.solve(B, self.A)
        except np.linalg.LinAlgError as exc:
            raise SimplexError("singular basis at refactorization") from exc
        if not np.all(np.isfinite(self.T)):
            raise SimplexError("non-finite tableau at refactorization")
        nonbasic = np.ones(len(self.x), bool)
        nonbasic[self.basis] = False
        r = self.b - self.A[:, nonbasic] @ self.x[nonbasic]
        self.x[self.basis] = np.linalg.solve(B, r)
        self.since_refactor = 0

    def run(self, cost, max_iter):
        """Minimize ``cost'x`` from the current basic feasible point."""
        tol = self.tol
        n = len(self.x)
        fixed = self.L == self.U
        in_basis = np.zeros(n, bool)
        in_basis[self.basis] = True
        d = cost - cost[self.basis] @ self.T
        bland = False
        degenerate_run = 0
        ctol = tol * max(1.0, float(np.max(np.abs(cost))))
        while True:
            if self.iterations >= max_iter:
                raise SimplexError(f"iteration limit {max_iter} reached")
            at_lower = self.x <= self.L + tol
            at_upper = self.x >= self.U - tol
            can_inc = ~in_basis & ~fixed & ~at_upper & (d < -ctol)
            can_dec = ~in_basis & ~fixed & ~at_lower & (d > ctol)
            cand = can_inc | can_dec
            if not cand.any():
                return OPTIMAL
            if bland:
                q = int(np.flatnonzero(cand)[0])
            else:
                q = int(np.argmax(np.where(cand, np.abs(d), -1.0)))
            direction = 1.0 if can_inc[q] else -1.0
            col = self.T[:, q] * direction  # basic values move by -theta * col
            xb = self.x[self.basis]
            lb = self.L[self.basis]
            ub = self.U[self.basis]
            ratios = np.full(len(col), np.inf)
            dec = col > tol
            inc = col < -tol
            with np.errstate(invalid="ignore"):
                ratios[dec] = (xb[dec] - lb[dec]) / col[dec]
                ratios[inc] = (ub[inc] - xb[inc]) / -col[inc]
            ratios = np.maximum(ratios, 0.0)
            flip = self.U[q] - self.L[q]
            theta_row = float(ratios.min()) if len(ratios) else np.inf
            if not np.isfinite(theta_row) and not np.isfinite(flip):
                return UNBOUNDED
            self.iterations += 1
            if flip <= theta_row:
                theta = flip
                self.x[q] = self.U[q] if direction > 0 else self.L[q]
                self.x[self.basis] = xb - theta * col
                degenerate_run = 0
                continue
            ties = np.flatnonzero(ratios <= theta_row + tol)
            if bland:
                p = int(ties[np.argmin(np.asarray(self.basis)[ties])])
            else:
                p = int(ties[np.argmax(np.abs(col[ties]))])
            theta = ratios[p]
            if abs(self.T[p, q]) < 1e-11:
                self.refactor()
                if abs(self.T[p, q]) < 1e-11:
                    raise SimplexError("pivot element vanished after refactorization")
                d = cost - cost[self.basis] @ self.T
                continue
            if theta <= tol:
                degenerate_run += 1
                if degenerate_run >= self.degenerate_limit and not bland:
                    log.debug("switching to Bland's rule after %d degenerate pivots", degenerate_run)
                    bland = True
            else:
                degenerate_run = 0
            leaving = self.basis[p]
            self.x[self.basis] = xb - theta * col
            self.x[q] += direction * theta
            self.x[leaving] = self.L[leaving] if col[p] > 0 else self.U[leaving]
            self._pivot(p, q)
            in_basis[leaving] = False
            in_basis[q] = True
            self.since_refactor += 1
            if self.since_refactor >= self.refactor_every:
                self.refactor()
                d = cost - cost[self.basis] @ self.T
            else:
                d = d - d[q] * self.T[p]

    def _pivot(self, p, q):
        T = self.T
        T[p] /= T[p, q]
        colq = T[:, q].copy()
        colq[p] = 0.0
        T -= np.outer(colq, T[p])
        self.basis[p] = q


def _initial_point(L, U):
    x = np.where(np.isfinite(L), L, np.where(np.isfinite(U), U, 0.0))
    return x.astype(float)


def simplex_solve(lp: LpProblem, tol: float = 1e-9, max_iter: int = 200_000) -> LpSolution:
    """Two-phase primal simplex with bounded variables.

    Dantzig pricing, switching to Bland's rule after 1000 consecutive
    degenerate pivots. The returned optimum is checked for primal
    feasibility (1e-7 absolute) and dual feasibility of the reduced costs.
    """
    n, m = lp.n_vars, lp.n_rows
    c = np.asarray(lp.cost, float)
    L0 = np.asarray(lp.lb, float)
    U0 = np.asarray(lp.ub, float)
    if np.any(L0 > U0):
        return LpSolution(INFEASIBLE, None, None, 0)
    if m == 0:
        return _solve_box(c, L0, U0)
    A0 = lp.matrix().toarray()
    b = np.asarray(lp.rhs, float)
    senses = np.asarray(lp.senses)
    sL = np.where(senses == ">=", -np.inf, 0.0)
    sU = np.where(senses == "<=", np.inf, 0.0)

    x_struct = _initial_point(L0, U0)
    resid = b - A0 @ x_struct
    slack_val = np.clip(resid, sL, sU)
    need_art = np.abs(resid - slack_val) > tol
    art_rows = np.flatnonzero(need_art)
    k = len(art_rows)
    art_sign = np.sign(resid[art_rows] - slack_val[art_rows])
    Aart = np.zeros((m, k))
    Aart[art_rows, np.arange(k)] = art_sign
    A = np.hstack([A0, np.eye(m), Aart])
    L = np.concatenate([L0, sL, np.zeros(k)])
    U = np.concatenate([U0, sU, np.full(k, np.inf)])
    x = np.concatenate([x_struct, slack_val, np.abs(resid[art_rows] - slack_val[art_rows])])
    basis = [n + i for i in range(m)]
    for a, i in enumerate(art_rows):
        basis[i] = n + m + a

    tab = _Tableau(A, b, L, U, basis, x, tol)
    phase1 = 0
    if k:
        cost1 = np.concatenate([np.zeros(n + m), np.ones(k)])
        tab.run(cost1, max_iter)
        phase1 = tab.iterations
        infeas = float(tab.x[n + m :].sum())
        if infeas > 1e-7 * max(1.0, float(np.abs(b).max())):
            return LpSolution(INFEASIBLE, None, None, tab.iterations, phase1)
        # artificials are pinned at zero for phase 2; any still basic stay degenerate
        tab.U[n + m :] = 0.0
        tab.x[n + m :] = np.minimum(tab.x[n + m :], 0.0)
        tab.refactor()
    cost2 = np.concatenate([c, np.zeros(m + k)])
    status = tab.run(cost2, max_iter)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, None, None, tab.iterations, phase1)
    tab.refactor()
    xs = tab.x[:n].copy()
    xs = np.clip(xs, L0, U0)
    viol, bviol = lp.residuals(xs)
    maxres = float(max(viol.max(initial=0.0), bviol.max(initial=0.0)))
    if maxres > 1e-7:
        raise SimplexError(f"optimal basis violates constraints by {maxres:.3g}")
    _check_reduced_costs(tab, cost2, tol)
    return LpSolution(OPTIMAL, xs, float(c @ xs), tab.iterations, phase1, maxres)


def _check_reduced_costs(tab: _Tableau, cost, tol):
    B = tab.A[:, tab.basis]
    y = np.linalg.solve(B.T, cost[tab.basis])
    d = cost - tab.A.T @ y
    scale = max(1.0, float(np.max(np.abs(cost))))
    nonbasic = np.ones(len(d), bool)
    nonbasic[tab.basis] = False
    free_to_inc = nonbasic & (tab.x < tab.U - 1e-7) & (tab.L != tab.U)
    free_to_dec = nonbasic & (tab.x > tab.L + 1e-7) & (tab.L != tab.U)
    worst = max(
        float(np.max(-d[free_to_inc], initial=0.0)),
        float(np.max(d[free_to_dec], initial=0.0)),
    )
    if worst > 1e-9 * scale:
        raise SimplexError(f"reduced-cost certificate failed ({worst:.3g})")


def _solve_box(c, L, U) -> LpSolution:
    x = np.where(c > 0, L, np.where(c < 0, U, _initial_point(L, U)))
    if not np.all(np.isfinite(x)):
        return LpSolution(UNBOUNDED, None, None, 0)
    return LpSolution(OPTIMAL, x, float(c @ x), 0)


def split_blocks(lp: LpProblem) -> list[tuple[np.ndarray, np.ndarray]]:
    """Independent sub-problems: (variable indices, row indices) per connected block.

    Variables that appear in no row form singleton blocks.
    """
    n, m = lp.n_vars, lp.n_rows
    M = lp.matrix().tocoo()
    # bipartite graph: variables 0..n-1, rows n..n+m-1
    g = sparse.coo_matrix((np.ones(M.nnz), (M.col, n + M.row)), shape=(n + m, n + m))
    ncomp, labels = connected_components(g, directed=False)
    out = []
    for comp in range(ncomp):
        members = np.flatnonzero(labels == comp)
        vars_ = members[members < n]
        rows = members[members >= n] - n
        out.append((vars_, rows))
    return out


def subproblem(lp: LpProblem, vars_: np.ndarray, rows: np.ndarray, M: sparse.csr_matrix | None = None) -> LpProblem:
    pos = {int(j): k for k, j in enumerate(vars_)}
    sub = LpProblem()
    for j in vars_:
        sub.add_var(lp.names[j], lp.lb[j], lp.ub[j], lp.cost[j], lp.var_tags[j])
    if M is None:
        M = lp.matrix()
    for i in rows:
        r = M.getrow(int(i))
        sub.add_row({pos[int(j)]: v for j, v in zip(r.indices, r.data)}, lp.senses[i], lp.rhs[i], lp.row_tags[i])
    return sub


def _fingerprint(sub: LpProblem) -> str:
    h = hashlib.sha256()
    for arr in (sub.lb, sub.ub, sub.cost, sub.rhs, sub._rows, sub._cols, sub._vals):
        h.update(np.asarray(arr, float).tobytes())
    h.update("".join(sub.senses).encode())
    return h.hexdigest()


def _empty_row_ok(sense: str, rhs: float, tol: float = 1e-9) -> bool:
    if sense == "<=":
        return rhs >= -tol
    if sense == ">=":
        return rhs <= tol
    return abs(rhs) <= tol


def solve_decomposed(lp: LpProblem, **kw) -> LpSolution:
    """Solve ``lp`` block by block; numerically identical blocks are solved once.

    Exact for any LP: blocks share no rows, so the joint optimum is the
    concatenation of block optima.
    """
    x = np.zeros(lp.n_vars)
    iters = 0
    cache: dict[str, LpSolution] = {}
    worst = 0.0
    M = lp.matrix()
    for vars_, rows in split_blocks(lp):
        if len(vars_) == 0:
            # a row with no variables: 0 (sense) rhs
            for i in rows:
                if not _empty_row_ok(lp.senses[i], lp.rhs[i]):
                    return LpSolution(INFEASIBLE, None, None, iters)
            continue
        sub = subproblem(lp, vars_, rows, M)
        key = _fingerprint(sub)
        sol = cache.get(key)
        if sol is None:
            sol = simplex_solve(sub, **kw)
            cache[key] = sol
            iters += sol.iterations
        if sol.status != OPTIMAL:
            return LpSolution(sol.status, None, None, iters)
        x[vars_] = sol.x
        worst = max(worst, sol.max_residual)
    return LpSolution(OPTIMAL, x, lp.objective(x), iters, 0, worst)
