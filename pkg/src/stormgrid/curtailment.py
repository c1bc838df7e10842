"""Minimum value-weighted load curtailment under generator and line outages.

The joint linear program covers every period ``t`` and scenario ``s``
(scenario 0 is the all-operational base case)::

    min  sum_t sum_s w_s sum_b VOLL_b * LC_bts

    sum_{i at b} P_its - sum_l a_lb PL_lts + LC_bts = D_bt           (balance)
    Pmin_i I_it UX_its <= P_its <= Pmax_i I_it UX_its                (bounds)
    |P_it0 - P_its| <= delta_i                       for s != 0     (deviation)
    -PLmax_l UY_lts <= PL_lts <= PLmax_l UY_lts                      (bounds)
    |PL_lts - base_mva * sum_b a_lb theta_bts / x_l| <= M_l (1 - UY_lts)
    -pi <= theta_bts <= pi,  theta_ref,t,s = 0,  0 <= LC_bts <= D_bt

with ``M_l = base_mva * 2 pi / x_l + PLmax_l``, the smallest constant that
never binds when the line is out. Reactances are per unit on ``base_mva`` and
flows are MW, hence the ``base_mva`` factor.

Each row and bound carries a tag: ``eq`` names the constraint family
(``objective``, ``balance``, ``gen_limits``, ``deviation``, ``line_limits``,
``flow``, ``angle``, ``curtail_limits``) and the remaining keys give the
``b``/``i``/``l``/``t``/``s`` indices it instantiates.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .grid import CaseValidationError, GridCase, OutageScenario, incidence
from .lp import OPTIMAL, LpProblem, LpSolution, solve_decomposed

BALANCE_TOL = 1e-7
FLOW_TOL = 1e-6


class CurtailmentError(RuntimeError):
    """The solver failed on a problem that is feasible by construction."""

    def __init__(self, message: str, lp: LpProblem | None = None):
        super().__init__(message)
        self.lp = lp


def big_m(grid: GridCase, line) -> float:
    return grid.base_mva * 2.0 * math.pi / line.reactance + line.pl_max


@dataclass
class VarIndex:
    """Column of every model variable in the assembled LP (``-1`` where absent)."""

    P: np.ndarray      # [s, t, gen]
    PL: np.ndarray     # [s, t, line]
    theta: np.ndarray  # [s, t, bus]
    LC: np.ndarray     # [s, t, bus]


def _check_scenarios(grid: GridCase, scenarios: Sequence[OutageScenario]) -> list[OutageScenario]:
    ids = [sc.s for sc in scenarios]
    if 0 not in ids:
        raise CaseValidationError("scenario 0 (all-operational base case) is missing")
    if len(set(ids)) != len(ids):
        raise CaseValidationError("duplicate scenario ids")
    for sc in scenarios:
        sc.check_complete(grid)
    return sorted(scenarios, key=lambda sc: sc.s)


def build_lp(
    grid: GridCase,
    scenarios: Sequence[OutageScenario],
    weights: Mapping[int, float] | None = None,
) -> tuple[LpProblem, VarIndex]:
    scenarios = _check_scenarios(grid, scenarios)
    ref = grid.reference_bus()
    weights = dict(weights or {})
    T = grid.horizon
    S = len(scenarios)
    buses, gens, lines = grid.buses, grid.generators, grid.lines
    a = incidence(grid)
    col = {b.id: k for k, b in enumerate(buses)}

    lp = LpProblem()
    idx = VarIndex(
        P=np.full((S, T, len(gens)), -1),
        PL=np.full((S, T, len(lines)), -1),
        theta=np.full((S, T, len(buses)), -1),
        LC=np.full((S, T, len(buses)), -1),
    )
    for si, sc in enumerate(scenarios):
        s = sc.s
        w = float(weights.get(s, 1.0))
        if not w >= 0:
            raise CaseValidationError(f"scenario {s}: weight must be >= 0")
        for t in range(T):
            for gi, g in enumerate(gens):
                on = grid.committed(g, t) * sc.gen_state[g.id][t]
                idx.P[si, t, gi] = lp.add_var(
                    f"P[{g.id},{t},{s}]", g.p_min * on, g.p_max * on,
                    tag={"eq": "gen_limits", "i": g.id, "t": t, "s": s},
                )
            for li, ln in enumerate(lines):
                cap = ln.pl_max * sc.line_state[ln.id][t]
                idx.PL[si, t, li] = lp.add_var(
                    f"PL[{ln.id},{t},{s}]", -cap, cap,
                    tag={"eq": "line_limits", "l": ln.id, "t": t, "s": s},
                )
            for bi, b in enumerate(buses):
                lim = 0.0 if b.id == ref else math.pi
                idx.theta[si, t, bi] = lp.add_var(
                    f"theta[{b.id},{t},{s}]", -lim, lim,
                    tag={"eq": "angle", "b": b.id, "t": t, "s": s},
                )
            for bi, b in enumerate(buses):
                d = grid.demand(b.id, t)
                if d > 0:
                    idx.LC[si, t, bi] = lp.add_var(
                        f"LC[{b.id},{t},{s}]", 0.0, d, cost=w * b.voll,
                        tag={"eq": "curtail_limits", "b": b.id, "t": t, "s": s},
                    )

            # balance per bus
            for bi, b in enumerate(buses):
                coefs: dict[int, float] = {}
                for gi, g in enumerate(gens):
                    if g.bus == b.id:
                        coefs[int(idx.P[si, t, gi])] = 1.0
                for li in np.flatnonzero(a[:, bi]):
                    coefs[int(idx.PL[si, t, li])] = -a[li, bi]
                if idx.LC[si, t, bi] >= 0:
                    coefs[int(idx.LC[si, t, bi])] = 1.0
                lp.add_row(coefs, "=", grid.demand(b.id, t), tag={"eq": "balance", "b": b.id, "t": t, "s": s})

            # DC flow coupling, relaxed by M when the line is out
            for li, ln in enumerate(lines):
                k = grid.base_mva / ln.reactance
                th_f = int(idx.theta[si, t, col[ln.from_bus]])
                th_t = int(idx.theta[si, t, col[ln.to_bus]])
                pl = int(idx.PL[si, t, li])
                slack = big_m(grid, ln) * (1 - sc.line_state[ln.id][t])
                tag = {"eq": "flow", "l": ln.id, "t": t, "s": s}
                lp.add_row({pl: 1.0, th_f: -k, th_t: k}, "<=", slack, tag={**tag, "side": "+"})
                lp.add_row({pl: -1.0, th_f: k, th_t: -k}, "<=", slack, tag={**tag, "side": "-"})

            # deviation from base dispatch
            if s != 0:
                for gi, g in enumerate(gens):
                    p0, ps = int(idx.P[0, t, gi]), int(idx.P[si, t, gi])
                    tag = {"eq": "deviation", "i": g.id, "t": t, "s": s}
                    lp.add_row({p0: 1.0, ps: -1.0}, "<=", g.delta, tag={**tag, "side": "+"})
                    lp.add_row({p0: -1.0, ps: 1.0}, "<=", g.delta, tag={**tag, "side": "-"})
    return lp, idx


@dataclass
class CurtailmentSolution:
    bus_ids: list[int]
    gen_ids: list[int]
    line_ids: list[int]
    scenario_ids: list[int]
    horizon: int
    LC: np.ndarray     # [s, t, bus], MW over one period = MWh
    P: np.ndarray      # [s, t, gen]
    PL: np.ndarray     # [s, t, line]
    theta: np.ndarray  # [s, t, bus]
    objective: float
    iterations: int = 0
    demand: np.ndarray = field(default=None, repr=False)  # [t, bus]

    def scenario_index(self, s: int) -> int:
        return self.scenario_ids.index(s)

    def bus_curtailment(self, s: int) -> dict[int, float]:
        """Curtailed energy per bus summed over the horizon (MWh)."""
        tot = self.LC[self.scenario_index(s)].sum(axis=0)
        return {b: float(v) for b, v in zip(self.bus_ids, tot)}

    def total_load(self) -> dict[int, float]:
        return {b: float(v) for b, v in zip(self.bus_ids, self.demand.sum(axis=0))}

    def report_csv(self) -> str:
        """Per-bus table: total load over the horizon and curtailment per outage scenario.

        Only buses with nonzero load are listed. With no outage scenarios the
        base case column is emitted instead.
        """
        cols = [s for s in self.scenario_ids if s != 0] or [0]
        load = self.total_load()
        per = {s: self.bus_curtailment(s) for s in cols}
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bus", "total_load_mwh"] + [f"lc_s{s}_mwh" for s in cols])
        for b in self.bus_ids:
            if load[b] > 0:
                w.writerow([b, _fmt(load[b])] + [_fmt(per[s][b]) for s in cols])
        return buf.getvalue()

    def critical_buses(self) -> list[dict]:
        """Buses with curtailment, ranked by their worst curtailed share of load."""
        load = self.total_load()
        ranked = []
        for b in self.bus_ids:
            if load[b] <= 0:
                continue
            share, worst = 0.0, None
            for s in self.scenario_ids:
                v = self.bus_curtailment(s)[b] / load[b]
                if v > share + 1e-12:
                    share, worst = v, s
            if worst is not None:
                ranked.append({"bus": b, "share": share, "scenario": worst})
        ranked.sort(key=lambda r: (-round(r["share"], 9), r["bus"]))
        return ranked

    def to_dict(self) -> dict:
        out = {
            "objective": self.objective,
            "iterations": self.iterations,
            "horizon": self.horizon,
            "bus_ids": self.bus_ids,
            "gen_ids": self.gen_ids,
            "line_ids": self.line_ids,
            "scenarios": {},
        }
        for k, s in enumerate(self.scenario_ids):
            out["scenarios"][str(s)] = {
                "LC": self.LC[k].tolist(),
                "P": self.P[k].tolist(),
                "PL": self.PL[k].tolist(),
                "theta": self.theta[k].tolist(),
            }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _fmt(v: float) -> str:
    # clear solver noise so reports are byte-stable
    v = 0.0 if abs(v) < 5e-10 else v
    return f"{v:.6f}"


def solve_lp(lp: LpProblem) -> LpSolution:
    return solve_decomposed(lp)


def min_load_curtailment(
    grid: GridCase,
    scenarios: Sequence[OutageScenario],
    weights: Mapping[int, float] | None = None,
) -> CurtailmentSolution:
    scenarios = _check_scenarios(grid, scenarios)
    lp, idx = build_lp(grid, scenarios, weights)
    sol = solve_lp(lp)
    if sol.status != OPTIMAL:
        # LC = D with every other variable at zero is always feasible and the
        # objective is bounded below by zero, so this is a solver fault
        raise CurtailmentError(f"solver reported {sol.status} for a feasible, bounded problem", lp)
    x = sol.x

    def take(ix):
        return np.where(ix >= 0, x[np.maximum(ix, 0)], 0.0)

    demand = np.array([[grid.demand(b.id, t) for b in grid.buses] for t in range(grid.horizon)])
    return CurtailmentSolution(
        bus_ids=grid.bus_ids,
        gen_ids=[g.id for g in grid.generators],
        line_ids=[ln.id for ln in grid.lines],
        scenario_ids=[sc.s for sc in scenarios],
        horizon=grid.horizon,
        LC=take(idx.LC),
        P=take(idx.P),
        PL=take(idx.PL),
        theta=take(idx.theta),
        objective=float(sol.objective),
        iterations=sol.iterations,
        demand=demand,
    )


@dataclass
class VerificationReport:
    max_residual: dict[str, float]
    flags: list[dict]

    @property
    def ok(self) -> bool:
        return not self.flags

    def to_dict(self) -> dict:
        return {"ok": self.ok, "max_residual": self.max_residual, "flags": self.flags}


def verify_solution(
    grid: GridCase,
    scenarios: Sequence[OutageScenario],
    sol: CurtailmentSolution,
    balance_tol: float = BALANCE_TOL,
    flow_tol: float = FLOW_TOL,
) -> VerificationReport:
    """Recompute every constraint residual straight from the grid data."""
    scen = {sc.s: sc for sc in scenarios}
    ref = grid.reference_bus()
    bcol = {b: k for k, b in enumerate(sol.bus_ids)}
    fams = ["balance", "gen_limits", "deviation", "line_limits", "flow", "angle", "curtail_limits"]
    worst = {f: 0.0 for f in fams}
    flags: list[dict] = []
    bound_tol = balance_tol

    def note(fam, val, tol, **where):
        worst[fam] = max(worst[fam], float(val))
        if val > tol:
            flags.append({"eq": fam, "residual": float(val), **where})

    for k, s in enumerate(sol.scenario_ids):
        sc = scen[s]
        for t in range(grid.horizon):
            inj = {b.id: 0.0 for b in grid.buses}
            for gi, g in enumerate(grid.generators):
                p = sol.P[k, t, gi]
                inj[g.bus] += p
                on = grid.committed(g, t) * sc.gen_state[g.id][t]
                viol = max(g.p_min * on - p, p - g.p_max * on, 0.0)
                note("gen_limits", viol, bound_tol, i=g.id, t=t, s=s)
                if s != 0:
                    p0 = sol.P[sol.scenario_index(0), t, gi]
                    note("deviation", max(abs(p0 - p) - g.delta, 0.0), bound_tol, i=g.id, t=t, s=s)
            for li, ln in enumerate(grid.lines):
                pl = sol.PL[k, t, li]
                inj[ln.from_bus] -= pl
                inj[ln.to_bus] += pl
                up = sc.line_state[ln.id][t]
                note("line_limits", max(abs(pl) - ln.pl_max * up, 0.0), bound_tol, l=ln.id, t=t, s=s)
                if up:
                    dth = sol.theta[k, t, bcol[ln.from_bus]] - sol.theta[k, t, bcol[ln.to_bus]]
                    note("flow", abs(pl - grid.base_mva * dth / ln.reactance), flow_tol, l=ln.id, t=t, s=s)
            for b in grid.buses:
                bi = bcol[b.id]
                d = grid.demand(b.id, t)
                lc = sol.LC[k, t, bi]
                note("balance", abs(inj[b.id] + lc - d), balance_tol, b=b.id, t=t, s=s)
                note("curtail_limits", max(-lc, lc - d, 0.0), bound_tol, b=b.id, t=t, s=s)
                th = sol.theta[k, t, bi]
                lim = 0.0 if b.id == ref else math.pi
                note("angle", max(abs(th) - lim, 0.0), bound_tol, b=b.id, t=t, s=s)
    return VerificationReport(worst, flags)
