"""The bounded simplex solver on its own, on a tiny dispatch problem.

Two generators (cheap but far, dear but close) serve one load through a
rated line. Each row carries a tag so the binding constraint can be read
off the solution.
"""

import numpy as np

from stormgrid.lp import LpProblem, simplex_solve

lp = LpProblem()
cheap = lp.add_var("P_cheap", 0, 120, 20.0, tag={"eq": "gen"})
dear = lp.add_var("P_dear", 0, 80, 55.0, tag={"eq": "gen"})
shed = lp.add_var("shed", 0, 150, 1000.0, tag={"eq": "curtail"})
lp.add_row({cheap: 1, dear: 1, shed: 1}, "=", 150, tag={"eq": "balance"})
lp.add_row({cheap: 1}, "<=", 90, tag={"eq": "line rating"})

sol = simplex_solve(lp)
print(sol.status, f"cost {sol.objective:.1f}")
for name, v in zip(lp.names, sol.x):
    print(f"  {name:8s} {v:7.2f}")
act = lp.row_activity(sol.x)
for tag, a, rhs in zip(lp.row_tags, act, lp.rhs):
    print(f"  {tag['eq']:12s} activity {a:7.2f} / {rhs:g}{'  (binding)' if np.isclose(a, rhs) else ''}")
