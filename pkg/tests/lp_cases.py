"""Random LP generator shared by the unit and acceptance suites."""

import numpy as np

from stormgrid.lp import LpProblem


def random_lp(rng: np.random.Generator, feasible_by_construction: bool):
    n = int(rng.integers(1, 7))
    m = int(rng.integers(0, 9))
    A = np.round(rng.normal(size=(m, n)), 2)
    senses = list(rng.choice(["<=", "=", ">="], size=m, p=[0.45, 0.15, 0.4]))
    lb = np.where(rng.random(n) < 0.8, np.round(rng.uniform(-3, 1, n), 1), -np.inf)
    base = np.where(np.isfinite(lb), lb, np.round(rng.uniform(-1, 3, n), 1))
    ub = np.where(rng.random(n) < 0.6, np.round(base + rng.uniform(0.5, 5, n), 1), np.inf)
    lb = np.where(np.isinf(lb) & np.isinf(ub), 0.0, lb)  # at least one finite bound
    if feasible_by_construction:
        lo = np.where(np.isfinite(lb), lb, ub - 3)
        hi = np.where(np.isfinite(ub), ub, lb + 3)
        x0 = rng.uniform(lo, hi)
        act = A @ x0
        slack = rng.uniform(0, 2, m)
        b = np.array([a + s if sn == "<=" else a - s if sn == ">=" else a for a, s, sn in zip(act, slack, senses)])
    else:
        b = np.round(rng.normal(size=m) * 3, 2)
    c = np.round(rng.normal(size=n), 2)
    return LpProblem.from_arrays(c, A, senses, b, lb, ub), (c, A, senses, b, lb, ub)
