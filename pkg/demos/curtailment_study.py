"""Which buses lose load when a hurricane takes out parts of the 30-bus grid?

Builds the bundled case, trains a classifier, predicts outages under each
bundled track and solves one joint curtailment problem. Then repeats the
solve with doubled VOLL at the partially curtailed buses, to show the
optimizer moving the shortfall elsewhere when the network lets it. Fully
curtailed buses are islanded, so their VOLL changes nothing.
"""

from dataclasses import replace
from importlib.resources import files

import numpy as np

from stormgrid.curtailment import min_load_curtailment, verify_solution
from stormgrid.grid import OutageScenario, load_grid
from stormgrid.hazard import HurricaneTrack, component_features
from stormgrid.svm import grid_search
from stormgrid.synthdata import generate_dataset, split

data_dir = files("stormgrid") / "data"
grid = load_grid(data_dir / "case30.m", data_dir / "case30_ext.json")
print(f"{len(grid.buses)} buses, {len(grid.lines)} lines, {len(grid.generators)} generators, "
      f"{grid.total_load():.1f} MW load over {grid.horizon} h")

train_set, val_set = split(generate_dataset(300, 300, seed=42), 0.8, seed=42)
model, _, _ = grid_search(train_set, val_set)

scenarios = [OutageScenario.base(grid)]
for s, name in enumerate(("path1", "path2", "path3"), start=1):
    track = HurricaneTrack.load(data_dir / "tracks" / f"{name}.json")
    feats = component_features(grid, track)
    hit = model.decision_function(np.array([[f.x1, f.x2] for f in feats])) >= 0
    gens = [f.component_id for f, h in zip(feats, hit) if h and f.kind == "generator"]
    lines = [f.component_id for f, h in zip(feats, hit) if h and f.kind == "line"]
    print(f"{name}: generators out {gens}, lines out {lines}")
    scenarios.append(OutageScenario.constant(grid, s, gens_out=gens, lines_out=lines))

sol = min_load_curtailment(grid, scenarios)
report = verify_solution(grid, scenarios, sol)
print(f"\nobjective {sol.objective:,.0f} $  (balance residual {report.max_residual['balance']:.1e})")
print(sol.report_csv())

worst = sol.critical_buses()[:3]
print("hardest-hit buses:", ", ".join(f"{r['bus']} ({100 * r['share']:.0f}% in s{r['scenario']})" for r in worst))

protected = {r["bus"] for r in sol.critical_buses() if r["share"] < 1 - 1e-9}
print("doubling VOLL at", sorted(protected))
grid2 = replace(grid, buses=tuple(replace(b, voll=2 * b.voll) if b.id in protected else b for b in grid.buses))
sol2 = min_load_curtailment(grid2, scenarios)
for s in range(1, len(scenarios)):
    before, after = sol.bus_curtailment(s), sol2.bus_curtailment(s)
    moved = {b: round(after[b] - before[b], 1) for b in before if abs(after[b] - before[b]) > 1e-6}
    print(f"s{s}: total {sum(before.values()):.1f} -> {sum(after.values()):.1f} MWh, changes {moved or 'none'}")
