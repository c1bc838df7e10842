"""Regenerate the planar layout shipped in ``stormgrid/data/case30_ext.json``.

Run once; the result is committed so that feature extraction never depends
on the installed networkx version.

    python3 tools/make_case30_layout.py
"""

import json
from pathlib import Path

import networkx as nx
import numpy as np

from stormgrid.grid import load_case

DATA = Path(__file__).resolve().parents[1] / "src" / "stormgrid" / "data"
SIDE_KM = 100.0
MARGIN_KM = 5.0

grid = load_case(DATA / "case30.m")
g = nx.Graph()
g.add_nodes_from(grid.bus_ids)
g.add_edges_from((ln.from_bus, ln.to_bus) for ln in grid.lines)
pos = nx.spring_layout(g, seed=30, iterations=500)

xy = np.array([pos[b] for b in grid.bus_ids])
lo, hi = xy.min(0), xy.max(0)
xy = MARGIN_KM + (xy - lo) / (hi - lo) * (SIDE_KM - 2 * MARGIN_KM)

path = DATA / "case30_ext.json"
ext = json.loads(path.read_text()) if path.exists() else {}
ext["layout"] = {str(b): [round(float(x), 3), round(float(y), 3)] for b, (x, y) in zip(grid.bus_ids, xy)}
path.write_text(json.dumps(ext, indent=1) + "\n")
print(f"wrote {len(grid.bus_ids)} bus locations to {path}")
