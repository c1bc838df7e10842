"""Train the outage classifier on the synthetic corpus and look at what it learned.

Generates the seed-42 corpus, sweeps the default kernels and penalties, prints
the accuracy grid and confusion matrix, and draws the decision boundary over
the labelled points if matplotlib is installed.

    python demos/outage_classifier.py [--plot boundary.png]
"""

import argparse

import numpy as np

from stormgrid.svm import confusion, export_boundary, grid_search
from stormgrid.synthdata import CATEGORY5_CAP_MPH, MAX_DISTANCE_KM, OUTAGE, generate_dataset, split

ap = argparse.ArgumentParser()
ap.add_argument("--seed", type=int, default=42)
ap.add_argument("--plot", help="write a boundary figure to this path")
args = ap.parse_args()

data = generate_dataset(300, 300, seed=args.seed)
train_set, val_set = split(data, 0.8, seed=args.seed)
print(f"{data.m} samples, {train_set.m} for training, {val_set.m} held out")

model, diag, table = grid_search(train_set, val_set)
print("\nvalidation accuracy (%)")
print(table.to_csv())
print(f"kept {model.kernel.label} c={model.c:g}: {len(model.alpha)} support vectors, "
      f"margin {diag.margin:.4f}, mean slack {diag.mean_slack:.4f}")

print("\nconfusion on the held-out split")
print(confusion(model, val_set).to_csv())

# How far does the outage zone reach at each wind speed?
x1, x2, F = export_boundary(model, (74, CATEGORY5_CAP_MPH), (0, MAX_DISTANCE_KM), (7, 601))
for k, w in enumerate(x1):
    inside = x2[F[k] >= 0]
    reach = inside.max() if inside.size else 0.0
    print(f"{w:6.0f} mph: components within {reach:5.1f} km of the eye path are predicted out")

if args.plot:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    x1, x2, F = export_boundary(model, (0, CATEGORY5_CAP_MPH), (0, MAX_DISTANCE_KM), 201)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.contourf(x1, x2, F.T, levels=[-1e9, 0, 1e9], colors=["#dde8f3", "#f6d5cf"])
    ax.contour(x1, x2, F.T, levels=[0], colors="k", linewidths=1)
    out = data.y == OUTAGE
    ax.scatter(*data.X[~out].T, s=6, c="tab:blue", label="operational")
    ax.scatter(*data.X[out].T, s=6, c="tab:red", label="outage")
    ax.set_xlabel("wind speed at closest approach (mph)")
    ax.set_ylabel("distance to eye path (km)")
    ax.legend(loc="upper left")
    fig.tight_layout()
    fig.savefig(args.plot, dpi=120)
    print(f"\nwrote {args.plot}")
