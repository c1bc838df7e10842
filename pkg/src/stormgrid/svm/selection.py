"""Kernel/penalty sweep, confusion matrix and decision-boundary export."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..synthdata import OUTAGE, Dataset
from .kernels import KernelSpec
from .smo import SvmModel, TrainingDiagnostics, predict, train

log = logging.getLogger(__name__)

DEFAULT_CS = (0.01, 0.1, 1.0, 10.0)
# Sweep polynomials carry a +1 offset: on standardized features the pure
# (u.v)**2 kernel is even about the feature mean and cannot place classes on
# opposite sides of it (validation accuracy collapses to ~50%).
DEFAULT_KERNELS = (
    KernelSpec("linear"),
    KernelSpec("polynomial", degree=2, offset=1.0),
    KernelSpec("gaussian", gamma=0.5),
)
# wider sweep: adds the cubic polynomial
WIDE_KERNELS = (
    KernelSpec("linear"),
    KernelSpec("polynomial", degree=2, offset=1.0),
    KernelSpec("polynomial", degree=3, offset=1.0),
    KernelSpec("gaussian", gamma=0.5),
)


def accuracy(model: SvmModel, data: Dataset) -> float:
    return float(np.mean(predict(model, data.X) == data.y))


@dataclass
class AccuracyTable:
    """Validation accuracy (fraction) per (kernel label, c); ``None`` marks a failed cell."""

    kernels: list[str]
    cs: list[float]
    cells: dict[tuple[str, float], float | None] = field(default_factory=dict)
    errors: dict[tuple[str, float], str] = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kernel"] + [f"c={c:g}" for c in self.cs])
        for k in self.kernels:
            row = [k]
            for c in self.cs:
                acc = self.cells.get((k, c))
                row.append("failed" if acc is None else f"{100 * acc:.1f}")
            w.writerow(row)
        return buf.getvalue()


def select_best(table: AccuracyTable) -> tuple[str, float] | None:
    """Argmax over cells; ties go to the lower ``c``, then to the earlier kernel."""
    best = None
    best_key = None
    for ki, k in enumerate(table.kernels):
        for c in table.cs:
            acc = table.cells.get((k, c))
            if acc is None:
                continue
            key = (-acc, c, ki)
            if best_key is None or key < best_key:
                best, best_key = (k, c), key
    return best


def grid_search(
    train_set: Dataset,
    validation: Dataset,
    kernels: Sequence[KernelSpec] = DEFAULT_KERNELS,
    cs: Sequence[float] = DEFAULT_CS,
    **train_kw,
) -> tuple[SvmModel | None, TrainingDiagnostics | None, AccuracyTable]:
    if not kernels or not cs:
        raise ValueError("kernel and penalty grids must be non-empty")
    labels = [k.label for k in kernels]
    table = AccuracyTable(kernels=labels, cs=[float(c) for c in cs])
    fitted: dict[tuple[str, float], tuple[SvmModel, TrainingDiagnostics]] = {}
    for spec, label in zip(kernels, labels):
        for c in table.cs:
            try:
                model, diag = train(train_set, spec, c, **train_kw)
            except Exception as exc:  # a failed cell must not abort the sweep
                log.warning("cell %s c=%g failed: %s", label, c, exc)
                table.cells[(label, c)] = None
                table.errors[(label, c)] = str(exc)
                continue
            acc = accuracy(model, validation)
            model.meta["validation_accuracy"] = acc
            table.cells[(label, c)] = acc
            fitted[(label, c)] = (model, diag)
            log.info("%-10s c=%-5g acc=%.3f iters=%d", label, c, acc, diag.iterations)
    choice = select_best(table)
    if choice is None:
        return None, None, table
    model, diag = fitted[choice]
    return model, diag, table


@dataclass
class ConfusionMatrix:
    """Rows are actual class, columns predicted, both ordered (normal, outage)."""

    counts: np.ndarray

    @property
    def percentages(self) -> np.ndarray:
        tot = self.counts.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            pct = np.where(tot > 0, 100.0 * self.counts / np.maximum(tot, 1), 0.0)
        return pct

    @property
    def recall_normal(self) -> float:
        return float(self.percentages[0, 0] / 100.0)

    @property
    def recall_outage(self) -> float:
        return float(self.percentages[1, 1] / 100.0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["actual", "predicted_normal_pct", "predicted_outage_pct", "predicted_normal_n", "predicted_outage_n"])
        pct = self.percentages
        for r, name in enumerate(("normal", "outage")):
            w.writerow([name, f"{pct[r, 0]:.1f}", f"{pct[r, 1]:.1f}", int(self.counts[r, 0]), int(self.counts[r, 1])])
        return buf.getvalue()


def confusion_from_labels(actual, predicted) -> ConfusionMatrix:
    actual = np.asarray(actual)
    predicted = np.asarray(predicted)
    counts = np.zeros((2, 2), dtype=int)
    for r, a in enumerate((-1, OUTAGE)):
        for col, p in enumerate((-1, OUTAGE)):
            counts[r, col] = int(np.sum((actual == a) & (predicted == p)))
    return ConfusionMatrix(counts)


def confusion(model: SvmModel, eval_set: Dataset) -> ConfusionMatrix:
    if eval_set.m == 0:
        raise ValueError("evaluation set is empty")
    return confusion_from_labels(eval_set.y, predict(model, eval_set.X))


def export_boundary(model: SvmModel, x1_range, x2_range, resolution: int | tuple[int, int] = 101):
    """Decision values on a regular grid; returns ``(x1_axis, x2_axis, F)`` with ``F[i, j] = f(x1[i], x2[j])``.

    A resolution of 1 on an axis places a single node at the range centre.
    """
    r1, r2 = (resolution, resolution) if np.isscalar(resolution) else resolution
    if r1 < 1 or r2 < 1:
        raise ValueError("resolution must be positive")

    def axis(rng, n):
        lo, hi = map(float, rng)
        return np.array([(lo + hi) / 2.0]) if n == 1 else np.linspace(lo, hi, n)

    a1, a2 = axis(x1_range, r1), axis(x2_range, r2)
    g1, g2 = np.meshgrid(a1, a2, indexing="ij")
    F = model.decision_function(np.column_stack([g1.ravel(), g2.ravel()])).reshape(g1.shape)
    return a1, a2, F


def boundary_csv(a1, a2, F) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x1", "x2", "f"])
    for i, u in enumerate(a1):
        for j, v in enumerate(a2):
            w.writerow([repr(float(u)), repr(float(v)), repr(float(F[i, j]))])
    return buf.getvalue()
