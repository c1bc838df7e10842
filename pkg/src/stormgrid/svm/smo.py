"""Soft-margin kernel SVM trained on the dual by sequential minimal optimization.

The dual solved is::

    min  1/2 a'Qa - sum(a)    s.t.  0 <= a_i <= c,  sum(a_i y_i) = 0

with ``Q_ij = y_i y_j K(x_i, x_j)``. Each step updates the maximal
violating pair (i in I_up maximizing ``-y G``, j in I_low minimizing it),
where ``G = Qa - 1`` is the dual gradient.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..synthdata import Dataset
from .kernels import KernelSpec, kernel_matrix

TAU = 1e-12


class SvmError(ValueError):
    pass


@dataclass(frozen=True)
class Scaling:
    mean: tuple[float, ...]
    spread: tuple[float, ...]

    @classmethod
    def identity(cls, dim: int) -> "Scaling":
        return cls((0.0,) * dim, (1.0,) * dim)

    @classmethod
    def fit(cls, X: np.ndarray) -> "Scaling":
        mu = X.mean(axis=0)
        sd = X.std(axis=0)
        sd = np.where(sd > 0, sd, 1.0)
        return cls(tuple(map(float, mu)), tuple(map(float, sd)))

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, float)
        if X.shape[-1] != len(self.mean):
            raise ValueError(f"dimension mismatch: expected {len(self.mean)} features, got {X.shape[-1]}")
        return (X - np.asarray(self.mean)) / np.asarray(self.spread)


@dataclass
class TrainingDiagnostics:
    margin: float
    slacks: np.ndarray
    mean_slack: float
    iterations: int
    converged: bool
    max_violation: float
    dual_objective: float

    def to_dict(self) -> dict:
        return {
            "margin": self.margin,
            "mean_slack": self.mean_slack,
            "n_in_margin": int(np.sum(self.slacks > 0)),
            "iterations": self.iterations,
            "converged": self.converged,
            "max_violation": self.max_violation,
            "dual_objective": self.dual_objective,
        }


@dataclass
class SvmModel:
    kernel: KernelSpec
    c: float
    support_x: np.ndarray  # raw (unscaled) features of the support vectors
    support_y: np.ndarray
    alpha: np.ndarray
    bias: float
    scaling: Scaling
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self._scaled_sv = self.scaling.apply(self.support_x)
        self._coef = self.alpha * self.support_y

    @property
    def n_support(self) -> int:
        return len(self.alpha)

    def decision_function(self, X) -> np.ndarray:
        Z = self.scaling.apply(np.atleast_2d(np.asarray(X, float)))
        if len(self.alpha) == 0:
            return np.full(len(Z), self.bias)
        return kernel_matrix(self.kernel, Z, self._scaled_sv) @ self._coef + self.bias

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel.to_dict(),
            "c": self.c,
            "bias": self.bias,
            "scaling": {"mean": list(self.scaling.mean), "spread": list(self.scaling.spread)},
            "support_vectors": [
                {"x": [float(v) for v in x], "y": int(y), "alpha": float(a)}
                for x, y, a in zip(self.support_x, self.support_y, self.alpha)
            ],
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        svs = d["support_vectors"]
        dim = len(d["scaling"]["mean"])
        return cls(
            kernel=KernelSpec(**d["kernel"]),
            c=float(d["c"]),
            support_x=np.array([s["x"] for s in svs], float).reshape(-1, dim),
            support_y=np.array([s["y"] for s in svs], int),
            alpha=np.array([s["alpha"] for s in svs], float),
            bias=float(d["bias"]),
            scaling=Scaling(tuple(d["scaling"]["mean"]), tuple(d["scaling"]["spread"])),
            meta=d.get("meta", {}),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path) -> "SvmModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def decision_value(model: SvmModel, x) -> float | np.ndarray:
    x = np.asarray(x, float)
    f = model.decision_function(x)
    return float(f[0]) if x.ndim == 1 else f


def predict(model: SvmModel, x) -> int | np.ndarray:
    """Sign of the decision value; exactly zero counts as outage (+1)."""
    f = np.asarray(decision_value(model, x))
    lab = np.where(f >= 0, 1, -1)
    return int(lab) if lab.ndim == 0 else lab


def solve_dual(K: np.ndarray, y: np.ndarray, c: float, tol: float = 1e-5, max_iter: int = 1_000_000):
    """Run SMO on a precomputed Gram matrix.

    Returns ``(alpha, bias, gradient, iterations, converged, max_violation)``.
    """
    y = np.asarray(y, float)
    m = len(y)
    Q = K * np.outer(y, y)
    alpha = np.zeros(m)
    G = -np.ones(m)
    qdiag = np.diag(Q).copy()
    it = 0
    converged = False
    gap = np.inf
    pos = y > 0
    while it < max_iter:
        yG = -y * G
        at_upper = alpha >= c
        at_lower = alpha <= 0
        up = np.where(pos, ~at_upper, ~at_lower)
        low = np.where(pos, ~at_lower, ~at_upper)
        if not up.any() or not low.any():
            gap = 0.0
            converged = True
            break
        i = int(np.argmax(np.where(up, yG, -np.inf)))
        j = int(np.argmin(np.where(low, yG, np.inf)))
        gap = yG[i] - yG[j]
        if gap < tol:
            converged = True
            break
        it += 1
        ai, aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = max(qdiag[i] + qdiag[j] + 2.0 * Q[i, j], TAU)
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ni, nj = ai + delta, aj + delta
            if diff > 0:
                if nj < 0:
                    nj, ni = 0.0, diff
            elif ni < 0:
                ni, nj = 0.0, -diff
            if diff > 0:
                if ni > c:
                    ni, nj = c, c - diff
            elif nj > c:
                nj, ni = c, c + diff
        else:
            quad = max(qdiag[i] + qdiag[j] - 2.0 * Q[i, j], TAU)
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            ni, nj = ai - delta, aj + delta
            if total > c:
                if ni > c:
                    ni, nj = c, total - c
            elif nj < 0:
                nj, ni = 0.0, total
            if total > c:
                if nj > c:
                    nj, ni = c, total - c
            elif ni < 0:
                ni, nj = 0.0, total
        di, dj = ni - ai, nj - aj
        alpha[i], alpha[j] = ni, nj
        G += Q[:, i] * di + Q[:, j] * dj
    G = Q @ alpha - 1.0  # drop drift accumulated by the rank-2 updates
    bias = _bias(alpha, y, G, c)
    return alpha, bias, G, it, converged, float(gap)


def _bias(alpha, y, G, c) -> float:
    yG = y * G
    free = (alpha > 0) & (alpha < c)
    if free.any():
        return float(-yG[free].mean())
    at_upper = alpha >= c
    ub = np.inf
    lb = -np.inf
    for t in range(len(y)):
        if at_upper[t]:
            if y[t] < 0:
                ub = min(ub, yG[t])
            else:
                lb = max(lb, yG[t])
        else:
            if y[t] > 0:
                ub = min(ub, yG[t])
            else:
                lb = max(lb, yG[t])
    return float(-(ub + lb) / 2.0)


def train(
    train_set: Dataset,
    kernel: KernelSpec,
    c: float,
    *,
    scale: bool = True,
    tol: float = 1e-5,
    max_iter: int = 1_000_000,
) -> tuple[SvmModel, TrainingDiagnostics]:
    """Fit a soft-margin SVM and report margin and slack diagnostics.

    Features are standardized on ``train_set`` unless ``scale=False``; the
    scaling travels with the model. Hitting ``max_iter`` returns the last
    iterate with ``converged=False``.
    """
    if not c > 0:
        raise SvmError("penalty c must be > 0")
    X = np.asarray(train_set.X, float)
    y = np.asarray(train_set.y, int)
    if len(np.unique(y)) < 2:
        raise SvmError("training set must contain both classes")
    scaling = Scaling.fit(X) if scale else Scaling.identity(X.shape[1])
    Z = scaling.apply(X)
    K = kernel_matrix(kernel, Z, Z)
    alpha, bias, G, iters, converged, gap = solve_dual(K, y, c, tol=tol, max_iter=max_iter)

    yf = (G + 1.0) + y * bias  # y_i * f(x_i)
    slacks = np.maximum(0.0, 1.0 - yf)
    ay = alpha * y
    w2 = float(ay @ K @ ay)
    margin = 2.0 / math.sqrt(w2) if w2 > 0 else math.inf
    in_margin = slacks[slacks > 0]
    diag = TrainingDiagnostics(
        margin=margin,
        slacks=slacks,
        mean_slack=float(in_margin.mean()) if len(in_margin) else 0.0,
        iterations=iters,
        converged=converged,
        max_violation=gap,
        dual_objective=float(alpha.sum() - 0.5 * w2),
    )
    sv = alpha > 0
    model = SvmModel(
        kernel=kernel,
        c=float(c),
        support_x=X[sv],
        support_y=y[sv],
        alpha=alpha[sv],
        bias=bias,
        scaling=scaling,
        meta={"n_train": int(len(y)), **diag.to_dict()},
    )
    return model, diag
