"""Synthetic hurricane outage corpus.

Wind speeds come from the Saffir-Simpson bands, distances are uniform over
``[0, max_distance]`` km and labels are Bernoulli draws from a logistic
fragility curve. Samples are rejection-sampled until each class quota is
met exactly.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np
from scipy.special import expit

from .rng import SplitMix64

# lower bounds (mph) of categories 1..5
SAFFIR_SIMPSON_MPH = (74.0, 96.0, 111.0, 130.0, 157.0)
CATEGORY5_CAP_MPH = 200.0
MAX_DISTANCE_KM = 300.0

OUTAGE = 1
OPERATIONAL = -1


def saffir_simpson_category(wind: float) -> int:
    """Category 0..5 of a sustained wind speed in mph (0 = below hurricane strength)."""
    if not wind >= 0:
        raise ValueError(f"wind must be >= 0, got {wind}")
    cat = 0
    for k, lo in enumerate(SAFFIR_SIMPSON_MPH, start=1):
        if wind >= lo:
            cat = k
    return cat


def category_bounds(category: int) -> tuple[float, float]:
    if category not in (1, 2, 3, 4, 5):
        raise ValueError(f"category must be in 1..5, got {category}")
    lo = SAFFIR_SIMPSON_MPH[category - 1]
    hi = SAFFIR_SIMPSON_MPH[category] if category < 5 else CATEGORY5_CAP_MPH
    return lo, hi


def sample_wind(category: int, rng: SplitMix64) -> float:
    lo, hi = category_bounds(category)
    return rng.uniform(lo, hi)


@dataclass(frozen=True)
class Fragility:
    """Logistic outage probability ``sigmoid(beta0 + beta1*x1 - beta2*x2)``.

    The defaults put the 50% contour on ``0.04*x1 - 0.03*x2 = 2`` with a
    steepness that leaves a Bayes-optimal accuracy near 92.7% on the
    balanced corpus.
    """

    beta0: float = -5.0
    beta1: float = 0.1  # per mph
    beta2: float = 0.075  # per km

    def __call__(self, x1, x2):
        z = self.beta0 + self.beta1 * np.asarray(x1, float) - self.beta2 * np.asarray(x2, float)
        p = expit(z)
        return float(p) if p.ndim == 0 else p


DEFAULT_FRAGILITY = Fragility()


def ground_truth_outage_prob(x1: float, x2: float, fragility: Fragility = DEFAULT_FRAGILITY) -> float:
    if x1 < 0 or x2 < 0:
        raise ValueError("features must be non-negative")
    return fragility(x1, x2)


class LabeledSample(NamedTuple):
    x1: float
    x2: float
    label: int


@dataclass
class Dataset:
    """Feature matrix ``X`` (m x 2: wind mph, distance km) and labels ``y`` in {-1, +1}."""

    X: np.ndarray
    y: np.ndarray
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float).reshape(-1, 2)
        self.y = np.asarray(self.y, dtype=int).ravel()
        if len(self.X) != len(self.y):
            raise ValueError("X and y lengths differ")
        if not np.all(np.isin(self.y, (-1, 1))):
            raise ValueError("labels must be -1 or +1")
        if np.any(self.X < 0):
            raise ValueError("features must be non-negative")

    @property
    def m(self) -> int:
        return len(self.y)

    def __len__(self) -> int:
        return self.m

    def __iter__(self) -> Iterator[LabeledSample]:
        for (x1, x2), lab in zip(self.X, self.y):
            yield LabeledSample(float(x1), float(x2), int(lab))

    @property
    def samples(self) -> list[LabeledSample]:
        return list(self)

    def class_counts(self) -> dict[int, int]:
        return {OUTAGE: int(np.sum(self.y == OUTAGE)), OPERATIONAL: int(np.sum(self.y == OPERATIONAL))}

    def subset(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], seed=self.seed)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x1_mph", "x2_km", "label"])
        for s in self:
            w.writerow([repr(s.x1), repr(s.x2), s.label])
        return buf.getvalue()

    def save(self, path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "Dataset":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [h.strip() for h in rows[0]] != ["x1_mph", "x2_km", "label"]:
            raise ValueError("dataset CSV must start with header x1_mph,x2_km,label")
        X, y = [], []
        for lineno, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            try:
                X.append((float(row[0]), float(row[1])))
                y.append(int(row[2]))
            except (ValueError, IndexError) as exc:
                raise ValueError(f"line {lineno}: bad dataset row {row!r}") from exc
        return cls(np.array(X).reshape(-1, 2), np.array(y, dtype=int))

    @classmethod
    def load(cls, path) -> "Dataset":
        return cls.from_csv(Path(path).read_text())


def generate_dataset(
    n_outage: int = 300,
    n_operational: int = 300,
    seed: int = 42,
    fragility: Fragility = DEFAULT_FRAGILITY,
    max_distance: float = MAX_DISTANCE_KM,
) -> Dataset:
    """Rejection-sample a corpus with exactly the requested class counts.

    Each attempt draws, in order: category ``1 + randbelow(5)``, wind within
    the category band, distance ``uniform(0, max_distance)``, and a label
    ``+1`` iff ``random() < p(wind, distance)``. Attempts whose label class is
    already full are discarded.
    """
    if n_outage <= 0 or n_operational <= 0:
        raise ValueError("class quotas must be positive")
    rng = SplitMix64(seed)
    need = {OUTAGE: n_outage, OPERATIONAL: n_operational}
    X, y = [], []
    while need[OUTAGE] or need[OPERATIONAL]:
        cat = 1 + rng.randbelow(5)
        wind = sample_wind(cat, rng)
        dist = rng.uniform(0.0, max_distance)
        p = _logistic(fragility, wind, dist)
        label = OUTAGE if rng.random() < p else OPERATIONAL
        if need[label]:
            need[label] -= 1
            X.append((wind, dist))
            y.append(label)
    return Dataset(np.array(X), np.array(y), seed=seed)


def _logistic(fr: Fragility, x1: float, x2: float) -> float:
    z = fr.beta0 + fr.beta1 * x1 - fr.beta2 * x2
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def split_indices(m: int, train_fraction: float = 0.8, seed: int = 42) -> tuple[np.ndarray, np.ndarray]:
    """Shuffle ``0..m-1`` with the portable stream; first ``floor(f*m)`` go to training."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    n_train = int(math.floor(train_fraction * m))
    if n_train == 0 or n_train == m:
        raise ValueError(f"split of {m} samples at {train_fraction} leaves an empty partition")
    order = list(range(m))
    SplitMix64(seed).shuffle(order)
    idx = np.array(order)
    return idx[:n_train], idx[n_train:]


def split(dataset: Dataset, train_fraction: float = 0.8, seed: int = 42) -> tuple[Dataset, Dataset]:
    tr, va = split_indices(dataset.m, train_fraction, seed)
    return dataset.subset(tr), dataset.subset(va)
