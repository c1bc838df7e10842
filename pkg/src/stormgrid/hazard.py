"""Hurricane tracks and per-component hazard features (wind, distance to the eye path)."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import CaseValidationError, GridCase

LINE_SAMPLE_STEP_KM = 1.0


class TrackError(ValueError):
    pass


@dataclass(frozen=True)
class Waypoint:
    x: float
    y: float
    wind_mph: float


@dataclass(frozen=True)
class HurricaneTrack:
    name: str
    waypoints: tuple[Waypoint, ...]

    def __post_init__(self):
        if not self.waypoints:
            raise TrackError(f"track {self.name!r} has no waypoints")
        for k, w in enumerate(self.waypoints):
            if not (math.isfinite(w.x) and math.isfinite(w.y)):
                raise TrackError(f"track {self.name!r} waypoint {k}: non-finite position")
            if not (math.isfinite(w.wind_mph) and w.wind_mph >= 0):
                raise TrackError(f"track {self.name!r} waypoint {k}: wind must be finite and >= 0")

    @classmethod
    def from_dict(cls, d) -> "HurricaneTrack":
        try:
            pts = tuple(Waypoint(float(w["x"]), float(w["y"]), float(w["wind_mph"])) for w in d["waypoints"])
            return cls(str(d.get("name", "track")), pts)
        except (KeyError, TypeError) as exc:
            raise TrackError(f"malformed track: missing or bad field {exc}") from exc

    @classmethod
    def load(cls, path) -> "HurricaneTrack":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise TrackError(f"{path}: invalid JSON at line {exc.lineno}") from exc
        if isinstance(raw, list):
            raw = {"name": path.stem, "waypoints": raw}
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        return {"name": self.name, "waypoints": [{"x": w.x, "y": w.y, "wind_mph": w.wind_mph} for w in self.waypoints]}

    @property
    def points(self) -> np.ndarray:
        return np.array([(w.x, w.y) for w in self.waypoints], float)

    @property
    def winds(self) -> np.ndarray:
        return np.array([w.wind_mph for w in self.waypoints], float)


@dataclass(frozen=True)
class ComponentFeatures:
    component_id: int
    kind: str  # "generator" or "line"
    x1: float
    x2: float


def point_segment_distance(p, a, b) -> float:
    d, _ = _closest_on_segment(np.asarray(p, float), np.asarray(a, float), np.asarray(b, float))
    return d


def _closest_on_segment(p, a, b):
    ab = b - a
    den = float(ab @ ab)
    s = 0.0 if den == 0.0 else min(1.0, max(0.0, float((p - a) @ ab) / den))
    q = a + s * ab
    return float(math.hypot(*(p - q))), s


def track_features(track: HurricaneTrack, location) -> tuple[float, float]:
    """(x1, x2): track wind at closest approach and the closest-approach distance."""
    x1, x2 = _track_features_many(track, np.asarray(location, float)[None, :])
    return float(x1[0]), float(x2[0])


def _track_features_many(track: HurricaneTrack, P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pts, winds = track.points, track.winds
    if len(pts) == 1:
        return np.full(len(P), winds[0]), np.hypot(*(P - pts[0]).T)
    A, B = pts[:-1], pts[1:]
    AB = B - A
    den = (AB * AB).sum(1)
    # s[k, j]: projection parameter of point k on segment j
    rel = P[:, None, :] - A[None, :, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(den > 0, (rel * AB[None]).sum(2) / np.where(den > 0, den, 1.0), 0.0)
    s = np.clip(s, 0.0, 1.0)
    Q = A[None] + s[..., None] * AB[None]
    D = np.hypot(*(P[:, None, :] - Q).transpose(2, 0, 1))
    j = D.argmin(1)  # first minimizing segment on ties
    k = np.arange(len(P))
    sj = s[k, j]
    x1 = winds[j] + sj * (winds[j + 1] - winds[j])
    return x1, D[k, j]


def sample_polyline(points, step: float = LINE_SAMPLE_STEP_KM) -> np.ndarray:
    """Points every ``step`` km from the start of each polyline segment, plus every vertex.

    Samples sit at whole multiples of ``step``, so halving the step yields a
    superset of points.
    """
    pts = np.asarray(points, float)
    out = [pts[:1]]
    for a, b in zip(pts[:-1], pts[1:]):
        length = float(math.hypot(*(b - a)))
        if length > 0:
            d = np.arange(1, math.floor(length / step) + 1) * step
            d = d[d < length]
            out.append(a + (d / length)[:, None] * (b - a))
        out.append(b[None, :])
    return np.concatenate(out)


def component_features(grid: GridCase, track: HurricaneTrack, step: float = LINE_SAMPLE_STEP_KM) -> list[ComponentFeatures]:
    """One feature row per generator (at its bus) and per line (closest of its sampled points)."""
    if not step > 0:
        raise ValueError("sampling step must be > 0")
    rows = []
    for g in grid.generators:
        loc = grid.bus(g.bus).location
        if loc is None:
            raise CaseValidationError(f"bus {g.bus} has no layout location (needed by generator {g.id})")
        x1, x2 = track_features(track, loc)
        rows.append(ComponentFeatures(g.id, "generator", x1, x2))
    for ln in grid.lines:
        S = sample_polyline(grid.line_geometry(ln), step)
        x1, x2 = _track_features_many(track, S)
        k = int(np.argmin(x2))
        rows.append(ComponentFeatures(ln.id, "line", float(x1[k]), float(x2[k])))
    return rows
