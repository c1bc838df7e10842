"""Grid data model, MATPOWER-subset parser and resilience extension file.

Only the columns the curtailment model needs are read from a MATPOWER case:

* ``mpc.bus``: bus id (col 1), Pd (col 3)
* ``mpc.gen``: bus (col 1), status (col 8, optional), Pmax (col 9), Pmin (col 10)
* ``mpc.branch``: from (col 1), to (col 2), x (col 4), rateA (col 6)

Everything MATPOWER lacks (VOLL, dispatch deviation limits, planar layout,
load profile, line routes) comes from a JSON extension file::

    {
      "default_voll": 1000,             # $/MWh for buses not listed
      "voll": {"3": 5000},              # per bus
      "layout": {"1": [x_km, y_km]},    # per bus
      "delta": {"1": 50},               # per generator (1-based gen table row)
      "horizon": 24,
      "profile": [1.0, ...],            # per period load multiplier
      "line_geometry": {"7": [[x, y], ...]},   # per line (1-based branch row)
      "committed": {"2": [1, 0, ...]}   # per generator, per period
    }
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Mapping

import numpy as np

DEFAULT_VOLL = 1000.0
DEFAULT_HORIZON = 24
UNLIMITED_RATE_FACTOR = 10.0

Point = tuple[float, float]


class CaseParseError(ValueError):
    """Malformed case or extension text; ``line`` is 1-based (0 when not tied to a line)."""

    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class CaseValidationError(CaseParseError):
    pass


@dataclass(frozen=True)
class Bus:
    id: int
    base_load: float = 0.0
    voll: float = DEFAULT_VOLL
    location: Point | None = None


@dataclass(frozen=True)
class Generator:
    id: int
    bus: int
    p_min: float
    p_max: float
    delta: float
    committed: tuple[int, ...] = ()


@dataclass(frozen=True)
class Line:
    id: int
    from_bus: int
    to_bus: int
    reactance: float
    pl_max: float
    geometry: tuple[Point, ...] = ()


@dataclass(frozen=True)
class GridCase:
    buses: tuple[Bus, ...]
    generators: tuple[Generator, ...]
    lines: tuple[Line, ...]
    base_mva: float = 100.0
    horizon: int = DEFAULT_HORIZON
    load_profile: tuple[float, ...] = (1.0,) * DEFAULT_HORIZON

    def __post_init__(self):
        validate(self)

    @property
    def bus_ids(self) -> list[int]:
        return [b.id for b in self.buses]

    def bus(self, bus_id: int) -> Bus:
        return self._bus_map()[bus_id]

    def _bus_map(self) -> dict[int, Bus]:
        return {b.id: b for b in self.buses}

    def demand(self, bus_id: int, t: int) -> float:
        """D_bt = base load x profile[t]."""
        return self.bus(bus_id).base_load * self.load_profile[t]

    def total_load(self) -> float:
        return float(sum(b.base_load for b in self.buses))

    def committed(self, gen: Generator, t: int) -> int:
        return gen.committed[t] if gen.committed else 1

    def line_geometry(self, line: Line) -> tuple[Point, ...]:
        """Polyline of the line route; the straight segment between its buses if none was given."""
        if line.geometry:
            return line.geometry
        a, b = self.bus(line.from_bus).location, self.bus(line.to_bus).location
        if a is None or b is None:
            missing = line.from_bus if a is None else line.to_bus
            raise CaseValidationError(f"bus {missing} has no layout location (needed by line {line.id})")
        return (a, b)

    def reference_bus(self) -> int:
        """Lowest-numbered bus hosting a generator committed in some period."""
        hosts = [g.bus for g in self.generators if any(self.committed(g, t) for t in range(self.horizon))]
        if not hosts:
            raise CaseValidationError("no committed generator: reference bus undefined")
        return min(hosts)

    # -- serialization -----------------------------------------------------
    def to_dict(self) -> dict:
        d = asdict(self)
        return json.loads(json.dumps(d))

    @classmethod
    def from_dict(cls, d: Mapping) -> "GridCase":
        return cls(
            buses=tuple(Bus(b["id"], b["base_load"], b["voll"], _pt(b["location"])) for b in d["buses"]),
            generators=tuple(
                Generator(g["id"], g["bus"], g["p_min"], g["p_max"], g["delta"], tuple(g["committed"]))
                for g in d["generators"]
            ),
            lines=tuple(
                Line(l["id"], l["from_bus"], l["to_bus"], l["reactance"], l["pl_max"], tuple(_pt(p) for p in l["geometry"]))
                for l in d["lines"]
            ),
            base_mva=d["base_mva"],
            horizon=d["horizon"],
            load_profile=tuple(d["load_profile"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "GridCase":
        return cls.from_dict(json.loads(text))


def _pt(p) -> Point | None:
    return None if p is None else (float(p[0]), float(p[1]))


def validate(grid: GridCase) -> None:
    ids = [b.id for b in grid.buses]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise CaseValidationError(f"duplicate bus ids {dup}")
    known = set(ids)
    for b in grid.buses:
        if b.id <= 0:
            raise CaseValidationError(f"bus id {b.id} must be a positive integer")
        if not (math.isfinite(b.base_load) and b.base_load >= 0):
            raise CaseValidationError(f"bus {b.id}: load must be finite and >= 0")
        if not (math.isfinite(b.voll) and b.voll >= 0):
            raise CaseValidationError(f"bus {b.id}: voll must be finite and >= 0")
    if grid.horizon < 1:
        raise CaseValidationError("horizon must be >= 1")
    if len(grid.load_profile) != grid.horizon:
        raise CaseValidationError(f"load profile has {len(grid.load_profile)} entries, horizon is {grid.horizon}")
    if any(not (math.isfinite(p) and p >= 0) for p in grid.load_profile):
        raise CaseValidationError("load profile multipliers must be finite and >= 0")
    for g in grid.generators:
        if g.bus not in known:
            raise CaseValidationError(f"generator {g.id} references unknown bus {g.bus}")
        if not 0 <= g.p_min <= g.p_max:
            raise CaseValidationError(f"generator {g.id}: need 0 <= p_min <= p_max")
        if not g.delta >= 0:
            raise CaseValidationError("delta must be >= 0")
        if g.committed and len(g.committed) != grid.horizon:
            raise CaseValidationError(f"generator {g.id}: commitment length differs from horizon")
    for ln in grid.lines:
        for end in (ln.from_bus, ln.to_bus):
            if end not in known:
                raise CaseValidationError(f"line {ln.id} references unknown bus {end}")
        if ln.from_bus == ln.to_bus:
            raise CaseValidationError(f"line {ln.id} connects bus {ln.from_bus} to itself")
        if not ln.reactance > 0:
            raise CaseValidationError(f"line {ln.id}: reactance must be > 0")
        if not ln.pl_max > 0:
            raise CaseValidationError(f"line {ln.id}: pl_max must be > 0")


def incidence(grid: GridCase) -> np.ndarray:
    """Line-by-bus matrix: +1 at the from-bus, -1 at the to-bus (columns follow ``grid.buses``)."""
    col = {b: k for k, b in enumerate(grid.bus_ids)}
    a = np.zeros((len(grid.lines), len(grid.buses)))
    for r, ln in enumerate(grid.lines):
        a[r, col[ln.from_bus]] = 1.0
        a[r, col[ln.to_bus]] = -1.0
    return a


# ---------------------------------------------------------------------------
# MATPOWER subset
# ---------------------------------------------------------------------------

_NUM = re.compile(r"^[+-]?(?:\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|[Ii]nf)$")
_REQUIRED_COLS = {"bus": 3, "gen": 10, "branch": 6}


def _strip_comments(text: str) -> list[str]:
    return [ln.split("%", 1)[0] for ln in text.splitlines()]


def _read_matrix(lines: list[str], name: str) -> list[tuple[int, list[float]]]:
    """Rows of ``mpc.<name> = [ ... ];`` with the 1-based line each row starts on."""
    head = re.compile(rf"\bmpc\.{name}\s*=")
    start = next((i for i, ln in enumerate(lines) if head.search(ln)), None)
    if start is None:
        raise CaseParseError(f"missing mpc.{name} block (reached end of file)", len(lines))
    first = lines[start][head.search(lines[start]).end():]
    if not first.lstrip().startswith("["):
        raise CaseParseError(f"mpc.{name}: expected '[' after '='", start + 1)
    rows: list[tuple[int, list[float]]] = []
    buf = first.lstrip()[1:]
    i = start
    row: list[float] = []
    row_line = start + 1
    while True:
        if "[" in buf:
            raise CaseParseError(f"mpc.{name}: nested '['", i + 1)
        close = buf.find("]")
        body = buf if close < 0 else buf[:close]
        for k, chunk in enumerate(body.split(";")):
            if k > 0 and row:
                rows.append((row_line, row))
                row = []
            for tok in chunk.replace(",", " ").split():
                if not _NUM.match(tok):
                    raise CaseParseError(f"mpc.{name}: non-numeric field {tok!r}", i + 1)
                if not row:
                    row_line = i + 1
                row.append(float(tok))
        if close >= 0:
            if row:
                rows.append((row_line, row))
            tail = buf[close + 1 :].strip()
            if not tail.startswith(";"):
                raise CaseParseError(f"mpc.{name}: missing ';' after closing ']'", i + 1)
            if tail[1:].strip():
                raise CaseParseError(f"mpc.{name}: unexpected text after '];'", i + 1)
            break
        # newline ends a row, like MATLAB
        if row:
            rows.append((row_line, row))
            row = []
        i += 1
        if i >= len(lines) or (head.pattern and re.search(r"\bmpc\.\w+\s*=", lines[i])):
            raise CaseParseError(f"mpc.{name}: unbalanced '[' (no closing ']')", start + 1)
        buf = lines[i]
    if not rows:
        raise CaseParseError(f"mpc.{name} is empty", start + 1)
    need = _REQUIRED_COLS[name]
    width = len(rows[0][1])
    for ln, r in rows:
        if len(r) != width:
            raise CaseParseError(f"mpc.{name}: row has {len(r)} columns, expected {width}", ln)
        if len(r) < need:
            raise CaseParseError(f"mpc.{name}: row has {len(r)} columns, need at least {need}", ln)
    return rows


def _read_scalar(lines: list[str], name: str, default: float) -> float:
    pat = re.compile(rf"\bmpc\.{name}\s*=\s*([^;]*);")
    for i, ln in enumerate(lines):
        m = pat.search(ln)
        if m:
            tok = m.group(1).strip()
            if not _NUM.match(tok):
                raise CaseParseError(f"mpc.{name}: non-numeric value {tok!r}", i + 1)
            return float(tok)
        if re.search(rf"\bmpc\.{name}\s*=", ln):
            raise CaseParseError(f"mpc.{name}: missing ';'", i + 1)
    return default


def _int_id(v: float, what: str, line: int) -> int:
    if v != int(v) or v <= 0:
        raise CaseValidationError(f"{what} {v:g} is not a positive integer", line)
    return int(v)


def parse_matpower_case(text: str, horizon: int = DEFAULT_HORIZON) -> GridCase:
    """Parse the bus/gen/branch blocks of a MATPOWER ``.m`` case.

    ``rateA = 0`` (unlimited) becomes ``10 x`` the total system load.
    """
    lines = _strip_comments(text)
    base_mva = _read_scalar(lines, "baseMVA", 100.0)
    bus_rows = _read_matrix(lines, "bus")
    gen_rows = _read_matrix(lines, "gen")
    br_rows = _read_matrix(lines, "branch")

    buses = []
    seen: dict[int, int] = {}
    for ln, r in bus_rows:
        bid = _int_id(r[0], "bus id", ln)
        if bid in seen:
            raise CaseValidationError(f"duplicate bus id {bid} (first on line {seen[bid]})", ln)
        seen[bid] = ln
        if r[2] < 0:
            raise CaseValidationError(f"bus {bid}: negative load {r[2]:g}", ln)
        buses.append(Bus(bid, float(r[2])))

    gens = []
    for k, (ln, r) in enumerate(gen_rows, start=1):
        gbus = _int_id(r[0], "generator bus", ln)
        if gbus not in seen:
            raise CaseValidationError(f"generator {k} references unknown bus {gbus}", ln)
        pmax, pmin = float(r[8]), float(r[9])
        if not 0 <= pmin <= pmax:
            raise CaseValidationError(f"generator {k}: need 0 <= Pmin <= Pmax (got {pmin:g}, {pmax:g})", ln)
        on = 1 if r[7] > 0 else 0
        gens.append(Generator(k, gbus, pmin, pmax, delta=pmax, committed=(on,) * horizon))

    total = sum(b.base_load for b in buses)
    cap = UNLIMITED_RATE_FACTOR * total if total > 0 else 1000.0
    branches = []
    for k, (ln, r) in enumerate(br_rows, start=1):
        f = _int_id(r[0], "branch from-bus", ln)
        t = _int_id(r[1], "branch to-bus", ln)
        for end in (f, t):
            if end not in seen:
                raise CaseValidationError(f"branch {k} references unknown bus {end}", ln)
        if f == t:
            raise CaseValidationError(f"branch {k} connects bus {f} to itself", ln)
        x = float(r[3])
        if not x > 0:
            raise CaseValidationError(f"branch {k}: reactance must be > 0 (got {x:g})", ln)
        rate = float(r[5])
        if rate < 0:
            raise CaseValidationError(f"branch {k}: negative rateA", ln)
        branches.append(Line(k, f, t, x, rate if rate > 0 else cap))

    return GridCase(tuple(buses), tuple(gens), tuple(branches), base_mva, horizon, (1.0,) * horizon)


def load_case(path, horizon: int = DEFAULT_HORIZON) -> GridCase:
    return parse_matpower_case(Path(path).read_text(), horizon=horizon)


# ---------------------------------------------------------------------------
# extension file
# ---------------------------------------------------------------------------

@dataclass
class Extensions:
    default_voll: float = DEFAULT_VOLL
    voll: dict[int, float] = field(default_factory=dict)
    layout: dict[int, Point] = field(default_factory=dict)
    delta: dict[int, float] = field(default_factory=dict)
    horizon: int | None = None
    profile: list[float] | None = None
    line_geometry: dict[int, list[Point]] = field(default_factory=dict)
    committed: dict[int, list[int]] = field(default_factory=dict)


_EXT_KEYS = {"default_voll", "voll", "layout", "delta", "horizon", "profile", "line_geometry", "committed"}


def parse_extensions(text: str) -> Extensions:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseParseError(f"extension file is not valid JSON: {exc.msg}", exc.lineno) from exc
    if not isinstance(raw, dict):
        raise CaseParseError("extension file must be a JSON object")
    unknown = set(raw) - _EXT_KEYS
    if unknown:
        raise CaseParseError(f"unknown extension keys {sorted(unknown)}")

    def keyed(name, conv):
        out = {}
        for k, v in raw.get(name, {}).items():
            try:
                out[int(k)] = conv(v)
            except (TypeError, ValueError) as exc:
                raise CaseParseError(f"{name}[{k!r}]: {exc}") from exc
        return out

    ext = Extensions(
        default_voll=float(raw.get("default_voll", DEFAULT_VOLL)),
        voll=keyed("voll", float),
        layout=keyed("layout", lambda p: (float(p[0]), float(p[1]))),
        delta=keyed("delta", float),
        horizon=int(raw["horizon"]) if "horizon" in raw else None,
        profile=[float(v) for v in raw["profile"]] if "profile" in raw else None,
        line_geometry=keyed("line_geometry", lambda pts: [(float(p[0]), float(p[1])) for p in pts]),
        committed=keyed("committed", lambda v: [int(bool(u)) for u in v]),
    )
    if ext.default_voll < 0 or any(v < 0 for v in ext.voll.values()):
        raise CaseValidationError("voll must be >= 0")
    if any(not math.isfinite(v) for v in [ext.default_voll, *ext.voll.values()]):
        raise CaseValidationError("voll must be finite")
    if any(v < 0 for v in ext.delta.values()):
        raise CaseValidationError("delta must be >= 0")
    for lid, pts in ext.line_geometry.items():
        if len(pts) < 2:
            raise CaseValidationError(f"line_geometry[{lid}] needs at least two points")
    if ext.profile is not None and ext.horizon is not None and len(ext.profile) != ext.horizon:
        raise CaseValidationError("profile length differs from horizon")
    return ext


def apply_extensions(grid: GridCase, ext: Extensions) -> GridCase:
    """Merge extension data into a case; unknown ids are rejected."""
    bus_ids = set(grid.bus_ids)
    gen_ids = {g.id for g in grid.generators}
    line_ids = {ln.id for ln in grid.lines}
    for what, keys, known in (
        ("voll", ext.voll, bus_ids),
        ("layout", ext.layout, bus_ids),
        ("delta", ext.delta, gen_ids),
        ("committed", ext.committed, gen_ids),
        ("line_geometry", ext.line_geometry, line_ids),
    ):
        bad = sorted(set(keys) - known)
        if bad:
            kind = {"delta": "generator", "committed": "generator", "line_geometry": "line"}.get(what, "bus")
            raise CaseValidationError(f"{what} references unknown {kind} {bad[0]}")

    if ext.profile is not None:
        profile = tuple(ext.profile)
    elif ext.horizon is not None:
        profile = (1.0,) * ext.horizon
    else:
        profile = grid.load_profile
    horizon = len(profile)

    buses = tuple(
        replace(b, voll=ext.voll.get(b.id, ext.default_voll), location=ext.layout.get(b.id, b.location))
        for b in grid.buses
    )
    gens = []
    for g in grid.generators:
        com = ext.committed.get(g.id)
        if com is None:
            com = list(g.committed[:1] * horizon) if g.committed else [1] * horizon
        elif len(com) != horizon:
            raise CaseValidationError(f"committed[{g.id}] has {len(com)} entries, horizon is {horizon}")
        gens.append(replace(g, delta=ext.delta.get(g.id, g.delta), committed=tuple(com)))
    lines = tuple(
        replace(ln, geometry=tuple(ext.line_geometry[ln.id])) if ln.id in ext.line_geometry else ln
        for ln in grid.lines
    )
    return GridCase(buses, tuple(gens), lines, grid.base_mva, horizon, profile)


def load_grid(case_path, extensions_path=None) -> GridCase:
    grid = load_case(case_path)
    if extensions_path is not None:
        grid = apply_extensions(grid, parse_extensions(Path(extensions_path).read_text()))
    else:
        grid = apply_extensions(grid, Extensions())
    return grid


# ---------------------------------------------------------------------------
# outage scenarios
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OutageScenario:
    """Per-period operating state (1 = in service) of every generator and line.

    Scenario id 0 is reserved for the all-operational base case.
    """

    s: int
    gen_state: Mapping[int, tuple[int, ...]]
    line_state: Mapping[int, tuple[int, ...]]

    @classmethod
    def base(cls, grid: GridCase) -> "OutageScenario":
        return cls.constant(grid, 0)

    @classmethod
    def constant(cls, grid: GridCase, s: int, gens_out=(), lines_out=()) -> "OutageScenario":
        gens_out, lines_out = set(gens_out), set(lines_out)
        if s == 0 and (gens_out or lines_out):
            raise ValueError("scenario 0 is reserved for the all-operational base case")
        bad_g = gens_out - {g.id for g in grid.generators}
        bad_l = lines_out - {ln.id for ln in grid.lines}
        if bad_g:
            raise CaseValidationError(f"scenario {s}: unknown generator {sorted(bad_g)[0]}")
        if bad_l:
            raise CaseValidationError(f"scenario {s}: unknown line {sorted(bad_l)[0]}")
        T = grid.horizon
        return cls(
            s,
            {g.id: (0 if g.id in gens_out else 1,) * T for g in grid.generators},
            {ln.id: (0 if ln.id in lines_out else 1,) * T for ln in grid.lines},
        )

    def check_complete(self, grid: GridCase) -> None:
        for g in grid.generators:
            st = self.gen_state.get(g.id)
            if st is None or len(st) != grid.horizon:
                raise CaseValidationError(f"scenario {self.s}: generator {g.id} state missing for some period")
        for ln in grid.lines:
            st = self.line_state.get(ln.id)
            if st is None or len(st) != grid.horizon:
                raise CaseValidationError(f"scenario {self.s}: line {ln.id} state missing for some period")
        if self.s == 0 and (
            any(0 in v for v in self.gen_state.values()) or any(0 in v for v in self.line_state.values())
        ):
            raise CaseValidationError("scenario 0 must be all-operational")

    def gens_out(self) -> list[int]:
        return sorted(g for g, st in self.gen_state.items() if 0 in st)

    def lines_out(self) -> list[int]:
        return sorted(ln for ln, st in self.line_state.items() if 0 in st)


def parse_scenarios(text: str, grid: GridCase) -> list[OutageScenario]:
    """Scenario file: a JSON list (or ``{"scenarios": [...]}``) of ``{"s", "lines_out", "gens_out"}``.

    Outages are constant over the horizon. The base scenario 0 is added when absent.
    """
    raw = json.loads(text)
    if isinstance(raw, dict):
        raw = raw.get("scenarios", [])
    out = {}
    for item in raw:
        s = int(item["s"])
        if s in out:
            raise CaseValidationError(f"duplicate scenario id {s}")
        out[s] = OutageScenario.constant(grid, s, item.get("gens_out", ()), item.get("lines_out", ()))
    if 0 not in out:
        out[0] = OutageScenario.base(grid)
    return [out[s] for s in sorted(out)]


def scenarios_to_json(scenarios: list[OutageScenario], extra: Mapping[int, dict] | None = None) -> str:
    items = []
    for sc in scenarios:
        if sc.s == 0:
            continue
        item = {"s": sc.s, "lines_out": sc.lines_out(), "gens_out": sc.gens_out()}
        if extra and sc.s in extra:
            item.update(extra[sc.s])
        items.append(item)
    return json.dumps({"scenarios": items}, indent=1)
