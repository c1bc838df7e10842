"""Command-line entry point: ``stormgrid <gen-data|train|predict-outages|curtail|pipeline>``.

Every stage reads and writes files, so each can be re-run on its own. Options
come from (lowest to highest precedence) built-in defaults, a JSON file given
with ``--config`` and explicit flags.

Exit codes: 0 success, 2 bad input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
from dataclasses import replace
from importlib.resources import files
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .curtailment import CurtailmentError, min_load_curtailment, verify_solution
from .grid import CaseParseError, GridCase, apply_extensions, load_case, parse_extensions, parse_scenarios
from .hazard import HurricaneTrack, TrackError, component_features
from .lp import SimplexError
from .svm import (
    DEFAULT_CS,
    DEFAULT_KERNELS,
    KernelSpec,
    SvmModel,
    boundary_csv,
    confusion,
    export_boundary,
    grid_search,
)
from .synthdata import (
    CATEGORY5_CAP_MPH,
    MAX_DISTANCE_KM,
    SAFFIR_SIMPSON_MPH,
    Dataset,
    Fragility,
    generate_dataset,
    split_indices,
)

log = logging.getLogger("stormgrid")

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3

DATA = files("stormgrid") / "data"

DEFAULTS = {
    "seed": 42,
    "n_outage": 300,
    "n_operational": 300,
    "train_fraction": 0.8,
    "fragility": None,
    "kernels": [k.label for k in DEFAULT_KERNELS],
    "cs": list(DEFAULT_CS),
    "emit_boundary": False,
    "boundary_resolution": 101,
    "dataset": None,
    "split": None,
    "model": None,
    "case": str(DATA / "case30.m"),
    "extensions": str(DATA / "case30_ext.json"),
    "tracks": [str(DATA / "tracks" / f"path{k}.json") for k in (1, 2, 3)],
    "scenarios": None,
    "horizon": None,
    "weights": None,
    "emit_verification": True,
    "out": None,
}
PATH_KEYS = {"dataset", "split", "model", "case", "extensions", "scenarios", "out"}


class NumericalFailure(RuntimeError):
    pass


class StageError(Exception):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------

def _csv_list(conv):
    def parse(text):
        return [conv(v) for v in text.split(",") if v.strip()]
    return parse


def load_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        path = Path(args.config)
        raw = json.loads(path.read_text())
        if not isinstance(raw, dict):
            raise ValueError("config file must hold a JSON object")
        unknown = set(raw) - set(DEFAULTS)
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        base = path.parent
        for k, v in raw.items():
            if k in PATH_KEYS and v is not None:
                v = str(base / v)
            elif k == "tracks" and v is not None:
                v = [str(base / p) for p in v]
            cfg[k] = v
    for k in DEFAULTS:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    if cfg["seed"] is None:
        raise ValueError("a seed is required")
    if cfg["out"] is None:
        raise ValueError("an output directory (--out) is required")
    return cfg


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _versions() -> dict:
    return {"stormgrid": __version__, "python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__}


def _record(out: Path, stage: str, inputs: dict, outputs: list[str], params: dict) -> None:
    """Add one stage's entry to ``manifest.json`` in the output directory."""
    mpath = out / "manifest.json"
    manifest = json.loads(mpath.read_text()) if mpath.exists() else {"versions": _versions(), "stages": {}}
    manifest["versions"] = _versions()
    manifest["stages"][stage] = {
        "params": params,
        "inputs": {name: {"path": str(p), "sha256": sha256(p)} for name, p in inputs.items()},
        "outputs": {name: sha256(out / name) for name in outputs},
    }
    mpath.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")


def _fragility(cfg) -> Fragility:
    fr = cfg["fragility"]
    if fr is None:
        return Fragility()
    if isinstance(fr, dict):
        return Fragility(**fr)
    return Fragility(*map(float, fr))


def _load_grid(cfg) -> GridCase:
    grid = load_case(cfg["case"])
    ext_text = Path(cfg["extensions"]).read_text() if cfg["extensions"] else "{}"
    ext = parse_extensions(ext_text)
    if cfg["horizon"] is not None:
        T = int(cfg["horizon"])
        if ext.profile is not None and len(ext.profile) != T:
            raise ValueError(f"horizon {T} conflicts with the {len(ext.profile)}-period load profile")
        ext = replace(ext, horizon=T)
    return apply_extensions(grid, ext)


def _ensure_out(cfg) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------

def cmd_gen_data(cfg) -> Path:
    out = _ensure_out(cfg)
    fr = _fragility(cfg)
    data = generate_dataset(int(cfg["n_outage"]), int(cfg["n_operational"]), int(cfg["seed"]), fragility=fr)
    data.save(out / "dataset.csv")
    tr, va = split_indices(data.m, float(cfg["train_fraction"]), int(cfg["seed"]))
    manifest = {
        "seed": int(cfg["seed"]),
        "train_fraction": float(cfg["train_fraction"]),
        "n_train": len(tr),
        "n_validation": len(va),
        "class_counts": {str(k): v for k, v in data.class_counts().items()},
        "fragility": {"beta0": fr.beta0, "beta1": fr.beta1, "beta2": fr.beta2},
        "train": tr.tolist(),
        "validation": va.tolist(),
    }
    (out / "split.json").write_text(json.dumps(manifest, indent=1) + "\n")
    _record(out, "gen-data", {}, ["dataset.csv", "split.json"], {k: cfg[k] for k in ("seed", "n_outage", "n_operational", "train_fraction")})
    log.info("wrote %d samples (%d train / %d validation)", data.m, len(tr), len(va))
    return out / "dataset.csv"


def cmd_train(cfg) -> Path:
    out = _ensure_out(cfg)
    ds_path = Path(cfg["dataset"] or out / "dataset.csv")
    data = Dataset.load(ds_path)
    split_path = Path(cfg["split"]) if cfg["split"] else ds_path.parent / "split.json"
    inputs = {"dataset": ds_path}
    if split_path.exists():
        sp = json.loads(split_path.read_text())
        tr_idx, va_idx = np.array(sp["train"], int), np.array(sp["validation"], int)
        if len(tr_idx) + len(va_idx) != data.m or len(set(sp["train"]) | set(sp["validation"])) != data.m:
            raise ValueError(f"{split_path} does not partition the {data.m}-row dataset")
        inputs["split"] = split_path
    else:
        tr_idx, va_idx = split_indices(data.m, float(cfg["train_fraction"]), int(cfg["seed"]))
    train_set, val_set = data.subset(tr_idx), data.subset(va_idx)

    kernels = [k if isinstance(k, KernelSpec) else KernelSpec.parse(k) for k in cfg["kernels"]]
    cs = [float(c) for c in cfg["cs"]]
    model, diag, table = grid_search(train_set, val_set, kernels, cs)
    (out / "accuracy_table.csv").write_text(table.to_csv())
    if model is None:
        raise NumericalFailure("every grid-search cell failed: " + "; ".join(f"{k} c={c:g}: {e}" for (k, c), e in table.errors.items()))
    model.save(out / "model.json")
    cm = confusion(model, val_set)
    (out / "confusion.csv").write_text(cm.to_csv())
    outputs = ["model.json", "accuracy_table.csv", "confusion.csv"]
    if cfg["emit_boundary"]:
        x1r = (SAFFIR_SIMPSON_MPH[0], CATEGORY5_CAP_MPH)
        a1, a2, F = export_boundary(model, x1r, (0.0, MAX_DISTANCE_KM), int(cfg["boundary_resolution"]))
        (out / "boundary.csv").write_text(boundary_csv(a1, a2, F))
        outputs.append("boundary.csv")
    _record(out, "train", inputs, outputs, {"kernels": [k.label for k in kernels], "cs": cs, "seed": int(cfg["seed"])})
    log.info(
        "selected %s c=%g: validation accuracy %.3f, margin %.4f, mean slack %.4f",
        model.kernel.label, model.c, model.meta["validation_accuracy"], diag.margin, diag.mean_slack,
    )
    return out / "model.json"


def cmd_predict_outages(cfg) -> Path:
    out = _ensure_out(cfg)
    model_path = Path(cfg["model"] or out / "model.json")
    model = SvmModel.load(model_path)
    grid = _load_grid(cfg)
    tracks = cfg["tracks"]
    if not tracks:
        raise ValueError("at least one track file is required")
    items = []
    inputs = {"model": model_path, "case": Path(cfg["case"])}
    if cfg["extensions"]:
        inputs["extensions"] = Path(cfg["extensions"])
    for s, path in enumerate(tracks, start=1):
        track = HurricaneTrack.load(path)
        inputs[f"track{s}"] = Path(path)
        feats = component_features(grid, track)
        X = np.array([[f.x1, f.x2] for f in feats])
        fvals = model.decision_function(X)
        rows = []
        for f, v in zip(feats, fvals):
            rows.append({"kind": f.kind, "id": f.component_id, "x1": f.x1, "x2": f.x2, "f": float(v), "outage": bool(v >= 0)})
        items.append({
            "s": s,
            "track": track.name,
            "gens_out": [r["id"] for r in rows if r["outage"] and r["kind"] == "generator"],
            "lines_out": [r["id"] for r in rows if r["outage"] and r["kind"] == "line"],
            "components": rows,
        })
        log.info("scenario %d (%s): %d generators, %d lines out", s, track.name, len(items[-1]["gens_out"]), len(items[-1]["lines_out"]))
    (out / "scenarios.json").write_text(json.dumps({"scenarios": items}, indent=1) + "\n")
    _record(out, "predict-outages", inputs, ["scenarios.json"], {})
    return out / "scenarios.json"


def cmd_curtail(cfg) -> Path:
    out = _ensure_out(cfg)
    grid = _load_grid(cfg)
    sc_path = Path(cfg["scenarios"] or out / "scenarios.json")
    scenarios = parse_scenarios(sc_path.read_text(), grid)
    weights = {int(k): float(v) for k, v in (cfg["weights"] or {}).items()}
    try:
        sol = min_load_curtailment(grid, scenarios, weights)
    except CurtailmentError as exc:
        if exc.lp is not None:
            (out / "failed_lp.json").write_text(json.dumps(exc.lp.to_dict()))
            log.error("offending LP written to %s", out / "failed_lp.json")
        raise
    (out / "curtailment.csv").write_text(sol.report_csv())
    (out / "solution.json").write_text(sol.to_json())
    crit = sol.critical_buses()
    lines = ["bus,curtailed_share,scenario"] + [f"{r['bus']},{r['share']:.6f},{r['scenario']}" for r in crit]
    (out / "critical_buses.csv").write_text("\n".join(lines) + "\n")
    outputs = ["curtailment.csv", "solution.json", "critical_buses.csv"]
    inputs = {"case": Path(cfg["case"]), "scenarios": sc_path}
    if cfg["extensions"]:
        inputs["extensions"] = Path(cfg["extensions"])
    if cfg["emit_verification"]:
        report = verify_solution(grid, scenarios, sol)
        (out / "verification.json").write_text(json.dumps(report.to_dict(), indent=1) + "\n")
        outputs.append("verification.json")
        if not report.ok:
            raise NumericalFailure(f"solution failed verification: {report.flags[0]}")
    _record(out, "curtail", inputs, outputs, {"weights": weights, "horizon": grid.horizon})
    log.info("objective %.6g; most critical: %s", sol.objective, crit[:3])
    return out / "curtailment.csv"


STAGES = [
    ("gen-data", cmd_gen_data),
    ("train", cmd_train),
    ("predict-outages", cmd_predict_outages),
    ("curtail", cmd_curtail),
]


def cmd_pipeline(cfg) -> Path:
    out = _ensure_out(cfg)
    stage_cfg = dict(cfg, dataset=None, split=None, model=None, scenarios=None)
    for name, fn in STAGES:
        try:
            fn(stage_cfg)
        except Exception as exc:
            raise StageError(name, exc) from exc
    return out


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--config", help="JSON file with option values (flags override it)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("-v", "--verbose", action="store_true")


def _add_data(p):
    p.add_argument("--n-outage", dest="n_outage", type=int)
    p.add_argument("--n-operational", dest="n_operational", type=int)
    p.add_argument("--train-fraction", dest="train_fraction", type=float)
    p.add_argument("--fragility", type=_csv_list(float), help="beta0,beta1,beta2")


def _add_train(p):
    p.add_argument("--dataset")
    p.add_argument("--split", help="split manifest written by gen-data")
    p.add_argument("--kernels", type=_csv_list(str), help="e.g. linear,quadratic+1,gaussian:0.5")
    p.add_argument("--cs", type=_csv_list(float), help="e.g. 0.01,0.1,1,10")
    p.add_argument("--emit-boundary", dest="emit_boundary", action="store_true", default=None)
    p.add_argument("--boundary-resolution", dest="boundary_resolution", type=int)


def _add_grid(p):
    p.add_argument("--case", help="MATPOWER case file")
    p.add_argument("--extensions", help="extension JSON file")
    p.add_argument("--horizon", type=int)


def _add_predict(p):
    p.add_argument("--model")
    p.add_argument("--tracks", nargs="+")


def _add_curtail(p):
    p.add_argument("--scenarios")
    p.add_argument("--weights", type=json.loads, help='per-scenario weights, e.g. \'{"1": 0.5}\'')
    p.add_argument("--no-verification", dest="emit_verification", action="store_const", const=False, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stormgrid", description="Hurricane outage prediction and load-curtailment estimation.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    specs = {
        "gen-data": ("generate the labeled synthetic corpus and its train/validation split", [_add_data], cmd_gen_data),
        "train": ("sweep kernels and penalties, keep the best model", [_add_data, _add_train], cmd_train),
        "predict-outages": ("classify grid components under each hurricane track", [_add_grid, _add_predict], cmd_predict_outages),
        "curtail": ("solve the minimum load-curtailment problem", [_add_grid, _add_curtail], cmd_curtail),
        "pipeline": ("run every stage into one directory", [_add_data, _add_train, _add_grid, _add_predict, _add_curtail], cmd_pipeline),
    }
    for name, (help_, adders, fn) in specs.items():
        p = sub.add_parser(name, help=help_)
        _add_common(p)
        for add in adders:
            add(p)
        p.set_defaults(func=fn)
    return ap


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        return _exit_code(exc.cause)
    if isinstance(exc, (NumericalFailure, CurtailmentError, SimplexError, np.linalg.LinAlgError, FloatingPointError)):
        return EXIT_NUMERICAL
    return EXIT_INPUT


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args)
        args.func(cfg)
    except (StageError, NumericalFailure, CurtailmentError, SimplexError, np.linalg.LinAlgError) as exc:
        print(f"stormgrid: error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except (CaseParseError, TrackError, ValueError, KeyError, OSError) as exc:
        print(f"stormgrid: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
