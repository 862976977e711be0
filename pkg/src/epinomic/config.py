"""TOML run configuration: scenario spec files and calibration configs."""
from __future__ import annotations

import datetime as dt
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .coupler import AWARENESS_MODES, Intervention, ScenarioSpec
from .policies import ChangePoint, as_date, levers, load_policy_csv, scenario_policy

_LEVERS = {
    "type": "object",
    "properties": {
        "preset": {"enum": ["P1", "P2", "P3", "P4a", "P4b"]},
        "closed": {"type": "array", "items": {"type": "string"}},
        "all_except": {"type": "array", "items": {"type": "string"}},
        "telework": {"type": "number", "minimum": 0, "maximum": 1},
        "private_ban": {"type": "number", "minimum": 0, "maximum": 1},
        "school": {"type": "number", "minimum": 0, "maximum": 1},
    },
}

SPEC_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "simulation spec",
    "type": "object",
    "required": ["country", "start", "end"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "country": {"enum": ["BE", "SWE"]},
        "dataset": {"type": "string", "description": "dataset directory (default: packaged)"},
        "start": {"type": "string", "format": "date"},
        "end": {"type": "string", "format": "date"},
        "seasonality": {"type": "boolean"},
        "holidays": {"type": "boolean"},
        "exogenous": {"type": "boolean"},
        "awareness": {"enum": list(AWARENESS_MODES)},
        "awareness_date": {"type": "string", "format": "date"},
        "historical_policy": {"type": "boolean"},
        "r0_target": {"type": "number", "exclusiveMinimum": 0},
        "policy_file": {"type": "string", "description": "long-format policy CSV"},
        "seeds": {"type": "object", "additionalProperties": {"type": "number", "minimum": 0}},
        "overrides": {"type": "object", "additionalProperties": {"type": "number"}},
        "policy": {
            "type": "array",
            "items": {**_LEVERS, "required": ["date"],
                      "properties": {**_LEVERS["properties"], "date": {"type": "string", "format": "date"},
                                     "ramp": {"type": "number", "minimum": 0}}},
        },
        "intervention": {
            **_LEVERS, "required": ["trigger", "duration"],
            "properties": {**_LEVERS["properties"], "trigger": {"type": "number", "minimum": 0},
                           "duration": {"type": "integer", "minimum": 1},
                           "release_ramp": {"type": "number", "minimum": 0},
                           "school_days": {"type": "integer", "minimum": 0}},
        },
    },
}

_SPEC_KEYS = set(SPEC_SCHEMA["properties"])


def load_toml(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ValueError(f"{path}: {exc}") from None


def _date(v):
    return v if isinstance(v, dt.date) else as_date(v)


def _levers(ds, entry):
    if "preset" in entry:
        lv = scenario_policy(ds, entry["preset"])
        for k in ("telework", "private_ban", "school"):
            if k in entry:
                getattr(lv, k)[:] = float(entry[k])
        return lv
    unknown = set(entry.get("closed", ())) | set(entry.get("all_except", ()) or ())
    bad = unknown - set(ds.sectors.codes)
    if bad:
        raise ValueError(f"unknown sector code(s) {sorted(bad)}")
    return levers(ds, closed=tuple(entry.get("closed", ())), all_except=entry.get("all_except"),
                  telework=float(entry.get("telework", 0)), private_ban=float(entry.get("private_ban", 0)),
                  school=float(entry.get("school", 0)))


def spec_from_dict(cfg, ds, base_dir="."):
    """Build a :class:`ScenarioSpec` from a parsed spec file."""
    extra = set(cfg) - _SPEC_KEYS
    if extra:
        raise ValueError(f"unknown spec key(s): {', '.join(sorted(extra))}")
    for k in SPEC_SCHEMA["required"]:
        if k not in cfg:
            raise ValueError(f"spec is missing required key {k!r}")
    points = []
    if "policy_file" in cfg:
        points += load_policy_csv(Path(base_dir) / cfg["policy_file"], ds)
    for entry in cfg.get("policy", []):
        points.append(ChangePoint(_date(entry["date"]), _levers(ds, entry), entry.get("ramp")))
    points.sort(key=lambda p: p.date)
    iv = None
    if "intervention" in cfg:
        e = cfg["intervention"]
        iv = Intervention(_levers(ds, e), float(e["trigger"]), int(e["duration"]),
                          float(e.get("release_ramp", 0.0)), e.get("school_days"))
    return ScenarioSpec(
        name=cfg.get("name", "custom"), country=cfg["country"].upper(), start=_date(cfg["start"]),
        end=_date(cfg["end"]), seasonality=bool(cfg.get("seasonality", False)),
        holidays=bool(cfg.get("holidays", False)), exogenous=bool(cfg.get("exogenous", False)),
        awareness=cfg.get("awareness", "threshold"),
        awareness_date=_date(cfg["awareness_date"]) if "awareness_date" in cfg else None,
        seeds={k: float(v) for k, v in cfg.get("seeds", {}).items()}, policy_points=points,
        historical_policy=bool(cfg.get("historical_policy", False)), intervention=iv,
        r0_target=cfg.get("r0_target"), overrides={k: float(v) for k, v in cfg.get("overrides", {}).items()})


CALIBRATION_KEYS = {"observations", "countries", "parameters", "seeds", "mcmc", "optimizer",
                    "initial_condition", "dataset", "priors"}
PRIOR_KEYS = {"lower", "upper", "weight", "mean", "sd", "initial"}


def calibration_config(cfg):
    """Validate a calibration config and fill defaults."""
    extra = set(cfg) - CALIBRATION_KEYS
    if extra:
        raise ValueError(f"unknown calibration key(s): {', '.join(sorted(extra))}")
    if "observations" not in cfg:
        raise ValueError("calibration config needs an 'observations' file")
    for name, entry in cfg.get("priors", {}).items():
        bad = set(entry) - PRIOR_KEYS
        if bad:
            raise ValueError(f"priors.{name}: unknown field(s) {', '.join(sorted(bad))}")
    out = {
        "observations": cfg["observations"],
        "priors": cfg.get("priors", {}),
        "countries": [c.upper() for c in cfg.get("countries", ["BE", "SWE"])],
        "parameters": cfg.get("parameters"),
        "seeds": cfg.get("seeds", {}),
        "dataset": cfg.get("dataset", {}),
        "initial_condition": bool(cfg.get("initial_condition", True)),
        "mcmc": {"walkers": None, "steps": 100, **cfg.get("mcmc", {})},
        "optimizer": {"seed_evals": 200, "param_evals": 200, "max_iter": 3, "tol": 0.01,
                      **cfg.get("optimizer", {})},
    }
    return out
