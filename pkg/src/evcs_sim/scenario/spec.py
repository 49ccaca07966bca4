"""Scenario files: schema, defaults, dotted overrides and the config hash.

Every table and key, with defaults::

    [scenario]
    name = "unnamed"
    grid_case = "<path>"            # required; relative paths resolve from the scenario file
    profile = "<path>"              # optional; needed when sim.hour is set
    arrivals = "<path>"             # optional; built-in weekday/weekend model otherwise

    [policy]
    preset = "vulnerable"           # vulnerable | mitigated | hardened
    # any PolicyConfig field overrides the preset:
    # verify_ownership, authorize_critical, require_station_code, proximity_check,
    # rate_limit_per_window = [count, window_s], grace_period_s

    [population]
    n_bots = 1
    connector_kw = 11
    n_stations = 0                  # spread over load buses in proportion to base load
    stations_per_bus = {}           # explicit {bus = count}; wins over n_stations

    [victims]
    count = 0
    mode = "arrivals"               # arrivals | window
    day = "weekday"                 # arrival model variant
    plug_window_s = [1500, 1860]    # window mode: plug-in offset from sim start
    start_session = true            # start own session after plugging in
    start_delay_s = [30, 180]       # time to take out the phone
    charge_s = [3600, 10800]
    dwell_median_h = 3.0            # extra idle time after charging, lognormal
    dwell_sigma = 1.0

    [attack]
    kind = "None"                   # Hijack | MassCharge | Oscillatory | TargetedTrip | V2GAmplified | Scripted
    # plus the variant's fields

    [sim]
    seed = <int>                    # required
    start_s = 0                     # wall-clock offset (seconds after midnight)
    horizon_s = 3600
    macro_step_s = 1
    dt_s = 0.01
    latency_s = 0
    hour = -1                       # profile hour for grid loading; -1 keeps case loads
    dynamics_duration_s = 60
    distribution = "proportional"   # how MassCharge.total_mw is spread: random | equal | proportional

    [outputs]
    directory = "out"
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .._toml import TOMLDecodeError, load_toml, loads_toml
from ..botnet.plans import AttackPlan, plan_from_dict
from ..ecosim.model import PolicyConfig
from ..errors import ValidationError

DEFAULTS = {
    "scenario": {"name": "unnamed", "grid_case": None, "profile": None, "arrivals": None},
    "policy": {"preset": "vulnerable"},
    "population": {"n_bots": 1, "connector_kw": 11, "n_stations": 0, "stations_per_bus": {}},
    "victims": {"count": 0, "mode": "arrivals", "day": "weekday", "plug_window_s": [1500, 1860],
                "start_session": True, "start_delay_s": [30, 180], "charge_s": [3600, 10800],
                "dwell_median_h": 3.0, "dwell_sigma": 1.0},
    "attack": {"kind": "None"},
    "sim": {"seed": None, "start_s": 0, "horizon_s": 3600, "macro_step_s": 1, "dt_s": 0.01, "latency_s": 0,
            "hour": -1, "dynamics_duration_s": 60, "distribution": "proportional"},
    "outputs": {"directory": "out"},
}
POLICY_FIELDS = ("verify_ownership", "authorize_critical", "require_station_code", "proximity_check",
                 "rate_limit_per_window", "grace_period_s")


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k not in ("stations_per_bus", "bus_mw"):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_override(text: str):
    """``a.b.c=value``; the value is read as a TOML literal, falling back to a bare string."""
    if "=" not in text:
        raise ValidationError(f"override {text!r} is not key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key or any(not p for p in key.split(".")):
        raise ValidationError(f"bad override key {key!r}")
    try:
        value = loads_toml(f"v = {raw}")["v"]
    except TOMLDecodeError:
        value = raw
    return key, value


def apply_override(raw: dict, key: str, value):
    parts = key.split(".")
    if parts[0] not in DEFAULTS:
        raise ValidationError(f"unknown override section {parts[0]!r}")
    node = raw
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ValidationError(f"override {key!r} descends into a non-table")
    node[parts[-1]] = value


@dataclass
class ScenarioSpec:
    raw: dict
    base_dir: Path
    policy: PolicyConfig
    attack: AttackPlan | None

    @property
    def name(self):
        return self.raw["scenario"]["name"]

    def section(self, name):
        return self.raw[name]

    @property
    def sim(self):
        return self.raw["sim"]

    @property
    def seed(self) -> int:
        return int(self.raw["sim"]["seed"])

    def path(self, key) -> Path | None:
        v = self.raw["scenario"].get(key)
        if v is None:
            return None
        p = Path(v)
        return p if p.is_absolute() else (self.base_dir / p)

    @property
    def output_dir(self) -> Path:
        p = Path(self.raw["outputs"]["directory"])
        return p if p.is_absolute() else (self.base_dir / p)

    def config_hash(self) -> str:
        """sha256 over the canonical spec plus the bytes of every referenced input file."""
        h = hashlib.sha256()
        canon = _merge(self.raw, {"outputs": {"directory": None}})
        h.update(json.dumps(canon, sort_keys=True, separators=(",", ":")).encode())
        for key in ("grid_case", "profile", "arrivals"):
            p = self.path(key)
            if p is not None:
                h.update(key.encode())
                h.update(p.read_bytes())
        return h.hexdigest()


def _policy_from(d: dict) -> PolicyConfig:
    d = dict(d)
    preset = d.pop("preset", "vulnerable")
    unknown = set(d) - set(POLICY_FIELDS)
    if unknown:
        raise ValidationError(f"unknown policy keys {sorted(unknown)}")
    if d.get("rate_limit_per_window") is not None:
        d["rate_limit_per_window"] = tuple(d["rate_limit_per_window"])
    return PolicyConfig.preset(preset, **d)


def spec_from_dict(raw: dict, base_dir=".", overrides=()) -> ScenarioSpec:
    raw = copy.deepcopy(raw)
    for item in overrides:
        key, value = parse_override(item) if isinstance(item, str) else item
        apply_override(raw, key, value)
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise ValidationError(f"unknown scenario tables {sorted(unknown)}")
    raw = _merge(DEFAULTS, raw)
    problems = []
    for section, keys in raw.items():
        if section in ("policy", "attack"):
            continue
        extra = set(keys) - set(DEFAULTS[section])
        if extra:
            problems.append(f"unknown keys in [{section}]: {sorted(extra)}")
    sim = raw["sim"]
    if sim["seed"] is None:
        problems.append("sim.seed is required")
    elif not isinstance(sim["seed"], int) or sim["seed"] < 0:
        problems.append("sim.seed must be a non-negative integer")
    if raw["scenario"]["grid_case"] is None:
        problems.append("scenario.grid_case is required")
    if sim["macro_step_s"] < sim["dt_s"]:
        problems.append("sim.macro_step_s must be >= sim.dt_s")
    if sim["horizon_s"] <= 0 or sim["macro_step_s"] <= 0:
        problems.append("sim.horizon_s and sim.macro_step_s must be > 0")
    if not (-1 <= sim["hour"] < 24):
        problems.append("sim.hour must be -1 or in [0, 24)")
    if raw["victims"]["mode"] not in ("arrivals", "window"):
        problems.append("victims.mode must be arrivals or window")
    policy = attack = None
    try:
        policy = _policy_from(raw["policy"])
    except (ValidationError, TypeError) as exc:
        problems.append(str(exc))
    try:
        attack = plan_from_dict(raw["attack"])
    except ValidationError as exc:
        problems.extend(exc.problems)
    spec = ScenarioSpec(raw, Path(base_dir), policy, attack)
    if raw["scenario"]["grid_case"] is not None:
        for key in ("grid_case", "profile", "arrivals"):
            p = spec.path(key)
            if p is not None and not p.is_file():
                problems.append(f"scenario.{key}: file not found: {p}")
    if sim["hour"] >= 0 and raw["scenario"]["profile"] is None:
        problems.append("sim.hour needs scenario.profile")
    if problems:
        raise ValidationError(problems)
    return spec


def load_spec(path, overrides=()) -> ScenarioSpec:
    path = Path(path)
    try:
        raw = load_toml(path)
    except TOMLDecodeError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    return spec_from_dict(raw, path.parent, overrides)
