"""Grid case model and the ``[[bus]] / [[line]] / [[generator]]`` case-file format.

A case file is TOML::

    [case]
    name = "example"
    base_mva = 100

    [[bus]]
    id = 1
    kind = "slack"        # slack | pv | pq
    load_mw = 0.0
    load_mvar = 0.0
    v_setpoint_pu = 1.0

    [[line]]
    from = 1
    to = 2
    r_pu = 0.01
    x_pu = 0.1
    mva_rating = 200

    [[generator]]
    bus = 1
    p_min_mw = 0
    p_max_mw = 500
    cost_a_usd_h = 0
    cost_b_usd_mwh = 10
    cost_c_usd_mw2h = 0.01
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

from .._toml import TOMLDecodeError, load_toml, loads_toml
from ..errors import ValidationError

BUS_KINDS = ("slack", "pv", "pq")


@dataclass
class Bus:
    id: int
    kind: str = "pq"
    load_mw: float = 0.0
    load_mvar: float = 0.0
    v_setpoint_pu: float = 1.0
    name: str = ""


@dataclass
class Line:
    from_bus: int
    to_bus: int
    r_pu: float
    x_pu: float
    mva_rating: float
    in_service: bool = True
    b_pu: float = 0.0

    @property
    def key(self):
        return (min(self.from_bus, self.to_bus), max(self.from_bus, self.to_bus))


@dataclass
class Generator:
    bus: int
    p_min_mw: float
    p_max_mw: float
    cost_a_usd_h: float = 0.0
    cost_b_usd_mwh: float = 0.0
    cost_c_usd_mw2h: float = 0.0
    in_service: bool = True
    p_mw: float = 0.0  # scheduled output used by the power flow
    name: str = ""

    def cost(self, p_mw):
        return self.cost_a_usd_h + self.cost_b_usd_mwh * p_mw + self.cost_c_usd_mw2h * p_mw * p_mw


@dataclass
class GridCase:
    name: str = "case"
    base_mva: float = 100.0
    buses: list[Bus] = field(default_factory=list)
    lines: list[Line] = field(default_factory=list)
    generators: list[Generator] = field(default_factory=list)
    notes: str = ""

    def copy(self) -> "GridCase":
        return copy.deepcopy(self)

    def bus(self, bus_id) -> Bus:
        for b in self.buses:
            if b.id == bus_id:
                return b
        raise KeyError(bus_id)

    @property
    def bus_ids(self):
        return [b.id for b in self.buses]

    @property
    def slack_bus(self) -> Bus:
        return next(b for b in self.buses if b.kind == "slack")

    @property
    def total_load_mw(self) -> float:
        return sum(b.load_mw for b in self.buses)

    @property
    def load_buses(self):
        return [b.id for b in self.buses if b.load_mw > 0]

    def in_service_generators(self):
        return [g for g in self.generators if g.in_service]

    def with_added_load(self, bus_mw, bus_mvar=None) -> "GridCase":
        """Return a copy with ``bus_mw`` (bus id -> MW) added on top of the bus loads."""
        out = self.copy()
        for bus_id, mw in bus_mw.items():
            b = out.bus(bus_id)
            b.load_mw += mw
            if bus_mvar and bus_id in bus_mvar:
                b.load_mvar += bus_mvar[bus_id]
        return out


def validate_case(case: GridCase) -> list[str]:
    """Return every invariant violation found in ``case`` (empty when valid)."""
    problems = []
    ids = [b.id for b in case.buses]
    if len(set(ids)) != len(ids):
        problems.append("bus ids must be unique")
    n_slack = sum(1 for b in case.buses if b.kind == "slack")
    if n_slack != 1:
        problems.append(f"exactly one slack bus required, found {n_slack}")
    if case.base_mva <= 0:
        problems.append("base_mva must be > 0")
    for b in case.buses:
        if b.kind not in BUS_KINDS:
            problems.append(f"bus {b.id}: kind must be one of {BUS_KINDS}, got {b.kind!r}")
        if b.v_setpoint_pu <= 0:
            problems.append(f"bus {b.id}: v_setpoint_pu must be > 0")
    known = set(ids)
    for ln in case.lines:
        tag = f"line ({ln.from_bus},{ln.to_bus})"
        if ln.from_bus not in known or ln.to_bus not in known:
            problems.append(f"{tag}: references unknown bus")
        if ln.from_bus == ln.to_bus:
            problems.append(f"{tag}: from and to must differ")
        if ln.r_pu < 0:
            problems.append(f"{tag}: r_pu must be >= 0")
        if ln.x_pu <= 0:
            problems.append(f"{tag}: x_pu must be > 0")
        if ln.mva_rating <= 0:
            problems.append(f"{tag}: mva_rating must be > 0")
    for i, g in enumerate(case.generators):
        tag = f"generator {i} (bus {g.bus})"
        if g.bus not in known:
            problems.append(f"{tag}: references unknown bus")
        if g.p_min_mw > g.p_max_mw:
            problems.append(f"{tag}: p_min_mw must be <= p_max_mw")
        if g.cost_c_usd_mw2h < 0:
            problems.append(f"{tag}: cost_c_usd_mw2h must be >= 0 (convex cost)")
    return problems


def case_from_dict(data: dict) -> GridCase:
    head = data.get("case", {})
    try:
        buses = [
            Bus(
                id=int(b["id"]),
                kind=str(b.get("kind", "pq")).lower(),
                load_mw=float(b.get("load_mw", 0.0)),
                load_mvar=float(b.get("load_mvar", 0.0)),
                v_setpoint_pu=float(b.get("v_setpoint_pu", 1.0)),
                name=str(b.get("name", "")),
            )
            for b in data.get("bus", [])
        ]
        lines = [
            Line(
                from_bus=int(ln["from"]),
                to_bus=int(ln["to"]),
                r_pu=float(ln["r_pu"]),
                x_pu=float(ln["x_pu"]),
                mva_rating=float(ln["mva_rating"]),
                in_service=bool(ln.get("in_service", True)),
                b_pu=float(ln.get("b_pu", 0.0)),
            )
            for ln in data.get("line", [])
        ]
        gens = [
            Generator(
                bus=int(g["bus"]),
                p_min_mw=float(g.get("p_min_mw", 0.0)),
                p_max_mw=float(g["p_max_mw"]),
                cost_a_usd_h=float(g.get("cost_a_usd_h", 0.0)),
                cost_b_usd_mwh=float(g.get("cost_b_usd_mwh", 0.0)),
                cost_c_usd_mw2h=float(g.get("cost_c_usd_mw2h", 0.0)),
                in_service=bool(g.get("in_service", True)),
                p_mw=float(g.get("p_mw", 0.0)),
                name=str(g.get("name", "")),
            )
            for g in data.get("generator", [])
        ]
    except KeyError as exc:
        raise ValidationError(f"missing required field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad field value: {exc}") from None
    case = GridCase(
        name=str(head.get("name", "case")),
        base_mva=float(head.get("base_mva", 100.0)),
        buses=buses,
        lines=lines,
        generators=gens,
        notes=str(head.get("notes", "")),
    )
    problems = validate_case(case)
    if problems:
        raise ValidationError(problems)
    return case


def load_case(path) -> GridCase:
    try:
        data = load_toml(path)
    except TOMLDecodeError as exc:
        raise ValidationError(f"{Path(path).name}: not a valid case file: {exc}") from None
    return case_from_dict(data)


def loads_case(text: str) -> GridCase:
    return case_from_dict(loads_toml(text))


@dataclass
class LoadProfile:
    hourly_mw: list[float]
    name: str = "profile"

    def __post_init__(self):
        if len(self.hourly_mw) != 24:
            raise ValidationError(f"profile needs 24 hourly values, got {len(self.hourly_mw)}")
        if any(v < 0 for v in self.hourly_mw):
            raise ValidationError("profile values must be >= 0")

    @property
    def average_mw(self) -> float:
        return sum(self.hourly_mw) / 24.0

    def peak_hour(self) -> int:
        return max(range(24), key=lambda h: (self.hourly_mw[h], -h))

    def min_hour(self) -> int:
        return min(range(24), key=lambda h: (self.hourly_mw[h], h))


def load_profile(path) -> LoadProfile:
    try:
        data = load_toml(path)
    except TOMLDecodeError as exc:
        raise ValidationError(f"{Path(path).name}: not a valid profile file: {exc}") from None
    if "hourly_mw" not in data:
        raise ValidationError("profile file needs an 'hourly_mw' array")
    return LoadProfile([float(v) for v in data["hourly_mw"]], name=str(data.get("name", "profile")))
