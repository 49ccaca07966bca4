"""Declarative attack plans and the schedules they expand to."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from ..errors import ValidationError


@dataclass(frozen=True)
class Hijack:
    target_station: str
    probe_min_s: int = 180
    probe_max_s: int = 240
    start_s: float = 0.0
    attacker: str | None = None

    kind = "Hijack"

    def validate(self):
        if not (0 < self.probe_min_s <= self.probe_max_s):
            raise ValidationError("hijack probe interval must satisfy 0 < min <= max")


@dataclass(frozen=True)
class MassCharge:
    """Switch on ``bus_mw`` at once; alternatively give ``total_mw`` and let the runner spread it."""

    bus_mw: dict = field(default_factory=dict)
    start_s: float = 0.0
    stop_s: float | None = None
    total_mw: float | None = None

    kind = "MassCharge"

    def validate(self):
        _check_nonneg(self.bus_mw)
        if self.total_mw is not None and (self.total_mw < 0 or self.bus_mw):
            raise ValidationError("MassCharge takes either bus_mw or a non-negative total_mw")


@dataclass(frozen=True)
class Oscillatory:
    buses: tuple
    start_s: float = 15.0
    on_duration_s: float = 10.0
    cycle_period_s: float = 10.0
    initial_mw_per_bus: float = 20.0
    increment_mw_per_bus: float = 5.5
    cycles: int = 1

    kind = "Oscillatory"

    def validate(self):
        if self.cycles < 1:
            raise ValidationError("oscillatory attack needs cycles >= 1")
        if self.on_duration_s <= 0 or self.cycle_period_s <= 0:
            raise ValidationError("oscillatory durations must be > 0")
        if self.initial_mw_per_bus < 0 or self.initial_mw_per_bus + (self.cycles - 1) * self.increment_mw_per_bus < 0:
            raise ValidationError("oscillatory attack load must stay >= 0")


@dataclass(frozen=True)
class TargetedTrip:
    bus_mw: dict

    kind = "TargetedTrip"

    def validate(self):
        _check_nonneg(self.bus_mw)


@dataclass(frozen=True)
class V2GAmplified:
    """Oscillatory attack that also discharges hijacked vehicles whenever charging is switched off."""

    discharge_mw_per_bus: float
    base: Oscillatory

    kind = "V2GAmplified"

    def validate(self):
        if self.discharge_mw_per_bus < 0:
            raise ValidationError("discharge magnitude must be >= 0 (it is applied as negative load)")
        self.base.validate()


@dataclass(frozen=True)
class Scripted:
    """Explicit (time_s, bus, delta_mw) steps, for hand-tuned attacks that watch the grid."""

    events: tuple = field(default_factory=tuple)

    kind = "Scripted"

    def validate(self):
        for ev in self.events:
            if len(ev) != 3:
                raise ValidationError(f"scripted event needs (time_s, bus, delta_mw), got {ev!r}")
        net: dict = {}
        for t, bus, mw in sorted(self.events, key=lambda e: e[0]):
            net[bus] = net.get(bus, 0.0) + mw
            if net[bus] < -1e-9:
                raise ValidationError(f"scripted attack drives bus {bus} below zero added load at t={t}")


AttackPlan = Union[Hijack, MassCharge, Oscillatory, TargetedTrip, V2GAmplified, Scripted]


def _check_nonneg(bus_mw):
    for bus, mw in bus_mw.items():
        if mw < 0:
            raise ValidationError(f"attack MW on bus {bus} must be >= 0")


def oscillatory_schedule(plan: Oscillatory):
    """Expand to (time_s, bus, delta_mw) events.

    Cycle k switches on at start + k*cycle_period and off on_duration later.
    When an OFF and the next ON share an instant, the OFF is listed first.
    """
    plan.validate()
    events = []
    for k in range(plan.cycles):
        on = plan.start_s + k * plan.cycle_period_s
        mw = plan.initial_mw_per_bus + k * plan.increment_mw_per_bus
        for bus in plan.buses:
            events.append((on, 1, bus, mw))
            events.append((on + plan.on_duration_s, 0, bus, -mw))
    events.sort(key=lambda e: (e[0], e[1], e[2]))
    return [(t, bus, mw) for t, _, bus, mw in events]


def v2g_schedule(plan: V2GAmplified):
    """Oscillatory events plus a discharge at every OFF, withdrawn at the next ON (or after one on-duration)."""
    base = plan.base
    events = [(t, 1, bus, mw) for t, bus, mw in oscillatory_schedule(base)]
    d = plan.discharge_mw_per_bus
    if d > 0:
        for k in range(base.cycles):
            off = base.start_s + k * base.cycle_period_s + base.on_duration_s
            end = base.start_s + (k + 1) * base.cycle_period_s
            if k == base.cycles - 1 or end <= off:
                end = off + base.on_duration_s
            for bus in base.buses:
                events.append((off, 2, bus, -d))
                events.append((end, 0, bus, d))
    events.sort(key=lambda e: (e[0], e[1], e[2]))
    return [(t, bus, mw) for t, _, bus, mw in events]


def load_events(plan: AttackPlan | None):
    """Bus load steps an attack plan causes, for plans that act directly on load."""
    if plan is None or isinstance(plan, (Hijack, TargetedTrip)):
        return []
    if isinstance(plan, Oscillatory):
        return oscillatory_schedule(plan)
    if isinstance(plan, V2GAmplified):
        return v2g_schedule(plan)
    if isinstance(plan, Scripted):
        plan.validate()
        return sorted(plan.events, key=lambda e: e[0])
    if isinstance(plan, MassCharge):
        ev = [(plan.start_s, b, mw) for b, mw in sorted(plan.bus_mw.items())]
        if plan.stop_s is not None:
            ev += [(plan.stop_s, b, -mw) for b, mw in sorted(plan.bus_mw.items())]
        return ev
    raise TypeError(f"not an attack plan: {plan!r}")


def _bus_map(raw) -> dict:
    return {int(k): float(v) for k, v in raw.items()}


def plan_from_dict(d: dict) -> AttackPlan | None:
    """Build a plan from its scenario-file table; ``kind = "None"`` or an empty table gives no attack."""
    if not d:
        return None
    d = dict(d)
    kind = d.pop("kind", None)
    try:
        if kind in (None, "None", "none"):
            return None
        if kind == "Hijack":
            plan = Hijack(**d)
        elif kind == "MassCharge":
            plan = MassCharge(bus_mw=_bus_map(d.pop("bus_mw", {})), **d)
        elif kind == "Oscillatory":
            plan = Oscillatory(buses=tuple(int(b) for b in d.pop("buses")), **d)
        elif kind == "TargetedTrip":
            plan = TargetedTrip(bus_mw=_bus_map(d.pop("bus_mw")), **d)
        elif kind == "V2GAmplified":
            base = dict(d.pop("base"))
            base.pop("kind", None)
            plan = V2GAmplified(float(d.pop("discharge_mw_per_bus")),
                                Oscillatory(buses=tuple(int(b) for b in base.pop("buses")), **base), **d)
        elif kind == "Scripted":
            plan = Scripted(tuple((float(t), int(b), float(mw)) for t, b, mw in d.pop("events")), **d)
        else:
            raise ValidationError(f"unknown attack kind {kind!r}")
    except (TypeError, KeyError, ValueError) as exc:
        raise ValidationError(f"bad {kind} attack table: {exc}") from None
    plan.validate()
    return plan
