"""The repeated start-request loop used to grab a parked victim's session."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from ..errors import UnknownStation
from .plans import Hijack


@dataclass
class HijackReport:
    attacker: str
    target_station: str
    attempts: int = 0
    attempt_times_s: list = field(default_factory=list)
    success_time_s: float | None = None
    session_id: str | None = None
    denied: Counter = field(default_factory=Counter)
    grace_entries: int = 0
    grace_expiries: int = 0
    charging_started: int = 0

    @property
    def success(self):
        return self.success_time_s is not None

    @property
    def outcome(self):
        return f"Success@{self.success_time_s:.0f}s" if self.success else "Failure"

    def summary(self):
        denied = ", ".join(f"{k}={v}" for k, v in sorted(self.denied.items())) or "none"
        return (f"hijack {self.attacker} -> {self.target_station}: {self.outcome}, attempts={self.attempts}, "
                f"denied[{denied}], grace entered={self.grace_entries} expired={self.grace_expiries}")


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def execute_hijack(plan: Hijack, world, rng_seed, attacker: str | None = None, horizon_s: float | None = None,
                   run: bool = True) -> HijackReport:
    """Send start requests for the target every U[probe_min, probe_max] seconds until one sticks.

    The attacker never scans the station code and is never near the bay;
    otherwise the requests are ordinary app traffic. With ``run=False`` the
    loop is only scheduled and the caller drives the world.
    """
    eco = world.eco
    sid = plan.target_station
    if sid not in eco.registry.stations:
        raise UnknownStation(sid)
    attacker = attacker or plan.attacker
    if attacker is None or attacker not in eco.registry.users:
        raise ValueError(f"attacker account {attacker!r} is not registered")
    rng = _rng(rng_seed)
    report = HijackReport(attacker, sid)
    end = None if horizon_s is None else world.now + horizon_s
    if eco.registry.app_state[attacker] == 1:
        eco.login(attacker)

    def on_notice(t, n):
        if n.station_id != sid:
            return
        if n.kind == "CmsDecision" and n.user_id == attacker and "Forwarded" not in n.detail:
            reason = n.detail.split("(", 1)[-1].rstrip(")") if "(" in n.detail else n.detail
            report.denied[reason] += 1
        elif n.kind == "GraceEntered" and n.user_id == attacker:
            report.grace_entries += 1
        elif n.kind == "GraceExpired" and n.user_id == attacker:
            report.grace_expiries += 1
        elif n.kind == "ChargingStarted":
            report.charging_started += 1
            if n.user_id == attacker and report.success_time_s is None:
                report.success_time_s = t
                report.session_id = n.session_id

    world.listeners.append(on_notice)

    def attempt():
        if report.success or (end is not None and world.now > end):
            return
        report.attempts += 1
        report.attempt_times_s.append(world.now)
        eco.request_start(attacker, sid, world.now)
        gap = int(rng.integers(plan.probe_min_s, plan.probe_max_s + 1))
        world.after(gap, attempt)

    world.schedule(max(world.now, plan.start_s), attempt)
    if run and end is not None:
        world.run_until(end)
    return report
