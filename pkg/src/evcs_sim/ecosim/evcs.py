"""Charging-station side of the protocol: start/stop handling, grace period, plug events."""

from __future__ import annotations

from dataclasses import dataclass

from .model import Occupancy, PolicyConfig, SessionRecord, StationRecord

CHARGING_STARTED = "ChargingStarted"
GRACE_ENTERED = "GraceEntered"
CHARGING_STOPPED = "ChargingStopped"
GRACE_EXPIRED = "GraceExpired"
PLUGGED = "Plugged"
UNPLUGGED = "Unplugged"
REJECTED = "Rejected"


@dataclass(frozen=True)
class EvcsCommand:
    kind: str  # "Start" | "Stop"
    user_id: str
    mode: str = "charge"  # "charge" | "discharge" (V2G)


@dataclass
class EvcsOutcome:
    kind: str
    session: SessionRecord | None = None
    deadline_s: float | None = None
    reason: str | None = None

    def __str__(self):
        return f"{self.kind}({self.reason})" if self.reason else self.kind


def _open_session(station: StationRecord, user_id: str, clock_s: float, mode: str = "charge") -> SessionRecord:
    station.sessions_started += 1
    power = station.connector_kw if mode == "charge" else -station.connector_kw
    session = SessionRecord(
        session_id=f"{station.station_id}#{station.sessions_started}",
        station_id=station.station_id,
        initiator_user_id=user_id,
        start_time_s=clock_s,
        power_kw=power,
        vin=station.connected_vin,
    )
    station.occupancy = Occupancy.CHARGING
    station.active_session = session
    station.grace_deadline_s = None
    station.pending_user_id = None
    return session


def _close_session(station: StationRecord, clock_s: float, stopped_by: str | None) -> SessionRecord:
    session = station.active_session
    session.state = "Stopped"
    session.stop_time_s = clock_s
    session.stopped_by = stopped_by
    station.active_session = None
    station.occupancy = Occupancy.PLUGGED_IDLE
    return session


def evcs_apply_command(station: StationRecord, cmd: EvcsCommand, vehicle_present: bool,
                       policy: PolicyConfig, clock_s: float) -> EvcsOutcome:
    """Apply a start/stop command the CMS has already forwarded."""
    if cmd.kind == "Start":
        if station.occupancy == Occupancy.CHARGING:
            return EvcsOutcome(REJECTED, reason="AlreadyCharging")
        if station.occupancy == Occupancy.GRACE_PENDING:
            return EvcsOutcome(REJECTED, reason="GracePending")
        if vehicle_present:
            return EvcsOutcome(CHARGING_STARTED, session=_open_session(station, cmd.user_id, clock_s, cmd.mode))
        station.occupancy = Occupancy.GRACE_PENDING
        station.grace_deadline_s = clock_s + policy.grace_period_s
        station.pending_user_id = cmd.user_id
        return EvcsOutcome(GRACE_ENTERED, deadline_s=station.grace_deadline_s)
    if cmd.kind == "Stop":
        if station.occupancy != Occupancy.CHARGING:
            return EvcsOutcome(REJECTED, reason="NotCharging")
        return EvcsOutcome(CHARGING_STOPPED, session=_close_session(station, clock_s, cmd.user_id))
    raise ValueError(f"unknown station command {cmd.kind!r}")


def evcs_expire_grace(station: StationRecord, clock_s: float) -> EvcsOutcome | None:
    """Revert a GracePending station to Available once its deadline has passed."""
    if station.occupancy != Occupancy.GRACE_PENDING or clock_s < station.grace_deadline_s:
        return None
    pending = station.pending_user_id
    station.occupancy = Occupancy.AVAILABLE
    station.grace_deadline_s = None
    station.pending_user_id = None
    return EvcsOutcome(GRACE_EXPIRED, reason=pending)


def evcs_plug(station: StationRecord, vin: str, clock_s: float) -> EvcsOutcome:
    """A vehicle is connected. A pending grace start turns into a session for whoever requested it."""
    if station.connected_vin is not None:
        return EvcsOutcome(REJECTED, reason="Occupied")
    station.connected_vin = vin
    if station.occupancy == Occupancy.GRACE_PENDING:
        return EvcsOutcome(CHARGING_STARTED, session=_open_session(station, station.pending_user_id, clock_s))
    station.occupancy = Occupancy.PLUGGED_IDLE
    return EvcsOutcome(PLUGGED)


def evcs_unplug(station: StationRecord, clock_s: float) -> EvcsOutcome:
    session = None
    if station.occupancy == Occupancy.CHARGING:
        session = _close_session(station, clock_s, None)
    station.connected_vin = None
    station.occupancy = Occupancy.AVAILABLE
    return EvcsOutcome(UNPLUGGED, session=session)


def evcs_vehicle_full(station: StationRecord, clock_s: float) -> EvcsOutcome | None:
    """The vehicle stops drawing power; the session ends but the car stays plugged."""
    if station.occupancy != Occupancy.CHARGING:
        return None
    return EvcsOutcome(CHARGING_STOPPED, session=_close_session(station, clock_s, None))
