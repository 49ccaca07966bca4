"""Message handling for the app <-> CMS <-> station triangle.

``Ecosystem`` owns the registry and turns user actions and physical events
into protocol messages. Messages sit in ``outbox`` until someone delivers
them: the event loop in :mod:`evcs_sim.ecosim.world` adds latency, while the
state-space explorer drains them immediately.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

from .cms import cms_handle_command
from .evcs import (
    CHARGING_STARTED, CHARGING_STOPPED, GRACE_ENTERED, EvcsCommand, evcs_apply_command,
    evcs_expire_grace, evcs_plug, evcs_unplug, evcs_vehicle_full,
)
from .model import (
    EcosystemTuple, LifecycleState, Occupancy, PolicyConfig, ProtocolMessage, Registry,
)

S1, S2, S3, S4 = LifecycleState.S1, LifecycleState.S2, LifecycleState.S3, LifecycleState.S4
CMS = "cms"


def app_addr(user_id):
    return f"app:{user_id}"


def evcs_addr(station_id):
    return f"evcs:{station_id}"


@dataclass
class Notice:
    """Something observable happened; consumed by the event loop for logs and load coupling."""

    kind: str
    station_id: str | None = None
    user_id: str | None = None
    session_id: str | None = None
    detail: str = ""


class Ecosystem:
    def __init__(self, registry: Registry, policy: PolicyConfig):
        self.registry = registry
        self.policy = policy
        self.outbox: list[tuple[ProtocolMessage, str | None]] = []
        self.notices: list[Notice] = []
        self.pending_station: dict[str, str] = {}  # user_id -> station of an outstanding start
        self.touched_stations: set[str] = set()
        self.touched_users: set[str] = set()
        self.message_count = 0
        self._corr = 0

    def clone(self) -> "Ecosystem":
        return copy.deepcopy(self)

    # -- helpers ---------------------------------------------------------

    def _send(self, msg: ProtocolMessage, trigger: str | None = None):
        msg.validate()
        self.message_count += 1
        self.outbox.append((msg, trigger))

    def _next_corr(self):
        self._corr += 1
        return self._corr

    def _set_app(self, user_id, state):
        if self.registry.app_state[user_id] != state:
            self.registry.app_state[user_id] = state
        self.touched_users.add(user_id)

    def _set_cms(self, station_id, state):
        self.registry.cms_state[station_id] = state
        self.touched_stations.add(station_id)

    def _vin_of(self, user_id, station_id=None):
        owned = sorted(self.registry.users[user_id].owned_vins)
        if station_id is not None:
            at = self.registry.stations[station_id].connected_vin
            if at in owned:
                return at
        return owned[0] if owned else None

    # -- user actions ----------------------------------------------------

    def login(self, user_id):
        if self.registry.app_state[user_id] == S1:
            self._set_app(user_id, S2)

    def refresh(self, user_id):
        """The app re-reads its status and drops a stale session or request view."""
        state = self.registry.app_state[user_id]
        if state == S4 and not any(s.initiator_user_id == user_id for s in self.registry.active_sessions()):
            self._set_app(user_id, S2)
        elif state == S3 and user_id not in self.pending_station:
            self._set_app(user_id, S2)

    def request_start(self, user_id, station_id, clock_s, vin=None, station_code=False, proximate=False,
                      mode="charge"):
        if vin is None:
            vin = self._vin_of(user_id, station_id if station_id in self.registry.stations else None)
        if self.registry.app_state.get(user_id) in (S1, S2):
            self._set_app(user_id, S3)
        self.pending_station[user_id] = station_id
        msg = ProtocolMessage("StartChargeRequest", app_addr(user_id), CMS, self._next_corr(),
                              user_id=user_id, station_id=station_id, vin=vin,
                              station_code=station_code, proximate=proximate, mode=mode)
        self._send(msg, "start")
        return msg

    def request_stop(self, user_id, station_id, clock_s, vin=None, station_code=False, proximate=False):
        if vin is None:
            vin = self._vin_of(user_id, station_id if station_id in self.registry.stations else None)
        msg = ProtocolMessage("StopChargeRequest", app_addr(user_id), CMS, self._next_corr(),
                              user_id=user_id, station_id=station_id, vin=vin,
                              station_code=station_code, proximate=proximate)
        self._send(msg, "stop")
        return msg

    def probe(self, user_id, station_id) -> Occupancy | None:
        """Status query answered by the CMS; the reply tells PluggedIdle apart from Available."""
        self.message_count += 2
        st = self.registry.stations.get(station_id)
        return None if st is None else st.occupancy

    # -- physical events -------------------------------------------------

    def plug(self, vin, station_id, clock_s):
        st = self.registry.stations[station_id]
        out = evcs_plug(st, vin, clock_s)
        if out.kind == "Rejected":
            return out
        self.registry.vehicle_at[vin] = station_id
        self.touched_stations.add(station_id)
        owner = self.registry.vin_owner.get(vin)
        if owner:
            self.touched_users.add(owner)
        self.notices.append(Notice("Plugged", station_id, owner, detail=vin))
        if out.kind == CHARGING_STARTED:
            self._started(st, out.session, clock_s)
        return out

    def unplug(self, vin, clock_s):
        station_id = self.registry.vehicle_at.pop(vin, None)
        if station_id is None:
            return None
        st = self.registry.stations[station_id]
        out = evcs_unplug(st, clock_s)
        self.touched_stations.add(station_id)
        owner = self.registry.vin_owner.get(vin)
        if owner:
            self.touched_users.add(owner)
        if out.session is not None:
            self._stopped(st, out.session, None)
        self.notices.append(Notice("Unplugged", station_id, owner, detail=vin))
        return out

    def vehicle_full(self, station_id, clock_s):
        st = self.registry.stations[station_id]
        out = evcs_vehicle_full(st, clock_s)
        if out is not None:
            self.touched_stations.add(station_id)
            self._stopped(st, out.session, None)
        return out

    def expire_grace(self, station_id, clock_s):
        st = self.registry.stations[station_id]
        out = evcs_expire_grace(st, clock_s)
        if out is None:
            return None
        self.touched_stations.add(station_id)
        self.notices.append(Notice("GraceExpired", station_id, out.reason))
        self._send(ProtocolMessage("ErrorReply", evcs_addr(station_id), CMS, 0, user_id=out.reason,
                                   station_id=station_id, error_code="GraceExpired"), "grace_expired")
        return out

    # -- station-originated confirmations ------------------------------------

    def _started(self, st, session, clock_s):
        self.registry.sessions[session.session_id] = session
        self.notices.append(Notice("ChargingStarted", st.station_id, session.initiator_user_id, session.session_id))
        self._send(ProtocolMessage("StartConfirm", evcs_addr(st.station_id), CMS, 0,
                                   user_id=session.initiator_user_id, station_id=st.station_id,
                                   session_id=session.session_id, vin=session.vin), "start_confirm")

    def _stopped(self, st, session, requester):
        self.notices.append(Notice("ChargingStopped", st.station_id, requester or session.initiator_user_id,
                                   session.session_id, detail=requester or ""))
        self._send(ProtocolMessage("StopConfirm", evcs_addr(st.station_id), CMS, 0,
                                   user_id=requester or session.initiator_user_id, station_id=st.station_id,
                                   session_id=session.session_id), "stop_confirm")

    # -- delivery ----------------------------------------------------------

    def deliver(self, msg: ProtocolMessage, clock_s: float):
        if msg.recipient == CMS:
            self._at_cms(msg, clock_s)
        elif msg.recipient.startswith("evcs:"):
            self._at_evcs(msg, clock_s)
        elif msg.recipient.startswith("app:"):
            self._at_app(msg, clock_s)
        else:
            raise ValueError(f"unknown recipient {msg.recipient!r}")

    def drain(self, clock_s: float, limit: int = 10_000):
        n = 0
        while self.outbox:
            msg, _ = self.outbox.pop(0)
            self.deliver(msg, clock_s)
            n += 1
            if n > limit:
                raise RuntimeError("message storm: outbox did not drain")

    def _at_cms(self, msg, clock_s):
        reg = self.registry
        sid = msg.station_id
        if msg.variant in ("StartChargeRequest", "StopChargeRequest"):
            if msg.variant == "StartChargeRequest" and reg.cms_state.get(sid) == S1:
                self._set_cms(sid, S2)
            decision = cms_handle_command(msg, self.policy, reg, clock_s)
            self.notices.append(Notice("CmsDecision", sid, msg.user_id, detail=f"{msg.variant}:{decision}"))
            if decision.forwarded:
                if msg.variant == "StartChargeRequest":
                    if reg.cms_state[sid] == S2:
                        self._set_cms(sid, S3)
                    fwd = ProtocolMessage("StartChargeRequest", CMS, evcs_addr(sid), msg.correlation_id,
                                          user_id=msg.user_id, station_id=sid, vin=msg.vin, mode=msg.mode)
                else:
                    fwd = ProtocolMessage("StopChargeRequest", CMS, evcs_addr(sid), msg.correlation_id,
                                          user_id=msg.user_id, station_id=sid, vin=msg.vin)
                self._send(fwd, "forward")
            else:
                if sid in reg.cms_state and reg.cms_state[sid] == S2:
                    self._set_cms(sid, S1)
                self._send(ProtocolMessage("ErrorReply", CMS, app_addr(msg.user_id), msg.correlation_id,
                                           user_id=msg.user_id, station_id=sid,
                                           error_code=decision.reason or decision.kind), "denied")
        elif msg.variant == "StartConfirm":
            self._set_cms(sid, S4)
            self._send(ProtocolMessage("StartConfirm", CMS, app_addr(msg.user_id), msg.correlation_id,
                                       user_id=msg.user_id, station_id=sid, session_id=msg.session_id), "relay")
        elif msg.variant == "StopConfirm":
            st = reg.stations[sid]
            self._set_cms(sid, S4 if st.active_session is not None else S1)
            self._send(ProtocolMessage("StopConfirm", CMS, app_addr(msg.user_id), msg.correlation_id,
                                       user_id=msg.user_id, station_id=sid, session_id=msg.session_id), "relay")
        elif msg.variant == "ErrorReply":
            if msg.error_code == "GraceExpired":
                self._set_cms(sid, S1)
            if msg.user_id is not None:
                self._send(ProtocolMessage("ErrorReply", CMS, app_addr(msg.user_id), msg.correlation_id,
                                           user_id=msg.user_id, station_id=sid, error_code=msg.error_code), "relay")

    def _at_evcs(self, msg, clock_s):
        st = self.registry.stations[msg.station_id]
        kind = "Start" if msg.variant == "StartChargeRequest" else "Stop"
        out = evcs_apply_command(st, EvcsCommand(kind, msg.user_id, msg.mode), st.connected_vin is not None,
                                 self.policy, clock_s)
        self.touched_stations.add(st.station_id)
        if out.kind == CHARGING_STARTED:
            self._started(st, out.session, clock_s)
        elif out.kind == GRACE_ENTERED:
            self.notices.append(Notice("GraceEntered", st.station_id, msg.user_id, detail=repr(float(out.deadline_s))))
        elif out.kind == CHARGING_STOPPED:
            self._stopped(st, out.session, msg.user_id)
        else:
            self.notices.append(Notice("Rejected", st.station_id, msg.user_id, detail=out.reason))
            self._send(ProtocolMessage("ErrorReply", evcs_addr(st.station_id), CMS, msg.correlation_id,
                                       user_id=msg.user_id, station_id=st.station_id, error_code=out.reason),
                       "rejected")

    def _at_app(self, msg, clock_s):
        uid = msg.user_id
        if uid not in self.registry.app_state:
            return
        state = self.registry.app_state[uid]
        if msg.variant == "StartConfirm":
            if self.pending_station.get(uid) == msg.station_id:
                self.pending_station.pop(uid, None)
            self._set_app(uid, S4)
        elif msg.variant == "StopConfirm":
            if state == S4:
                self._set_app(uid, S2)
        elif msg.variant == "ErrorReply":
            if self.pending_station.get(uid) == msg.station_id and msg.error_code != "NotCharging":
                self.pending_station.pop(uid, None)
            if state == S3 and uid not in self.pending_station:
                self._set_app(uid, S2)
            elif state == S4:
                self.refresh(uid)

    # -- observation ---------------------------------------------------------

    def focus_station(self, user_id):
        reg = self.registry
        for vin in sorted(reg.users[user_id].owned_vins):
            if vin in reg.vehicle_at:
                return reg.vehicle_at[vin]
        return self.pending_station.get(user_id)

    def tuple_for(self, user_id) -> EcosystemTuple:
        reg = self.registry
        sid = self.focus_station(user_id)
        app = reg.app_state[user_id]
        if sid is None or sid not in reg.stations:
            return EcosystemTuple(S1, S1, app)
        return EcosystemTuple(reg.cms_state[sid], reg.evcs_state(sid), app)

    def owners(self):
        """Users that own at least one vehicle; their apps are the ones the legality rule protects."""
        return [u for u, acc in self.registry.users.items() if acc.owned_vins]

    def check_invariants(self):
        for st in self.registry.stations.values():
            st.check()
