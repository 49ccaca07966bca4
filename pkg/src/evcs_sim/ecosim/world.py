"""Single-threaded discrete-event loop around an :class:`Ecosystem`."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable

from .ecosystem import Ecosystem, Notice
from .model import Classification, EcosystemTuple, classify_tuple

AUDIT_HEADER = ["time_s", "entity", "event", "tuple_cms", "tuple_evcs", "tuple_app", "classification"]


@dataclass
class AuditRow:
    time_s: float
    entity: str
    event: str
    tuple: EcosystemTuple
    classification: Classification

    def csv_row(self):
        return [f"{self.time_s:.3f}", self.entity, self.event, str(self.tuple.cms), str(self.tuple.evcs),
                str(self.tuple.app), str(self.classification)]


class World:
    """Event queue, message latency, notice fan-out and the tuple audit trail.

    Events at equal times run in scheduling order. Tuples are sampled only when
    no message is in flight, so the audit sees settled states.
    """

    def __init__(self, eco: Ecosystem, start_s: float = 0.0, latency_s: float = 0.0):
        self.eco = eco
        self.now = float(start_s)
        self.latency_s = float(latency_s)
        self._queue: list = []
        self._seq = 0
        self._in_flight = 0
        self.audit: list[AuditRow] = []
        self._last_tuple: dict[str, EcosystemTuple] = {}
        self._last_event: dict[str, str] = {}
        self.listeners: list[Callable[[float, Notice], None]] = []
        self.classification_counts = {c: 0 for c in Classification}
        for uid in eco.owners():
            self._last_tuple[uid] = eco.tuple_for(uid)
        self.check_invariants = True

    # -- scheduling --------------------------------------------------------

    def schedule(self, t: float, fn: Callable, *args):
        if t < self.now:
            t = self.now
        self._seq += 1
        heapq.heappush(self._queue, (t, self._seq, fn, args))

    def after(self, delay: float, fn: Callable, *args):
        self.schedule(self.now + delay, fn, *args)

    def _flush_outbox(self):
        while self.eco.outbox:
            msg, _ = self.eco.outbox.pop(0)
            if self.latency_s > 0:
                self._in_flight += 1
                self.schedule(self.now + self.latency_s, self._deliver_delayed, msg)
            else:
                self.eco.deliver(msg, self.now)

    def _deliver_delayed(self, msg):
        self._in_flight -= 1
        self.eco.deliver(msg, self.now)

    def _dispatch_notices(self):
        notices, self.eco.notices = self.eco.notices, []
        for n in notices:
            if n.kind == "GraceEntered":
                self.schedule(float(n.detail), self._expire, n.station_id, float(n.detail))
            if n.user_id is not None:
                self._last_event[n.user_id] = n.kind
            if n.station_id is not None:
                for uid in self._owners_at(n.station_id):
                    self._last_event[uid] = n.kind
            for fn in self.listeners:
                fn(self.now, n)

    def _expire(self, station_id, deadline):
        st = self.eco.registry.stations[station_id]
        if st.grace_deadline_s == deadline:
            self.eco.expire_grace(station_id, self.now)

    def _owners_at(self, station_id):
        st = self.eco.registry.stations.get(station_id)
        if st is None or st.connected_vin is None:
            return ()
        owner = self.eco.registry.vin_owner.get(st.connected_vin)
        return (owner,) if owner else ()

    def _step(self, fn, args):
        fn(*args)
        # handlers may emit messages and notices; with zero latency they cascade here
        while True:
            self._flush_outbox()
            if not self.eco.notices:
                break
            self._dispatch_notices()
            if not self.eco.outbox:
                break

    def run_until(self, t_end: float):
        """Process every event with time <= t_end, then advance the clock to t_end."""
        while self._queue and self._queue[0][0] <= t_end:
            t, _, fn, args = heapq.heappop(self._queue)
            self.now = t
            self._step(fn, args)
            if not self._queue or self._queue[0][0] > t:
                self._settle()
        self.now = max(self.now, t_end)

    def _settle(self):
        if self._in_flight:
            return
        eco = self.eco
        if self.check_invariants:
            eco.check_invariants()
        users = set(eco.touched_users)
        for sid in eco.touched_stations:
            users.update(self._owners_at(sid))
            st = eco.registry.stations[sid]
            if st.pending_user_id:
                users.add(st.pending_user_id)
        users.update(u for u, s in eco.pending_station.items() if s in eco.touched_stations)
        eco.touched_users.clear()
        eco.touched_stations.clear()
        for uid in sorted(users):
            if uid not in self._last_tuple and not eco.registry.users[uid].owned_vins:
                continue
            tup = eco.tuple_for(uid)
            if self._last_tuple.get(uid) == tup:
                continue
            self._last_tuple[uid] = tup
            cls = classify_tuple(tup)
            self.classification_counts[cls] += 1
            self.audit.append(AuditRow(self.now, uid, self._last_event.get(uid, "update"), tup, cls))

    def pending_events(self):
        return len(self._queue)
