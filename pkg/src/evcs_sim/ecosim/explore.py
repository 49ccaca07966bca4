"""Breadth-first exploration of protocol interleavings on small instances."""

from __future__ import annotations

from collections import deque
from dataclasses import replace

from ..errors import BudgetExceeded
from .ecosystem import Ecosystem
from .model import Occupancy, PolicyConfig, StationRecord, UserAccount, register_entities

MAX_USERS = 3
MAX_STATIONS = 2
MAX_DEPTH = 14


def small_instance(policy: PolicyConfig, n_users: int, n_stations: int, n_attackers: int | None = None) -> Ecosystem:
    """Attackers come first (``bot0``...), then vehicle owners (``owner0``...) with one VIN each."""
    if n_attackers is None:
        n_attackers = 1 if n_users >= 2 else 0
    accounts = [UserAccount(f"bot{i}", adversarial=True) for i in range(n_attackers)]
    accounts += [UserAccount(f"owner{i}", owned_vins=frozenset({f"VIN{i}"}))
                 for i in range(n_users - n_attackers)]
    stations = [StationRecord(f"st{j}", bus_id=1) for j in range(n_stations)]
    eco = Ecosystem(register_entities(accounts, stations), policy)
    for acc in accounts:
        if acc.adversarial:
            eco.login(acc.user_id)
    return eco


def state_key(eco: Ecosystem):
    reg = eco.registry
    apps = tuple(int(reg.app_state[u]) for u in reg.users)
    stations = tuple(
        (st.occupancy.value, st.connected_vin, st.pending_user_id,
         st.active_session.initiator_user_id if st.active_session else None,
         int(reg.cms_state[sid]))
        for sid, st in reg.stations.items()
    )
    pending = tuple(eco.pending_station.get(u) for u in reg.users)
    return apps, stations, pending


def enabled_actions(eco: Ecosystem):
    """Every action any party can take next. Owners act honestly; bots act remotely."""
    reg = eco.registry
    acts = []
    free = [sid for sid, st in reg.stations.items() if st.connected_vin is None]
    for uid, acc in reg.users.items():
        app = reg.app_state[uid]
        if acc.owned_vins:
            vin = sorted(acc.owned_vins)[0]
            at = reg.vehicle_at.get(vin)
            if app == 1:
                acts.append(("login", uid))
            if at is None:
                acts.extend(("plug", uid, sid) for sid in free)
            else:
                acts.append(("unplug", uid))
            if app == 2:
                if at is not None:
                    acts.append(("start", uid, at))
                else:
                    acts.extend(("start", uid, sid) for sid, st in reg.stations.items()
                                if st.occupancy == Occupancy.AVAILABLE)
            if app == 4:
                session = next((s for s in reg.active_sessions() if s.initiator_user_id == uid), None)
                acts.append(("stop", uid, session.station_id if session else at))
            if app in (3, 4):
                acts.append(("refresh", uid))
        else:
            for sid in reg.stations:
                acts.append(("start", uid, sid))
                acts.append(("stop", uid, sid))
    for sid, st in reg.stations.items():
        if st.occupancy == Occupancy.GRACE_PENDING:
            acts.append(("expire", sid))
    return acts


def apply_action(eco: Ecosystem, act) -> Ecosystem:
    nxt = eco.clone()
    kind = act[0]
    owner_msg = dict(station_code=True, proximate=True)
    if kind == "login":
        nxt.login(act[1])
    elif kind == "plug":
        vin = sorted(nxt.registry.users[act[1]].owned_vins)[0]
        nxt.plug(vin, act[2], 0.0)
    elif kind == "unplug":
        vin = sorted(nxt.registry.users[act[1]].owned_vins)[0]
        nxt.unplug(vin, 0.0)
    elif kind == "start":
        kw = owner_msg if nxt.registry.users[act[1]].owned_vins else {}
        nxt.request_start(act[1], act[2], 0.0, **kw)
    elif kind == "stop":
        if act[2] is not None:
            kw = owner_msg if nxt.registry.users[act[1]].owned_vins else {}
            nxt.request_stop(act[1], act[2], 0.0, **kw)
    elif kind == "refresh":
        nxt.refresh(act[1])
    elif kind == "expire":
        st = nxt.registry.stations[act[1]]
        nxt.expire_grace(act[1], st.grace_deadline_s)
    else:
        raise ValueError(kind)
    nxt.drain(0.0)
    nxt.notices.clear()
    nxt.touched_stations.clear()
    nxt.touched_users.clear()
    return nxt


def enumerate_reachable(policy: PolicyConfig, n_users: int, n_stations: int, depth: int,
                        n_attackers: int | None = None, max_states: int = 200_000):
    """Return every (CMS, EVCS, App) tuple any vehicle owner's app is ever seen in.

    Each step is one complete exchange: a user action or physical event plus
    all messages it triggers. Rate limiting is time-based and is switched off
    here; it delays requests but does not change which states exist.
    """
    if n_users > MAX_USERS or n_stations > MAX_STATIONS or depth > MAX_DEPTH:
        raise ValueError(f"instance too large: at most {MAX_USERS} users, {MAX_STATIONS} stations, depth {MAX_DEPTH}")
    policy = replace(policy, rate_limit_per_window=None)
    root = small_instance(policy, n_users, n_stations, n_attackers)
    owners = root.owners()
    seen = {state_key(root)}
    tuples = {root.tuple_for(u) for u in owners}
    frontier = deque([(root, 0)])
    while frontier:
        eco, d = frontier.popleft()
        if d >= depth:
            continue
        for act in enabled_actions(eco):
            nxt = apply_action(eco, act)
            key = state_key(nxt)
            if key in seen:
                continue
            seen.add(key)
            if len(seen) > max_states:
                raise BudgetExceeded(f"more than {max_states} states")
            for u in owners:
                tuples.add(nxt.tuple_for(u))
            frontier.append((nxt, d + 1))
    return tuples
