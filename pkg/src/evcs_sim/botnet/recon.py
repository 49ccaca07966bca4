"""Polling public station status the way a scraping bot would."""

from __future__ import annotations

from dataclasses import dataclass

from ..ecosim.model import Occupancy

IN_USE = "InUse"
AVAILABLE = "Available"


def public_status(occ: Occupancy) -> str:
    """What the app's map shows: only an active session counts as in use."""
    return IN_USE if occ == Occupancy.CHARGING else AVAILABLE


@dataclass(frozen=True)
class ReconObservation:
    station_id: str
    time_s: float
    status_seen: str
    transition: tuple | None = None
    probe_result: Occupancy | None = None


def recon_poll(stations, poll_interval_s: float, horizon_s: float, world, user_id: str | None = None):
    """Poll every station at start + k*interval for k = 1..horizon/interval.

    The world is advanced to the end of the horizon. An InUse -> Available
    change triggers an immediate status probe, which is the only way to tell
    a vehicle left plugged in from an empty bay.
    """
    if poll_interval_s <= 0:
        raise ValueError("poll_interval_s must be > 0")
    eco = world.eco
    start = world.now
    n_ticks = int(horizon_s // poll_interval_s)
    observations: list[ReconObservation] = []
    last: dict[str, str] = {}

    def tick():
        for sid in stations:
            st = eco.registry.stations.get(sid)
            if st is None:
                continue
            seen = public_status(st.occupancy)
            prev = last.get(sid)
            transition = (prev, seen) if prev is not None and prev != seen else None
            probe = None
            if transition == (IN_USE, AVAILABLE):
                probe = eco.probe(user_id, sid)
            last[sid] = seen
            observations.append(ReconObservation(sid, world.now, seen, transition, probe))

    for k in range(1, n_ticks + 1):
        world.schedule(start + k * poll_interval_s, tick)
    world.run_until(start + n_ticks * poll_interval_s)
    return observations
