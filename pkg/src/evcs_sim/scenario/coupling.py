"""Turning active charging sessions into bus loads."""

from __future__ import annotations

from decimal import Decimal

from ..errors import UnknownStation

KW_PER_MW = Decimal(1000)


def _kw(x) -> Decimal:
    # kW granularity: station ratings are whole or fractional kW given in decimal text
    return x if isinstance(x, Decimal) else Decimal(str(x))


def couple_sessions_to_loads(active_sessions, stations) -> dict:
    """Bus -> MW (``Decimal``) summed over active sessions; discharging sessions count negative.

    ``stations`` maps station id to a :class:`StationRecord` or to a ``(bus, connector_kw)`` pair.
    """
    totals: dict = {}
    for s in active_sessions:
        st = stations.get(s.station_id)
        if st is None:
            raise UnknownStation(s.station_id)
        bus, kw = (st.bus_id, st.connector_kw) if hasattr(st, "bus_id") else st
        sign = -1 if s.power_kw < 0 else 1
        totals[bus] = totals.get(bus, Decimal(0)) + sign * _kw(kw)
    return {bus: kw / KW_PER_MW for bus, kw in sorted(totals.items())}
