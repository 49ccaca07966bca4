"""Authorization decisions taken by the cloud management system."""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

from .model import PolicyConfig, ProtocolMessage, Registry

FORWARDED = "Forwarded"
DENIED = "Denied"
RATE_LIMITED = "RateLimited"


@dataclass(frozen=True)
class CmsDecision:
    kind: str
    station_id: str | None = None
    reason: str | None = None

    @property
    def forwarded(self):
        return self.kind == FORWARDED

    def __str__(self):
        return f"{self.kind}({self.reason})" if self.reason else self.kind


def _rate_limited(registry: Registry, user_id: str, policy: PolicyConfig, clock_s: float) -> bool:
    log = registry.request_log.setdefault(user_id, [])
    log.append(clock_s)
    if policy.rate_limit_per_window is None:
        return False
    count, window = policy.rate_limit_per_window
    # requests strictly inside (clock - window, clock]
    first = bisect_right(log, clock_s - window)
    if first > 64:
        del log[:first]
        first = 0
    return len(log) - first > count


def cms_handle_command(msg: ProtocolMessage, policy: PolicyConfig, registry: Registry, clock_s: float) -> CmsDecision:
    """Decide whether a start/stop request is relayed to the station.

    Every request is logged for rate limiting, including refused ones. The
    decision never looks at ``UserAccount.adversarial``.
    """
    if msg.variant not in ("StartChargeRequest", "StopChargeRequest"):
        raise ValueError(f"CMS only decides on start/stop requests, got {msg.variant}")
    user = registry.users.get(msg.user_id)
    if user is None:
        return CmsDecision(DENIED, msg.station_id, "UnknownUser")
    station = registry.stations.get(msg.station_id)
    if station is None:
        return CmsDecision(DENIED, msg.station_id, "UnknownStation")
    if _rate_limited(registry, user.user_id, policy, clock_s):
        return CmsDecision(RATE_LIMITED, station.station_id, "RateLimited")
    if policy.require_station_code and not msg.station_code:
        return CmsDecision(DENIED, station.station_id, "MissingStationCode")
    if policy.proximity_check and not msg.proximate:
        return CmsDecision(DENIED, station.station_id, "NotProximate")
    if policy.verify_ownership:
        if msg.vin is None or msg.vin not in user.owned_vins or msg.vin != station.connected_vin:
            return CmsDecision(DENIED, station.station_id, "OwnershipMismatch")
    if msg.variant == "StopChargeRequest" and policy.authorize_critical:
        session = station.active_session
        if session is not None and session.initiator_user_id != user.user_id:
            return CmsDecision(DENIED, station.station_id, "NotInitiator")
    return CmsDecision(FORWARDED, station.station_id)
