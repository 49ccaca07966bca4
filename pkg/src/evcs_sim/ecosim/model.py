"""Records, lifecycle states and the tuple legality rule of the charging ecosystem."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum

from ..errors import DuplicateId, ValidationError


class LifecycleState(IntEnum):
    """Numeric lifecycle state shared by the app, the CMS and the station.

    App:  S1 login, S2 station discovery, S3 request pending, S4 session view.
    CMS:  S1 idle, S2 request received, S3 start relayed, S4 session active.
    EVCS: S1 available, S2 vehicle plugged, S3 start received / grace, S4 charging.
    """

    S1 = 1
    S2 = 2
    S3 = 3
    S4 = 4

    def __str__(self):
        return self.name


class Occupancy(str, Enum):
    AVAILABLE = "Available"
    PLUGGED_IDLE = "PluggedIdle"
    GRACE_PENDING = "GracePending"
    CHARGING = "Charging"

    def __str__(self):
        return self.value


EVCS_STATE = {
    Occupancy.AVAILABLE: LifecycleState.S1,
    Occupancy.PLUGGED_IDLE: LifecycleState.S2,
    Occupancy.GRACE_PENDING: LifecycleState.S3,
    Occupancy.CHARGING: LifecycleState.S4,
}


class Classification(str, Enum):
    LEGAL = "Legal"
    HIJACK_SUSPECT = "HijackSuspect"
    OTHER_ILLEGAL = "OtherIllegal"

    def __str__(self):
        return self.value


@dataclass(frozen=True, order=True)
class EcosystemTuple:
    cms: LifecycleState
    evcs: LifecycleState
    app: LifecycleState

    @classmethod
    def of(cls, cms, evcs, app):
        return cls(LifecycleState(cms), LifecycleState(evcs), LifecycleState(app))

    def __str__(self):
        return f"({self.cms},{self.evcs},{self.app})"


_S1, _S2, _S4 = LifecycleState.S1, LifecycleState.S2, LifecycleState.S4


def classify_tuple(t: EcosystemTuple) -> Classification:
    if t.cms == t.evcs == t.app:
        return Classification.LEGAL
    if t.cms == _S1 and t.evcs in (_S1, _S2) and t.app in (_S1, _S2):
        return Classification.LEGAL
    if t.cms == _S4 and t.evcs == _S4 and t.app in (_S1, _S2):
        return Classification.HIJACK_SUSPECT
    return Classification.OTHER_ILLEGAL


@dataclass
class UserAccount:
    user_id: str
    contact_verified: bool = True
    owned_vins: frozenset = frozenset()
    # ground truth for evaluation only; no CMS or EVCS decision reads it
    adversarial: bool = False


@dataclass
class SessionRecord:
    session_id: str
    station_id: str
    initiator_user_id: str
    start_time_s: float
    power_kw: float
    vin: str | None = None
    state: str = "Active"
    stop_time_s: float | None = None
    stopped_by: str | None = None

    @property
    def active(self):
        return self.state == "Active"


@dataclass
class StationRecord:
    station_id: str
    bus_id: int
    connector_kw: float = 11.0
    occupancy: Occupancy = Occupancy.AVAILABLE
    connected_vin: str | None = None
    grace_deadline_s: float | None = None
    pending_user_id: str | None = None
    active_session: SessionRecord | None = None
    sessions_started: int = 0

    def check(self):
        if self.occupancy == Occupancy.CHARGING and self.connected_vin is None:
            raise AssertionError(f"{self.station_id}: Charging without a connected vehicle")
        if self.occupancy == Occupancy.GRACE_PENDING and self.grace_deadline_s is None:
            raise AssertionError(f"{self.station_id}: GracePending without a deadline")
        if (self.active_session is not None) != (self.occupancy == Occupancy.CHARGING):
            raise AssertionError(f"{self.station_id}: active session does not match occupancy")


@dataclass
class PolicyConfig:
    verify_ownership: bool = False
    authorize_critical: bool = False
    require_station_code: bool = False
    proximity_check: bool = False
    rate_limit_per_window: tuple[int, float] | None = None
    grace_period_s: float = 300.0

    def __post_init__(self):
        if self.grace_period_s <= 0:
            raise ValidationError("grace_period_s must be > 0")
        if self.rate_limit_per_window is not None:
            count, window = self.rate_limit_per_window
            if int(count) < 1 or float(window) <= 0:
                raise ValidationError("rate limit needs count >= 1 and window_s > 0")
            self.rate_limit_per_window = (int(count), float(window))

    @classmethod
    def vulnerable(cls, **kw):
        return cls(**kw)

    @classmethod
    def mitigated(cls, **kw):
        return cls(verify_ownership=True, authorize_critical=True, **kw)

    @classmethod
    def hardened(cls, **kw):
        kw.setdefault("rate_limit_per_window", (5, 600.0))
        return cls(verify_ownership=True, authorize_critical=True, require_station_code=True,
                   proximity_check=True, **kw)

    @classmethod
    def preset(cls, name: str, **kw):
        try:
            return {"vulnerable": cls.vulnerable, "mitigated": cls.mitigated, "hardened": cls.hardened}[name](**kw)
        except KeyError:
            raise ValidationError(f"unknown policy preset {name!r}") from None


MESSAGE_VARIANTS = (
    "RegisterUser", "RegisterStation", "StartChargeRequest", "StopChargeRequest",
    "StartConfirm", "StopConfirm", "Heartbeat", "ProbeStatus", "ErrorReply",
)


@dataclass
class ProtocolMessage:
    variant: str
    sender: str
    recipient: str
    correlation_id: int = 0
    user_id: str | None = None
    station_id: str | None = None
    vin: str | None = None
    session_id: str | None = None
    error_code: str | None = None
    status: Occupancy | None = None
    mode: str = "charge"  # "discharge" requests a V2G session
    station_code: bool = False  # code read off the station HMI was supplied
    proximate: bool = False  # sender passed the location check

    def validate(self):
        if self.variant not in MESSAGE_VARIANTS:
            raise ValidationError(f"unknown message variant {self.variant!r}")
        if self.variant in ("StartChargeRequest", "StopChargeRequest"):
            if not self.user_id or not self.station_id:
                raise ValidationError(f"{self.variant} needs user_id and station_id")
        if self.variant == "ErrorReply" and not self.error_code:
            raise ValidationError("ErrorReply needs an error_code")
        return self


@dataclass
class Registry:
    users: dict[str, UserAccount] = field(default_factory=dict)
    stations: dict[str, StationRecord] = field(default_factory=dict)
    sessions: dict[str, SessionRecord] = field(default_factory=dict)
    app_state: dict[str, LifecycleState] = field(default_factory=dict)
    cms_state: dict[str, LifecycleState] = field(default_factory=dict)
    vin_owner: dict[str, str] = field(default_factory=dict)
    vehicle_at: dict[str, str] = field(default_factory=dict)  # vin -> station_id
    request_log: dict[str, list] = field(default_factory=dict)  # user_id -> request times

    def evcs_state(self, station_id) -> LifecycleState:
        return EVCS_STATE[self.stations[station_id].occupancy]

    def add_user(self, account: UserAccount):
        if account.user_id in self.users:
            raise DuplicateId(f"duplicate user id {account.user_id!r}")
        self.users[account.user_id] = account
        self.app_state[account.user_id] = LifecycleState.S1
        for vin in account.owned_vins:
            self.vin_owner[vin] = account.user_id

    def add_station(self, station: StationRecord):
        if station.station_id in self.stations:
            raise DuplicateId(f"duplicate station id {station.station_id!r}")
        station.occupancy = Occupancy.AVAILABLE
        station.connected_vin = None
        station.grace_deadline_s = None
        station.pending_user_id = None
        station.active_session = None
        self.stations[station.station_id] = station
        self.cms_state[station.station_id] = LifecycleState.S1

    def active_sessions(self):
        return [s.active_session for s in self.stations.values() if s.active_session is not None]


def register_entities(accounts, stations) -> Registry:
    """Build a registry with every station Available and every app/CMS view at S1."""
    reg = Registry()
    for acc in accounts:
        reg.add_user(acc)
    for st in stations:
        reg.add_station(st)
    return reg
