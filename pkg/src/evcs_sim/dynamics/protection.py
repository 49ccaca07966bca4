"""Under-frequency load shedding and over-frequency generator tripping."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ValidationError


@dataclass(frozen=True)
class ProtectionConfig:
    ufls_threshold_hz: float = 59.3
    ufls_shed_fraction: float = 0.05
    ufls_lockout_s: float = 5.0
    of_trip_threshold_hz: float = 61.8
    of_trip_policy: str = "largest_first"
    enabled: bool = True

    def __post_init__(self):
        if not (self.ufls_threshold_hz < 60.0 < self.of_trip_threshold_hz):
            raise ValidationError("protection thresholds must bracket 60 Hz")
        if not (0.0 < self.ufls_shed_fraction < 1.0):
            raise ValidationError("shed fraction must be in (0, 1)")
        if self.ufls_lockout_s < 0:
            raise ValidationError("lockout must be >= 0")
        if self.of_trip_policy != "largest_first":
            raise ValidationError(f"unknown trip policy {self.of_trip_policy!r}")

    @classmethod
    def off(cls):
        return cls(enabled=False)


@dataclass(frozen=True)
class Shed:
    mw: float


@dataclass(frozen=True)
class GenTrip:
    gen_id: int
    mw: float


@dataclass
class ProtectionState:
    """Mutable relay memory. ``gens`` maps generator id to (rating MW, current output MW) for units still online."""

    config: ProtectionConfig
    total_load_mw: float
    gens: dict = field(default_factory=dict)
    lockout_until_s: float = float("-inf")
    of_armed: bool = True
    last_t_s: float = float("-inf")


def protection_step(freq_hz: float, t_s: float, state: ProtectionState):
    """One relay evaluation. The caller applies the returned actions and updates ``state``.

    UFLS sheds a fraction of the load present now, then stays quiet for the
    lockout. The over-frequency relay trips one unit per excursion above the
    threshold and re-arms once frequency is back below it.
    """
    if t_s < state.last_t_s:
        raise ValueError("protection_step called out of time order")
    state.last_t_s = t_s
    cfg = state.config
    if not cfg.enabled:
        return []
    actions = []
    if freq_hz < cfg.ufls_threshold_hz and t_s >= state.lockout_until_s:
        actions.append(Shed(cfg.ufls_shed_fraction * state.total_load_mw))
        state.lockout_until_s = t_s + cfg.ufls_lockout_s
    if freq_hz > cfg.of_trip_threshold_hz:
        if state.of_armed and state.gens:
            gid = max(state.gens, key=lambda g: (state.gens[g][0], -g))
            actions.append(GenTrip(gid, state.gens[gid][1]))
            state.of_armed = False
    else:
        state.of_armed = True
    return actions
