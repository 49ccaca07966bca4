from .protection import GenTrip, ProtectionConfig, ProtectionState, Shed, protection_step
from .transient import (
    DEFAULTS, EVENTS_HEADER, TRACE_HEADER, FrequencyTrace, MachineParams, TraceEvent, default_machines,
    droop_steady_state_hz, run_transient,
)

__all__ = [
    "GenTrip", "ProtectionConfig", "ProtectionState", "Shed", "protection_step", "DEFAULTS", "EVENTS_HEADER",
    "TRACE_HEADER", "FrequencyTrace", "MachineParams", "TraceEvent", "default_machines",
    "droop_steady_state_hz", "run_transient",
]
