from .hijack import HijackReport, execute_hijack
from .plans import (
    AttackPlan, Hijack, MassCharge, Oscillatory, Scripted, TargetedTrip, V2GAmplified, load_events,
    oscillatory_schedule, plan_from_dict, v2g_schedule,
)
from .recon import ReconObservation, recon_poll
from .windows import ArrivalModel, FixedDwell, LognormalDwell, estimate_attack_windows, expected_connected

__all__ = [
    "HijackReport", "execute_hijack", "AttackPlan", "Hijack", "MassCharge", "Oscillatory", "Scripted",
    "TargetedTrip", "V2GAmplified", "load_events", "oscillatory_schedule", "plan_from_dict", "v2g_schedule",
    "ReconObservation", "recon_poll", "ArrivalModel", "FixedDwell", "LognormalDwell",
    "estimate_attack_windows", "expected_connected",
]
