from .case import Bus, Generator, GridCase, Line, LoadProfile, load_case, load_profile, loads_case, validate_case
from .cascade import CascadeReport, TargetedTripReport, cascade, targeted_trip
from .dispatch import DispatchResult, apply_dispatch, dispatch_with_losses, economic_dispatch
from .impact import ImpactReport, annualize, attack_impact_report, distribute_attack, evaluate_impact
from .powerflow import PowerFlowSolution, solve_ac_power_flow
from .scaling import scale_loads

__all__ = [
    "Bus", "Generator", "GridCase", "Line", "LoadProfile", "load_case", "load_profile", "loads_case",
    "validate_case", "CascadeReport", "TargetedTripReport", "cascade", "targeted_trip", "DispatchResult", "apply_dispatch",
    "dispatch_with_losses", "economic_dispatch", "ImpactReport", "annualize",
    "attack_impact_report", "distribute_attack", "evaluate_impact", "PowerFlowSolution",
    "solve_ac_power_flow", "scale_loads",
]
