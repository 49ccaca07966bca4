from .coupling import couple_sessions_to_loads
from .runner import OUTPUT_FILES, RunSummary, allocate_stations, rng_streams, run_scenario
from .spec import ScenarioSpec, load_spec, parse_override, spec_from_dict
from .summary import render_summary, write_summary

__all__ = [
    "couple_sessions_to_loads", "OUTPUT_FILES", "RunSummary", "allocate_stations", "rng_streams",
    "run_scenario", "ScenarioSpec", "load_spec", "parse_override", "spec_from_dict", "render_summary",
    "write_summary",
]
