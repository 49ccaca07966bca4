from __future__ import annotations

from decimal import Decimal
from pathlib import Path

import pytest

from evcs_sim.ecosim import SessionRecord, StationRecord
from evcs_sim.errors import UnknownStation, ValidationError
from evcs_sim.scenario import (
    OUTPUT_FILES, allocate_stations, couple_sessions_to_loads, load_spec, parse_override, render_summary,
    run_scenario, spec_from_dict,
)

from conftest import data_path

SCEN = data_path("scenarios")
SHIPPED = sorted(p.stem for p in SCEN.glob("*.toml"))


def demo(tmp_path, name="hijack_demo", overrides=()):
    spec = load_spec(SCEN / f"{name}.toml", overrides)
    return spec, run_scenario(spec, tmp_path / name)


# -- coupling ---------------------------------------------------------------------------

def sessions(station_ids, kw=11.0):
    return [SessionRecord(f"x{i}", sid, "u", 0.0, kw) for i, sid in enumerate(station_ids)]


def test_mass_charge_arithmetic():
    stations = {f"s{i}": (3, 11) for i in range(7636)}
    loads = couple_sessions_to_loads(sessions(stations), stations)
    assert loads == {3: Decimal("83.996")}


def test_hundred_sessions_one_bus():
    stations = {f"s{i}": StationRecord(f"s{i}", 4, connector_kw=11) for i in range(100)}
    assert couple_sessions_to_loads(sessions(stations), stations) == {4: Decimal("1.100")}


def test_coupling_empty():
    assert couple_sessions_to_loads([], {}) == {}


def test_coupling_unknown_station():
    with pytest.raises(UnknownStation):
        couple_sessions_to_loads(sessions(["nope"]), {"a": (1, 11)})


def test_v2g_session_counts_negative():
    assert couple_sessions_to_loads(sessions(["a"], kw=-11.0), {"a": (2, 11)}) == {2: Decimal("-0.011")}


def test_coupling_splits_by_bus():
    stations = {"a": (1, 7.2), "b": (2, 11), "c": (1, 22)}
    assert couple_sessions_to_loads(sessions(["a", "b", "c"]), stations) == {1: Decimal("0.0292"), 2: Decimal("0.011")}


def test_station_allocation(glover7):
    recs = allocate_stations(glover7, 80, {}, 11)
    assert len(recs) == 80
    per_bus = {}
    for r in recs:
        per_bus[r.bus_id] = per_bus.get(r.bus_id, 0) + 1
    assert set(per_bus) <= set(glover7.load_buses)
    ids = [r.station_id for r in recs]
    assert len(set(ids)) == len(ids)


# -- spec ---------------------------------------------------------------------------------

def test_all_shipped_scenarios_validate():
    for name in SHIPPED:
        load_spec(SCEN / f"{name}.toml")


def test_override_parsing():
    assert parse_override("sim.seed=7") == ("sim.seed", 7)
    assert parse_override("policy.preset=mitigated") == ("policy.preset", "mitigated")
    assert parse_override("population.stations_per_bus={3=2}") == ("population.stations_per_bus", {"3": 2})
    with pytest.raises(ValidationError):
        parse_override("nokey")


def test_override_applies():
    spec = load_spec(SCEN / "hijack_demo.toml", ["policy.preset=mitigated", "sim.seed=9"])
    assert spec.seed == 9 and spec.policy.verify_ownership


def test_missing_seed_rejected():
    raw = {"scenario": {"grid_case": str(data_path("cases", "glover7.toml"))}}
    with pytest.raises(ValidationError, match="seed"):
        spec_from_dict(raw)


def test_unknown_keys_rejected():
    raw = {"scenario": {"grid_case": str(data_path("cases", "glover7.toml"))}, "sim": {"seed": 1, "sedd": 2}}
    with pytest.raises(ValidationError, match="sedd"):
        spec_from_dict(raw)


def test_config_hash_ignores_output_dir_only():
    a = load_spec(SCEN / "hijack_demo.toml")
    b = load_spec(SCEN / "hijack_demo.toml", ["outputs.directory=elsewhere"])
    c = load_spec(SCEN / "hijack_demo.toml", ["sim.seed=2"])
    assert a.config_hash() == b.config_hash() != c.config_hash()


def test_config_hash_covers_case_bytes(tmp_path):
    case = tmp_path / "c.toml"
    case.write_bytes(data_path("cases", "glover7.toml").read_bytes())
    raw = {"scenario": {"grid_case": str(case)}, "sim": {"seed": 1}}
    h1 = spec_from_dict(raw).config_hash()
    case.write_bytes(case.read_bytes() + b"\n# edit\n")
    assert spec_from_dict(raw).config_hash() != h1


# -- runs -----------------------------------------------------------------------------------

def test_outputs_written(tmp_path):
    _, summary = demo(tmp_path)
    for f in OUTPUT_FILES:
        assert (tmp_path / "hijack_demo" / f).is_file()
    first = (tmp_path / "hijack_demo" / "events.csv").read_text().splitlines()[1]
    assert "Meta" in first and summary.config_hash in first


def test_vulnerable_demo_hijacks(tmp_path):
    _, s = demo(tmp_path)
    assert s.hijack.success
    assert s.classification_counts["HijackSuspect"] >= 1


def test_mitigated_blocks_and_victims_unchanged(tmp_path):
    _, vul = demo(tmp_path / "v")
    _, mit = demo(tmp_path / "m", overrides=["policy.preset=mitigated"])
    assert not mit.hijack.success
    assert mit.classification_counts["HijackSuspect"] == mit.classification_counts["OtherIllegal"] == 0

    def plugs(root):
        rows = (root / "hijack_demo" / "events.csv").read_text().splitlines()
        return [r for r in rows if ",Plugged," in r]

    assert plugs(tmp_path / "v") == plugs(tmp_path / "m")


def test_policy_monotonicity(tmp_path):
    illegal = {}
    for preset in ("vulnerable", "mitigated", "hardened"):
        _, s = demo(tmp_path / preset, overrides=[f"policy.preset={preset}"])
        c = s.classification_counts
        illegal[preset] = c["HijackSuspect"] + c["OtherIllegal"]
    assert illegal["vulnerable"] >= illegal["mitigated"] >= illegal["hardened"]
    assert illegal["mitigated"] == 0


def test_control_run_has_no_attack(tmp_path):
    _, s = demo(tmp_path, "baseline")
    assert s.hijack is None
    out = tmp_path / "baseline"
    assert "Attack" not in (out / "events.csv").read_text()
    labels = [r.split(",")[0] for r in (out / "impact.csv").read_text().splitlines()[1:]]
    assert labels == ["baseline", "sessions-peak"]
    assert s.classification_counts["HijackSuspect"] == 0
    assert s.protection_events == []


@pytest.mark.parametrize("name", SHIPPED)
def test_byte_identical_reruns(tmp_path, name):
    spec = load_spec(SCEN / f"{name}.toml")
    run_scenario(spec, tmp_path / "a")
    run_scenario(spec, tmp_path / "b")
    for f in OUTPUT_FILES:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes(), f


def test_seed_changes_outputs(tmp_path):
    demo(tmp_path / "a")
    demo(tmp_path / "b", overrides=["sim.seed=2"])
    a = (tmp_path / "a" / "hijack_demo" / "events.csv").read_text()
    b = (tmp_path / "b" / "hijack_demo" / "events.csv").read_text()
    assert a != b


def test_four_step_scenario_protection(tmp_path):
    _, s = demo(tmp_path, "four_step")
    assert [e.kind for e in s.protection_events] == ["Shed", "Shed", "GenTrip"]


def test_targeted_trip_scenario(tmp_path):
    _, s = demo(tmp_path, "targeted_trip")
    assert s.cascade.cascade.tripped_lines[0] == (1, 2)
    assert round(s.cascade.base_unserved_fraction, 4) == 0.35


def test_summary_rebuilt_from_csvs(tmp_path):
    demo(tmp_path)
    out = tmp_path / "hijack_demo"
    assert render_summary(out) == (out / "summary.txt").read_text()
