from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evcs_sim.botnet import (
    ArrivalModel, FixedDwell, Hijack, LognormalDwell, Oscillatory, V2GAmplified, estimate_attack_windows,
    execute_hijack, expected_connected, oscillatory_schedule, plan_from_dict, recon_poll, v2g_schedule,
)
from evcs_sim.ecosim import Ecosystem, Occupancy, PolicyConfig, StationRecord, UserAccount, World, register_entities
from evcs_sim.errors import EmptyInput, UnknownStation, ValidationError


def world_with(policy, n_stations=1):
    accounts = [UserAccount("bot0", adversarial=True), UserAccount("victim", owned_vins=frozenset({"VIN-V"}))]
    stations = [StationRecord(f"st{i}", 3) for i in range(n_stations)]
    return World(Ecosystem(register_entities(accounts, stations), policy))


# -- oscillatory schedule -------------------------------------------------------------

def test_first_cycle():
    ev = oscillatory_schedule(Oscillatory((3, 5), cycles=1))
    assert ev == [(15.0, 3, 20.0), (15.0, 5, 20.0), (25.0, 3, -20.0), (25.0, 5, -20.0)]


def test_cycle_two_magnitude():
    ev = oscillatory_schedule(Oscillatory((3,), cycles=3))
    assert (35.0, 3, 31.0) in ev


def test_empty_bus_list():
    assert oscillatory_schedule(Oscillatory((), cycles=4)) == []


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 51), st.lists(st.integers(1, 7), min_size=1, max_size=4, unique=True))
def test_schedule_algebra(cycles, buses):
    plan = Oscillatory(tuple(buses), cycles=cycles)
    ev = oscillatory_schedule(plan)
    for k in range(cycles):
        mw = 20.0 + 5.5 * k
        for b in buses:
            assert (15.0 + 10 * k, b, mw) in ev
            assert (25.0 + 10 * k, b, -mw) in ev
    net = {b: 0.0 for b in buses}
    for _, b, mw in ev:
        net[b] += mw
    assert all(abs(v) < 1e-9 for v in net.values())
    ons = sorted(mw for _, b, mw in ev if mw > 0 and b == buses[0])
    assert all(abs((b - a) - 5.5) < 1e-9 for a, b in zip(ons, ons[1:]))
    assert len([e for e in ev if e[2] > 0]) == len([e for e in ev if e[2] < 0])


def test_off_before_on_at_same_instant():
    ev = oscillatory_schedule(Oscillatory((3,), cycles=2))
    at25 = [mw for t, _, mw in ev if t == 25.0]
    assert at25 == [-20.0, 25.5]


def test_v2g_discharge_at_off():
    base = Oscillatory((3,), cycle_period_s=20.0, cycles=2)
    ev = v2g_schedule(V2GAmplified(8.0, base))
    assert (25.0, 3, -8.0) in ev and (35.0, 3, 8.0) in ev
    assert sum(mw for _, _, mw in ev) == pytest.approx(0.0)


def test_plan_validation():
    with pytest.raises(ValidationError):
        plan_from_dict({"kind": "Oscillatory", "buses": [3], "cycles": 0})
    with pytest.raises(ValidationError):
        plan_from_dict({"kind": "MassCharge", "bus_mw": {"3": -1}})
    with pytest.raises(ValidationError):
        plan_from_dict({"kind": "Nope"})
    assert plan_from_dict({"kind": "None"}) is None


# -- windows ----------------------------------------------------------------------------

def brute_force_connected(arrivals, dwell_h, days=4):
    """Simulate each arrival cohort hour by hour over several days and read the last day."""
    horizon = 24 * days
    count = np.zeros(horizon)
    for day in range(days):
        for h, n in enumerate(arrivals):
            t0 = day * 24 + h
            for j in range(horizon - t0):
                if dwell_h > j:
                    count[t0 + j] += n
    return count[-24:]


def test_convolution_oracle_fixed_dwell():
    rng = np.random.default_rng(4)
    arrivals = rng.integers(0, 50, 24).astype(float)
    got = expected_connected(arrivals, FixedDwell(5))
    assert np.allclose(got, brute_force_connected(arrivals, 5))


def test_synthetic_peak_window():
    a = [0.0] * 24
    a[18] = 10.0
    assert estimate_attack_windows(ArrivalModel(a, a), dwell=FixedDwell(2))[0][:2] == (18, 20)


def test_weekday_top_window_contains_ten():
    start, end, _ = estimate_attack_windows(ArrivalModel(), "weekday")[0]
    assert start <= 10 < end


def test_all_zero_model():
    z = [0.0] * 24
    assert estimate_attack_windows(ArrivalModel(z, z)) == []


def test_empty_observations():
    with pytest.raises(EmptyInput):
        estimate_attack_windows([])


def test_windows_tie_break_earlier():
    a = [0.0] * 24
    a[4] = a[16] = 7.0
    wins = estimate_attack_windows(ArrivalModel(a, a), dwell=FixedDwell(1))
    assert [w[0] for w in wins] == [4, 16]


def test_lognormal_survival_monotone():
    d = LognormalDwell()
    s = [d.survival(h) for h in range(0, 30)]
    assert s[0] == 1.0 and all(a >= b for a, b in zip(s, s[1:]))
    assert 0 < d.survival(24) < 0.05


def test_arrival_model_rejects_negative():
    with pytest.raises(ValidationError):
        ArrivalModel([-1.0] + [0.0] * 23)


# -- recon ------------------------------------------------------------------------------

def test_recon_observation_count():
    w = world_with(PolicyConfig(), n_stations=2)
    obs = recon_poll(["st0", "st1"], 300, 3600, w, "bot0")
    assert len(obs) == 24
    assert all(o.status_seen == "Available" for o in obs)


def test_recon_constant_in_use_no_probe():
    w = world_with(PolicyConfig())
    w.eco.plug("VIN-V", "st0", 0.0)
    w.eco.request_start("victim", "st0", 0.0)
    w.eco.drain(0.0)
    obs = recon_poll(["st0"], 300, 3600, w, "bot0")
    assert {o.status_seen for o in obs} == {"InUse"} and all(o.probe_result is None for o in obs)


def test_recon_probe_sees_plugged_idle():
    w = world_with(PolicyConfig())
    w.eco.plug("VIN-V", "st0", 0.0)
    w.eco.request_start("victim", "st0", 0.0)
    w.eco.drain(0.0)
    w.schedule(3600.0, w.eco.vehicle_full, "st0", 3600.0)
    obs = recon_poll(["st0"], 300, 7200, w, "bot0")
    probes = [o for o in obs if o.probe_result is not None]
    assert len(probes) == 1
    assert probes[0].probe_result == Occupancy.PLUGGED_IDLE
    assert probes[0].transition == ("InUse", "Available")
    assert probes[0].time_s == 3600.0


def test_recon_unknown_station_skipped():
    w = world_with(PolicyConfig())
    assert recon_poll(["nope"], 600, 1200, w) == []


# -- hijack ------------------------------------------------------------------------------

def test_hijack_success_within_interval():
    w = world_with(PolicyConfig.vulnerable())
    w.now = 18.5 * 3600
    plug_t = 18 * 3600 + 55 * 60
    w.schedule(plug_t, w.eco.plug, "VIN-V", "st0", plug_t)
    rep = execute_hijack(Hijack("st0", start_s=w.now), w, 11, attacker="bot0", horizon_s=3600)
    assert rep.success
    assert 0 <= rep.success_time_s - plug_t <= 240


def test_hijack_mitigated_denied_every_time():
    w = world_with(PolicyConfig.mitigated())
    w.eco.plug("VIN-V", "st0", 0.0)
    rep = execute_hijack(Hijack("st0"), w, 3, attacker="bot0", horizon_s=3600)
    assert not rep.success and rep.outcome == "Failure"
    assert math.floor(3600 / 240) - 1 <= rep.attempts <= math.floor(3600 / 180) + 1
    assert rep.denied == {"OwnershipMismatch": rep.attempts}


def test_hijack_never_plugged_grace_reverts():
    w = world_with(PolicyConfig.vulnerable())
    reverts = []
    w.listeners.append(lambda t, n: reverts.append(t) if n.kind == "GraceExpired" else None)
    rep = execute_hijack(Hijack("st0"), w, 5, attacker="bot0", horizon_s=3600)
    assert not rep.success and rep.charging_started == 0
    assert rep.grace_entries >= 1 and rep.grace_expiries >= rep.grace_entries - 1
    # each grace window closes exactly 300 s after the attempt that opened it
    opened = [t for t in rep.attempt_times_s if any(abs(r - t - 300.0) < 1e-9 for r in reverts)]
    assert len(opened) == len(reverts)


def test_hijack_deterministic():
    def run(seed):
        w = world_with(PolicyConfig.mitigated())
        return execute_hijack(Hijack("st0"), w, seed, attacker="bot0", horizon_s=3000).attempt_times_s

    assert run(9) == run(9)
    assert run(9) != run(10)


def test_hijack_unknown_station():
    with pytest.raises(UnknownStation):
        execute_hijack(Hijack("zzz"), world_with(PolicyConfig()), 1, attacker="bot0", horizon_s=10)
