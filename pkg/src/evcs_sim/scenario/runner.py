"""End-to-end scenario execution and output files."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from decimal import Decimal
from pathlib import Path

import numpy as np

from ..botnet.hijack import HijackReport, execute_hijack
from ..botnet.plans import Hijack, MassCharge, Oscillatory, Scripted, TargetedTrip, V2GAmplified, load_events
from ..botnet.windows import ArrivalModel, load_arrival_model
from ..dynamics import ProtectionConfig, default_machines, run_transient
from ..dynamics.transient import EVENTS_HEADER, TRACE_HEADER
from ..ecosim import AUDIT_HEADER, Ecosystem, StationRecord, UserAccount, World, register_entities
from ..errors import ScenarioError, SimError, UnknownStation
from ..gridcore import (
    dispatch_with_losses, distribute_attack, evaluate_impact, load_case, load_profile, scale_loads, targeted_trip,
)
from ..gridcore.impact import IMPACT_CSV_HEADER
from .coupling import couple_sessions_to_loads
from .spec import ScenarioSpec
from .summary import write_summary

OUTPUT_FILES = ("audit.csv", "trace.csv", "events.csv", "impact.csv", "summary.txt")
CYBER_EVENT_KINDS = ("Plugged", "Unplugged", "GraceEntered", "GraceExpired", "ChargingStarted", "ChargingStopped")


@dataclass
class RunSummary:
    name: str
    config_hash: str
    output_dir: Path
    hijack: HijackReport | None = None
    classification_counts: dict = field(default_factory=dict)
    impact: list = field(default_factory=list)
    protection_events: list = field(default_factory=list)
    cascade: object = None
    paths: dict = field(default_factory=dict)
    peak_session_mw: Decimal = Decimal(0)
    injected: list = field(default_factory=list)


def rng_streams(seed: int):
    """Independent generators in fixed order: arrivals, victims, attack, recon."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(4)]


def allocate_stations(case, n_stations: int, per_bus: dict, connector_kw: float):
    """Explicit per-bus counts, or ``n_stations`` split over load buses by largest remainder on base load."""
    if per_bus:
        counts = {int(b): int(n) for b, n in per_bus.items()}
    elif n_stations > 0:
        loads = {b.id: b.load_mw for b in case.buses if b.load_mw > 0}
        total = sum(loads.values())
        quotas = {b: n_stations * mw / total for b, mw in loads.items()}
        counts = {b: int(math.floor(q)) for b, q in quotas.items()}
        rest = n_stations - sum(counts.values())
        for b in sorted(quotas, key=lambda b: (-(quotas[b] - counts[b]), b))[:rest]:
            counts[b] += 1
    else:
        counts = {}
    known = {b.id for b in case.buses}
    stations = []
    for bus in sorted(counts):
        if bus not in known:
            raise UnknownStation(f"stations on unknown bus {bus}")
        stations += [StationRecord(f"st-b{bus}-{i}", bus, connector_kw) for i in range(counts[bus])]
    return stations


def _hour_weights(model: ArrivalModel, day: str, start_s: float, end_s: float):
    hourly = model.hourly(day)
    spans = []
    h0 = int(start_s // 3600)
    h = h0
    while h * 3600 < end_s:
        lo, hi = max(h * 3600, start_s), min((h + 1) * 3600, end_s)
        if hi > lo:
            spans.append((lo, hi, hourly[h % 24] * (hi - lo) / 3600))
        h += 1
    return spans


@dataclass
class _VictimPlan:
    user_id: str
    vin: str
    plug_s: float
    station_index: int
    delay_s: int
    charge_s: int
    idle_s: int


def _draw_victims(spec: ScenarioSpec, model, n_stations, start, end, rng_arr, rng_vic):
    v = spec.section("victims")
    plans = []
    spans = _hour_weights(model, v["day"], start, end) if v["mode"] == "arrivals" else []
    weights = np.array([w for _, _, w in spans], dtype=float)
    for i in range(int(v["count"])):
        if v["mode"] == "window":
            lo, hi = v["plug_window_s"]
            plug = start + int(rng_arr.integers(int(lo), int(hi) + 1))
        elif weights.sum() > 0:
            j = int(rng_arr.choice(len(spans), p=weights / weights.sum()))
            a, b, _ = spans[j]
            plug = float(int(rng_arr.integers(int(a), max(int(a) + 1, int(b)))))
        else:
            plug = math.inf
        idx = int(rng_vic.integers(max(n_stations, 1)))
        delay = int(rng_vic.integers(int(v["start_delay_s"][0]), int(v["start_delay_s"][1]) + 1))
        charge = int(rng_vic.integers(int(v["charge_s"][0]), int(v["charge_s"][1]) + 1))
        idle = int(round(3600 * float(rng_vic.lognormal(math.log(v["dwell_median_h"]), v["dwell_sigma"]))))
        plans.append(_VictimPlan(f"ev{i}", f"VIN-{i:05d}", plug, idx, delay, charge, idle))
    return plans


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt_mw(x) -> str:
    return f"{x:.4f}" if not isinstance(x, Decimal) else str(x)


def run_scenario(spec: ScenarioSpec, output_dir=None) -> RunSummary:
    """Run the cyber layer in macro steps, couple sessions to the grid, then evaluate the grid.

    Static impact is always computed for the no-attack baseline and for the
    peak session-driven load; load-shaping attack plans go through the
    transient model and targeted trips through the cascade. Errors are
    re-raised as :class:`ScenarioError` carrying the simulation time.
    """
    out = Path(output_dir) if output_dir is not None else spec.output_dir
    sim = spec.sim
    start = float(sim["start_s"])
    end = start + float(sim["horizon_s"])
    step = float(sim["macro_step_s"])
    now = start
    try:
        base_case = load_case(spec.path("grid_case"))
        profile = load_profile(spec.path("profile")) if spec.path("profile") else None
        model = load_arrival_model(spec.path("arrivals")) if spec.path("arrivals") else ArrivalModel()
        hour = int(sim["hour"])
        grid_case = scale_loads(base_case, profile, hour) if hour >= 0 else base_case
        rng_arr, rng_vic, rng_atk, _rng_recon = rng_streams(spec.seed)

        pop = spec.section("population")
        stations = allocate_stations(base_case, int(pop["n_stations"]), pop["stations_per_bus"],
                                     float(pop["connector_kw"]))
        plan = spec.attack
        if isinstance(plan, Hijack) and not any(s.station_id == plan.target_station for s in stations):
            raise UnknownStation(plan.target_station)
        bots = [UserAccount(f"bot{i}", adversarial=True) for i in range(int(pop["n_bots"]))]
        victims = _draw_victims(spec, model, len(stations), start, end, rng_arr, rng_vic)
        accounts = bots + [UserAccount(v.user_id, owned_vins=frozenset({v.vin})) for v in victims]
        station_map = {s.station_id: s for s in stations}
        eco = Ecosystem(register_entities(accounts, stations), spec.policy)
        for b in bots:
            eco.login(b.user_id)
        world = World(eco, start_s=start, latency_s=float(sim["latency_s"]))

        events: list[tuple] = []
        summary = RunSummary(spec.name, spec.config_hash(), out)

        def on_notice(t, n):
            if n.kind in CYBER_EVENT_KINDS:
                events.append((t, n.kind, Decimal(0), f"{n.station_id} {n.user_id or '-'} {n.detail}".strip()))
            elif n.kind == "CmsDecision" and "Forwarded" not in n.detail:
                events.append((t, "Denied", Decimal(0), f"{n.station_id} {n.user_id} {n.detail}"))

        world.listeners.append(on_notice)
        _schedule_victims(world, victims, stations, plan, spec.section("victims"))

        if isinstance(plan, Hijack):
            attacker = plan.attacker or (bots[0].user_id if bots else None)
            shifted = replace(plan, start_s=start + plan.start_s)
            summary.hijack = execute_hijack(shifted, world, rng_atk, attacker=attacker, horizon_s=end - start,
                                            run=False)

        prev: dict = {}
        t = start
        while t < end:
            t = min(t + step, end)
            now = t
            world.run_until(t)
            loads = couple_sessions_to_loads(eco.registry.active_sessions(), station_map)
            if loads != prev:
                total = sum(loads.values(), Decimal(0))
                detail = ";".join(f"{b}:{mw}" for b, mw in loads.items())
                events.append((t, "SessionLoad", total, detail))
                summary.injected.append((t, loads))
                if total > summary.peak_session_mw:
                    summary.peak_session_mw = total
                prev = loads
        now = end

        if summary.hijack is not None and summary.hijack.success:
            events.append((summary.hijack.success_time_s, "HijackSuccess", Decimal(0),
                           f"{summary.hijack.target_station} {summary.hijack.attacker} {summary.hijack.session_id}"))

        # grid layer
        impact = [evaluate_impact(grid_case, {}, max(hour, 0), "baseline")]
        peak_map = {}
        for _, loads in summary.injected:
            if sum(loads.values(), Decimal(0)) == summary.peak_session_mw:
                peak_map = {b: float(mw) for b, mw in loads.items() if mw > 0}
                break
        if peak_map:
            impact.append(evaluate_impact(grid_case, peak_map, max(hour, 0), "sessions-peak"))
        trace_text = _csv_text(TRACE_HEADER, [])
        if isinstance(plan, MassCharge):
            bus_mw = dict(plan.bus_mw)
            if plan.total_mw is not None:
                bus_mw = distribute_attack(grid_case, plan.total_mw, sim["distribution"],
                                           int(rng_atk.integers(2**31)))
            impact.append(evaluate_impact(grid_case, bus_mw, max(hour, 0), f"masscharge-{sim['distribution']}"))
        elif isinstance(plan, TargetedTrip):
            base = dispatch_with_losses(grid_case)
            rep = targeted_trip(base.case, plan.bus_mw)
            summary.cascade = rep
            for trip in rep.cascade.trips:
                events.append((start, "LineTrip", Decimal(0),
                               f"line {trip.from_bus}-{trip.to_bus} step {trip.step} loading {trip.loading_pct:.2f}%"))
            events.append((start, "Unserved", Decimal(str(round(rep.cascade.unserved_mw, 4))),
                           f"base {rep.base_unserved_mw:.4f} MW ({rep.base_unserved_fraction:.2%}) islands "
                           + " ".join("{" + ",".join(map(str, sorted(i))) + "}" for i in rep.cascade.islands)))
            impact.append(evaluate_impact(grid_case, plan.bus_mw, max(hour, 0), "targeted-trip"))
        elif isinstance(plan, (Oscillatory, V2GAmplified, Scripted)):
            duration = float(sim["dynamics_duration_s"])
            sched = [(t_ev, bus, mw) for t_ev, bus, mw in load_events(plan) if t_ev <= duration]
            machines = default_machines(grid_case)
            tr = run_transient(grid_case, machines, ProtectionConfig(), sched, duration, float(sim["dt_s"]))
            summary.protection_events = tr.protection_events()
            rows = [[f"{start + a:.3f}", f"{b:.6f}", f"{c:.4f}", f"{d:.4f}"]
                    for a, b, c, d in zip(tr.t_s, tr.freq_hz, tr.total_load_mw, tr.total_gen_mw)]
            trace_text = _csv_text(TRACE_HEADER, rows)
            for e in tr.events:
                events.append((start + e.t_s, e.kind, Decimal(str(round(e.magnitude_mw, 4))), e.detail))
        summary.impact = impact
        summary.classification_counts = {str(k): v for k, v in world.classification_counts.items()}
    except ScenarioError:
        raise
    except SimError as exc:
        raise ScenarioError(f"{type(exc).__name__}: {exc}", now) from exc

    out.mkdir(parents=True, exist_ok=True)
    meta = (start, "Meta", Decimal(0), f"scenario={spec.name} seed={spec.seed} config_hash={summary.config_hash}")
    events.sort(key=lambda e: e[0])
    texts = {
        "audit.csv": _csv_text(AUDIT_HEADER, [r.csv_row() for r in world.audit]),
        "trace.csv": trace_text,
        "events.csv": _csv_text(EVENTS_HEADER, [[f"{t:.3f}", k, _fmt_mw(m), d] for t, k, m, d in [meta] + events]),
        "impact.csv": _csv_text(IMPACT_CSV_HEADER, [r.csv_row() for r in impact]),
    }
    for name, text in texts.items():
        (out / name).write_text(text, encoding="utf-8", newline="")
        summary.paths[name] = out / name
    summary.paths["summary.txt"] = write_summary(out)
    return summary


def _schedule_victims(world: World, victims, stations, plan, vcfg):
    eco = world.eco
    ids = [s.station_id for s in stations]
    fixed = plan.target_station if isinstance(plan, Hijack) else (ids[0] if ids else None)

    def plug(v: _VictimPlan):
        if vcfg["mode"] == "window":
            order = [fixed]
        else:
            order = ids[v.station_index:] + ids[:v.station_index]
        for sid in order:
            st = eco.registry.stations[sid]
            if st.connected_vin is None:
                eco.plug(v.vin, sid, world.now)
                break
        else:
            return
        if vcfg["start_session"]:
            world.after(v.delay_s, start_own, v, sid)
            world.after(v.delay_s + v.charge_s, full, v, sid)
            world.after(v.delay_s + v.charge_s + v.idle_s, leave, v)
        else:
            world.after(v.idle_s, leave, v)

    def start_own(v, sid):
        if eco.registry.vehicle_at.get(v.vin) != sid:
            return
        eco.login(v.user_id)
        eco.request_start(v.user_id, sid, world.now, vin=v.vin, station_code=True, proximate=True)

    def full(v, sid):
        if eco.registry.vehicle_at.get(v.vin) == sid:
            eco.vehicle_full(sid, world.now)

    def leave(v):
        eco.unplug(v.vin, world.now)

    for v in victims:
        if math.isfinite(v.plug_s):
            world.schedule(v.plug_s, plug, v)
