"""Centre-of-inertia frequency response with droop governors and AGC."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from ..errors import UnstableIntegration, ValidationError
from ..gridcore.case import GridCase
from ..gridcore.dispatch import economic_dispatch
from .protection import GenTrip, ProtectionConfig, ProtectionState, Shed, protection_step

F0 = 60.0
MAX_DEVIATION_PU = 0.10
TRACE_HEADER = ["t_s", "freq_hz", "total_load_mw", "total_gen_mw"]
EVENTS_HEADER = ["t_s", "kind", "magnitude_mw", "detail"]


@dataclass(frozen=True)
class MachineParams:
    bus: int
    p_rated_mw: float
    inertia_h_s: float = 4.0
    damping_d_pu: float = 1.0
    droop_r_pu: float = 0.05
    governor_time_constant_s: float = 0.5
    agc_gain: float = 0.0

    def __post_init__(self):
        if self.inertia_h_s <= 0 or self.droop_r_pu <= 0 or self.governor_time_constant_s <= 0:
            raise ValidationError(f"machine at bus {self.bus}: H, R and Tg must be > 0")
        if self.p_rated_mw <= 0:
            raise ValidationError(f"machine at bus {self.bus}: rating must be > 0")


@dataclass
class TraceEvent:
    t_s: float
    kind: str
    magnitude_mw: float
    detail: str = ""


@dataclass
class FrequencyTrace:
    dt_s: float
    t_s: np.ndarray
    freq_hz: np.ndarray
    total_load_mw: np.ndarray
    total_gen_mw: np.ndarray
    events: list = field(default_factory=list)
    stopped: str | None = None

    def events_of(self, kind):
        return [e for e in self.events if e.kind == kind]

    def protection_events(self):
        return [e for e in self.events if e.kind in ("Shed", "GenTrip")]

    def crossings_below(self, hz, until_s=None):
        return _crossings(self.t_s, self.freq_hz, hz, below=True, until_s=until_s)

    def crossings_above(self, hz, until_s=None):
        return _crossings(self.t_s, self.freq_hz, hz, below=False, until_s=until_s)

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for row in zip(self.t_s, self.freq_hz, self.total_load_mw, self.total_gen_mw):
            w.writerow([f"{row[0]:.3f}", f"{row[1]:.6f}", f"{row[2]:.4f}", f"{row[3]:.4f}"])
        return buf.getvalue()

    def events_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(EVENTS_HEADER)
        for e in self.events:
            w.writerow([f"{e.t_s:.3f}", e.kind, f"{e.magnitude_mw:.4f}", e.detail])
        return buf.getvalue()


def _crossings(t, f, hz, below, until_s):
    side = f < hz if below else f > hz
    idx = np.flatnonzero(side[1:] & ~side[:-1]) + 1
    if side.size and side[0]:
        idx = np.concatenate([[0], idx])
    times = t[idx]
    if until_s is not None:
        times = times[times <= until_s]
    return [float(x) for x in times]


def default_machines(case: GridCase, **overrides) -> list[MachineParams]:
    """One machine per in-service generator, rated at its P max, with calibrated defaults."""
    params = dict(DEFAULTS)
    params.update(overrides)
    return [MachineParams(bus=g.bus, p_rated_mw=g.p_max_mw, **params) for g in case.in_service_generators()]


# calibrated against the four-step 40/80 MW schedule on buses 3 and 5; see scripts/calibrate_dynamics.py
DEFAULTS = dict(inertia_h_s=2.74, damping_d_pu=0.1, droop_r_pu=0.1, governor_time_constant_s=6.72, agc_gain=0.111)


def run_transient(case: GridCase, machines: list[MachineParams], protection: ProtectionConfig,
                  load_events, duration_s: float, dt_s: float = 0.01, initial_gen_mw=None) -> FrequencyTrace:
    """Integrate system frequency under bus load steps with RK4.

    All machines share one frequency. Per machine (powers in MW, dw in pu):
    governor ``Tg dPm/dt = Pref - Pm - (S/R) dw`` and AGC ``dPref/dt = -K S dw``;
    the swing equation sums them: ``2 sum(H S) ddw/dt = sum(Pm) - P_load - D S_on dw``.
    Initial outputs come from economic dispatch of the case load unless given.
    Load events are snapped to the nearest sample and applied before that
    sample's protection check; relay actions take effect before the next step.
    The run stops early (``stopped="NearBlackout"``) once a generator trip
    leaves less committed mechanical power than load.
    """
    if not (0.001 <= dt_s <= 0.05):
        raise ValidationError("dt_s must be within [0.001, 0.05]")
    if not machines:
        raise ValidationError("at least one machine required")
    n_steps = int(round(duration_s / dt_s))
    events_in = sorted(((float(t), int(b), float(mw)) for t, b, mw in load_events), key=lambda e: e[0])
    for t, _, _ in events_in:
        if t < 0 or t > duration_s + 1e-9:
            raise ValidationError(f"load event at {t} s outside [0, {duration_s}]")

    bus_load = {b.id: float(b.load_mw) for b in case.buses}
    total_load = sum(bus_load.values())
    if initial_gen_mw is None:
        disp = economic_dispatch(_machine_case(case, machines), total_load)
        initial_gen_mw = disp.p_mw
    pm = np.array(initial_gen_mw, dtype=float)
    if pm.shape != (len(machines),):
        raise ValidationError("initial_gen_mw must give one value per machine")
    pref = pm.copy()
    online = np.ones(len(machines), dtype=bool)
    rating = np.array([m.p_rated_mw for m in machines])
    h = np.array([m.inertia_h_s for m in machines])
    d = np.array([m.damping_d_pu for m in machines])
    r = np.array([m.droop_r_pu for m in machines])
    tg = np.array([m.governor_time_constant_s for m in machines])
    k_agc = np.array([m.agc_gain for m in machines])

    # pm and pref are integrated; residual imbalance only comes from load
    pm_sum0 = pm.sum()
    load_mw = total_load
    if abs(pm_sum0 - load_mw) > 1e-6 * max(1.0, load_mw):
        raise ValidationError(f"initial generation {pm_sum0:.3f} MW does not balance load {load_mw:.3f} MW")

    def deriv(x, load):
        dw = x[0]
        pmx = x[1:1 + n]
        prx = x[1 + n:]
        on = online
        m2 = 2.0 * np.sum(h[on] * rating[on])
        damp = np.sum(d[on] * rating[on]) * dw
        ddw = (np.sum(pmx[on]) - load - damp) / m2
        dpm = np.where(on, (prx - pmx - rating / r * dw) / tg, 0.0)
        dpr = np.where(on, -k_agc * rating * dw, 0.0)
        return np.concatenate([[ddw], dpm, dpr])

    n = len(machines)
    x = np.concatenate([[0.0], pm, pref])
    ts = np.empty(n_steps + 1)
    fs = np.empty(n_steps + 1)
    ls = np.empty(n_steps + 1)
    gs = np.empty(n_steps + 1)
    events: list[TraceEvent] = []
    state = ProtectionState(protection, load_mw,
                            {i: (rating[i], x[1 + i]) for i in range(n)})
    ev_i = 0
    stopped = None
    last = n_steps
    for k in range(n_steps + 1):
        t = k * dt_s
        while ev_i < len(events_in) and round(events_in[ev_i][0] / dt_s) <= k:
            _, bus, mw = events_in[ev_i]
            if bus not in bus_load:
                raise ValidationError(f"load event on unknown bus {bus}")
            bus_load[bus] += mw
            events.append(TraceEvent(t, "AttackOn" if mw > 0 else "AttackOff", abs(mw), f"bus {bus}"))
            ev_i += 1
        load_mw = sum(bus_load.values())
        freq = F0 * (1.0 + x[0])
        state.total_load_mw = load_mw
        state.gens = {i: (rating[i], x[1 + i]) for i in range(n) if online[i]}
        for act in protection_step(freq, t, state):
            if isinstance(act, Shed):
                frac = act.mw / load_mw if load_mw > 0 else 0.0
                for b in bus_load:
                    bus_load[b] *= 1.0 - frac
                load_mw = sum(bus_load.values())
                events.append(TraceEvent(t, "Shed", act.mw, f"{protection.ufls_shed_fraction:.0%} of load"))
            elif isinstance(act, GenTrip):
                online[act.gen_id] = False
                x[1 + act.gen_id] = 0.0
                x[1 + n + act.gen_id] = 0.0
                events.append(TraceEvent(t, "GenTrip", act.mw, f"gen at bus {machines[act.gen_id].bus}"))
                if not online.any() or x[1:1 + n][online].sum() < load_mw:
                    stopped = "NearBlackout"
        ts[k] = t
        fs[k] = freq
        ls[k] = load_mw
        gs[k] = x[1:1 + n][online].sum()
        if stopped:
            events.append(TraceEvent(t, "NearBlackout", load_mw - gs[k], "remaining generation below load"))
            last = k
            break
        if k == n_steps:
            break
        k1 = deriv(x, load_mw)
        k2 = deriv(x + 0.5 * dt_s * k1, load_mw)
        k3 = deriv(x + 0.5 * dt_s * k2, load_mw)
        k4 = deriv(x + dt_s * k3, load_mw)
        x = x + dt_s / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.isfinite(x).all() or abs(x[0]) > MAX_DEVIATION_PU:
            raise UnstableIntegration(f"frequency deviation beyond {MAX_DEVIATION_PU:.0%} at t={t + dt_s:.3f} s")
    sl = slice(0, last + 1)
    return FrequencyTrace(dt_s, ts[sl].copy(), fs[sl].copy(), ls[sl].copy(), gs[sl].copy(), events, stopped)


def _machine_case(case: GridCase, machines):
    """A copy of ``case`` whose generators are exactly the machines, in order."""
    by_bus = {}
    for g in case.in_service_generators():
        by_bus.setdefault(g.bus, []).append(g)
    sub = case.copy()
    sub.generators = []
    for m in machines:
        pool = by_bus.get(m.bus)
        if not pool:
            raise ValidationError(f"machine at bus {m.bus} has no generator in the case")
        sub.generators.append(type(pool[0])(**vars(pool.pop(0))))
    return sub


def droop_steady_state_hz(delta_p_mw: float, machines: list[MachineParams]) -> float:
    """Closed-form settled deviation for a sustained load step with AGC off."""
    beta = sum(m.p_rated_mw / m.droop_r_pu + m.damping_d_pu * m.p_rated_mw for m in machines)
    return -delta_p_mw / beta * F0
