"""Overload-driven cascading line failure with islanding."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import Diverged, Infeasible
from .case import GridCase
from .dispatch import apply_dispatch, economic_dispatch
from .powerflow import LineFlow, solve_ac_power_flow
from .topology import islands as find_islands

OVERLOAD_PCT = 100.0


@dataclass
class LineTrip:
    step: int
    from_bus: int
    to_bus: int
    loading_pct: float


@dataclass
class IslandState:
    buses: frozenset
    load_mw: float
    served_mw: float
    has_generation: bool


@dataclass
class CascadeReport:
    trips: list[LineTrip] = field(default_factory=list)
    islands: list[frozenset] = field(default_factory=list)
    island_states: list[IslandState] = field(default_factory=list)
    total_load_mw: float = 0.0
    unserved_mw: float = 0.0
    diverged: bool = False
    message: str = ""

    @property
    def tripped_lines(self):
        return [(t.from_bus, t.to_bus) for t in self.trips]

    @property
    def unserved_fraction(self):
        return self.unserved_mw / self.total_load_mw if self.total_load_mw > 0 else 0.0


def _subcase(case: GridCase, buses: frozenset, slack: int) -> GridCase:
    sub = GridCase(name=f"{case.name}/island{min(buses)}", base_mva=case.base_mva)
    for b in case.buses:
        if b.id in buses:
            nb = type(b)(**vars(b))
            nb.kind = "slack" if b.id == slack else ("pv" if b.kind == "slack" else b.kind)
            sub.buses.append(nb)
    sub.lines = [type(ln)(**vars(ln)) for ln in case.lines
                 if ln.from_bus in buses and ln.to_bus in buses]
    sub.generators = [type(g)(**vars(g)) for g in case.generators if g.bus in buses]
    return sub


def _solve_islands(state: GridCase, split: bool):
    """Solve every island; return (flows, island states, unserved MW)."""
    flows: list[LineFlow] = []
    states = []
    unserved = 0.0
    slack_id = state.slack_bus.id
    for isl in find_islands(state):
        load = sum(b.load_mw for b in state.buses if b.id in isl)
        gens = [g for g in state.generators if g.in_service and g.bus in isl]
        if not gens:
            unserved += load
            states.append(IslandState(isl, load, 0.0, False))
            continue
        if slack_id in isl:
            slack = slack_id
        else:
            slack = max(gens, key=lambda g: (g.p_max_mw, -g.bus)).bus
        sub = _subcase(state, isl, slack)
        served = load
        if split:
            for g in sub.generators:
                g.p_min_mw = 0.0  # islanded units may back down to zero
            capacity = sum(g.p_max_mw for g in sub.generators if g.in_service)
            if load > capacity:
                factor = capacity / load
                for b in sub.buses:
                    b.load_mw *= factor
                    b.load_mvar *= factor
                served = capacity
                unserved += load - capacity
            try:
                res = economic_dispatch(sub, sub.total_load_mw)
            except Infeasible:
                res = None
            if res is not None:
                sub = apply_dispatch(sub, res.p_mw)
        if len(isl) > 1 or split:
            sol = solve_ac_power_flow(sub)
            flows.extend(sol.flows)
        states.append(IslandState(isl, load, served, True))
    return flows, states, unserved


def cascade(case: GridCase, threshold_pct: float = OVERLOAD_PCT) -> CascadeReport:
    """Trip the most-overloaded line, re-solve, repeat until nothing is overloaded.

    While the network is still in one piece the scheduled dispatch is kept and
    the slack picks up any change; once it splits, every island with generation
    is re-dispatched on its own and islands without generation lose their load.
    """
    state = case.copy()
    report = CascadeReport(total_load_mw=case.total_load_mw)
    n_lines = sum(1 for ln in state.lines if ln.in_service)
    for step in range(n_lines + 1):
        split = len(find_islands(state)) > 1
        try:
            flows, states, unserved = _solve_islands(state, split)
        except Diverged as exc:
            report.diverged = True
            report.message = f"step {step}: {exc}"
            raise Diverged(report.message, partial=report) from None
        report.islands = [s.buses for s in states]
        report.island_states = states
        report.unserved_mw = unserved
        over = [f for f in flows if f.loading_pct > threshold_pct]
        if not over:
            break
        worst = min(over, key=lambda f: (-f.loading_pct, f.key))
        for ln in state.lines:
            if ln.in_service and ln.key == worst.key:
                ln.in_service = False
                break
        report.trips.append(LineTrip(step, worst.key[0], worst.key[1], worst.loading_pct))
    return report


@dataclass
class TargetedTripReport:
    cascade: CascadeReport
    attack_bus_mw: dict
    base_load_mw: float
    base_unserved_mw: float

    @property
    def base_unserved_fraction(self):
        return self.base_unserved_mw / self.base_load_mw if self.base_load_mw > 0 else 0.0


def targeted_trip(case: GridCase, attack_bus_mw: dict, threshold_pct: float = OVERLOAD_PCT) -> TargetedTripReport:
    """Add attack load on top of the scheduled dispatch and run the cascade.

    Unserved load is also reported net of the attack itself, i.e. how much
    of the consumers' own demand was lost. Short islands shed pro rata, so
    the attack share of an island's shortfall is proportional.
    """
    attacked = case.with_added_load(attack_bus_mw)
    rep = cascade(attacked, threshold_pct)
    base_unserved = 0.0
    for st in rep.island_states:
        lost = st.load_mw - st.served_mw
        if lost <= 0 or st.load_mw <= 0:
            continue
        added = sum(mw for b, mw in attack_bus_mw.items() if b in st.buses)
        base_unserved += lost * (st.load_mw - added) / st.load_mw
    return TargetedTripReport(rep, dict(attack_bus_mw), case.total_load_mw, base_unserved)
