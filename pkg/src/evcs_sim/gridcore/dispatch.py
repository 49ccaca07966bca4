"""Equal-incremental-cost economic dispatch with a loss fixed-point loop."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import Infeasible
from .case import GridCase
from .powerflow import PowerFlowSolution, solve_ac_power_flow

LOSS_ITERATIONS = 3


@dataclass
class DispatchResult:
    p_mw: list[float]  # one entry per generator in the case; 0 for out-of-service units
    total_cost_usd_per_h: float
    marginal_cost_usd_per_mwh: float
    demand_mw: float
    loss_estimate_mw: float


def _output_at(lam, g):
    b, c = g.cost_b_usd_mwh, g.cost_c_usd_mw2h
    if c > 0:
        p = (lam - b) / (2.0 * c)
    else:
        p = g.p_max_mw if lam > b else g.p_min_mw
    return min(max(p, g.p_min_mw), g.p_max_mw)


def economic_dispatch(case: GridCase, demand_mw: float, loss_estimate_mw: float = 0.0) -> DispatchResult:
    """Allocate ``demand_mw + loss_estimate_mw`` at equal incremental cost.

    Units that would leave their limits are clamped; the remaining units share
    the rest so that ``b_i + 2 c_i p_i`` is equal across them.
    """
    units = [(i, g) for i, g in enumerate(case.generators) if g.in_service]
    target = demand_mw + loss_estimate_mw
    p_lo = sum(g.p_min_mw for _, g in units)
    p_hi = sum(g.p_max_mw for _, g in units)
    if not units or target > p_hi + 1e-9 or target < p_lo - 1e-9:
        raise Infeasible(f"demand {target:.3f} MW outside generation range [{p_lo:.3f}, {p_hi:.3f}] MW")

    # bracket lambda, then bisect on total output
    lo = min(g.cost_b_usd_mwh + 2 * g.cost_c_usd_mw2h * g.p_min_mw for _, g in units) - 1.0
    hi = max(g.cost_b_usd_mwh + 2 * g.cost_c_usd_mw2h * g.p_max_mw for _, g in units) + 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if sum(_output_at(mid, g) for _, g in units) < target:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)

    # closed-form refinement over units that are strictly inside their limits
    p = {i: _output_at(lam, g) for i, g in units}
    free = [(i, g) for i, g in units
            if g.cost_c_usd_mw2h > 0 and g.p_min_mw + 1e-6 < p[i] < g.p_max_mw - 1e-6]
    if free:
        free_ids = {i for i, _ in free}
        fixed = sum(p[i] for i, _ in units if i not in free_ids)
        inv = sum(1.0 / (2 * g.cost_c_usd_mw2h) for _, g in free)
        shift = sum(g.cost_b_usd_mwh / (2 * g.cost_c_usd_mw2h) for _, g in free)
        lam = (target - fixed + shift) / inv
        for i, g in free:
            p[i] = (lam - g.cost_b_usd_mwh) / (2 * g.cost_c_usd_mw2h)
    else:
        residue = target - sum(p.values())
        # cheapest first when adding, most expensive first when removing
        order = sorted(units, key=lambda u: u[1].cost_b_usd_mwh, reverse=residue < 0)
        for i, g in order:
            if abs(residue) <= 1e-9:
                break
            if residue > 0:
                step = min(residue, g.p_max_mw - p[i])
            else:
                step = max(residue, g.p_min_mw - p[i])
            p[i] += step
            residue -= step

    out = [0.0] * len(case.generators)
    for i, _ in units:
        out[i] = p[i]
    cost = sum(case.generators[i].cost(out[i]) for i, _ in units)
    return DispatchResult(out, cost, lam, demand_mw, loss_estimate_mw)


def total_cost(case: GridCase, p_mw) -> float:
    return sum(g.cost(p) for g, p in zip(case.generators, p_mw) if g.in_service)


def apply_dispatch(case: GridCase, p_mw) -> GridCase:
    out = case.copy()
    for g, p in zip(out.generators, p_mw):
        g.p_mw = p if g.in_service else 0.0
    return out


@dataclass
class DispatchedFlow:
    case: GridCase  # copy with generator p_mw set to the final dispatch
    dispatch: DispatchResult
    flow: PowerFlowSolution

    @property
    def losses_mw(self):
        return self.flow.total_losses_mw

    @property
    def cost_usd_per_h(self):
        """Generation cost with the slack output the power flow actually required."""
        return total_cost(self.case, self.flow.gen_p_mw)


def dispatch_with_losses(case: GridCase, iterations: int = LOSS_ITERATIONS) -> DispatchedFlow:
    """Dispatch -> power flow -> re-dispatch with the computed losses, ``iterations`` times."""
    demand = case.total_load_mw
    loss = 0.0
    result = None
    for _ in range(max(1, iterations)):
        result = economic_dispatch(case, demand, loss)
        sol = solve_ac_power_flow(apply_dispatch(case, result.p_mw))
        loss = sol.total_losses_mw
    dispatched = apply_dispatch(case, result.p_mw)
    sol = solve_ac_power_flow(dispatched)
    return DispatchedFlow(dispatched, result, sol)
