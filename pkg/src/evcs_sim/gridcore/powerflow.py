"""Full Newton-Raphson AC power flow in polar coordinates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import Diverged, IslandWithoutSlack
from .case import GridCase
from .topology import islands

MAX_ITER = 30
TOL_PU = 1e-10


@dataclass
class LineFlow:
    from_bus: int
    to_bus: int
    p_from_mw: float
    q_from_mvar: float
    p_to_mw: float
    q_to_mvar: float
    i_pu: float
    loading_pct: float

    @property
    def key(self):
        return (min(self.from_bus, self.to_bus), max(self.from_bus, self.to_bus))

    @property
    def loss_mw(self):
        return self.p_from_mw + self.p_to_mw


@dataclass
class PowerFlowSolution:
    vm_pu: dict[int, float]
    va_rad: dict[int, float]
    flows: list[LineFlow]
    gen_p_mw: list[float]
    gen_q_mvar: list[float]
    total_losses_mw: float
    total_load_mw: float
    iterations: int
    max_mismatch_pu: float
    line_index: list[int] = field(default_factory=list)

    @property
    def total_gen_mw(self):
        return float(sum(self.gen_p_mw))

    @property
    def balance_residual_mw(self):
        return self.total_gen_mw - self.total_load_mw - self.total_losses_mw

    def va_deg(self):
        return {k: float(np.degrees(v)) for k, v in self.va_rad.items()}

    def overloaded(self, threshold_pct=100.0):
        return [f for f in self.flows if f.loading_pct > threshold_pct]


def build_ybus(case: GridCase):
    idx = {b.id: i for i, b in enumerate(case.buses)}
    n = len(case.buses)
    ybus = np.zeros((n, n), dtype=complex)
    for ln in case.lines:
        if not ln.in_service:
            continue
        f, t = idx[ln.from_bus], idx[ln.to_bus]
        y = 1.0 / complex(ln.r_pu, ln.x_pu)
        sh = 0.5j * ln.b_pu
        ybus[f, f] += y + sh
        ybus[t, t] += y + sh
        ybus[f, t] -= y
        ybus[t, f] -= y
    return ybus, idx


def _check_connected(case: GridCase):
    groups = islands(case)
    slack = case.slack_bus.id
    for g in groups:
        if slack not in g:
            raise IslandWithoutSlack(f"buses {sorted(g)} are not connected to the slack bus")


def solve_ac_power_flow(case: GridCase, max_iter: int = MAX_ITER, tol: float = TOL_PU) -> PowerFlowSolution:
    """Solve the AC power flow with generator outputs taken from ``Generator.p_mw``.

    The slack bus absorbs the mismatch; PV buses hold ``v_setpoint_pu`` with
    unlimited reactive output. Flat start.
    """
    _check_connected(case)
    base = case.base_mva
    ybus, idx = build_ybus(case)
    n = len(case.buses)

    gens_at = {b.id: [] for b in case.buses}
    for gi, g in enumerate(case.generators):
        if g.in_service:
            gens_at[g.bus].append(gi)

    p_spec = np.zeros(n)
    q_spec = np.zeros(n)
    vm = np.ones(n)
    va = np.zeros(n)
    pv, pq = [], []
    slack_i = None
    for b in case.buses:
        i = idx[b.id]
        p_spec[i] = (sum(case.generators[g].p_mw for g in gens_at[b.id]) - b.load_mw) / base
        q_spec[i] = -b.load_mvar / base
        if b.kind == "slack":
            slack_i = i
            vm[i] = b.v_setpoint_pu
        elif b.kind == "pv" and gens_at[b.id]:
            pv.append(i)
            vm[i] = b.v_setpoint_pu
        else:
            pq.append(i)
    pvpq = pv + pq
    npvpq, npq = len(pvpq), len(pq)

    def mismatch(vm, va):
        v = vm * np.exp(1j * va)
        s = v * np.conj(ybus @ v)
        return np.concatenate([s.real[pvpq] - p_spec[pvpq], s.imag[pq] - q_spec[pq]])

    f = mismatch(vm, va)
    err = float(np.max(np.abs(f))) if f.size else 0.0
    it = 0
    while err > tol:
        if it >= max_iter:
            raise Diverged(f"power flow did not converge in {max_iter} iterations (mismatch {err:.3e} pu)")
        it += 1
        v = vm * np.exp(1j * va)
        ibus = ybus @ v
        dv_va = 1j * np.diag(v) @ np.conj(np.diag(ibus) - ybus @ np.diag(v))
        dv_vm = np.diag(v) @ np.conj(ybus @ np.diag(v / vm)) + np.conj(np.diag(ibus)) @ np.diag(v / vm)
        jac = np.zeros((npvpq + npq, npvpq + npq))
        jac[:npvpq, :npvpq] = dv_va.real[np.ix_(pvpq, pvpq)]
        jac[:npvpq, npvpq:] = dv_vm.real[np.ix_(pvpq, pq)]
        jac[npvpq:, :npvpq] = dv_va.imag[np.ix_(pq, pvpq)]
        jac[npvpq:, npvpq:] = dv_vm.imag[np.ix_(pq, pq)]
        try:
            dx = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            raise Diverged("singular Jacobian") from None
        va[pvpq] += dx[:npvpq]
        vm[pq] += dx[npvpq:]
        if not np.all(np.isfinite(vm)) or np.any(vm <= 0):
            raise Diverged("voltage magnitudes became non-physical")
        f = mismatch(vm, va)
        err = float(np.max(np.abs(f)))

    v = vm * np.exp(1j * va)
    s_inj = v * np.conj(ybus @ v)

    gen_p = [0.0] * len(case.generators)
    gen_q = [0.0] * len(case.generators)
    for b in case.buses:
        i = idx[b.id]
        ids = gens_at[b.id]
        if not ids:
            continue
        p_bus = s_inj[i].real * base + b.load_mw
        q_bus = s_inj[i].imag * base + b.load_mvar
        if b.kind == "slack":
            # extra slack output is shared in proportion to scheduled output
            sched = [case.generators[g].p_mw for g in ids]
            extra = p_bus - sum(sched)
            weights = [case.generators[g].p_max_mw for g in ids]
            wsum = sum(weights) or 1.0
            for g, p0, w in zip(ids, sched, weights):
                gen_p[g] = p0 + extra * w / wsum
        else:
            for g in ids:
                gen_p[g] = case.generators[g].p_mw
        for g in ids:
            gen_q[g] = q_bus / len(ids)

    flows, line_index = [], []
    total_loss = 0.0
    for li, ln in enumerate(case.lines):
        if not ln.in_service:
            continue
        fi, ti = idx[ln.from_bus], idx[ln.to_bus]
        y = 1.0 / complex(ln.r_pu, ln.x_pu)
        sh = 0.5j * ln.b_pu
        i_series = (v[fi] - v[ti]) * y
        i_f = i_series + v[fi] * sh
        i_t = -i_series + v[ti] * sh
        s_f = v[fi] * np.conj(i_f) * base
        s_t = v[ti] * np.conj(i_t) * base
        loading = max(abs(s_f), abs(s_t)) / ln.mva_rating * 100.0
        flows.append(LineFlow(ln.from_bus, ln.to_bus, s_f.real, s_f.imag, s_t.real, s_t.imag,
                              float(abs(i_series)), float(loading)))
        line_index.append(li)
        total_loss += s_f.real + s_t.real

    return PowerFlowSolution(
        vm_pu={b.id: float(vm[idx[b.id]]) for b in case.buses},
        va_rad={b.id: float(va[idx[b.id]]) for b in case.buses},
        flows=flows,
        gen_p_mw=gen_p,
        gen_q_mvar=gen_q,
        total_losses_mw=float(total_loss),
        total_load_mw=case.total_load_mw,
        iterations=it,
        max_mismatch_pu=err,
        line_index=line_index,
    )


def series_losses_mw(case: GridCase, sol: PowerFlowSolution) -> float:
    """Recompute losses as sum of |I|^2 R over in-service lines from the voltage solution."""
    total = 0.0
    for ln in case.lines:
        if not ln.in_service:
            continue
        vf = sol.vm_pu[ln.from_bus] * np.exp(1j * sol.va_rad[ln.from_bus])
        vt = sol.vm_pu[ln.to_bus] * np.exp(1j * sol.va_rad[ln.to_bus])
        i = (vf - vt) / complex(ln.r_pu, ln.x_pu)
        total += abs(i) ** 2 * ln.r_pu
    return float(total * case.base_mva)
