"""Loss and generation-cost impact of an attack load, plus annualisation."""

from __future__ import annotations

import random
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from .case import GridCase, LoadProfile
from .dispatch import dispatch_with_losses
from .scaling import scale_loads

IMPACT_CSV_HEADER = [
    "label", "hour", "base_load_mw", "attack_mw",
    "loss_before_mw", "loss_after_mw", "loss_increase_pct",
    "cost_before_usd_h", "cost_after_usd_h", "cost_delta_usd_h", "annualized_usd",
]


def annualize(cost_delta_usd_h, hours_per_day=1, days=365) -> Decimal:
    """Exact decimal product of an hourly cost delta over a year of attacks."""
    return Decimal(repr(float(cost_delta_usd_h))) * Decimal(hours_per_day) * Decimal(days)


def whole_dollars(amount: Decimal) -> int:
    return int(amount.quantize(Decimal("1"), rounding=ROUND_HALF_UP))


@dataclass
class ImpactReport:
    hour: int
    base_load_mw: float
    attack_mw: float
    loss_before_mw: float
    loss_after_mw: float
    cost_before_usd_h: float
    cost_after_usd_h: float
    hours_per_day: float = 1
    days: int = 365
    label: str = ""

    @property
    def loss_increase_mw(self):
        return self.loss_after_mw - self.loss_before_mw

    @property
    def loss_increase_pct(self):
        if self.loss_before_mw == 0:
            return 0.0
        return 100.0 * self.loss_increase_mw / self.loss_before_mw

    @property
    def cost_delta_usd_h(self):
        return self.cost_after_usd_h - self.cost_before_usd_h

    @property
    def annualized_usd(self) -> Decimal:
        return annualize(round(self.cost_delta_usd_h, 2), self.hours_per_day, self.days)

    def csv_row(self):
        return [
            self.label, self.hour, f"{self.base_load_mw:.6f}", f"{self.attack_mw:.6f}",
            f"{self.loss_before_mw:.6f}", f"{self.loss_after_mw:.6f}", f"{self.loss_increase_pct:.6f}",
            f"{self.cost_before_usd_h:.6f}", f"{self.cost_after_usd_h:.6f}", f"{self.cost_delta_usd_h:.6f}",
            f"{self.annualized_usd:.2f}",
        ]

    def summary(self):
        return (
            f"hour {self.hour}: base {self.base_load_mw:.1f} MW + attack {self.attack_mw:.3f} MW; "
            f"losses {self.loss_before_mw:.3f} -> {self.loss_after_mw:.3f} MW (+{self.loss_increase_pct:.2f}%); "
            f"cost ${self.cost_before_usd_h:,.2f}/h -> ${self.cost_after_usd_h:,.2f}/h "
            f"(+${self.cost_delta_usd_h:,.2f}/h, ${whole_dollars(self.annualized_usd):,}/yr)"
        )


def evaluate_impact(case: GridCase, attack_bus_mw: dict, hour: int = 0, label: str = "",
                    hours_per_day=1, days=365) -> ImpactReport:
    """Compare dispatched operation of ``case`` with and without ``attack_bus_mw`` added."""
    if any(mw < 0 for mw in attack_bus_mw.values()):
        raise ValueError("attack loads must be >= 0")
    before = dispatch_with_losses(case)
    if any(mw != 0 for mw in attack_bus_mw.values()):
        after = dispatch_with_losses(case.with_added_load(attack_bus_mw))
    else:
        after = before
    return ImpactReport(
        hour=hour,
        base_load_mw=case.total_load_mw,
        attack_mw=float(sum(attack_bus_mw.values())),
        loss_before_mw=before.losses_mw,
        loss_after_mw=after.losses_mw,
        cost_before_usd_h=before.cost_usd_per_h,
        cost_after_usd_h=after.cost_usd_per_h,
        hours_per_day=hours_per_day,
        days=days,
        label=label,
    )


def attack_impact_report(case: GridCase, attack_bus_mw: dict, hour: int, profile: LoadProfile,
                         hours_per_day=1, days=365, label="") -> ImpactReport:
    scaled = scale_loads(case, profile, hour)
    return evaluate_impact(scaled, attack_bus_mw, hour, label, hours_per_day, days)


def distribute_attack(case: GridCase, total_mw: float, mode: str, seed: int | None = None) -> dict:
    """Split ``total_mw`` over the case's load buses: random, equal or proportional."""
    buses = case.load_buses
    if not buses:
        return {}
    if mode == "equal":
        return {b: total_mw / len(buses) for b in buses}
    if mode == "proportional":
        base = {b.id: b.load_mw for b in case.buses if b.id in buses}
        tot = sum(base.values())
        return {b: total_mw * base[b] / tot for b in buses}
    if mode == "random":
        rng = random.Random(seed)
        w = [rng.random() for _ in buses]
        s = sum(w)
        return {b: total_mw * x / s for b, x in zip(buses, w)}
    raise ValueError(f"unknown distribution mode {mode!r}")
