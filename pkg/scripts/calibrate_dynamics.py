"""Search machine defaults that reproduce the 40/80 MW two-pulse protection timeline.

Usage: python scripts/calibrate_dynamics.py [--trials N] [--seed S]

Scores each candidate on the protection event sequence (Shed, Shed, GenTrip)
and its distance from the 17.9 / 33.0 / 39.4 s targets, and prints the best
parameter set. The result is pasted into ``evcs_sim.dynamics.transient.DEFAULTS``.
"""

from __future__ import annotations

import argparse
from importlib.resources import files

import numpy as np

from evcs_sim.dynamics import ProtectionConfig, default_machines, run_transient
from evcs_sim.errors import UnstableIntegration
from evcs_sim.gridcore import load_case

TARGETS = (("Shed", 17.9), ("Shed", 33.0), ("GenTrip", 39.4))
SCHEDULE = [(15, 3, 20), (15, 5, 20), (25, 3, -20), (25, 5, -20),
            (32, 3, 40), (32, 5, 40), (37, 3, -40), (37, 5, -40)]


def score(case, params, dt=0.01):
    try:
        tr = run_transient(case, default_machines(case, **params), ProtectionConfig(), SCHEDULE, 60.0, dt)
    except UnstableIntegration:
        return float("inf"), None
    ev = tr.protection_events()
    kinds = [e.kind for e in ev[:3]]
    penalty = 0.0
    if kinds != [k for k, _ in TARGETS]:
        penalty += 100.0 * sum(a != b for a, b in zip(kinds + [""] * 3, [k for k, _ in TARGETS]))
    err = 0.0
    for i, (_, t) in enumerate(TARGETS):
        err = max(err, abs(ev[i].t_s - t) if i < len(ev) else 30.0)
    return penalty + err, tr


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=400)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args(argv)
    case = load_case(files("evcs_sim") / "data" / "cases" / "glover7.toml")
    rng = np.random.default_rng(args.seed)
    best = (float("inf"), None)
    for _ in range(args.trials):
        params = dict(
            inertia_h_s=round(float(rng.uniform(0.5, 5.0)), 2),
            damping_d_pu=round(float(rng.uniform(0.0, 2.0)), 2),
            droop_r_pu=round(float(rng.choice([0.04, 0.05, 0.06, 0.08, 0.1])), 2),
            governor_time_constant_s=round(float(rng.uniform(0.3, 12.0)), 2),
            agc_gain=round(float(rng.uniform(0.0, 0.6)), 3),
        )
        s, _ = score(case, params)
        if s < best[0]:
            best = (s, params)
            print(f"{s:8.3f} {params}", flush=True)
    s, tr = score(case, best[1])
    print("best", best[1])
    for e in tr.protection_events():
        print(f"  {e.t_s:6.2f} {e.kind} {e.magnitude_mw:.1f}")


if __name__ == "__main__":
    main()
