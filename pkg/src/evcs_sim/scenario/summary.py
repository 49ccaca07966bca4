"""summary.txt, rebuilt purely from a run's CSV files."""

from __future__ import annotations

import csv
from collections import Counter
from decimal import Decimal
from pathlib import Path

from ..gridcore.impact import whole_dollars

REQUIRED = ("audit.csv", "events.csv", "impact.csv", "trace.csv")


def _rows(path: Path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def render_summary(out_dir) -> str:
    out = Path(out_dir)
    missing = [n for n in REQUIRED if not (out / n).is_file()]
    if missing:
        raise FileNotFoundError(f"{out}: missing {', '.join(missing)}")
    audit = _rows(out / "audit.csv")
    events = _rows(out / "events.csv")
    impact = _rows(out / "impact.csv")
    trace = _rows(out / "trace.csv")

    lines = []
    meta = next((e for e in events if e["kind"] == "Meta"), None)
    if meta:
        lines.append(meta["detail"])
    counts = Counter(r["classification"] for r in audit)
    lines.append("tuple audit: " + ", ".join(f"{k}={counts.get(k, 0)}" for k in ("Legal", "HijackSuspect", "OtherIllegal")))

    kinds = Counter(e["kind"] for e in events)
    hijacks = [e for e in events if e["kind"] == "HijackSuccess"]
    bot_grace = sum(1 for e in events if e["kind"] == "GraceEntered" and e["detail"].split()[1].startswith("bot"))
    bot_denied = sum(1 for e in events if e["kind"] == "Denied" and e["detail"].split()[1].startswith("bot"))
    lines.append(f"hijack successes: {len(hijacks)}"
                 + "".join(f"\n  t={e['t_s']} {e['detail']}" for e in hijacks))
    lines.append(f"attacker requests denied: {bot_denied}; attacker grace entries: {bot_grace}")

    loads = [Decimal(e["magnitude_mw"]) for e in events if e["kind"] == "SessionLoad"]
    if loads:
        lines.append(f"session load: peak {max(loads)} MW over {len(loads)} changes")

    prot = [e for e in events if e["kind"] in ("Shed", "GenTrip", "NearBlackout")]
    lines.append(f"protection events: {len([e for e in prot if e['kind'] != 'NearBlackout'])}")
    for e in prot:
        lines.append(f"  t={e['t_s']} {e['kind']} {e['magnitude_mw']} MW {e['detail']}")
    if trace:
        f = [float(r["freq_hz"]) for r in trace]
        lines.append(f"frequency: min {min(f):.3f} Hz, max {max(f):.3f} Hz over {trace[-1]['t_s']} s")

    trips = [e for e in events if e["kind"] == "LineTrip"]
    if trips or kinds.get("Unserved"):
        lines.append(f"line trips: {len(trips)}")
        for e in trips:
            lines.append(f"  {e['detail']}")
        for e in events:
            if e["kind"] == "Unserved":
                lines.append(f"unserved: {e['magnitude_mw']} MW total, {e['detail']}")

    for r in impact:
        delta = float(r["cost_delta_usd_h"])
        lines.append(
            f"impact[{r['label']}] hour {r['hour']}: attack {float(r['attack_mw']):.3f} MW, "
            f"losses {float(r['loss_before_mw']):.3f} -> {float(r['loss_after_mw']):.3f} MW "
            f"(+{float(r['loss_increase_pct']):.2f}%), cost +${delta:,.2f}/h, "
            f"annualized ${whole_dollars(Decimal(r['annualized_usd'])):,}"
        )
    return "\n".join(lines) + "\n"


def write_summary(out_dir) -> Path:
    out = Path(out_dir)
    path = out / "summary.txt"
    path.write_text(render_summary(out), encoding="utf-8", newline="")
    return path
