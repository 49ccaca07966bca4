from __future__ import annotations

from ..errors import ZeroAverage
from .case import GridCase, LoadProfile


def scale_loads(case: GridCase, profile: LoadProfile, hour: int) -> GridCase:
    """Scale every bus load by ``hourly_mw[hour] / average_mw`` of the profile.

    Reactive loads get the same factor; generators are left alone.
    """
    if not 0 <= hour < 24:
        raise ValueError(f"hour must be in [0, 24), got {hour}")
    avg = profile.average_mw
    if avg <= 0:
        raise ZeroAverage("profile average load is zero")
    factor = profile.hourly_mw[hour] / avg
    out = case.copy()
    for b in out.buses:
        b.load_mw = b.load_mw * factor
        b.load_mvar = b.load_mvar * factor
    return out
