"""Which hours of the day leave the most vehicles parked and idle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from .._toml import load_toml
from ..errors import EmptyInput, ValidationError
from .recon import ReconObservation

# Weekday/weekend plug-in counts for a city-sized fleet, peaking at 10:00.
WEEKDAY_DEFAULT = (12, 8, 6, 5, 6, 14, 45, 120, 250, 340, 400, 360,
                   300, 270, 250, 240, 230, 220, 190, 150, 110, 70, 40, 20)
WEEKEND_DEFAULT = (14, 10, 7, 6, 6, 8, 20, 60, 150, 240, 300, 280,
                   250, 230, 210, 190, 170, 150, 130, 110, 80, 55, 35, 20)


@dataclass
class ArrivalModel:
    weekday: list = field(default_factory=lambda: list(WEEKDAY_DEFAULT))
    weekend: list = field(default_factory=lambda: list(WEEKEND_DEFAULT))

    def __post_init__(self):
        for name in ("weekday", "weekend"):
            v = getattr(self, name)
            if len(v) != 24:
                raise ValidationError(f"arrival model {name} needs 24 values, got {len(v)}")
            if any(x < 0 for x in v):
                raise ValidationError(f"arrival model {name} has negative entries")

    def hourly(self, day: str = "weekday"):
        if day not in ("weekday", "weekend"):
            raise ValueError(day)
        return list(getattr(self, day))


def load_arrival_model(path) -> ArrivalModel:
    d = load_toml(path)
    return ArrivalModel([float(x) for x in d["weekday"]], [float(x) for x in d["weekend"]])


@dataclass(frozen=True)
class LognormalDwell:
    """Time a vehicle stays plugged in. The default median is 3 h with a thin tail past a day."""

    median_h: float = 3.0
    sigma: float = 1.0

    def survival(self, hours: float) -> float:
        if hours <= 0:
            return 1.0
        return 1.0 - NormalDist(math.log(self.median_h), self.sigma).cdf(math.log(hours))


@dataclass(frozen=True)
class FixedDwell:
    hours: float

    def survival(self, hours: float) -> float:
        return 1.0 if hours < self.hours else 0.0


def expected_connected(arrivals, dwell=None, days: int = 3):
    """Expected vehicles connected during each hour, in steady state over repeating days.

    A vehicle arriving in hour h is counted in hour h+j while its dwell exceeds j hours.
    """
    dwell = dwell or LognormalDwell()
    a = np.asarray(arrivals, dtype=float)
    surv = np.array([dwell.survival(j) for j in range(24 * days)])
    out = np.zeros(24)
    for j, s in enumerate(surv):
        out += s * np.roll(a, j)
    return out


def _hourly_from_observations(observations):
    sums = np.zeros(24)
    ticks = np.zeros(24)
    for obs in observations:
        h = int(obs.time_s // 3600) % 24
        ticks[h] += 1
        if obs.probe_result is not None and obs.probe_result.value == "PluggedIdle":
            sums[h] += 1
    # expected idle stations per poll in that hour
    return np.divide(sums, ticks, out=np.zeros(24), where=ticks > 0)


def estimate_attack_windows(source, day: str = "weekday", dwell=None, threshold: float = 0.8):
    """Rank contiguous hour ranges where the expected count stays >= threshold * its daily maximum.

    ``source`` is an :class:`ArrivalModel` or a list of recon observations.
    Each window is (start_hour, end_hour, expected_count) with end exclusive;
    ranking is by peak count, ties to the earlier start.
    """
    if isinstance(source, ArrivalModel):
        counts = expected_connected(source.hourly(day), dwell)
    else:
        obs = list(source)
        if not obs:
            raise EmptyInput("no observations")
        if not all(isinstance(o, ReconObservation) for o in obs):
            raise TypeError("expected ArrivalModel or ReconObservation list")
        counts = _hourly_from_observations(obs)
    peak = float(counts.max())
    if peak <= 0:
        return []
    hot = counts >= threshold * peak - 1e-12
    windows = []
    h = 0
    while h < 24:
        if hot[h]:
            s = h
            while h < 24 and hot[h]:
                h += 1
            windows.append((s, h, float(counts[s:h].max())))
        else:
            h += 1
    # merge a window wrapping midnight
    if len(windows) > 1 and windows[0][0] == 0 and windows[-1][1] == 24:
        first, last = windows.pop(0), windows.pop()
        windows.append((last[0], first[1] + 24, max(first[2], last[2])))
    windows.sort(key=lambda w: (-round(w[2], 9), w[0]))
    return windows
