from __future__ import annotations

from importlib.resources import files
from pathlib import Path

import pytest

DATA = Path(str(files("evcs_sim") / "data"))


def data_path(*parts) -> Path:
    return DATA.joinpath(*parts)


@pytest.fixture
def glover7():
    from evcs_sim.gridcore import load_case

    return load_case(data_path("cases", "glover7.toml"))


@pytest.fixture
def nsw_profile():
    from evcs_sim.gridcore import load_profile

    return load_profile(data_path("profiles", "nsw_like.toml"))


# -- acceptance reporting -----------------------------------------------------------

ACCEPTANCE: dict = {}
_SESSION = {}


def record(criterion: str, status: str, detail: str):
    ACCEPTANCE[criterion] = (status, detail)


def pytest_sessionstart(session):
    import time

    _SESSION["t0"] = time.perf_counter()


def pytest_terminal_summary(terminalreporter):
    import time

    if not ACCEPTANCE:
        return
    elapsed = time.perf_counter() - _SESSION.get("t0", time.perf_counter())
    if "11" in ACCEPTANCE:
        status, detail = ACCEPTANCE["11"]
        ok = status == "PASS" and elapsed < 300.0
        ACCEPTANCE["11"] = ("PASS" if ok else "FAIL", f"{detail}; session runtime {elapsed:.1f} s (limit 300 s)")
    terminalreporter.section("acceptance criteria")
    key = lambda k: (int("".join(c for c in k if c.isdigit())), k)
    for crit in sorted(ACCEPTANCE, key=key):
        status, detail = ACCEPTANCE[crit]
        terminalreporter.write_line(f"criterion {crit}: {status}: {detail}")
