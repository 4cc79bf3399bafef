import sys

import pytest

from energytt.fitting import fit_pipeline
from energytt.lp import build_lp, timetable_point
from energytt.pairing import build_sync_events
from energytt.scenario import generate_scenario


class Case:
    """A generated scenario carried through pairing, fitting and LP assembly."""

    def __init__(self, seed, n_trains, n_stations):
        self.instance, self.baseline = generate_scenario(seed, n_trains, n_stations)
        self.events = build_sync_events(self.instance, self.baseline)
        self.flat = self.events[0] + self.events[1]
        self.fits = fit_pipeline(self.instance, self.baseline, self.flat)
        self.lp = build_lp(self.instance, self.fits, self.events)
        self.x0 = timetable_point(self.lp, self.instance, self.baseline, self.fits)


@pytest.fixture(scope="session")
def small_case():
    return Case(seed=7, n_trains=24, n_stations=6)


@pytest.fixture(scope="session")
def medium_case():
    return Case(seed=11, n_trains=60, n_stations=10)


@pytest.fixture(scope="session")
def make_case():
    cache = {}

    def make(seed, n_trains, n_stations):
        key = (seed, n_trains, n_stations)
        if key not in cache:
            cache[key] = Case(*key)
        return cache[key]
    return make


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
