import copy
import sys

import pytest
from hypothesis import settings

from deloneapprox.config import config_from_dict

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

BASE = {
    "name": "test",
    "alpha": "2",
    "a": "0",
    "b": "1",
    "N_max": 60,
    "delone": {"variant": "integer-lattice"},
    "psi": {"variant": "constant", "c": "1/4"},
    "seed": 1,
}


def make_config(**changes):
    data = copy.deepcopy(BASE)
    overrides = {k: changes.pop(k) for k in ("precision_bits", "point_budget", "band_width") if k in changes}
    data.update(changes)
    return config_from_dict(data, **overrides)


@pytest.fixture
def cfg_factory():
    return make_config


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
