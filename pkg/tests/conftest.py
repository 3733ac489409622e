import sys

import numpy as np
import pytest

from leasegame.channel import ChannelConfig, ChannelGains, compute_gains, generate_topology
from leasegame.primary import N0_DEFAULT


def network_gains(seed, k, cfg=ChannelConfig()):
    """Gains of a random network drawn with the default cell geometry."""
    return compute_gains(generate_topology(seed, k), cfg)


def unit_gains(g_s, g_p=1.0):
    g_s = np.asarray(g_s, dtype=float)
    return ChannelGains(g_p=g_p, g_ps=np.ones_like(g_s), g_sp=np.ones_like(g_s), g_s=g_s)


@pytest.fixture
def n0():
    return N0_DEFAULT


@pytest.fixture
def gains20():
    return network_gains(11, 20)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.RESULTS:
        terminalreporter.write_line(line)
