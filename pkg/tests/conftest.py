import pytest

from spindomino.basis import SpinConfiguration, Topology, TopologyKind, parse_end_terms

END_SETS = ["none", "left", "right", "both"]


def all_topologies(n):
    """Every topology variant for a chain of n sites."""
    out = [Topology(n, TopologyKind.OPEN, parse_end_terms(e)) for e in END_SETS]
    if n >= 3:
        out += [Topology(n, TopologyKind.RING_BOND, parse_end_terms(e)) for e in END_SETS]
        out.append(Topology.ring_full(n))
    return out


@pytest.fixture
def cfg():
    return SpinConfiguration.from_string


# lines appended by the acceptance module, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
