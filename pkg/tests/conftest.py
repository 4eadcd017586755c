from pathlib import Path

import pytest

from tcpnets import parse_net

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def load_net(name: str):
    return parse_net((FIXTURES / name).read_text())


@pytest.fixture(scope="session")
def evening_net():
    return load_net("evening_dress.tcpnet")


@pytest.fixture(scope="session")
def flight_net():
    return load_net("flight.tcpnet")


@pytest.fixture(scope="session")
def abc_net():
    return load_net("abc_cyclic.tcpnet")


@pytest.fixture(scope="session")
def ring_directed_net():
    return load_net("importance_ring_directed.tcpnet")


@pytest.fixture(scope="session")
def ring_acyclic_net():
    return load_net("importance_ring_acyclic.tcpnet")


def ed(j: str, p: str, s: str) -> dict:
    """Evening-dress outcome shorthand."""
    return {"J": j, "P": p, "S": s}


def abc(a: str, b: str, c: str) -> dict:
    return {"A": a, "B": b, "C": c}
