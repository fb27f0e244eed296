import numpy as np
import pytest

from quasar.circuit import Circuit, GateKind

K = GateKind


def circ(n, *gates):
    """Circuit from ``(kind, q...)`` tuples."""
    return Circuit.from_gates(n, [(g[0], g[1:]) for g in gates])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
