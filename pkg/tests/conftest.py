import hypothesis
import numpy as np
import pytest

from qpool.circuit import Circuit, GateSpec
from qpool.graphs import make_graph

hypothesis.settings.register_profile("ci", deadline=None, max_examples=50)
hypothesis.settings.load_profile("ci")


def gate_dicts_to_circuit(n: int, gates: list[dict]) -> Circuit:
    """Bridge the oracle's plain gate descriptions into simulator IR."""
    specs = []
    for g in gates:
        kind = g["kind"]
        if kind in ("h", "x", "y", "z"):
            specs.append(GateSpec(kind, (g["qubit"],)))
        elif kind in ("rx", "ry", "rz"):
            specs.append(GateSpec(kind, (g["qubit"],), g["angle"]))
        elif kind in ("cx", "cz"):
            specs.append(GateSpec(kind, (g["control"], g["target"])))
        elif kind == "diagcost":
            graph = make_graph(n, g["edges"])
            specs.append(GateSpec("diagcost", (), g["gamma"], graph=graph))
        else:
            raise ValueError(kind)
    return Circuit(n, tuple(specs))


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


def assert_states_close(actual: np.ndarray, expected: np.ndarray, tol: float = 1e-12):
    assert actual.shape == expected.shape
    deviation = np.max(np.abs(actual - expected))
    assert deviation < tol, f"max amplitude deviation {deviation:.3e} >= {tol}"


def bits_equal(a: np.ndarray, b: np.ndarray) -> bool:
    return a.shape == b.shape and bool(
        np.array_equal(a.view(np.uint64), b.view(np.uint64))
    )
