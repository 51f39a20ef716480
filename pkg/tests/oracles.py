"""Brute-force dense-matrix oracle, independent of the simulator kernels.

Builds full 2**n x 2**n operators by Kronecker products and explicit index
arithmetic, then applies them as matrix-vector products. Gate constants are
defined here from scratch so the oracle shares no code path with the package
under test.
"""
from __future__ import annotations

import numpy as np

SQRT2 = np.sqrt(2.0)
H = np.array([[1, 1], [1, -1]], dtype=complex) / SQRT2
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def rx(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)]).astype(complex)


def one_qubit_operator(n: int, q: int, u: np.ndarray) -> np.ndarray:
    """Embed u on qubit q (bit q of the basis index) into the full space."""
    op = np.eye(1, dtype=complex)
    # kron puts the later factor in the low bits, so walk from bit n-1 down.
    for bit in range(n - 1, -1, -1):
        op = np.kron(op, u if bit == q else I2)
    return op


def controlled_operator(n: int, control: int, target: int, u: np.ndarray) -> np.ndarray:
    dim = 1 << n
    op = np.zeros((dim, dim), dtype=complex)
    for i in range(dim):
        if (i >> control) & 1 == 0:
            op[i, i] = 1.0
        else:
            j = i ^ (1 << target)
            tb = (i >> target) & 1
            # column i feeds rows with target bit 0/1 per the matrix column tb
            if tb == 0:
                op[i, i] += u[0, 0]
                op[j, i] += u[1, 0]
            else:
                op[j, i] += u[0, 1]
                op[i, i] += u[1, 1]
    return op


def cut_count(edges, index: int) -> int:
    return sum(((index >> a) ^ (index >> b)) & 1 for a, b in edges)


def diagonal_cost_operator(n: int, edges, gamma: float) -> np.ndarray:
    phases = np.array([np.exp(-1j * gamma * cut_count(edges, i)) for i in range(1 << n)])
    return np.diag(phases)


def probability_of_one(state: np.ndarray, q: int) -> float:
    n = int(np.log2(state.size))
    total = 0.0
    for i in range(state.size):
        if (i >> q) & 1:
            total += abs(state[i]) ** 2
    return total


def z_expectation(state: np.ndarray, q: int) -> float:
    total = 0.0
    for i in range(state.size):
        sign = -1.0 if (i >> q) & 1 else 1.0
        total += sign * abs(state[i]) ** 2
    return total


def maxcut_expectation(state: np.ndarray, edges) -> float:
    return sum(abs(state[i]) ** 2 * cut_count(edges, i) for i in range(state.size))


def random_unitary_2x2(rng: np.random.Generator) -> np.ndarray:
    """Haar-ish 2x2 unitary from QR decomposition of a Ginibre matrix."""
    raw = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    q, r = np.linalg.qr(raw)
    return q @ np.diag(np.diag(r) / np.abs(np.diag(r)))


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return (psi / np.linalg.norm(psi)).astype(np.complex128)


GATE_SET = ("h", "x", "y", "z", "rx", "ry", "rz", "cx", "cz", "diagcost")


def random_gate_list(n: int, count: int, rng: np.random.Generator,
                     edges=((0, 1),), kinds=GATE_SET) -> list[dict]:
    """Mixed random gate descriptions usable by both oracle and simulator."""
    gates = []
    for _ in range(count):
        kind = kinds[rng.integers(len(kinds))]
        spec: dict = {"kind": kind}
        if kind in ("rx", "ry", "rz"):
            spec["qubit"] = int(rng.integers(n))
            spec["angle"] = float(rng.uniform(0, 2 * np.pi))
        elif kind in ("cx", "cz"):
            c = int(rng.integers(n))
            t = int(rng.integers(n - 1))
            spec["control"], spec["target"] = c, t if t < c else t + 1
        elif kind == "diagcost":
            spec["edges"] = edges
            spec["gamma"] = float(rng.uniform(0, 2 * np.pi))
        else:
            spec["qubit"] = int(rng.integers(n))
        gates.append(spec)
    return gates


def apply_gate_list_dense(n: int, gates: list[dict],
                          state: np.ndarray | None = None) -> np.ndarray:
    """Matrix-product oracle: build each full operator and multiply through."""
    psi = np.zeros(1 << n, dtype=complex) if state is None else state.astype(complex).copy()
    if state is None:
        psi[0] = 1.0
    fixed = {"h": H, "x": X, "y": Y, "z": Z}
    rots = {"rx": rx, "ry": ry, "rz": rz}
    for g in gates:
        kind = g["kind"]
        if kind in fixed:
            op = one_qubit_operator(n, g["qubit"], fixed[kind])
        elif kind in rots:
            op = one_qubit_operator(n, g["qubit"], rots[kind](g["angle"]))
        elif kind == "cx":
            op = controlled_operator(n, g["control"], g["target"], X)
        elif kind == "cz":
            op = controlled_operator(n, g["control"], g["target"], Z)
        elif kind == "diagcost":
            op = diagonal_cost_operator(n, g["edges"], g["gamma"])
        else:
            raise ValueError(kind)
        psi = op @ psi
    return psi


def gate_list_to_circuit_text(n: int, gates: list[dict], graph_file: str | None = None) -> str:
    lines = [f"qubits {n}"]
    for g in gates:
        kind = g["kind"]
        if kind in ("h", "x", "y", "z"):
            lines.append(f"{kind} {g['qubit']}")
        elif kind in ("rx", "ry", "rz"):
            lines.append(f"{kind} {g['qubit']} {g['angle']!r}")
        elif kind in ("cx", "cz"):
            lines.append(f"{kind} {g['control']} {g['target']}")
        elif kind == "diagcost":
            assert graph_file is not None
            lines.append(f"diagcost {graph_file} {g['gamma']!r}")
    return "\n".join(lines) + "\n"
