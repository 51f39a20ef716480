"""Named 2x2 gate matrices and unitarity validation.

All matrices are complex128 ndarrays of shape (2, 2). Rotation gates use the
half-angle convention: ``rx(t) = exp(-i t X / 2)`` and likewise for Y and Z.
"""
from __future__ import annotations

import numpy as np

UNITARITY_TOL = 1e-12

HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
IDENTITY = np.eye(2, dtype=np.complex128)


def rx(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def rz(theta: float) -> np.ndarray:
    return np.array(
        [[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=np.complex128
    )


def is_unitary(matrix: np.ndarray, tol: float = UNITARITY_TOL) -> bool:
    matrix = np.asarray(matrix, dtype=np.complex128)
    if matrix.shape != (2, 2):
        return False
    return bool(np.max(np.abs(matrix.conj().T @ matrix - IDENTITY)) <= tol)


def gate_matrix(matrix: np.ndarray, validate: bool = False) -> np.ndarray:
    """Coerce a user-supplied 2x2 matrix to complex128.

    Unitarity is not enforced by default; pass ``validate=True`` for the
    strict 1e-12 check.
    """
    matrix = np.asarray(matrix, dtype=np.complex128)
    if matrix.shape != (2, 2):
        raise ValueError(f"gate matrix must be 2x2, got shape {matrix.shape}")
    if validate and not is_unitary(matrix):
        raise ValueError("matrix is not unitary within 1e-12")
    return matrix


# Fixed one-qubit gates by mnemonic; rotations are built per-angle.
FIXED_GATES: dict[str, np.ndarray] = {
    "h": HADAMARD,
    "x": PAULI_X,
    "y": PAULI_Y,
    "z": PAULI_Z,
}

ROTATION_GATES = {"rx": rx, "ry": ry, "rz": rz}
