"""Gate matrices and in-place-style kernels shared by the unitary oracle and the simulator.

Tensors carry a leading batch axis followed by one axis per qubit, most
significant qubit first, so that ``tensor.reshape(batch, -1)`` is a
little-endian amplitude vector (qubit 0 is the least significant bit).
"""
from __future__ import annotations

from math import cos, sin

import numpy as np

ONE_QUBIT = frozenset({"I", "X", "Y", "Z", "H", "RX", "RY", "RZ"})
TWO_QUBIT = frozenset({"CNOT", "CZ", "SWAP"})
ROTATIONS = frozenset({"RX", "RY", "RZ"})
GATES = ONE_QUBIT | TWO_QUBIT
KINDS = GATES | {"MEASURE"}

_SQ2 = 1 / np.sqrt(2)
_FIXED = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
}
PAULIS = (_FIXED["I"], _FIXED["X"], _FIXED["Y"], _FIXED["Z"])


def matrix_1q(kind: str, angle: float | None = None) -> np.ndarray:
    """2x2 matrix of a single-qubit gate; rotations are exp(-i angle P / 2)."""
    if kind in _FIXED:
        return _FIXED[kind]
    c, s = cos(angle / 2), sin(angle / 2)
    if kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind == "RY":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "RZ":
        return np.array([[c - 1j * s, 0], [0, c + 1j * s]], dtype=complex)
    raise ValueError(f"not a single-qubit gate: {kind}")


def _axis(qubit: int, n: int) -> int:
    return n - qubit


def _slot(n: int, picks: dict[int, int]) -> tuple:
    idx = [slice(None)] * (n + 1)
    for q, v in picks.items():
        idx[_axis(q, n)] = v
    return tuple(idx)


def apply_1q(tensor: np.ndarray, matrix: np.ndarray, qubit: int, n: int) -> np.ndarray:
    ax = _axis(qubit, n)
    out = np.tensordot(matrix, tensor, axes=([1], [ax]))
    return np.moveaxis(out, 0, ax)


def apply_2q(tensor: np.ndarray, kind: str, a: int, b: int, n: int) -> np.ndarray:
    out = tensor.copy()
    if kind == "CZ":
        out[_slot(n, {a: 1, b: 1})] *= -1
    elif kind == "CNOT":
        out[_slot(n, {a: 1, b: 0})] = tensor[_slot(n, {a: 1, b: 1})]
        out[_slot(n, {a: 1, b: 1})] = tensor[_slot(n, {a: 1, b: 0})]
    elif kind == "SWAP":
        out = np.swapaxes(tensor, _axis(a, n), _axis(b, n)).copy()
    else:
        raise ValueError(f"not a two-qubit gate: {kind}")
    return out


def apply_gate(tensor: np.ndarray, kind: str, qubits: tuple[int, ...],
               angle: float | None, n: int) -> np.ndarray:
    if kind in TWO_QUBIT:
        return apply_2q(tensor, kind, qubits[0], qubits[1], n)
    if kind == "I":
        return tensor
    return apply_1q(tensor, matrix_1q(kind, angle), qubits[0], n)


def full_matrix(kind: str, qubits: tuple[int, ...], angle: float | None, n: int) -> np.ndarray:
    """2^n x 2^n matrix of one gate on an n-qubit register."""
    dim = 1 << n
    eye = np.eye(dim, dtype=complex).reshape((dim,) + (2,) * n)
    return apply_gate(eye, kind, qubits, angle, n).reshape(dim, dim).T
