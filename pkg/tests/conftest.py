import math
from functools import reduce

import numpy as np
import pytest

from hybridqc.circuit import Circuit, Const, Instruction, Abstract, Physical
from hybridqc.compiler import agave8

# Dense reference matrices built with np.kron; deliberately independent of
# hybridqc.gates so that oracle checks do not share the library's kernels.
I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
P0 = np.diag([1, 0]).astype(complex)
P1 = np.diag([0, 1]).astype(complex)


def rot(axis, theta):
    pauli = {"RX": X, "RY": Y, "RZ": Z}[axis]
    return math.cos(theta / 2) * I2 - 1j * math.sin(theta / 2) * pauli


def embed(ops: dict, n: int) -> np.ndarray:
    """Kronecker product with qubit n-1 leftmost (little-endian indices)."""
    return reduce(np.kron, [ops.get(q, I2) for q in reversed(range(n))])


def ref_gate(ins: Instruction, n: int) -> np.ndarray:
    qs = [q.index for q in ins.qubits]
    k = ins.kind
    if k in ("RX", "RY", "RZ"):
        return embed({qs[0]: rot(k, ins.params[0].value)}, n)
    if k in ("I", "X", "Y", "Z", "H"):
        return embed({qs[0]: {"I": I2, "X": X, "Y": Y, "Z": Z, "H": H}[k]}, n)
    a, b = qs
    if k == "CNOT":
        return embed({a: P0}, n) + embed({a: P1, b: X}, n)
    if k == "CZ":
        return embed({a: P0}, n) + embed({a: P1, b: Z}, n)
    if k == "SWAP":
        return sum(embed({a: s, b: s}, n) for s in (I2, X, Y, Z)) / 2
    raise ValueError(k)


def ref_unitary(circuit: Circuit, n: int) -> np.ndarray:
    u = np.eye(1 << n, dtype=complex)
    for ins in circuit.instructions:
        if ins.kind != "MEASURE":
            u = ref_gate(ins, n) @ u
    return u


def phase_equal(a: np.ndarray, b: np.ndarray, atol=1e-12) -> bool:
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[idx]) < 1e-15:
        return np.allclose(a, b, atol=atol)
    phase = a[idx] / b[idx]
    return abs(abs(phase) - 1) < 1e-9 and np.allclose(a, phase * b, atol=atol)


def permute_state(state: np.ndarray, perm: dict, n: int) -> np.ndarray:
    """Move the content of qubit l to qubit perm[l] (little-endian state)."""
    full = {q: q for q in range(n)}
    full.update(perm)
    t = state.reshape((2,) * n)
    # axis for qubit q is n-1-q
    src = [n - 1 - l for l in range(n)]
    dst = [n - 1 - full[l] for l in range(n)]
    return np.moveaxis(t, src, dst).reshape(-1)


GATE_POOL = ["I", "X", "Y", "Z", "H", "RX", "RY", "RZ", "CNOT", "CZ", "SWAP"]


def random_circuit(rng: np.random.Generator, n_qubits: int, n_gates: int, abstract: bool = False,
                   qubit_pool=None, measure: bool = False) -> Circuit:
    pool = list(qubit_pool) if qubit_pool is not None else list(range(n_qubits))
    ref = (lambda i: Abstract(f"q{i}")) if abstract else Physical
    instrs = []
    for _ in range(n_gates):
        kind = GATE_POOL[rng.integers(len(GATE_POOL))] if len(pool) > 1 else GATE_POOL[rng.integers(8)]
        if kind in ("CNOT", "CZ", "SWAP"):
            a, b = rng.choice(len(pool), size=2, replace=False)
            qs = (ref(pool[a]), ref(pool[b]))
        else:
            qs = (ref(pool[rng.integers(len(pool))]),)
        params = ()
        if kind in ("RX", "RY", "RZ"):
            angle = float(rng.integers(-4, 5) * math.pi / 2) if rng.random() < 0.25 else float(rng.uniform(-math.pi, math.pi))
            params = (Const(angle),)
        instrs.append(Instruction(kind, qs, params))
    if measure:
        for j, q in enumerate(pool):
            instrs.append(Instruction("MEASURE", (ref(q),), (), j))
    return Circuit(tuple(instrs))


@pytest.fixture
def device():
    return agave8()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def compiled_fidelity(original: Circuit, compiled, n: int, rng) -> float:
    """|<P U_orig psi | U_compiled psi>|^2 for a random psi, P the final permutation."""
    from hybridqc.circuit import assign_qubits, unitary_of

    if original.is_abstract:
        original = assign_qubits(original, compiled.initial_map)
    psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    psi /= np.linalg.norm(psi)
    expected = permute_state(unitary_of(original.without_measurements(), n) @ psi, compiled.final_permutation, n)
    got = unitary_of(compiled.circuit.without_measurements(), n) @ psi
    return abs(np.vdot(expected, got)) ** 2


# acceptance lines, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
