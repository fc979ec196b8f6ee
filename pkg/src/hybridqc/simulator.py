"""State-vector execution, marginal probabilities and seeded shot sampling.

Noiseless sampling draws every shot from the exact final distribution.  Noisy
sampling runs one Pauli trajectory per shot (vectorised over shots): after
each gate, with probability ``p1``/``p2`` a uniformly random non-identity
Pauli hits the gate's qubits; measured bits are then flipped independently
with probability ``readout_flip``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gates as _g
from .circuit import Circuit, Instruction, Physical

MAX_QUBITS = 24
_TRAJECTORY_BUDGET = 1 << 21  # amplitudes held at once in the noisy path


@dataclass(frozen=True)
class NoiseModel:
    p1: float = 0.0
    p2: float = 0.0
    readout_flip: float = 0.0

    def __post_init__(self):
        for name in ("p1", "p2", "readout_flip"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} is not a probability")

    @property
    def is_noiseless(self) -> bool:
        return self.p1 == 0 and self.p2 == 0 and self.readout_flip == 0

    @property
    def has_gate_noise(self) -> bool:
        return self.p1 > 0 or self.p2 > 0

    def to_dict(self) -> dict:
        return {"p1": self.p1, "p2": self.p2, "readout_flip": self.readout_flip}

    @classmethod
    def from_dict(cls, data) -> NoiseModel | None:
        if data is None:
            return None
        return cls(float(data.get("p1", 0.0)), float(data.get("p2", 0.0)), float(data.get("readout_flip", 0.0)))


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray
    n: int

    @property
    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


@dataclass(frozen=True, eq=False)
class ShotResult:
    """Per-shot bits; column j holds classical bit ``clbits[j]``."""

    bitstrings: np.ndarray
    clbits: tuple[int, ...]
    shots: int
    seed: int
    _strings: list = field(default=None, init=False, repr=False)

    def __post_init__(self):
        bits = np.asarray(self.bitstrings, dtype=np.uint8).reshape(-1, len(self.clbits))
        object.__setattr__(self, "bitstrings", bits)
        if bits.shape[0] != self.shots:
            raise ValueError(f"{bits.shape[0]} bitstrings for {self.shots} shots")

    def __eq__(self, other) -> bool:
        if not isinstance(other, ShotResult):
            return NotImplemented
        return (self.clbits == other.clbits and self.shots == other.shots and self.seed == other.seed
                and np.array_equal(self.bitstrings, other.bitstrings))

    def strings(self) -> list[str]:
        """Shots as '0'/'1' strings, classical bit ``clbits[0]`` first."""
        if self._strings is None:
            chars = np.where(self.bitstrings == 1, "1", "0")
            object.__setattr__(self, "_strings", ["".join(row) for row in chars])
        return self._strings

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for s in self.strings():
            out[s] = out.get(s, 0) + 1
        return dict(sorted(out.items()))

    def frequency(self, pattern: str) -> float:
        """Fraction of shots whose bits equal ``pattern`` (same order as :meth:`strings`)."""
        want = np.array([int(c) for c in pattern], dtype=np.uint8)
        return float(np.mean(np.all(self.bitstrings == want, axis=1)))

    def to_dict(self) -> dict:
        return {"shots": self.shots, "seed": self.seed, "clbits": list(self.clbits),
                "bitstrings": self.strings()}

    @classmethod
    def from_dict(cls, data) -> ShotResult:
        clbits = tuple(int(c) for c in data["clbits"])
        rows = [[int(c) for c in s] for s in data["bitstrings"]]
        bits = np.array(rows, dtype=np.uint8).reshape(len(rows), len(clbits))
        return cls(bits, clbits, int(data["shots"]), int(data["seed"]))


def _check_executable(circuit: Circuit) -> None:
    if not circuit.is_physical:
        raise ValueError("circuit has abstract qubits; assign or compile it first")
    if circuit.free_symbols:
        raise ValueError(f"unbound symbol(s): {', '.join(sorted(circuit.free_symbols))}")


def _evolve(tensor: np.ndarray, instructions, n: int) -> np.ndarray:
    for ins in instructions:
        if ins.kind == "MEASURE":
            continue
        angle = ins.angle if ins.params else None
        tensor = _g.apply_gate(tensor, ins.kind, tuple(q.index for q in ins.qubits), angle, n)
    return tensor


def run_statevector(circuit: Circuit, n_qubits: int | None = None) -> StateVector:
    """Evolve |0...0> through the circuit's gates (measurements are ignored)."""
    _check_executable(circuit)
    n = circuit.num_qubits() if n_qubits is None else n_qubits
    if n < circuit.num_qubits():
        raise ValueError(f"circuit needs {circuit.num_qubits()} qubits")
    if n > MAX_QUBITS:
        raise ValueError(f"{n} qubits exceeds simulator limit {MAX_QUBITS}")
    tensor = np.zeros((1,) + (2,) * n, dtype=complex)
    tensor.flat[0] = 1.0
    tensor = _evolve(tensor, circuit.instructions, n)
    return StateVector(tensor.reshape(-1), n)


def _marginal(probs: np.ndarray, qubits: list[int], n: int) -> np.ndarray:
    """probs: (batch, 2^n) -> (batch, 2^m) with pattern bit j = qubit qubits[j]."""
    batch = probs.shape[0]
    t = probs.reshape((batch,) + (2,) * n)
    keep = [n - q for q in qubits]  # tensor axes of the listed qubits
    others = tuple(ax for ax in range(1, n + 1) if ax not in keep)
    t = t.sum(axis=others) if others else t
    # remaining axes are the kept ones in ascending axis order; reorder so the
    # first listed qubit ends up least significant (last axis)
    remaining = sorted(keep)
    order = [0] + [1 + remaining.index(ax) for ax in reversed(keep)]
    return np.transpose(t, order).reshape(batch, -1)


def probabilities(state: StateVector, qubits: list[int]) -> dict[int, float]:
    """Marginal distribution over ``qubits``; key bit j is the outcome of ``qubits[j]``."""
    for q in qubits:
        if not 0 <= q < state.n:
            raise ValueError(f"qubit {q} out of range for {state.n}-qubit state")
    if len(set(qubits)) != len(qubits):
        raise ValueError("repeated qubit")
    probs = (np.abs(state.amplitudes) ** 2)[None, :]
    marg = _marginal(probs, list(qubits), state.n)[0]
    return {i: float(p) for i, p in enumerate(marg) if p != 0.0}


def _compact(circuit: Circuit) -> tuple[Circuit, int]:
    """Relabel used physical qubits to 0..m-1 (order preserving)."""
    used = sorted(q.index for q in circuit.qubits)
    remap = {old: Physical(new) for new, old in enumerate(used)}
    body = tuple(Instruction(i.kind, tuple(remap[q.index] for q in i.qubits), i.params, i.clbit)
                 for i in circuit.instructions)
    return Circuit(body), len(used)


_DENSE_LIMIT = 8  # registers up to this size evolve by dense matmuls


class _Stepper:
    """Applies gates and Pauli errors to a (batch, 2^n) block of trajectories."""

    def __init__(self, n: int):
        self.n = n
        self.dense = n <= _DENSE_LIMIT
        self._paulis: dict = {}

    def gate(self, flat: np.ndarray, kind: str, qubits: tuple[int, ...], angle) -> np.ndarray:
        if self.dense:
            return flat @ _g.full_matrix(kind, qubits, angle, self.n).T
        t = flat.reshape((flat.shape[0],) + (2,) * self.n)
        return _g.apply_gate(t, kind, qubits, angle, self.n).reshape(flat.shape)

    def pauli(self, flat: np.ndarray, code: int, qubits: tuple[int, ...]) -> np.ndarray:
        key = (code, qubits)
        if self.dense:
            if key not in self._paulis:
                m = np.eye(1 << self.n, dtype=complex)
                for j, q in enumerate(qubits):
                    label = (code >> (2 * j)) & 3
                    if label:
                        m = _g.full_matrix("IXYZ"[label], (q,), None, self.n) @ m
                self._paulis[key] = m.T
            return flat @ self._paulis[key]
        t = flat.reshape((flat.shape[0],) + (2,) * self.n)
        for j, q in enumerate(qubits):
            label = (code >> (2 * j)) & 3
            if label:
                t = _g.apply_1q(t, _g.PAULIS[label], q, self.n)
        return t.reshape(flat.shape)


def _pauli_hits(flat: np.ndarray, stepper: _Stepper, qubits: tuple[int, ...], p: float, rng) -> np.ndarray:
    batch = flat.shape[0]
    hit = rng.random(batch) < p
    which = rng.integers(1, 4 ** len(qubits), size=batch)
    if not hit.any():
        return flat
    for code in np.unique(which[hit]):
        rows = np.flatnonzero(hit & (which == code))
        flat[rows] = stepper.pauli(flat[rows], int(code), qubits)
    return flat


def _noisy_bits(circuit: Circuit, n: int, meas_qubits: list[int], shots: int,
                noise: NoiseModel, rng) -> np.ndarray:
    chunk = max(1, _TRAJECTORY_BUDGET >> n)
    stepper = _Stepper(n)
    out = []
    for start in range(0, shots, chunk):
        batch = min(chunk, shots - start)
        flat = np.zeros((batch, 1 << n), dtype=complex)
        flat[:, 0] = 1.0
        for ins in circuit.instructions:
            if ins.kind == "MEASURE":
                continue
            qs = tuple(q.index for q in ins.qubits)
            flat = stepper.gate(flat, ins.kind, qs, ins.angle if ins.params else None)
            p = noise.p2 if len(qs) == 2 else noise.p1
            if p > 0:
                flat = _pauli_hits(flat, stepper, qs, p, rng)
        marg = _marginal(np.abs(flat) ** 2, meas_qubits, n)
        cdf = np.cumsum(marg, axis=1)
        u = rng.random(batch) * cdf[:, -1]
        out.append((cdf < u[:, None]).sum(axis=1))
    return np.concatenate(out)


def sample_shots(circuit: Circuit, shots: int, noise: NoiseModel | None = None,
                 seed: int | None = None) -> ShotResult:
    """Sample ``shots`` measurement records; identical seeds give identical results."""
    _check_executable(circuit)
    if shots < 1:
        raise ValueError("shots must be positive")
    meas = sorted(circuit.measurements, key=lambda m: m.clbit)
    if not meas:
        raise ValueError("circuit has no measurements")
    if seed is None:
        seed = int(np.random.SeedSequence().generate_state(1, np.uint64)[0] >> 1)
    rng = np.random.default_rng(seed)
    compact, n = _compact(circuit)
    meas_c = sorted(compact.measurements, key=lambda m: m.clbit)
    meas_qubits = [m.qubits[0].index for m in meas_c]
    m = len(meas_qubits)

    if noise is None or not noise.has_gate_noise:
        state = run_statevector(compact, n)
        marg = _marginal((np.abs(state.amplitudes) ** 2)[None, :], meas_qubits, n)[0]
        marg = marg / marg.sum()
        outcomes = rng.choice(marg.size, size=shots, p=marg)
    else:
        outcomes = _noisy_bits(compact, n, meas_qubits, shots, noise, rng)

    bits = ((outcomes[:, None] >> np.arange(m)) & 1).astype(np.uint8)
    if noise is not None and noise.readout_flip > 0:
        bits ^= (rng.random((shots, m)) < noise.readout_flip).astype(np.uint8)
    return ShotResult(bits, tuple(x.clbit for x in meas), shots, int(seed))
