"""Abstract circuit -> device-executable circuit.

Pipeline: pick a connected, high-fidelity chain of physical qubits, assign the
abstract qubits onto it, route two-qubit gates along shortest paths with SWAPs
(tracking the logical permutation forward instead of undoing it), then rewrite
every gate into the native set {RZ(any), RX(k*pi/2), CZ}.
"""
from __future__ import annotations

import json
import math
from collections import Counter, deque
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Mapping

from .circuit import (
    Circuit,
    Const,
    Instruction,
    Physical,
    Symbol,
    assign_qubits,
    circuit_depth,
)

HALF_PI = math.pi / 2
_ANGLE_TOL = 1e-9


def _edge(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class DeviceSpec:
    """Connectivity, native gates and calibration data of a target device.

    ``native_rx_step`` is the RX angle quantum (pi/2 on the emulated target);
    RZ is native at any angle and CZ is the only native two-qubit gate.
    """

    name: str
    n_qubits: int
    edges: frozenset
    qubit_fidelity: tuple[float, ...]
    edge_fidelity: tuple[tuple[tuple[int, int], float], ...] = ()
    native_rx_step: float = HALF_PI

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("device needs at least one qubit")
        edges = frozenset(_edge(int(a), int(b)) for a, b in self.edges)
        object.__setattr__(self, "edges", edges)
        for a, b in edges:
            if a == b or not (0 <= a < self.n_qubits and 0 <= b < self.n_qubits):
                raise ValueError(f"edge ({a}, {b}) is invalid for {self.n_qubits} qubits")
        if len(self.qubit_fidelity) != self.n_qubits:
            raise ValueError("qubit_fidelity must list one value per qubit")
        ef = tuple(sorted((_edge(*e), float(f)) for e, f in self.edge_fidelity))
        object.__setattr__(self, "edge_fidelity", ef)
        object.__setattr__(self, "qubit_fidelity", tuple(float(f) for f in self.qubit_fidelity))
        for f in self.qubit_fidelity + tuple(f for _, f in ef):
            if not 0.0 <= f <= 1.0:
                raise ValueError(f"fidelity {f} outside [0, 1]")
        for e, _ in ef:
            if e not in edges:
                raise ValueError(f"fidelity given for non-edge {e}")
        if self.n_qubits > 1 and len(self._reachable(0)) != self.n_qubits:
            raise ValueError("coupling graph is not connected")

    @cached_property
    def neighbors(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {q: [] for q in range(self.n_qubits)}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return {q: sorted(v) for q, v in adj.items()}

    def _reachable(self, start: int) -> set[int]:
        seen, todo = {start}, [start]
        while todo:
            for nb in self.neighbors[todo.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    todo.append(nb)
        return seen

    def connected(self, a: int, b: int) -> bool:
        return _edge(a, b) in self.edges

    def edge_fid(self, a: int, b: int) -> float:
        return dict(self.edge_fidelity).get(_edge(a, b), 1.0)

    def shortest_path(self, a: int, b: int) -> list[int]:
        """BFS path from a to b; neighbours visited in ascending order."""
        prev = {a: None}
        queue = deque([a])
        while queue:
            cur = queue.popleft()
            if cur == b:
                break
            for nb in self.neighbors[cur]:
                if nb not in prev:
                    prev[nb] = cur
                    queue.append(nb)
        path = [b]
        while path[-1] != a:
            path.append(prev[path[-1]])
        return path[::-1]

    def is_native(self, ins: Instruction) -> bool:
        if ins.kind in ("MEASURE", "CZ", "RZ"):
            return True
        if ins.kind == "RX":
            p = ins.params[0]
            if isinstance(p, Symbol):
                return False
            k = p.value / self.native_rx_step
            return abs(k - round(k)) < _ANGLE_TOL
        return False

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n_qubits": self.n_qubits,
            "edges": [list(e) for e in sorted(self.edges)],
            "qubit_fidelity": list(self.qubit_fidelity),
            "edge_fidelity": [[a, b, f] for (a, b), f in self.edge_fidelity],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> DeviceSpec:
        n = int(data["n_qubits"])
        qf = data.get("qubit_fidelity")
        if isinstance(qf, Mapping):
            qf = [float(qf.get(str(i), qf.get(i, 1.0))) for i in range(n)]
        return cls(
            name=str(data.get("name", "device")),
            n_qubits=n,
            edges=frozenset(tuple(e) for e in data["edges"]),
            qubit_fidelity=tuple(qf) if qf is not None else (1.0,) * n,
            edge_fidelity=tuple(((int(a), int(b)), float(f)) for a, b, f in data.get("edge_fidelity", ())),
        )


def ring_device(n: int, name: str | None = None) -> DeviceSpec:
    edges = frozenset(_edge(i, (i + 1) % n) for i in range(n)) if n > 1 else frozenset()
    return DeviceSpec(name or f"ring{n}", n, edges, (1.0,) * n)


def load_device(source: str | Path) -> DeviceSpec:
    """Load a bundled device by name (``agave8``) or a JSON device file by path."""
    path = Path(source)
    if not path.suffix and not path.exists():
        bundled = resources.files("hybridqc") / "devices" / f"{source}.json"
        if not bundled.is_file():
            raise FileNotFoundError(f"no bundled device named {source!r}")
        return DeviceSpec.from_dict(json.loads(bundled.read_text()))
    return DeviceSpec.from_dict(json.loads(path.read_text()))


def agave8() -> DeviceSpec:
    return load_device("agave8")


# --- qubit selection ------------------------------------------------------------

def _simple_paths(device: DeviceSpec, k: int):
    def extend(path):
        if len(path) == k:
            yield path
            return
        for nb in device.neighbors[path[-1]]:
            if nb not in path:
                yield from extend(path + [nb])

    for start in range(device.n_qubits):
        yield from extend([start])


def _path_score(device: DeviceSpec, path: list[int]) -> float:
    score = 1.0
    for q in path:
        score *= device.qubit_fidelity[q]
    for a, b in zip(path, path[1:]):
        score *= device.edge_fid(a, b)
    return score


def select_qubits(device: DeviceSpec, k: int) -> list[int]:
    """Best-scoring connected chain of ``k`` qubits (fidelity product).

    Exhaustive over simple paths for k <= 8, greedy extension beyond; equal
    scores resolve to the lexicographically smallest index sequence.
    """
    if k < 1:
        raise ValueError("need at least one qubit")
    if k > device.n_qubits:
        raise ValueError(f"{k} qubits requested but {device.name} has {device.n_qubits}")
    if k <= 8:
        candidates = _simple_paths(device, k)
    else:
        candidates = filter(None, (_greedy_path(device, s, k) for s in range(device.n_qubits)))
    best, best_score = None, -1.0
    for path in candidates:
        score = _path_score(device, path)
        if score > best_score * (1 + 1e-12) or (
            best is not None and abs(score - best_score) <= 1e-12 * max(best_score, 1e-300) and path < best
        ):
            best, best_score = path, score
    if best is None:
        raise ValueError(f"no connected chain of {k} qubits on {device.name}")
    return best


def _greedy_path(device: DeviceSpec, start: int, k: int) -> list[int] | None:
    path = [start]
    while len(path) < k:
        options = [nb for nb in device.neighbors[path[-1]] if nb not in path]
        if not options:
            return None
        path.append(max(options, key=lambda q: (device.qubit_fidelity[q] * device.edge_fid(path[-1], q), -q)))
    return path


# --- routing -----------------------------------------------------------------------

def route(circuit: Circuit, device: DeviceSpec) -> tuple[Circuit, dict[int, int]]:
    """Insert SWAPs so every two-qubit gate acts on a device edge.

    Returns the routed circuit and ``final_permutation`` mapping each original
    physical index to where its state sits at the end. Measurements are
    deferred to the end and follow their logical qubit.
    """
    if not circuit.is_physical:
        raise ValueError("route needs a physical circuit")
    for q in circuit.qubits:
        if q.index >= device.n_qubits:
            raise ValueError(f"qubit {q.index} is not on {device.name} ({device.n_qubits} qubits)")
    pos = {q.index: q.index for q in circuit.qubits}  # logical -> current physical
    occupant = {p: l for l, p in pos.items()}  # physical -> logical

    def locate(phys: int) -> int:
        if phys not in occupant:
            pos[phys] = phys
            occupant[phys] = phys
        return occupant[phys]

    out: list[Instruction] = []
    deferred: list[Instruction] = []
    for ins in circuit.instructions:
        if ins.kind == "MEASURE":
            deferred.append(ins)
            continue
        if len(ins.qubits) == 2:
            a, b = (q.index for q in ins.qubits)
            pa, pb = pos[a], pos[b]
            if not device.connected(pa, pb):
                path = device.shortest_path(pb, pa)
                for nxt in path[1:-1]:
                    cur = pos[b]
                    other = locate(nxt)
                    out.append(Instruction("SWAP", (Physical(cur), Physical(nxt))))
                    pos[b], pos[other] = nxt, cur
                    occupant[nxt], occupant[cur] = b, other
        out.append(Instruction(ins.kind, tuple(Physical(pos[q.index]) for q in ins.qubits), ins.params))
    for m in deferred:
        out.append(Instruction("MEASURE", (Physical(pos[m.qubits[0].index]),), (), m.clbit))
    return Circuit(tuple(out)), dict(sorted(pos.items()))


# --- decomposition -----------------------------------------------------------------

def _rz(q, angle) -> Instruction:
    return Instruction("RZ", (q,), (angle if isinstance(angle, (Const, Symbol)) else Const(angle),))


def _rx(q, angle: float) -> Instruction:
    return Instruction("RX", (q,), (Const(angle),))


def _h(q) -> list[Instruction]:
    return [_rz(q, HALF_PI), _rx(q, HALF_PI), _rz(q, HALF_PI)]


def decompose_gate(ins: Instruction, device: DeviceSpec | None = None) -> list[Instruction]:
    """Native sequence (circuit order) equal to ``ins`` up to global phase."""
    step = device.native_rx_step if device else HALF_PI
    kind, qs = ins.kind, ins.qubits
    if kind == "MEASURE" or kind in ("RZ", "CZ"):
        return [ins]
    q = qs[0]
    if kind == "I":
        return []
    if kind == "X":
        return [_rx(q, math.pi)]
    if kind == "Z":
        return [_rz(q, math.pi)]
    if kind == "Y":
        return [_rz(q, HALF_PI), _rx(q, math.pi), _rz(q, -HALF_PI)]
    if kind == "H":
        return _h(q)
    if kind == "RX":
        p = ins.params[0]
        if isinstance(p, Const) and abs(p.value / step - round(p.value / step)) < _ANGLE_TOL:
            return [ins]
        return [_rz(q, -HALF_PI), _rx(q, -HALF_PI), _rz(q, p), _rx(q, HALF_PI), _rz(q, HALF_PI)]
    if kind == "RY":
        return [_rx(q, HALF_PI), _rz(q, ins.params[0]), _rx(q, -HALF_PI)]
    if kind == "CNOT":
        c, t = qs
        return _h(t) + [Instruction("CZ", (c, t))] + _h(t)
    if kind == "SWAP":
        a, b = qs
        seq: list[Instruction] = []
        for c, t in ((a, b), (b, a), (a, b)):
            seq += decompose_gate(Instruction("CNOT", (c, t)), device)
        return seq
    raise ValueError(f"cannot decompose {kind}")


# --- full pipeline -------------------------------------------------------------------

@dataclass(frozen=True)
class CompiledCircuit:
    circuit: Circuit
    initial_map: dict[str, int]
    final_permutation: dict[int, int]
    depth: int
    gate_counts: dict[str, int]

    def report(self) -> dict:
        return {
            "depth": self.depth,
            "gate_counts": dict(sorted(self.gate_counts.items())),
            "initial_map": dict(self.initial_map),
            "final_permutation": {str(k): v for k, v in self.final_permutation.items()},
        }


def compile_circuit(circuit: Circuit, device: DeviceSpec) -> CompiledCircuit:
    """Map, route and decompose ``circuit`` for ``device``.

    Abstract qubits are placed, in order of first appearance, along the chain
    returned by :func:`select_qubits`. Symbolic rotation angles survive
    compilation, so a compiled circuit can be bound repeatedly.
    """
    initial_map: dict[str, int] = {}
    if circuit.is_abstract:
        names = circuit.abstract_names()
        chain = select_qubits(device, len(names))
        initial_map = dict(zip(names, chain))
        circuit = assign_qubits(circuit, initial_map)
    routed, perm = route(circuit, device)
    native: list[Instruction] = []
    for ins in routed.instructions:
        native.extend(decompose_gate(ins, device))
    out = Circuit(tuple(native))
    counts = Counter(ins.kind for ins in native)
    return CompiledCircuit(out, initial_map, perm, circuit_depth(out), dict(counts))
