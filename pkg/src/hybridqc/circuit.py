"""Parametric circuit IR and its textual ``.qp`` program format.

Qubits are either abstract placeholders (``%q0``) or physical indices (``3``);
angles are constants or (signed, integer-divided) symbols (``%theta``,
``-%theta/2``).  Circuits are immutable; every transformation returns a new one.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

import numpy as np

from . import gates as _g


@dataclass(frozen=True, order=True)
class Abstract:
    name: str

    def __str__(self) -> str:
        return f"%{self.name}"


@dataclass(frozen=True, order=True)
class Physical:
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"negative qubit index {self.index}")

    def __str__(self) -> str:
        return str(self.index)


QubitRef = Union[Abstract, Physical]


@dataclass(frozen=True)
class Const:
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"non-finite angle {self.value}")
        object.__setattr__(self, "value", float(self.value))

    def __str__(self) -> str:
        return format(self.value, ".17g")


@dataclass(frozen=True)
class Symbol:
    """A named angle, optionally negated and divided by a positive integer."""

    name: str
    sign: int = 1
    divisor: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1) or self.divisor < 1:
            raise ValueError("symbol sign must be +-1 and divisor positive")

    def resolve(self, value: float) -> Const:
        return Const(self.sign * value / self.divisor)

    def __neg__(self) -> Symbol:
        return Symbol(self.name, -self.sign, self.divisor)

    def __str__(self) -> str:
        text = ("-" if self.sign < 0 else "") + f"%{self.name}"
        return text if self.divisor == 1 else f"{text}/{self.divisor}"


Param = Union[Const, Symbol]


def as_param(value: Param | float | str) -> Param:
    """Coerce a float to ``Const`` and a bare name to ``Symbol``."""
    if isinstance(value, (Const, Symbol)):
        return value
    if isinstance(value, str):
        return Symbol(value)
    return Const(float(value))


def _arity(kind: str) -> tuple[int, int]:
    if kind in _g.ROTATIONS:
        return 1, 1
    if kind in _g.ONE_QUBIT or kind == "MEASURE":
        return 0, 1
    return 0, 2


@dataclass(frozen=True)
class Instruction:
    kind: str
    qubits: tuple[QubitRef, ...]
    params: tuple[Param, ...] = ()
    clbit: int | None = None

    def __post_init__(self):
        if self.kind not in _g.KINDS:
            raise ValueError(f"unknown gate {self.kind!r}")
        object.__setattr__(self, "qubits", tuple(self.qubits))
        object.__setattr__(self, "params", tuple(as_param(p) for p in self.params))
        n_params, n_qubits = _arity(self.kind)
        if len(self.params) != n_params:
            raise ValueError(f"{self.kind} takes {n_params} parameter(s), got {len(self.params)}")
        if len(self.qubits) != n_qubits:
            raise ValueError(f"{self.kind} acts on {n_qubits} qubit(s), got {len(self.qubits)}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"{self.kind} repeats a qubit")
        if (self.kind == "MEASURE") != (self.clbit is not None):
            raise ValueError("a classical target is required for MEASURE and only for MEASURE")
        if self.clbit is not None and self.clbit < 0:
            raise ValueError("negative classical bit")

    @property
    def angle(self) -> float:
        """Bound rotation angle; raises if the parameter is still symbolic."""
        p = self.params[0]
        if isinstance(p, Symbol):
            raise ValueError(f"unbound symbol {p.name!r}")
        return p.value

    def __str__(self) -> str:
        qs = " ".join(str(q) for q in self.qubits)
        if self.kind == "MEASURE":
            return f"MEASURE {qs} -> {self.clbit}"
        if self.params:
            return f"{self.kind}({', '.join(str(p) for p in self.params)}) {qs}"
        return f"{self.kind} {qs}"


def gate(kind: str, *qubits: QubitRef | int | str, params: Iterable = ()) -> Instruction:
    """Convenience constructor: ints become physical refs, strings abstract refs."""
    refs = tuple(
        q if isinstance(q, (Abstract, Physical)) else Physical(q) if isinstance(q, int) else Abstract(q)
        for q in qubits
    )
    return Instruction(kind, refs, tuple(params))


def measure(qubit: QubitRef | int | str, clbit: int) -> Instruction:
    ref = gate("I", qubit).qubits[0]
    return Instruction("MEASURE", (ref,), (), clbit)


@dataclass(frozen=True)
class Circuit:
    instructions: tuple[Instruction, ...] = ()
    _qubits: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        instrs = tuple(self.instructions)
        object.__setattr__(self, "instructions", instrs)
        measured: set = set()
        clbits: set = set()
        qubits: set = set()
        for ins in instrs:
            for q in ins.qubits:
                if q in measured:
                    raise ValueError(f"instruction {ins} acts on already-measured qubit {q}")
            if ins.kind == "MEASURE":
                if ins.clbit in clbits:
                    raise ValueError(f"duplicate classical bit {ins.clbit}")
                clbits.add(ins.clbit)
                measured.add(ins.qubits[0])
            qubits.update(ins.qubits)
        if len({type(q) for q in qubits}) > 1:
            raise ValueError("circuit mixes abstract and physical qubits")
        object.__setattr__(self, "_qubits", frozenset(qubits))

    def __len__(self) -> int:
        return len(self.instructions)

    def __iter__(self):
        return iter(self.instructions)

    def __add__(self, other: Circuit) -> Circuit:
        return Circuit(self.instructions + other.instructions)

    @property
    def qubits(self) -> list[QubitRef]:
        return sorted(self._qubits, key=lambda q: (type(q).__name__, q))

    @property
    def is_physical(self) -> bool:
        return all(isinstance(q, Physical) for q in self._qubits)

    @property
    def is_abstract(self) -> bool:
        return bool(self._qubits) and all(isinstance(q, Abstract) for q in self._qubits)

    @property
    def free_symbols(self) -> frozenset[str]:
        return frozenset(p.name for ins in self.instructions for p in ins.params if isinstance(p, Symbol))

    @property
    def measurements(self) -> list[Instruction]:
        return [ins for ins in self.instructions if ins.kind == "MEASURE"]

    def abstract_names(self) -> list[str]:
        """Abstract qubit names in order of first appearance."""
        seen: dict[str, None] = {}
        for ins in self.instructions:
            for q in ins.qubits:
                if isinstance(q, Abstract):
                    seen.setdefault(q.name)
        return list(seen)

    def num_qubits(self) -> int:
        """Register width needed for a physical circuit (max index + 1)."""
        if not self.is_physical:
            raise ValueError("circuit has abstract qubits")
        return max((q.index for q in self._qubits), default=-1) + 1

    def without_measurements(self) -> Circuit:
        return Circuit(tuple(i for i in self.instructions if i.kind != "MEASURE"))

    def __str__(self) -> str:
        return print_program(self)


# --- textual format ---------------------------------------------------------

class ParseError(ValueError):
    """Program text rejected by the parser; carries 1-based line and column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


_TOKEN = re.compile(
    r"\s*(?:(?P<float>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)"
    r"|(?P<int>\d+)|(?P<sym>%[A-Za-z_][A-Za-z0-9_]*)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<arrow>->)|(?P<punct>[(),/-]))"
)


def _tokenize(text: str, lineno: int) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            col = pos + len(text[pos:]) - len(text[pos:].lstrip()) + 1
            raise ParseError(f"unexpected character {text[col - 1]!r}", lineno, col)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start + 1))
        pos = m.end()
    return tokens


class _LineParser:
    def __init__(self, tokens, lineno: int, width: int):
        self.tokens = tokens
        self.i = 0
        self.lineno = lineno
        self.width = width

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else ("eol", "", self.width + 1)

    def error(self, message: str, tok=None):
        tok = tok or self.peek()
        raise ParseError(message, self.lineno, tok[2])

    def take(self, kind: str, value: str | None = None):
        tok = self.peek()
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = value or kind
            got = tok[1] or "end of line"
            self.error(f"expected {want}, got {got!r}")
        self.i += 1
        return tok

    def expr(self) -> Param:
        tok = self.peek()
        if tok[0] == "punct" and tok[1] == "-":
            self.i += 1
            val = self.expr()
            return -val if isinstance(val, Symbol) else Const(-val.value)
        val = self.atom()
        while self.peek()[:2] == ("punct", "/"):
            self.i += 1
            den_tok = self.take("int")
            den = int(den_tok[1])
            if den == 0:
                self.error("division by zero", den_tok)
            val = Symbol(val.name, val.sign, val.divisor * den) if isinstance(val, Symbol) else Const(val.value / den)
        return val

    def atom(self) -> Param:
        tok = self.peek()
        self.i += 1
        if tok[0] in ("float", "int"):
            return Const(float(tok[1]))
        if tok[0] == "name" and tok[1] == "pi":
            return Const(math.pi)
        if tok[0] == "sym":
            return Symbol(tok[1][1:])
        self.i -= 1
        self.error(f"expected an angle expression, got {tok[1] or 'end of line'!r}")

    def qubit(self) -> QubitRef:
        tok = self.peek()
        if tok[0] == "int":
            self.i += 1
            return Physical(int(tok[1]))
        if tok[0] == "sym":
            self.i += 1
            return Abstract(tok[1][1:])
        self.error(f"expected a qubit, got {tok[1] or 'end of line'!r}")


def parse_program(text: str) -> Circuit:
    """Parse ``.qp`` source into a :class:`Circuit`.

    Raises :class:`ParseError` (a ``ValueError``) with line/column for syntax
    errors, unknown gates, arity mismatches, duplicate classical bits and
    gates acting on measured qubits.
    """
    instructions: list[Instruction] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        tokens = _tokenize(line, lineno)
        if not tokens:
            continue
        p = _LineParser(tokens, lineno, len(line))
        name_tok = p.take("name")
        kind = name_tok[1]
        if kind not in _g.KINDS:
            p.error(f"unknown gate {kind!r}", name_tok)
        params: list[Param] = []
        clbit = None
        if kind == "MEASURE":
            qubits = [p.qubit()]
            p.take("arrow")
            clbit = int(p.take("int")[1])
        else:
            if p.peek()[:2] == ("punct", "("):
                p.i += 1
                params.append(p.expr())
                while p.peek()[:2] == ("punct", ","):
                    p.i += 1
                    params.append(p.expr())
                p.take("punct", ")")
            qubits = [p.qubit()]
            while p.peek()[0] in ("int", "sym"):
                qubits.append(p.qubit())
        if p.peek()[0] != "eol":
            p.error(f"unexpected {p.peek()[1]!r}")
        try:
            ins = Instruction(kind, tuple(qubits), tuple(params), clbit)
            instructions.append(ins)
            Circuit(tuple(instructions))
        except ValueError as exc:
            raise ParseError(str(exc), lineno, name_tok[2]) from None
    return Circuit(tuple(instructions))


def print_program(circuit: Circuit) -> str:
    """Canonical text: one instruction per line, constants at 17 significant digits."""
    return "".join(f"{ins}\n" for ins in circuit.instructions)


# --- transformations ----------------------------------------------------------

def bind_parameters(circuit: Circuit, binding: Mapping[str, float], strict: bool = True) -> Circuit:
    """Replace bound symbols by constants; unbound symbols are left in place.

    With ``strict`` (the default) a binding key that is not a free symbol of
    the circuit is an error.
    """
    if strict:
        unknown = set(binding) - circuit.free_symbols
        if unknown:
            raise KeyError(f"unknown symbol(s): {', '.join(sorted(unknown))}")
    if not binding:
        return circuit

    def sub(p: Param) -> Param:
        if isinstance(p, Symbol) and p.name in binding:
            return p.resolve(float(binding[p.name]))
        return p

    return Circuit(tuple(
        Instruction(i.kind, i.qubits, tuple(sub(p) for p in i.params), i.clbit) if i.params else i
        for i in circuit.instructions
    ))


def assign_qubits(circuit: Circuit, mapping: Mapping[str, int]) -> Circuit:
    """Replace every abstract qubit by its physical index from ``mapping``."""
    names = circuit.abstract_names()
    if not names:
        raise ValueError("circuit has no abstract qubits to assign")
    missing = [n for n in names if n not in mapping]
    if missing:
        raise KeyError(f"no physical index for abstract qubit(s): {', '.join(missing)}")
    used = [mapping[n] for n in names]
    if len(set(used)) != len(used):
        raise ValueError(f"duplicate physical targets in mapping {dict(mapping)}")
    refs = {Abstract(n): Physical(int(mapping[n])) for n in names}
    return Circuit(tuple(
        Instruction(i.kind, tuple(refs[q] for q in i.qubits), i.params, i.clbit)
        for i in circuit.instructions
    ))


def circuit_depth(circuit: Circuit) -> int:
    """Number of layers under greedy as-soon-as-possible scheduling."""
    level: dict = {}
    depth = 0
    for ins in circuit.instructions:
        layer = 1 + max((level.get(q, 0) for q in ins.qubits), default=0)
        for q in ins.qubits:
            level[q] = layer
        depth = max(depth, layer)
    return depth


MAX_UNITARY_QUBITS = 10


def unitary_of(circuit: Circuit, n_qubits: int | None = None) -> np.ndarray:
    """Full 2^n x 2^n unitary of a bound, physical, measurement-free circuit.

    Little-endian: basis index ``sum(bit_q << q)``.
    """
    if circuit.measurements:
        raise ValueError("circuit contains measurements")
    if circuit.free_symbols:
        raise ValueError(f"unbound symbol(s): {', '.join(sorted(circuit.free_symbols))}")
    n = circuit.num_qubits() if n_qubits is None else n_qubits
    if n < circuit.num_qubits():
        raise ValueError(f"circuit needs {circuit.num_qubits()} qubits, got n_qubits={n}")
    if n > MAX_UNITARY_QUBITS:
        raise ValueError(f"{n} qubits exceeds the unitary oracle limit of {MAX_UNITARY_QUBITS}")
    dim = 1 << n
    # batch axis = input column; rows are transformed
    tensor = np.eye(dim, dtype=complex).reshape((dim,) + (2,) * n)
    for ins in circuit.instructions:
        angle = ins.angle if ins.params else None
        tensor = _g.apply_gate(tensor, ins.kind, tuple(q.index for q in ins.qubits), angle, n)
    return tensor.reshape(dim, dim).T
