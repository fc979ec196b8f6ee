import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridqc.circuit import (
    Abstract,
    Circuit,
    Const,
    Instruction,
    ParseError,
    Physical,
    Symbol,
    assign_qubits,
    bind_parameters,
    circuit_depth,
    gate,
    measure,
    parse_program,
    print_program,
    unitary_of,
)
from hybridqc.algorithms.qae import qae_build_circuit
from hybridqc.algorithms.classifier import classifier_circuit

from conftest import H, X, Z, phase_equal, random_circuit, ref_unitary, rot


# --- parser / printer -----------------------------------------------------------------

def test_parse_abstract_program():
    c = parse_program("RY(1.5707963267948966) %q0\nCNOT %q0 %q1")
    assert c.instructions == (
        Instruction("RY", (Abstract("q0"),), (Const(math.pi / 2),)),
        Instruction("CNOT", (Abstract("q0"), Abstract("q1"))),
    )


def test_parse_pi_expression():
    (ins,) = parse_program("RZ(pi/2) 3").instructions
    assert ins.qubits == (Physical(3),)
    assert ins.params == (Const(1.5707963267948966),)


@pytest.mark.parametrize("text, value", [
    ("RX(-pi) 0", -math.pi),
    ("RX(-pi/4) 0", -math.pi / 4),
    ("RX(--1.5) 0", 1.5),
    ("RX(2) 0", 2.0),
    ("RX(1e-3) 0", 1e-3),
    ("RX(pi/2/2) 0", math.pi / 4),
])
def test_constant_expressions(text, value):
    assert parse_program(text).instructions[0].params[0] == Const(value)


def test_symbol_expressions():
    (ins,) = parse_program("RY(-%theta/2) %q").instructions
    assert ins.params == (Symbol("theta", -1, 2),)
    assert str(ins) == "RY(-%theta/2) %q"


def test_comments_and_blank_lines():
    c = parse_program("# header\n\nH 0  # trailing\n   \nMEASURE 0 -> 4\n")
    assert [i.kind for i in c] == ["H", "MEASURE"]
    assert c.instructions[1].clbit == 4


@pytest.mark.parametrize("text, line, column", [
    ("MEASURE 0 -> 0\nX 0", 2, 1),
    ("H 0\nFOO 1", 2, 1),
    ("RX 0", 1, 1),
    ("CNOT 0", 1, 1),
    ("H 0 1", 1, 1),
    ("MEASURE 0 -> 0\nMEASURE 1 -> 0", 2, 1),
    ("RX(1 0", 1, 6),
    ("X 0 $", 1, 5),
    ("MEASURE 0 0", 1, 11),
    ("RX(pi/0) 0", 1, 7),
    ("H %a\nH 1", 2, 1),
    ("CZ 1 1", 1, 1),
])
def test_parse_errors_carry_position(text, line, column):
    with pytest.raises(ParseError) as err:
        parse_program(text)
    assert (err.value.line, err.value.column) == (line, column)


def test_print_empty_and_symbol():
    assert print_program(Circuit()) == ""
    c = Circuit((gate("RY", "q1", params=[Symbol("theta")]),))
    assert print_program(c) == "RY(%theta) %q1\n"


def test_round_trip_random_circuit(rng):
    c = random_circuit(rng, 4, 20, measure=True)
    assert len(c) == 24
    assert parse_program(print_program(c)) == c


def test_constants_print_losslessly():
    values = [math.pi / 3, -0.0, 1e-300, 123456.789012345678, -2.718281828459045]
    c = Circuit(tuple(gate("RZ", 0, params=[v]) for v in values))
    back = parse_program(print_program(c))
    assert [i.params[0].value for i in back] == values


_angles = st.floats(min_value=-10, max_value=10, allow_nan=False)
_params = st.one_of(
    _angles.map(Const),
    st.builds(Symbol, st.sampled_from(["a", "b", "theta"]), st.sampled_from([1, -1]), st.integers(1, 6)),
)


@st.composite
def circuits(draw, abstract=None):
    n = draw(st.integers(1, 4))
    use_abstract = draw(st.booleans()) if abstract is None else abstract
    ref = (lambda i: Abstract(f"q{i}")) if use_abstract else Physical
    instrs = []
    for _ in range(draw(st.integers(0, 15))):
        kind = draw(st.sampled_from(["I", "X", "Y", "Z", "H", "RX", "RY", "RZ"] + (["CNOT", "CZ", "SWAP"] if n > 1 else [])))
        if kind in ("CNOT", "CZ", "SWAP"):
            a, b = draw(st.lists(st.integers(0, n - 1), min_size=2, max_size=2, unique=True))
            qs = (ref(a), ref(b))
        else:
            qs = (ref(draw(st.integers(0, n - 1))),)
        params = (draw(_params),) if kind in ("RX", "RY", "RZ") else ()
        instrs.append(Instruction(kind, qs, params))
    measured = draw(st.lists(st.integers(0, n - 1), unique=True, max_size=n))
    for j, q in enumerate(measured):
        instrs.append(Instruction("MEASURE", (ref(q),), (), j * 2))
    return Circuit(tuple(instrs))


@given(circuits())
def test_round_trip_property(c):
    text = print_program(c)
    back = parse_program(text)
    assert back == c
    assert print_program(back) == text


# --- binding / assignment -------------------------------------------------------------

def test_bind_qae_encoder_to_zero():
    c = qae_build_circuit(0.4, "theta", "full")
    bound = bind_parameters(c, {"theta": 0.0})
    assert bound.free_symbols == frozenset()
    ry_on_q1_q2 = [i for i in bound if i.kind == "RY" and i.qubits[0] != Abstract("q0")]
    assert [i.params[0].value for i in ry_on_q1_q2] == [0.0, 0.0]


def test_bind_empty_is_identity():
    c = classifier_circuit()
    assert bind_parameters(c, {}) == c


def test_bind_partial_classifier():
    c = classifier_circuit()
    bound = bind_parameters(c, {"w0": math.pi / 2, "w1": 0.3})
    assert c.free_symbols - bound.free_symbols == {"w0", "w1"}
    assert bound.free_symbols == {"theta0", "theta1"}
    assert c.free_symbols == {"theta0", "theta1", "w0", "w1"}  # original untouched


def test_bind_resolves_sign_and_divisor():
    c = parse_program("RZ(-%t/4) 0")
    assert bind_parameters(c, {"t": 2.0}).instructions[0].params[0] == Const(-0.5)


def test_bind_unknown_symbol():
    with pytest.raises(KeyError):
        bind_parameters(classifier_circuit(), {"nope": 1.0})


@given(circuits(), st.floats(-3, 3), st.floats(-3, 3))
def test_bind_idempotent_and_commuting(c, x, y):
    once = bind_parameters(c, {"a": x}, strict=False)
    assert bind_parameters(once, {"a": x}, strict=False) == once
    ab = bind_parameters(bind_parameters(c, {"a": x}, strict=False), {"b": y}, strict=False)
    ba = bind_parameters(bind_parameters(c, {"b": y}, strict=False), {"a": x}, strict=False)
    assert ab == ba


def test_assign_qae_full_circuit():
    c = qae_build_circuit(0.3, 0.1, "full")
    phys = assign_qubits(c, {"q0": 0, "q1": 1, "q2": 2})
    assert phys.is_physical
    assert {q.index for q in phys.qubits} == {0, 1, 2}
    assert [i.kind for i in phys] == [i.kind for i in c]


def test_assign_errors():
    with pytest.raises(ValueError):
        assign_qubits(parse_program("CZ 0 1"), {"q0": 0})
    with pytest.raises(ValueError):
        assign_qubits(parse_program("CZ %q0 %q1"), {"q0": 0, "q1": 0})
    with pytest.raises(KeyError):
        assign_qubits(parse_program("CZ %q0 %q1"), {"q0": 0})


# --- depth ----------------------------------------------------------------------------

def test_depth_basics():
    assert circuit_depth(Circuit()) == 0
    assert circuit_depth(parse_program("RX(1) 0\nRZ(1) 0")) == 2
    assert circuit_depth(parse_program("RX(1) 0\nRZ(1) 1")) == 1
    assert circuit_depth(parse_program("H 0\nCZ 0 1\nMEASURE 1 -> 0")) == 3


@given(circuits(abstract=False), circuits(abstract=False))
def test_depth_of_disjoint_composition(c1, c2):
    shift = 10
    moved = Circuit(tuple(
        Instruction(i.kind, tuple(Physical(q.index + shift) for q in i.qubits), i.params,
                    None if i.clbit is None else i.clbit + 100)
        for i in c2
    ))
    assert circuit_depth(c1 + moved) == max(circuit_depth(c1), circuit_depth(c2))


# --- unitary oracle ---------------------------------------------------------------------

def test_unitary_x():
    assert np.allclose(unitary_of(parse_program("X 0")), [[0, 1], [1, 0]], atol=0)


def test_hh_is_identity():
    assert np.allclose(unitary_of(parse_program("H 0\nH 0")), np.eye(2), atol=1e-12)


def test_cnot_from_cz():
    cnot = unitary_of(parse_program("CNOT 0 1"))
    via_cz = unitary_of(parse_program("H 1\nCZ 0 1\nH 1"))
    assert phase_equal(cnot, via_cz)


def test_rotation_convention():
    assert np.allclose(unitary_of(parse_program("RX(pi) 0")), -1j * X, atol=1e-12)
    for axis in ("RX", "RY", "RZ"):
        u = unitary_of(parse_program(f"{axis}(0.7) 0"))
        assert np.allclose(u, rot(axis, 0.7), atol=1e-12)


def test_unitary_matches_kron_oracle(rng):
    for _ in range(20):
        c = bind_parameters(random_circuit(rng, 4, 15), {})
        assert np.allclose(unitary_of(c), ref_unitary(c, 4), atol=1e-12)


def test_unitary_composition(rng):
    c1, c2 = random_circuit(rng, 3, 10), random_circuit(rng, 3, 10)
    n = 3
    assert np.allclose(unitary_of(c1 + c2, n), unitary_of(c2, n) @ unitary_of(c1, n), atol=1e-12)


def test_unitary_little_endian():
    # X on qubit 1 maps |00> (index 0) to |10> (index 2)
    u = unitary_of(parse_program("X 1"))
    assert u[2, 0] == 1


@pytest.mark.parametrize("text, message", [
    ("RX(%a) 0", "unbound"),
    ("H 0\nMEASURE 0 -> 0", "measure"),
    ("H %a", "abstract"),
    ("H 10", "limit"),
])
def test_unitary_errors(text, message):
    with pytest.raises(ValueError, match=message):
        unitary_of(parse_program(text))


def test_circuit_invariants():
    with pytest.raises(ValueError):
        Circuit((gate("H", 0), gate("H", "a")))
    with pytest.raises(ValueError):
        Instruction("RX", (Physical(0),))
    with pytest.raises(ValueError):
        Const(float("nan"))
    c = parse_program("RX(%a) 0\nRZ(-%b/2) 1")
    assert c.free_symbols == {"a", "b"}
