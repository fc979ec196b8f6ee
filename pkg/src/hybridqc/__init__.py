"""Hybrid quantum-classical experiment pipeline: circuit IR, compiler, simulator,
job backends, derivative-free optimisation and two variational experiments."""

from .circuit import (
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
    parse_program,
    print_program,
    unitary_of,
)
from .compiler import CompiledCircuit, DeviceSpec, agave8, compile_circuit, load_device
from .simulator import NoiseModel, ShotResult, StateVector, probabilities, run_statevector, sample_shots

__version__ = "0.1.0"
