from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..circuit import Circuit
from ..compiler import CompiledCircuit, DeviceSpec, compile_circuit
from ..optimize import OptimizeResult


@dataclass
class TrainReport:
    optimize: OptimizeResult
    train_loss: float
    test_loss: float | None
    shots: int | None
    seed: int
    config: dict = field(default_factory=dict)
    accuracy: float | None = None

    def to_dict(self) -> dict:
        return {
            "optimize": self.optimize.to_dict(),
            "train_loss": self.train_loss,
            "test_loss": self.test_loss,
            "shots": self.shots,
            "seed": self.seed,
            "accuracy": self.accuracy,
            "config": dict(self.config),
        }


def job_seed(*keys: int) -> int:
    """Deterministic 63-bit seed derived from integer keys."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1, np.uint64)[0] >> 1)


def float_key(x: float) -> int:
    return struct.unpack("<q", struct.pack("<d", float(x)))[0] & ((1 << 63) - 1)


@lru_cache(maxsize=4096)
def cached_compile(circuit: Circuit, device: DeviceSpec) -> CompiledCircuit:
    return compile_circuit(circuit, device)


def wrap_angle(x: float) -> float:
    """Map to (-pi, pi]."""
    y = (x + np.pi) % (2 * np.pi) - np.pi
    return np.pi if y == -np.pi else float(y)
