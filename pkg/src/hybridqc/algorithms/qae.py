"""2-1-2 quantum autoencoder with full and halfway training.

State preparation S(phi) = RY(phi) q0; CNOT q0->q1 makes
cos(phi/2)|00> + sin(phi/2)|11>.  The encoder U(theta) = CNOT q0->q1; RY(theta) q1
leaves the trash qubit q1 in |0> exactly when theta = 0.  Full training appends
the decoder U^dagger(theta) onto (q0, refresh q2) and the inverse preparation,
then asks for |00> on (q0, q2).  Both costs reduce to -cos^2(theta/2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from ..backend import JobRequest, LocalBackend
from ..circuit import Circuit, Param, Symbol, as_param, bind_parameters, gate, measure, print_program
from ..optimize import SweepResult, grid_sweep, nelder_mead
from ..simulator import NoiseModel, probabilities, run_statevector
from .common import TrainReport, cached_compile, job_seed

Mode = Literal["full", "halfway"]
THETA = "theta"


@dataclass(frozen=True)
class QaeDataset:
    phis: tuple[float, ...]
    train_indices: tuple[int, ...]
    test_indices: tuple[int, ...]
    seed: int

    def subset(self, which: str) -> list[tuple[int, float]]:
        idx = {"train": self.train_indices, "test": self.test_indices}[which]
        return [(i, self.phis[i]) for i in idx]


def qae_dataset(n_points: int = 40, lo: float = 0.0, hi: float = math.pi, n_train: int = 8,
                seed: int = 0) -> QaeDataset:
    if not 0 < n_train < n_points:
        raise ValueError(f"n_train must be in (0, {n_points})")
    phis = [float(x) for x in np.linspace(lo, hi, n_points)]
    phis[0], phis[-1] = float(lo), float(hi)
    rng = np.random.default_rng(seed)
    train = sorted(int(i) for i in rng.choice(n_points, size=n_train, replace=False))
    test = [i for i in range(n_points) if i not in set(train)]
    return QaeDataset(tuple(phis), tuple(train), tuple(test), seed)


@dataclass
class QaeConfig:
    mode: Mode = "halfway"
    shots: int = 10000
    backend: object = None
    noise: NoiseModel | None = None
    seed: int = 0
    exact: bool = False
    trash_value: int = field(default=0, init=False)

    def __post_init__(self):
        if self.mode not in ("full", "halfway"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if self.backend is None:
            self.backend = LocalBackend()

    def echo(self) -> dict:
        return {"mode": self.mode, "shots": self.shots, "seed": self.seed, "exact": self.exact,
                "noise": self.noise.to_dict() if self.noise else None,
                "backend": repr(self.backend), "device": self.backend.device.name}


def qae_build_circuit(phi: Param | float, theta: Param | float | str = THETA, mode: Mode = "halfway") -> Circuit:
    phi, theta = as_param(phi), as_param(theta)
    neg = (lambda p: -p) if isinstance(theta, Symbol) else (lambda p: as_param(-p.value))
    prep = [gate("RY", "q0", params=[phi]), gate("CNOT", "q0", "q1")]
    encode = [gate("CNOT", "q0", "q1"), gate("RY", "q1", params=[theta])]
    if mode == "halfway":
        return _circuit(prep + encode + [measure("q1", 0)])
    if mode != "full":
        raise ValueError(f"unknown mode {mode!r}")
    neg_phi = -phi if isinstance(phi, Symbol) else as_param(-phi.value)
    decode = [gate("RY", "q2", params=[neg(theta)]), gate("CNOT", "q0", "q2")]
    unprep = [gate("CNOT", "q0", "q2"), gate("RY", "q0", params=[neg_phi])]
    return _circuit(prep + encode + decode + unprep + [measure("q0", 0), measure("q2", 1)])


def _circuit(instrs) -> Circuit:
    return Circuit(tuple(instrs))


def _success_probabilities(theta: float, points: list[tuple[int, float]], config: QaeConfig,
                           salt: int) -> list[float]:
    """Per-phi probability (exact) or frequency (sampled) of an all-zero readout."""
    device = config.backend.device
    out = []
    for idx, phi in points:
        compiled = cached_compile(qae_build_circuit(phi, THETA, config.mode), device).circuit
        bound = bind_parameters(compiled, {THETA: theta})
        if config.exact:
            qubits = [m.qubits[0].index for m in sorted(bound.measurements, key=lambda m: m.clbit)]
            state = run_statevector(bound.without_measurements(), bound.num_qubits())
            out.append(probabilities(state, qubits).get(0, 0.0))
            continue
        request = JobRequest(print_program(bound), config.shots, config.noise, job_seed(config.seed, salt, idx))
        result = config.backend.execute(request)
        out.append(result.frequency("0" * len(result.clbits)))
    return out


_SALT = {"train": 1, "test": 2}


def qae_cost(theta: float, dataset: QaeDataset, subset: str, config: QaeConfig) -> tuple[float, float]:
    """Negated mean success probability over ``subset`` and its standard error across phis."""
    probs = np.array(_success_probabilities(float(theta), dataset.subset(subset), config, _SALT[subset]))
    stderr = float(probs.std(ddof=1) / math.sqrt(probs.size)) if probs.size > 1 else 0.0
    return -float(probs.mean()), stderr


def qae_sweep(dataset: QaeDataset, config: QaeConfig, points: int = 50, lo: float = -math.pi,
              hi: float = math.pi, workers: int | None = None) -> SweepResult:
    """Training-set loss on an inclusive theta grid; uncertainty is the binomial standard error."""
    points_train = dataset.subset("train")

    def objective(theta: float) -> tuple[float, float]:
        probs = np.array(_success_probabilities(theta, points_train, config, _SALT["train"]))
        if config.exact:
            return -float(probs.mean()), 0.0
        se = math.sqrt(float(np.sum(probs * (1 - probs))) / config.shots) / probs.size
        return -float(probs.mean()), se

    return grid_sweep(objective, lo, hi, points, workers=workers)


def qae_train(dataset: QaeDataset, config: QaeConfig, x0: float = math.pi / 1.2, initial_step: float = 0.5,
              max_evals: int = 80, xtol: float = 1e-3, ftol: float = 1e-4) -> TrainReport:
    """Nelder-Mead on the training loss, then evaluate the test loss at the optimum."""
    def objective(x: np.ndarray) -> float:
        return qae_cost(float(x[0]), dataset, "train", config)[0]

    result = nelder_mead(objective, [x0], initial_step=initial_step, max_evals=max_evals, xtol=xtol, ftol=ftol)
    theta = float(result.best_params[0])
    train_loss = qae_cost(theta, dataset, "train", config)[0]
    test_loss = qae_cost(theta, dataset, "test", config)[0]
    echo = config.echo() | {"x0": x0, "initial_step": initial_step, "max_evals": max_evals,
                            "xtol": xtol, "ftol": ftol, "data_seed": dataset.seed}
    return TrainReport(result, train_loss, test_loss, None if config.exact else config.shots, config.seed, echo)
