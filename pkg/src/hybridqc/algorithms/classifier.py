"""Two-qubit variational XOR classifier.

Inputs are encoded as RX(theta0) on q0 and RX(theta1) on q1, entangled by CZ,
followed by the trainable layer RX(w0) on q0, RX(w1) on q1.  The label
statistic is p1, the probability of reading 1 on q0.  Only w0 reaches q0's
marginal, so p1 does not depend on w1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from ..backend import JobRequest, LocalBackend
from ..circuit import Circuit, Param, as_param, bind_parameters, gate, measure, print_program
from ..optimize import nelder_mead
from ..simulator import NoiseModel, probabilities, run_statevector
from .common import TrainReport, cached_compile, job_seed

HALF_PI = math.pi / 2
CENTERS = {
    "standard": (((-HALF_PI, 0.0), 0), ((HALF_PI, math.pi), 0), ((-HALF_PI, math.pi), 1), ((HALF_PI, 0.0), 1)),
    "shifted": (((-HALF_PI, -HALF_PI), 0), ((HALF_PI, HALF_PI), 0), ((-HALF_PI, HALF_PI), 1), ((HALF_PI, -HALF_PI), 1)),
}


@dataclass(frozen=True)
class XorDataset:
    points: np.ndarray  # (N, 2) of (theta0, theta1)
    labels: np.ndarray  # (N,) in {0, 1}
    centers: tuple
    spread: float
    seed: int
    variant: str = "standard"

    def __len__(self) -> int:
        return len(self.labels)


def xor_dataset(per_cluster: int = 10, spread: float = 0.3, seed: int = 0,
                variant: Literal["standard", "shifted"] = "standard") -> XorDataset:
    """Points drawn uniformly from squares of half-width ``spread`` around the four XOR centres."""
    if per_cluster < 1 or spread < 0:
        raise ValueError("need per_cluster >= 1 and spread >= 0")
    centers = CENTERS[variant]
    rng = np.random.default_rng(seed)
    pts, labels = [], []
    for (c0, c1), label in centers:
        offsets = rng.uniform(-spread, spread, size=(per_cluster, 2)) if spread > 0 else np.zeros((per_cluster, 2))
        pts.append(np.array([c0, c1]) + offsets)
        labels += [label] * per_cluster
    return XorDataset(np.vstack(pts), np.array(labels, dtype=int), tuple(c for c, _ in centers),
                      float(spread), seed, variant)


def classifier_circuit(theta0: Param | float | str = "theta0", theta1: Param | float | str = "theta1",
                       w0: Param | float | str = "w0", w1: Param | float | str = "w1") -> Circuit:
    return Circuit((
        gate("RX", "q0", params=[as_param(theta0)]),
        gate("RX", "q1", params=[as_param(theta1)]),
        gate("CZ", "q0", "q1"),
        gate("RX", "q0", params=[as_param(w0)]),
        gate("RX", "q1", params=[as_param(w1)]),
        measure("q0", 0),
    ))


def p1_analytic(theta0: float, theta1: float, w0: float) -> float:
    p = (math.cos(theta0 / 2) ** 2 * math.sin(w0 / 2) ** 2
         + math.sin(theta0 / 2) ** 2 * math.cos(w0 / 2) ** 2
         + 0.5 * math.sin(w0) * math.sin(theta0) * math.cos(theta1))
    if -1e-12 < p < 0:
        return 0.0
    if 1 < p < 1 + 1e-12:
        return 1.0
    return p


def cross_entropy_loss(p1s: Sequence[float], labels: Sequence[int], eps: float = 1e-6) -> float:
    """-(sum over label-1 points of log p1 - sum over label-0 points of log p1), p1 clamped to [eps, 1-eps].

    This is the asymmetric form: label-0 points are rewarded by small p1 with no
    lower bound other than the clamp.
    """
    if len(p1s) != len(labels):
        raise ValueError(f"{len(p1s)} probabilities for {len(labels)} labels")
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 0.5)")
    logs = np.log(np.clip(np.asarray(p1s, dtype=float), eps, 1 - eps))
    labels = np.asarray(labels)
    return -float(logs[labels == 1].sum() - logs[labels == 0].sum())


@dataclass
class ClassifierConfig:
    shots: int = 10000
    backend: object = None
    noise: NoiseModel | None = None
    seed: int = 0
    exact: bool = False
    eps: float = 1e-6

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if self.backend is None:
            self.backend = LocalBackend()

    def echo(self) -> dict:
        return {"shots": self.shots, "seed": self.seed, "exact": self.exact, "eps": self.eps,
                "noise": self.noise.to_dict() if self.noise else None,
                "backend": repr(self.backend), "device": self.backend.device.name}


def estimate_p1(w: Sequence[float], points: np.ndarray, config: ClassifierConfig) -> np.ndarray:
    """p1 at each input point, from the compiled circuit (exact or sampled)."""
    compiled = cached_compile(classifier_circuit(), config.backend.device).circuit
    out = np.empty(len(points))
    for k, (t0, t1) in enumerate(points):
        bound = bind_parameters(compiled, {"theta0": t0, "theta1": t1, "w0": w[0], "w1": w[1]})
        if config.exact:
            q = bound.measurements[0].qubits[0].index
            state = run_statevector(bound.without_measurements(), bound.num_qubits())
            out[k] = probabilities(state, [q]).get(1, 0.0)
        else:
            request = JobRequest(print_program(bound), config.shots, config.noise, job_seed(config.seed, k))
            out[k] = config.backend.execute(request).frequency("1")
    return out


def accuracy(p1s: Sequence[float], labels: Sequence[int]) -> float:
    return float(np.mean((np.asarray(p1s) > 0.5).astype(int) == np.asarray(labels)))


def evaluate(w: Sequence[float], dataset: XorDataset, config: ClassifierConfig) -> tuple[float, float]:
    """(cross-entropy, thresholded accuracy) of weights ``w`` on ``dataset``."""
    p1s = estimate_p1(w, dataset.points, config)
    return cross_entropy_loss(p1s, dataset.labels, config.eps), accuracy(p1s, dataset.labels)


def classifier_train(dataset: XorDataset, config: ClassifierConfig, w_init: Sequence[float] = (0.1, 0.1),
                     initial_step: float = 0.5, max_evals: int = 200, xtol: float = 1e-3,
                     ftol: float = 1e-4) -> TrainReport:
    def objective(w: np.ndarray) -> float:
        return cross_entropy_loss(estimate_p1(w, dataset.points, config), dataset.labels, config.eps)

    result = nelder_mead(objective, list(w_init), initial_step=initial_step, max_evals=max_evals,
                         xtol=xtol, ftol=ftol)
    loss, acc = evaluate(result.best_params, dataset, config)
    echo = config.echo() | {"w_init": list(w_init), "initial_step": initial_step, "max_evals": max_evals,
                            "xtol": xtol, "ftol": ftol, "data_seed": dataset.seed, "variant": dataset.variant,
                            "per_cluster": len(dataset) // 4, "spread": dataset.spread}
    return TrainReport(result, loss, None, None if config.exact else config.shots, config.seed, echo, acc)


def grid_axis(points: int, lo: float = -math.pi, hi: float = math.pi) -> np.ndarray:
    axis = np.linspace(lo, hi, points)
    axis[0], axis[-1] = lo, hi
    return axis


def decision_grid(w: Sequence[float], points: int = 41, lo: float = -math.pi, hi: float = math.pi,
                  config: ClassifierConfig | None = None) -> np.ndarray:
    """p1 on an inclusive points x points grid, rows indexed by theta0, columns by theta1.

    Uses the closed form unless ``config`` is given, in which case p1 is
    estimated through the backend.
    """
    if points < 2:
        raise ValueError("grid needs at least two points per axis")
    axis = grid_axis(points, lo, hi)
    if config is None:
        return np.array([[p1_analytic(t0, t1, w[0]) for t1 in axis] for t0 in axis])
    pts = np.array([(t0, t1) for t0 in axis for t1 in axis])
    return estimate_p1(w, pts, config).reshape(points, points)
