"""Derivative-free minimisation (Nelder-Mead) and 1-D landscape sweeps."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

# reflection, expansion, contraction, shrink
ALPHA, GAMMA, RHO, SIGMA = 1.0, 2.0, 0.5, 0.5


@dataclass
class OptimizeResult:
    best_params: np.ndarray
    best_cost: float
    n_evals: int
    trace: list[tuple[np.ndarray, float]] = field(default_factory=list)
    converged: bool = False

    def to_dict(self) -> dict:
        return {
            "best_params": [float(x) for x in self.best_params],
            "best_cost": self.best_cost,
            "n_evals": self.n_evals,
            "converged": self.converged,
            "trace": [{"params": [float(x) for x in p], "cost": c} for p, c in self.trace],
        }


@dataclass
class SweepResult:
    grid: list[float]
    costs: list[float]
    uncertainty: list[float]

    def to_dict(self) -> dict:
        return {"grid": list(self.grid), "costs": list(self.costs), "uncertainty": list(self.uncertainty)}


class _BudgetExhausted(Exception):
    pass


def nelder_mead(
    objective: Callable[[np.ndarray], float],
    x0: Sequence[float] | float,
    initial_step: float = 0.5,
    max_evals: int = 1000,
    xtol: float = 1e-6,
    ftol: float = 1e-9,
    noise_floor: float = 0.0,
) -> OptimizeResult:
    """Minimise ``objective`` from ``x0`` with the classic simplex method.

    The starting simplex is ``x0`` plus ``initial_step`` along each axis.
    Converged once every vertex lies within ``xtol`` (max-norm) of the best
    one and the vertex costs span less than ``max(ftol, noise_floor)``;
    otherwise the search stops after ``max_evals`` objective calls.  Pass the
    estimated shot-noise level as ``noise_floor`` so that cost differences the
    noise cannot resolve are not chased.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    dim = x0.size
    if dim < 1:
        raise ValueError("need at least one parameter")
    if initial_step <= 0 or max_evals < 1 or xtol <= 0 or ftol <= 0 or noise_floor < 0:
        raise ValueError("optimizer options must be positive")

    n_evals = 0
    seen_best: tuple[np.ndarray, float] | None = None

    def f(x: np.ndarray) -> float:
        nonlocal n_evals, seen_best
        if n_evals >= max_evals:
            raise _BudgetExhausted
        n_evals += 1
        val = float(objective(x.copy()))
        if not math.isfinite(val):
            raise ValueError(f"objective returned {val} at {x.tolist()}")
        if seen_best is None or val < seen_best[1]:
            seen_best = (x.copy(), val)
        return val

    simplex = [x0] + [x0 + initial_step * np.eye(dim)[i] for i in range(dim)]
    costs: list[float] = []
    trace: list[tuple[np.ndarray, float]] = []
    converged = False
    try:
        for x in simplex:
            costs.append(f(x))
        while True:
            order = np.argsort(costs, kind="stable")
            simplex = [simplex[i] for i in order]
            costs = [costs[i] for i in order]
            trace.append((simplex[0].copy(), costs[0]))
            x_spread = max(float(np.max(np.abs(x - simplex[0]))) for x in simplex[1:])
            f_spread = costs[-1] - costs[0]
            if x_spread < xtol and f_spread < max(ftol, noise_floor):
                converged = True
                break

            centroid = np.mean(simplex[:-1], axis=0)
            worst, f_worst = simplex[-1], costs[-1]
            xr = centroid + ALPHA * (centroid - worst)
            fr = f(xr)
            if costs[0] <= fr < costs[-2]:
                simplex[-1], costs[-1] = xr, fr
                continue
            if fr < costs[0]:
                xe = centroid + GAMMA * (xr - centroid)
                fe = f(xe)
                simplex[-1], costs[-1] = (xe, fe) if fe < fr else (xr, fr)
                continue
            if fr < f_worst:
                xc = centroid + RHO * (xr - centroid)
                fc = f(xc)
                if fc <= fr:
                    simplex[-1], costs[-1] = xc, fc
                    continue
            else:
                xc = centroid + RHO * (worst - centroid)
                fc = f(xc)
                if fc < f_worst:
                    simplex[-1], costs[-1] = xc, fc
                    continue
            best = simplex[0]
            for i in range(1, dim + 1):
                simplex[i] = best + SIGMA * (simplex[i] - best)
                costs[i] = f(simplex[i])
    except _BudgetExhausted:
        pass

    if seen_best is None:
        raise ValueError("max_evals too small to evaluate the objective")
    if not trace or seen_best[1] < trace[-1][1]:
        trace.append((seen_best[0].copy(), seen_best[1]))
    return OptimizeResult(seen_best[0], seen_best[1], n_evals, trace, converged)


def _split(value) -> tuple[float, float]:
    if isinstance(value, tuple):
        return float(value[0]), float(value[1])
    return float(value), 0.0


def grid_sweep(
    objective: Callable[[float], float | tuple[float, float]],
    lo: float,
    hi: float,
    points: int,
    workers: int | None = None,
) -> SweepResult:
    """Evaluate ``objective`` on ``points`` evenly spaced values in [lo, hi].

    The objective may return a cost or ``(cost, standard_error)``.  Exceptions
    and non-finite costs are recorded as NaN and the sweep carries on.
    ``workers`` > 1 evaluates points concurrently.
    """
    if points < 2:
        raise ValueError("a sweep needs at least two points")
    if not lo < hi:
        raise ValueError("need lo < hi")
    grid = [float(x) for x in np.linspace(lo, hi, points)]
    grid[0], grid[-1] = float(lo), float(hi)

    def one(x: float) -> tuple[float, float]:
        try:
            cost, err = _split(objective(x))
        except (ArithmeticError, ValueError):
            return math.nan, math.nan
        return (cost, err) if math.isfinite(cost) else (math.nan, math.nan)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, grid))
    else:
        results = [one(x) for x in grid]
    return SweepResult(grid, [c for c, _ in results], [e for _, e in results])
