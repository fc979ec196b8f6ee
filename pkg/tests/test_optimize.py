import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridqc.optimize import grid_sweep, nelder_mead


def test_quadratic_1d():
    r = nelder_mead(lambda x: (x[0] - 2) ** 2, [0.0])
    assert r.converged
    assert abs(r.best_params[0] - 2) < 1e-5
    assert r.best_cost < 1e-10


def test_anisotropic_2d():
    r = nelder_mead(lambda x: x[0] ** 2 + 10 * x[1] ** 2, [1.0, 1.0])
    assert r.converged and r.best_cost < 1e-10


def test_rosenbrock():
    rosen = lambda x: (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2
    r = nelder_mead(rosen, [-1.2, 1.0], max_evals=2000, xtol=1e-8, ftol=1e-12)
    assert np.allclose(r.best_params, [1, 1], atol=1e-4)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=3), st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_finds_shifted_bowl(center, start):
    c = np.array(center)
    r = nelder_mead(lambda x: float(np.sum((x - c) ** 2)), start[: c.size], max_evals=3000, xtol=1e-7, ftol=1e-12)
    assert np.allclose(r.best_params, c, atol=1e-4)


def test_budget_respected_and_best_tracked():
    calls = []

    def obj(x):
        calls.append(x[0])
        return math.cos(x[0])

    r = nelder_mead(obj, [0.0], max_evals=7)
    assert r.n_evals == len(calls) == 7
    assert not r.converged
    assert r.best_cost == min(math.cos(c) for c in calls)
    assert r.trace[-1][1] == r.best_cost


def test_trace_is_monotone():
    r = nelder_mead(lambda x: (x[0] + 1) ** 2 + (x[1] - 0.5) ** 2, [2.0, 2.0])
    costs = [c for _, c in r.trace]
    assert all(b <= a for a, b in zip(costs, costs[1:]))


def test_noise_floor_stops_early():
    rng = np.random.default_rng(0)
    noisy = lambda x: (x[0] - 1) ** 2 + 0.01 * rng.standard_normal()
    r = nelder_mead(noisy, [0.0], max_evals=500, xtol=0.05, noise_floor=0.1)
    assert r.converged and r.n_evals < 100
    assert abs(r.best_params[0] - 1) < 0.3


def test_nonfinite_objective_rejected():
    with pytest.raises(ValueError, match="nan"):
        nelder_mead(lambda x: float("nan"), [0.0])


@pytest.mark.parametrize("kwargs", [{"initial_step": 0}, {"max_evals": 0}, {"xtol": -1}, {"noise_floor": -1}])
def test_bad_options(kwargs):
    with pytest.raises(ValueError):
        nelder_mead(lambda x: 0.0, [0.0], **kwargs)


def test_sweep_grid_inclusive():
    s = grid_sweep(lambda t: math.sin(t), -math.pi, math.pi, 5)
    assert s.grid[0] == -math.pi and s.grid[-1] == math.pi
    assert np.allclose(s.costs, np.sin(s.grid))
    assert s.uncertainty == [0.0] * 5


def test_sweep_records_errors_as_nan():
    def obj(t):
        if t == 0:
            raise ValueError("boom")
        return (t, 0.1)

    s = grid_sweep(obj, -1, 1, 3)
    assert math.isnan(s.costs[1]) and s.costs[0] == -1 and s.uncertainty[2] == 0.1


def test_sweep_parallel_matches_serial():
    f = lambda t: t ** 3 - t
    assert grid_sweep(f, -2, 2, 21, workers=4) == grid_sweep(f, -2, 2, 21)


def test_sweep_validation():
    with pytest.raises(ValueError):
        grid_sweep(abs, 0, 1, 1)
    with pytest.raises(ValueError):
        grid_sweep(abs, 1, 0, 5)
