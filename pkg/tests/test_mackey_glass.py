import numpy as np
import pytest
from scipy.integrate import solve_ivp

from gpopt import InputError
from gpopt import objectives as ob
from gpopt.mackey_glass import (PARAM_RANGES, integrate, mackey_glass, mackey_glass_batch,
                                unit_to_params)


def test_parameter_mapping():
    assert np.array_equal(unit_to_params(np.zeros(6))[0], PARAM_RANGES[:, 0])
    assert np.array_equal(unit_to_params(np.ones(6))[0], PARAM_RANGES[:, 1])
    with pytest.raises(InputError):
        unit_to_params(np.full(6, 1.2))
    with pytest.raises(InputError):
        unit_to_params(np.zeros(5))


def test_zero_delay_matches_reference_ode_solver():
    rng = np.random.default_rng(0)
    for _ in range(10):
        a, b = rng.uniform(0.1, 0.4), rng.uniform(0.05, 0.2)
        n, x0, T = rng.uniform(7, 14), rng.uniform(0.5, 1.5), rng.uniform(50, 300)
        ref = solve_ivp(lambda t, x: a * x / (1 + np.abs(x) ** n) - b * x, (0, T), [x0],
                        method="DOP853", rtol=1e-13, atol=1e-14).y[0, -1]
        assert abs(integrate(a, b, 0.0, n, x0, T)[0] - ref) < 1e-6


def test_step_halving_converges():
    U = np.random.default_rng(1).uniform(size=(50, 6))
    coarse = mackey_glass_batch(U, step=0.1)
    fine = mackey_glass_batch(U, step=0.05)
    assert np.max(np.abs(coarse - fine)) < 1e-4


def test_delay_against_method_of_steps_reference():
    # on [0, tau] the delayed value is x0, so the equation is an ODE with a constant term
    a, b, tau, n, x0 = 0.2, 0.1, 17.0, 10.0, 1.2
    drive = a * x0 / (1 + x0**n)
    exact = x0 * np.exp(-b * tau) + drive / b * (1 - np.exp(-b * tau))
    assert integrate(a, b, tau, n, x0, tau)[0] == pytest.approx(exact, abs=1e-10)


def test_deterministic_and_batched():
    U = np.random.default_rng(2).uniform(size=(7, 6))
    batch = mackey_glass_batch(U)
    assert np.array_equal(batch, mackey_glass_batch(U))
    assert all(mackey_glass(u) == v for u, v in zip(U, batch))


def test_invalid_integration_arguments():
    with pytest.raises(InputError):
        integrate(0.2, 0.1, 0.05, 10, 1.0, 10.0)
    with pytest.raises(InputError):
        integrate(0.2, 0.1, 5.0, 10, 1.0, 0.0)


def test_non_finite_trajectories_are_floored_and_flagged(monkeypatch):
    def fake(U):
        out = np.sin(np.arange(len(U), dtype=float))
        out[::100] = np.nan
        return out

    monkeypatch.setattr(ob, "mackey_glass_batch", fake)
    obj = ob.mackey_glass_objective(0, n_points=512)
    assert obj.metadata["nonfinite"] == 6
    assert np.all(np.isfinite(obj.values))
    assert obj.values[0] == obj.values.min() and obj.max_index % 100 != 0
