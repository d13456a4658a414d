import dataclasses
import json

import numpy as np
import pytest
from scipy.linalg import solve_discrete_lyapunov

from terank.errors import ParamError, SimulationError
from terank.simulators import (
    MIXING_TAGS,
    ARConfig,
    MixingConfig,
    linear_te_oracle,
    load_scenario,
    save_scenario,
    simulate_mixing,
    simulate_switching_var,
    simulate_var,
)

SHORT = MixingConfig(duration=8.0, F_B_noise_interval=(0.0, 4.0), x_sp_interval=(4.0, 8.0))


def _spans(cfg):
    return np.array([cfg.limits[n][4] - cfg.limits[n][3] for n in MIXING_TAGS])


def test_var_deterministic():
    a = simulate_var(ARConfig(rng_seed=3, length=500)).values
    b = simulate_var(ARConfig(rng_seed=3, length=500)).values
    c = simulate_var(ARConfig(rng_seed=4, length=500)).values
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_var_autocovariance_matches_theory():
    cfg = ARConfig(self_coefficients=(0.5, 0.5), coupling=0.5, delay=2, length=10000, rng_seed=1)
    v = simulate_var(cfg).values
    # companion form of y_t = 0.5 y_{t-1} + 0.5 x_{t-2}
    A = np.zeros((4, 4))
    A[0, 0] = A[1, 1] = 0.5
    A[1, 2] = 0.5
    A[2:, :2] = np.eye(2)
    Q = np.zeros((4, 4))
    Q[:2, :2] = np.eye(2)
    S = solve_discrete_lyapunov(A, Q)
    scale = np.sqrt(np.outer(np.diag(S)[:2], np.diag(S)[:2]))
    d = v - v.mean(axis=0)
    for lag in range(6):
        theory = (np.linalg.matrix_power(A, lag) @ S)[:2, :2]
        sample = d[lag:].T @ d[: len(d) - lag] / len(d)
        # compared on the correlation scale, 5% of the variance
        np.testing.assert_allclose(sample / scale, theory / scale, atol=0.05)


def test_var_unstable_rejected():
    with pytest.raises(ParamError):
        simulate_var(ARConfig(self_coefficients=(1.0, 0.5)))
    with pytest.raises(ParamError):
        simulate_var(ARConfig(self_coefficients=(0.9, 0.9), coupling=0.9), 2, [(0, 1), (1, 0)])
    with pytest.raises(ParamError):
        simulate_var(ARConfig(), 2, [(0, 0)])
    with pytest.raises(ParamError):
        simulate_var(ARConfig(delay=0))


def test_var_tags_and_chain():
    ts = simulate_var(ARConfig(self_coefficients=(0.5, 0.5, 0.5), length=100), 3, [(0, 1), (1, 2)])
    assert tuple(ts.names) == ("x", "y", "z") and ts.values.shape == (100, 3)


def _analytic_default_te():
    """TE x -> y at delay 5 for the default system from its stationary covariance."""
    d = 5
    n = 2 * (d + 1)
    A = np.zeros((n, n))
    A[0, 0] = A[1, 1] = 0.5
    A[1, 2 * (d - 1)] = 0.5
    A[2:, :-2] = np.eye(n - 2)
    Q = np.zeros((n, n))
    Q[:2, :2] = np.eye(2)
    S = solve_discrete_lyapunov(A, Q)
    # state at t-1 holds y_{t-1} at index 1; y_t = 0.5 y_{t-1} + 0.5 x_{t-5} + e
    var_y = (A @ S @ A.T + Q)[1, 1]
    cov_y_y1 = (A @ S)[1, 1]
    reduced = var_y - cov_y_y1 ** 2 / S[1, 1]
    return 0.5 * np.log(reduced / 1.0)


def test_linear_oracle_default():
    ts = simulate_var(ARConfig(length=20000, rng_seed=0))
    te = linear_te_oracle(ts.column("x"), ts.column("y"), 5)
    assert te == pytest.approx(_analytic_default_te(), abs=0.01)
    assert abs(linear_te_oracle(ts.column("y"), ts.column("x"), 5)) < 0.005


def test_switching_var():
    cfg = ARConfig(length=4000, rng_seed=2)
    ts = simulate_switching_var(cfg, 2, [(0, 1)], [(1, 0)], 2000)
    first, second = ts.values[:2000], ts.values[2000:]
    assert linear_te_oracle(first[:, 0], first[:, 1], 5) > 0.05
    assert linear_te_oracle(second[:, 1], second[:, 0], 5) > 0.05
    with pytest.raises(ParamError):
        simulate_switching_var(cfg, 2, [(0, 1)], [(1, 0)], 4000)


def test_mixing_deterministic_and_shape():
    a = simulate_mixing(SHORT)
    b = simulate_mixing(SHORT)
    assert np.array_equal(a.values, b.values)
    assert tuple(a.names) == MIXING_TAGS and a.sample_period == 30.0
    assert a.n_samples == 8 * 120 + 1
    assert not np.array_equal(a.values, simulate_mixing(dataclasses.replace(SHORT, rng_seed=1)).values)


def test_mixing_disturbance_schedule():
    v = simulate_mixing(SHORT).values
    F_B, x_sp = v[:, 1], v[:, 5]
    noisy, stepping = slice(0, 480), slice(490, None)
    assert F_B[noisy].std() > 0.02 and np.ptp(F_B[stepping]) == 0
    assert np.ptp(x_sp[noisy]) == 0 and np.ptp(x_sp[stepping]) > 0
    assert np.all(np.abs(x_sp - 0.5) <= 0.05)


def test_mixing_settles_without_disturbance():
    cfg = dataclasses.replace(SHORT, F_B_noise_std=0.0, x_sp_step_magnitude=0.0)
    v = simulate_mixing(cfg).values
    span = _spans(cfg)
    assert np.abs(v[:, 3] - 1.0).max() < 1e-3 * span[3]
    assert np.abs(v[:, 4] - 0.5).max() < 1e-3 * span[4]


def test_mixing_tracks_a_setpoint_step():
    cfg = MixingConfig(duration=6.0, F_B_noise_std=0.0, F_B_noise_interval=(0.0, 1.0),
                       x_sp_interval=(1.0, 6.0), x_sp_step_period=5.0)
    v = simulate_mixing(cfg).values
    x, sp = v[:, 4], v[:, 5]
    assert abs(sp[200] - 0.5) > 0.01
    # x lags the step, then settles within 0.1% of span
    assert abs(x[125] - sp[125]) > 1e-3
    assert np.abs(x[360:600] - sp[360:600]).max() < 1e-3 * _spans(cfg)[4]


def test_mixing_mass_balance():
    cfg = dataclasses.replace(SHORT, F_B_noise_std=0.0, x_sp_step_magnitude=0.0)
    v = simulate_mixing(cfg).values
    assert np.abs(v[:, 0] + v[:, 1] - v[:, 2]).max() < 1e-9


def test_mixing_step_halving():
    a = simulate_mixing(SHORT).values
    b = simulate_mixing(dataclasses.replace(SHORT, step_seconds=0.5)).values
    rms = np.sqrt(np.mean((a - b) ** 2, axis=0)) / _spans(SHORT)
    assert rms.max() < 1e-3


def test_mixing_blow_up():
    with pytest.raises(SimulationError):
        simulate_mixing(dataclasses.replace(SHORT, F_B_noise_std=5.0, level_gain=0.01))


def test_mixing_config_validation():
    with pytest.raises(ParamError):
        MixingConfig(tank_area=0.0)
    with pytest.raises(ParamError):
        MixingConfig(x_sp_interval=(20.0, 50.0))
    with pytest.raises(ParamError):
        MixingConfig(sample_seconds=2.5)


def test_scenario_round_trip(tmp_path):
    save_scenario(SHORT, tmp_path / "s.json")
    assert load_scenario(tmp_path / "s.json") == SHORT
    d = json.loads((tmp_path / "s.json").read_text())
    d["bogus"] = 1
    (tmp_path / "t.json").write_text(json.dumps(d))
    with pytest.raises(ParamError, match="bogus"):
        load_scenario(tmp_path / "t.json")
