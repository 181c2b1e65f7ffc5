import numpy as np
import pytest

from fsnn.dynsys import IntegrationConfig
from fsnn.ground_truth import (BENCHMARK_INITIALIZATIONS, STATE_NAMES,
                               GroundTruthParams, equilibrium_state,
                               generate_training_data, ground_truth_derivs,
                               oscillation_maxima, sigmoid_f, sigmoid_f_slope)

P = GroundTruthParams()


def test_sigmoid_midpoint_and_tails():
    assert sigmoid_f(50.0) == pytest.approx(50.0, abs=1e-12)
    assert sigmoid_f(4.0) == pytest.approx(9.112296101485617, abs=1e-12)
    assert 0.0 < sigmoid_f(-50.0) < 10.0
    assert 90.0 < sigmoid_f(150.0) < 100.0


def test_sigmoid_symmetry_about_midpoint():
    for d in (3.0, 17.0, 46.0, 90.0):
        assert sigmoid_f(50.0 + d) + sigmoid_f(50.0 - d) == pytest.approx(
            100.0, abs=1e-10)


def test_sigmoid_monotone_and_slope_matches_fd():
    xs = np.linspace(-40.0, 140.0, 181)
    values = sigmoid_f(xs)
    assert (np.diff(values) > 0).all()
    h = 1e-6
    for x in (0.0, 30.0, 50.0, 77.0, 120.0):
        fd = (sigmoid_f(x + h) - sigmoid_f(x - h)) / (2 * h)
        assert sigmoid_f_slope(x) == pytest.approx(fd, rel=1e-6)


def test_derivative_oracle_at_first_initialization():
    d = ground_truth_derivs(np.array([29.0, 96.0, 4.0]))
    assert d[0] == pytest.approx(7.377540779702878, abs=1e-12)
    assert d[1] == pytest.approx(-13.4, abs=1e-12)
    assert d[2] == pytest.approx(18.4, abs=1e-12)


def test_equilibrium_value_and_fixed_point():
    s_star = equilibrium_state()
    assert s_star == pytest.approx(38.728236618441954, abs=1e-9)
    d = ground_truth_derivs(np.full(3, s_star))
    assert np.abs(d).max() < 1e-9


def test_equilibrium_matches_reported_value():
    assert equilibrium_state() == pytest.approx(38.7, abs=0.05)


def test_conservation_of_derivative_sum_at_symmetric_states():
    # with S1 = S3 the f-outflow of S1 and inflow structure cancel so that
    # the total d/dt sums to (g - f(S3) - S3) / t + 0; check the exact
    # algebraic identity sum(d) = (g - f(S3) - S1) / t + (S1 - S3) / t
    rng = np.random.default_rng(7)
    for _ in range(50):
        s = rng.uniform(0.0, 150.0, 3)
        d = ground_truth_derivs(s)
        expected = (P.g - sigmoid_f(s[2]) - s[0]) / P.t + (s[0] - s[2]) / P.t
        assert d.sum() == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_training_data_shape_and_convention():
    datasets = generate_training_data(BENCHMARK_INITIALIZATIONS)
    assert len(datasets) == 2
    for ds, init in zip(datasets, BENCHMARK_INITIALIZATIONS):
        assert np.array_equal(ds.initialization, init)
        traj = ds.trajectory
        assert traj.samples.shape == (100, 3)
        assert not traj.includes_t0
        assert traj.state_names == STATE_NAMES
        assert traj.times[0] == 1.0 and traj.times[-1] == 100.0


def test_damped_oscillation_three_cycles():
    s_star = equilibrium_state()
    datasets = generate_training_data(BENCHMARK_INITIALIZATIONS)
    for ds in datasets:
        for i in range(3):
            series = ds.trajectory.samples[:, i]
            maxima = series[oscillation_maxima(series, s_star)]
            assert 2 <= len(maxima) <= 4
            amplitudes = np.abs(maxima - s_star)
            assert (np.diff(amplitudes) < 0).all()


def test_convergence_toward_equilibrium():
    s_star = equilibrium_state()
    datasets = generate_training_data(BENCHMARK_INITIALIZATIONS)
    for ds in datasets:
        dist = np.linalg.norm(ds.trajectory.samples - s_star, axis=1)
        assert dist[-1] < 0.1 * dist[9]


def test_partial_derivative_signs_define_balancing_loop():
    # analytic partials: S1 self-damping (-), S3 -> S1 through -f (-),
    # S1 -> S2 (+), S2 self (-), S2 -> S3 (+), S3 self (-)
    s = np.array([40.0, 55.0, 61.0])
    h = 1e-6

    def partial(i, j):
        sp = s.copy()
        sp[j] += h
        return (ground_truth_derivs(sp)[i] - ground_truth_derivs(s)[i]) / h

    assert partial(0, 0) < 0
    assert partial(0, 2) < 0
    assert partial(1, 0) > 0
    assert partial(1, 1) < 0
    assert partial(2, 1) > 0
    assert partial(2, 2) < 0
    # the three-edge cycle S1 -> S2 -> S3 -> S1 composes to a balancing loop
    assert np.sign(partial(1, 0) * partial(2, 1) * partial(0, 2)) == -1


def test_custom_integration_config():
    cfg = IntegrationConfig(dt=0.25, horizon=10.0, sample_interval=2.0)
    datasets = generate_training_data([BENCHMARK_INITIALIZATIONS[0]], cfg=cfg)
    assert datasets[0].trajectory.samples.shape == (5, 3)


def test_bad_initialization_rejected():
    with pytest.raises(ValueError):
        generate_training_data([np.array([1.0, 2.0])])
