import numpy as np
import pytest

from fsnn.dynsys import (ConfigurationError, IntegrationConfig,
                         IntegrationError, Trajectory, integrate,
                         integrate_dense, rk4_step)

# one RK4 step on s' = s from s0 = 1 with dt = 1/4 reproduces the degree-4
# Taylor polynomial of exp: sum_{k<=4} dt^k / k! = 7889/6144
RK4_EXP_ORACLE = 1.2840169270833333


def exp_derivs(s, t):
    return s


def test_config_defaults_and_counts():
    cfg = IntegrationConfig()
    assert cfg.n_steps == 400
    assert cfg.sample_stride == 4


def test_config_rejects_non_multiples():
    with pytest.raises(ConfigurationError):
        IntegrationConfig(dt=0.3, horizon=100.0, sample_interval=1.0)
    with pytest.raises(ConfigurationError):
        IntegrationConfig(dt=0.25, horizon=100.1, sample_interval=1.0)
    with pytest.raises(ConfigurationError):
        IntegrationConfig(dt=-0.25)


def test_rk4_taylor_oracle():
    out = rk4_step(exp_derivs, np.array([1.0]), 0.0, 0.25)
    assert out[0] == pytest.approx(RK4_EXP_ORACLE, abs=1e-15)


def test_rk4_exact_on_cubic_time_polynomial():
    # RK4 integrates polynomials in t up to degree 4 of the solution exactly;
    # s(t) = t^3 has derivative 3 t^2
    out = rk4_step(lambda s, t: np.array([3 * t * t]), np.array([8.0]),
                   2.0, 0.5)
    assert out[0] == pytest.approx(2.5 ** 3, abs=1e-12)


def test_rk4_order_four_convergence():
    # halving the step shrinks the one-unit global error on s' = s by about
    # 2^4; the measured factor must sit in [12, 20]
    def err(dt):
        cfg = IntegrationConfig(dt=dt, horizon=1.0, sample_interval=1.0)
        traj = integrate(exp_derivs, np.array([1.0]), cfg)
        return abs(traj.samples[-1, 0] - np.exp(1.0))

    factor = err(0.1) / err(0.05)
    assert 12.0 <= factor <= 20.0


def test_rk4_nonfinite_raises_with_context():
    def blow_up(s, t):
        return np.array([0.0, np.inf])

    with pytest.raises(IntegrationError) as info:
        rk4_step(blow_up, np.array([1.0, 1.0]), 3.25, 0.25)
    assert "index 1" in str(info.value)
    assert "3.25" in str(info.value)


def test_integrate_excludes_t0_by_default():
    cfg = IntegrationConfig(dt=0.25, horizon=10.0, sample_interval=1.0)
    traj = integrate(exp_derivs, np.array([1.0]), cfg)
    assert traj.samples.shape == (10, 1)
    assert not traj.includes_t0
    assert traj.times[0] == 1.0
    assert traj.times[-1] == 10.0


def test_integrate_include_t0_flag():
    cfg = IntegrationConfig(dt=0.25, horizon=10.0, sample_interval=1.0)
    traj = integrate(exp_derivs, np.array([1.0]), cfg, include_t0=True)
    assert traj.samples.shape == (11, 1)
    assert traj.times[0] == 0.0
    assert traj.samples[0, 0] == 1.0


def test_integrate_dense_includes_every_step():
    cfg = IntegrationConfig()
    traj = integrate_dense(exp_derivs, np.array([1.0]), cfg)
    assert traj.samples.shape == (401, 1)
    assert traj.times[0] == 0.0
    assert traj.times[-1] == pytest.approx(100.0)


def test_integrate_matches_dense_at_sample_points():
    cfg = IntegrationConfig(dt=0.25, horizon=5.0, sample_interval=1.0)
    sparse = integrate(exp_derivs, np.array([1.0]), cfg)
    dense = integrate_dense(exp_derivs, np.array([1.0]), cfg)
    assert np.array_equal(sparse.samples, dense.samples[4::4])


def test_integrate_accuracy_against_exp():
    cfg = IntegrationConfig(dt=0.25, horizon=1.0, sample_interval=1.0)
    traj = integrate(exp_derivs, np.array([1.0]), cfg)
    assert traj.samples[-1, 0] == pytest.approx(np.exp(1.0), abs=1e-4)


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory(t0=0.0, sample_interval=1.0, samples=np.empty((0, 2)),
                   state_names=("a", "b"))
    with pytest.raises(ValueError):
        Trajectory(t0=0.0, sample_interval=1.0, samples=np.zeros((3, 2)),
                   state_names=("a",))


def test_default_state_names():
    cfg = IntegrationConfig(dt=0.5, horizon=1.0, sample_interval=1.0)
    traj = integrate(exp_derivs, np.array([1.0, 2.0]), cfg)
    assert traj.state_names == ("State_1", "State_2")
