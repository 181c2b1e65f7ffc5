"""Fixed-step dynamical-system representation and RK4 integration.

States are plain 1-D float arrays. Derivative functions take ``(state, t)``
and return an array of the same length. Everything here is pure; trajectories
are immutable once built.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConfigurationError",
    "IntegrationError",
    "IntegrationConfig",
    "Trajectory",
    "rk4_step",
    "integrate",
    "integrate_dense",
]


class ConfigurationError(ValueError):
    """Invalid integration configuration."""


class IntegrationError(RuntimeError):
    """A non-finite value appeared during integration."""


def _check_multiple(numer, denom, name):
    ratio = numer / denom
    if ratio < 0.5 or abs(ratio - round(ratio)) > 1e-9:
        raise ConfigurationError(
            f"{name} ({numer}) must be a positive integer multiple of dt ({denom})"
        )
    return int(round(ratio))


@dataclass(frozen=True)
class IntegrationConfig:
    """Step size, horizon and sampling interval, all in model time units."""

    dt: float = 0.25
    horizon: float = 100.0
    sample_interval: float = 1.0

    def __post_init__(self):
        if self.dt <= 0 or self.horizon <= 0 or self.sample_interval <= 0:
            raise ConfigurationError("dt, horizon and sample_interval must be positive")
        _check_multiple(self.horizon, self.dt, "horizon")
        _check_multiple(self.sample_interval, self.dt, "sample_interval")

    @property
    def n_steps(self) -> int:
        return _check_multiple(self.horizon, self.dt, "horizon")

    @property
    def sample_stride(self) -> int:
        return _check_multiple(self.sample_interval, self.dt, "sample_interval")


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled state trajectory.

    ``samples[k]`` is the state at time ``t0 + (k + 1) * sample_interval`` when
    the initial point was excluded (the default for training data), or at
    ``t0 + k * sample_interval`` when it was included.
    """

    t0: float
    sample_interval: float
    samples: np.ndarray  # (n_samples, n_states)
    state_names: tuple
    includes_t0: bool = False

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 2 or samples.shape[0] == 0:
            raise ValueError("samples must be a nonempty 2-D array")
        if samples.shape[1] != len(self.state_names):
            raise ValueError("sample width does not match state_names")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "state_names", tuple(self.state_names))

    @property
    def times(self) -> np.ndarray:
        offset = 0 if self.includes_t0 else 1
        k = np.arange(self.samples.shape[0])
        return self.t0 + (k + offset) * self.sample_interval

    @property
    def n_states(self) -> int:
        return self.samples.shape[1]


def rk4_step(derivs, s, t, dt):
    """One classical 4-stage Runge-Kutta step from state ``s`` at time ``t``."""
    s = np.asarray(s, dtype=float)
    k1 = np.asarray(derivs(s, t), dtype=float)
    k2 = np.asarray(derivs(s + 0.5 * dt * k1, t + 0.5 * dt), dtype=float)
    k3 = np.asarray(derivs(s + 0.5 * dt * k2, t + 0.5 * dt), dtype=float)
    k4 = np.asarray(derivs(s + dt * k3, t + dt), dtype=float)
    out = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    bad = ~np.isfinite(out)
    if bad.any():
        idx = int(np.flatnonzero(bad)[0])
        raise IntegrationError(
            f"non-finite value for state index {idx} in step starting at t={t}"
        )
    return out


def integrate(derivs, init, cfg: IntegrationConfig, state_names=None, t0=0.0,
              include_t0=False) -> Trajectory:
    """Integrate with repeated RK4 steps at ``cfg.dt`` and sample at
    ``cfg.sample_interval``.

    By default the returned trajectory excludes the initial point, matching
    the training-data convention of sampling at the end of each interval.
    """
    init = np.asarray(init, dtype=float)
    if not np.isfinite(init).all():
        raise ValueError("initial state must be finite")
    if state_names is None:
        state_names = tuple(f"State_{i + 1}" for i in range(init.size))
    stride = cfg.sample_stride
    rows = []
    if include_t0:
        rows.append(init.copy())
    s = init
    for k in range(cfg.n_steps):
        s = rk4_step(derivs, s, t0 + k * cfg.dt, cfg.dt)
        if (k + 1) % stride == 0:
            rows.append(s.copy())
    return Trajectory(t0=t0, sample_interval=cfg.sample_interval,
                      samples=np.array(rows), state_names=state_names,
                      includes_t0=include_t0)


def integrate_dense(derivs, init, cfg: IntegrationConfig, state_names=None,
                    t0=0.0) -> Trajectory:
    """Step-boundary states at every dt, initial point included.

    Link-score analysis needs the dense step sequence, not the coarser
    sampled one.
    """
    dense_cfg = IntegrationConfig(dt=cfg.dt, horizon=cfg.horizon,
                                  sample_interval=cfg.dt)
    return integrate(derivs, init, dense_cfg, state_names=state_names, t0=t0,
                     include_t0=True)
