"""Three-state benchmark system used to generate training and test data.

The system is a chain of three stocks with a sigmoid-controlled inflow and a
shared time constant. Every derivative is inflow minus outflow:

    dS1 = (g - f(S3) - S1) / t
    dS2 = (S1 - S2) / t
    dS3 = (S2 - S3) / t

which gives four balancing feedback loops (three self-links plus the
S1 -> S2 -> S3 -> S1 cycle) and a damped oscillation toward the equilibrium
where S + f(S) = g.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynsys import IntegrationConfig, Trajectory, integrate

__all__ = [
    "GroundTruthParams",
    "TrainingDataset",
    "BENCHMARK_INITIALIZATIONS",
    "sigmoid_f",
    "sigmoid_f_slope",
    "ground_truth_derivs",
    "make_derivs",
    "flow_functions",
    "equilibrium_state",
    "generate_training_data",
    "oscillation_maxima",
]

STATE_NAMES = ("State_1", "State_2", "State_3")

# The two training initializations for the benchmark experiment.
BENCHMARK_INITIALIZATIONS = (
    np.array([29.0, 96.0, 4.0]),
    np.array([22.0, 11.0, 78.0]),
)


@dataclass(frozen=True)
class GroundTruthParams:
    """Benchmark constants.

    ``sigmoid_halfwidth`` sets the tanh width of the nonlinearity; slope at
    the inflection point is 50 / sigmoid_halfwidth.
    """

    t: float = 5.0
    g: float = 75.0
    sigmoid_halfwidth: float = 40.0

    def __post_init__(self):
        if self.t <= 0 or self.g <= 0 or self.sigmoid_halfwidth <= 0:
            raise ValueError("t, g and sigmoid_halfwidth must all be positive")


@dataclass(frozen=True)
class TrainingDataset:
    """One training trajectory together with the state it started from."""

    initialization: np.ndarray
    trajectory: Trajectory

    def __post_init__(self):
        object.__setattr__(self, "initialization",
                           np.asarray(self.initialization, dtype=float))
        if self.trajectory.state_names != STATE_NAMES:
            raise ValueError("training trajectories use the benchmark state names")


def sigmoid_f(x, p: GroundTruthParams = GroundTruthParams()):
    """Monotone sigmoid from ~0 to ~100 with inflection at (50, 50)."""
    return 50.0 * (1.0 + np.tanh((x - 50.0) / p.sigmoid_halfwidth))


def sigmoid_f_slope(x, p: GroundTruthParams = GroundTruthParams()):
    """Analytic derivative of :func:`sigmoid_f`."""
    u = (x - 50.0) / p.sigmoid_halfwidth
    return 50.0 / p.sigmoid_halfwidth / np.cosh(u) ** 2


def ground_truth_derivs(s, p: GroundTruthParams = GroundTruthParams()):
    """Benchmark derivative vector (dS1, dS2, dS3) at state ``s``."""
    s = np.asarray(s, dtype=float)
    if s.shape != (3,):
        raise ValueError("benchmark state has exactly 3 components")
    d1 = (p.g - sigmoid_f(s[2], p) - s[0]) / p.t
    d2 = (s[0] - s[1]) / p.t
    d3 = (s[1] - s[2]) / p.t
    return np.array([d1, d2, d3])


def make_derivs(p: GroundTruthParams = GroundTruthParams()):
    """Time-independent derivative callable for the integrator."""
    return lambda s, t: ground_truth_derivs(s, p)


def flow_functions(p: GroundTruthParams = GroundTruthParams()):
    """Per-target derivative functions of the full state, for link scoring."""
    return (
        lambda s: (p.g - sigmoid_f(s[2], p) - s[0]) / p.t,
        lambda s: (s[0] - s[1]) / p.t,
        lambda s: (s[1] - s[2]) / p.t,
    )


def equilibrium_state(p: GroundTruthParams = GroundTruthParams(), tol=1e-10):
    """Equilibrium value S* solving S + f(S) = g, by bisection.

    S + f(S) is strictly increasing, so the root is unique.
    """
    lo, hi = -200.0, 300.0
    flo = lo + sigmoid_f(lo, p) - p.g
    fhi = hi + sigmoid_f(hi, p) - p.g
    if flo > 0 or fhi < 0:
        raise ValueError("equilibrium outside the bracketing interval")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid + sigmoid_f(mid, p) - p.g <= 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def oscillation_maxima(series, center):
    """Sample indices of the local maxima of a damped oscillation.

    The leading transient (everything before the series' largest excursion
    from ``center``) is skipped: the approach from the initial condition can
    carry small wiggles that are not part of the cyclic decay.
    """
    series = np.asarray(series, dtype=float)
    start = int(np.argmax(np.abs(series - center)))
    interior = np.arange(max(start, 1), series.size - 1)
    is_max = (series[interior] > series[interior - 1]) \
        & (series[interior] > series[interior + 1])
    return interior[is_max]


def generate_training_data(inits, p: GroundTruthParams = GroundTruthParams(),
                           cfg: IntegrationConfig = IntegrationConfig()):
    """Integrate the benchmark from each initialization and package the
    sampled trajectories (initial point excluded) as training datasets."""
    derivs = make_derivs(p)
    out = []
    for init in inits:
        init = np.asarray(init, dtype=float)
        if init.shape != (3,):
            raise ValueError("each initialization has exactly 3 components")
        traj = integrate(derivs, init, cfg, state_names=STATE_NAMES)
        out.append(TrainingDataset(initialization=init, trajectory=traj))
    return out
