"""Sobol-sequence test initializations and Monte Carlo error reporting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynsys import IntegrationConfig, integrate
from .linkscores import EdgeReport

__all__ = [
    "SobolSampler",
    "SamplingError",
    "sample_initializations",
    "prediction_error",
    "MonteCarloRun",
    "MonteCarloReport",
    "monte_carlo",
    "bin_max_errors",
    "structure_recovery",
    "StructureComparison",
]

# Direction-number table (primitive polynomial degree s, coefficient bits a,
# initial m values) in the standard Joe-Kuo layout, dimensions 2..6.
# Dimension 1 uses m_i = 1 for all i.
_DIRECTION_TABLE = (
    (1, 0, (1,)),
    (2, 1, (1, 3)),
    (3, 1, (1, 3, 1)),
    (3, 2, (1, 1, 1)),
    (4, 1, (1, 1, 3, 3)),
)

_BITS = 32


class SamplingError(RuntimeError):
    """Rejection sampling failed to find enough acceptable points."""


class SobolSampler:
    """Unscrambled Sobol sequence in [0,1)^d, the all-zeros first point
    skipped by default. Deterministic: two samplers always emit the same
    stream."""

    def __init__(self, dimension: int, skip_zero: bool = True):
        if not 1 <= dimension <= len(_DIRECTION_TABLE) + 1:
            raise ValueError(
                f"dimension must be in [1, {len(_DIRECTION_TABLE) + 1}]")
        self.dimension = dimension
        self._v = np.empty((dimension, _BITS), dtype=np.uint64)
        self._v[0] = [1 << (_BITS - k - 1) for k in range(_BITS)]
        for d in range(1, dimension):
            s, a, m_init = _DIRECTION_TABLE[d - 1]
            m = list(m_init)
            for k in range(s, _BITS):
                new = m[k - s] ^ (m[k - s] << s)
                for q in range(1, s):
                    if (a >> (s - 1 - q)) & 1:
                        new ^= m[k - q] << q
                m.append(new)
            self._v[d] = [m[k] << (_BITS - k - 1) for k in range(_BITS)]
        self._x = np.zeros(dimension, dtype=np.uint64)
        self.index = 0
        if skip_zero:
            self.next_point()

    def next_point(self) -> np.ndarray:
        point = self._x / float(1 << _BITS)
        # gray-code update: flip the direction of the lowest zero bit of index
        c = 0
        i = self.index
        while i & 1:
            i >>= 1
            c += 1
        self._x = self._x ^ self._v[:, c]
        self.index += 1
        return point


def sample_initializations(n: int, cube_max: float = 150.0,
                           sum_range=(30.0, 150.0), dimension: int = 3,
                           max_draws: int = 10 ** 6):
    """Sobol points scaled to [0, cube_max]^d, kept only when the coordinate
    sum lies in ``sum_range``; draws until ``n`` are accepted."""
    lo, hi = float(sum_range[0]), float(sum_range[1])
    if not 0.0 <= lo < hi <= dimension * cube_max:
        raise ValueError("sum_range must satisfy 0 <= lo < hi <= d * cube_max")
    sampler = SobolSampler(dimension)
    accepted = []
    draws = 0
    while len(accepted) < n:
        if draws >= max_draws:
            raise SamplingError(
                f"accepted only {len(accepted)}/{n} points in {draws} draws")
        point = cube_max * sampler.next_point()
        draws += 1
        if lo <= point.sum() <= hi:
            accepted.append(point)
    return [np.asarray(p) for p in accepted]


def prediction_error(model_derivs_fn, truth_derivs_fn, init,
                     cfg: IntegrationConfig):
    """Per-time, per-state difference between the model's trajectory and the
    truth's, integrated identically from the same initialization.

    Returns (errors, failed); on integration failure errors is None.
    """
    try:
        model_traj = integrate(model_derivs_fn, init, cfg)
        truth_traj = integrate(truth_derivs_fn, init, cfg)
    except (RuntimeError, ValueError, FloatingPointError):
        return None, True
    return model_traj.samples - truth_traj.samples, False


@dataclass(frozen=True)
class MonteCarloRun:
    initialization: np.ndarray
    errors: np.ndarray  # (n_times, n_states), zeros when failed
    max_abs_error: float
    failed: bool

    @property
    def init_sum(self) -> float:
        return float(np.sum(self.initialization))


@dataclass(frozen=True)
class MonteCarloReport:
    runs: tuple
    times: np.ndarray
    state_names: tuple
    envelopes: np.ndarray  # (3, n_times, n_states): 2.5%, 50%, 97.5%

    @property
    def max_abs_errors(self) -> np.ndarray:
        return np.array([r.max_abs_error for r in self.runs])

    @property
    def init_sums(self) -> np.ndarray:
        return np.array([r.init_sum for r in self.runs])


FAILURE_PENALTY = 1e18


def monte_carlo(model_derivs_fn, truth_derivs_fn, inits,
                cfg: IntegrationConfig, state_names) -> MonteCarloReport:
    """Run prediction_error for every initialization and aggregate cross-run
    quantile envelopes (2.5 / 50 / 97.5 percent) per state and time."""
    if len(inits) == 0:
        raise ValueError("need at least one initialization")
    runs = []
    for init in inits:
        errors, failed = prediction_error(model_derivs_fn, truth_derivs_fn,
                                          init, cfg)
        if failed:
            n_rows = int(round(cfg.horizon / cfg.sample_interval))
            errors = np.zeros((n_rows, len(state_names)))
            max_err = FAILURE_PENALTY
        else:
            max_err = float(np.max(np.abs(errors)))
        runs.append(MonteCarloRun(initialization=np.asarray(init, dtype=float),
                                  errors=errors, max_abs_error=max_err,
                                  failed=failed))
    stack = np.stack([r.errors for r in runs if not r.failed])
    envelopes = np.quantile(stack, [0.025, 0.5, 0.975], axis=0)
    times = cfg.sample_interval * (1 + np.arange(stack.shape[1]))
    return MonteCarloReport(runs=tuple(runs), times=times,
                            state_names=tuple(state_names),
                            envelopes=envelopes)


def bin_max_errors(report: MonteCarloReport, bin_width: float = 30.0,
                   upper: float = 300.0):
    """Group runs by initial-state sum into fixed-width bins over (0, upper]
    and report per-bin count, median and max of max_abs_error."""
    edges = np.arange(0.0, upper + bin_width, bin_width)
    sums = report.init_sums
    errs = report.max_abs_errors
    rows = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mask = (sums > lo) & (sums <= hi)
        if mask.any():
            rows.append({"lo": lo, "hi": hi, "count": int(mask.sum()),
                         "median": float(np.median(errs[mask])),
                         "max": float(np.max(errs[mask]))})
    return rows


@dataclass(frozen=True)
class StructureComparison:
    precision: float
    recall: float
    polarity_accuracy: float
    disagreements: tuple  # (source, target, description)


def structure_recovery(gt_report: EdgeReport,
                       gen_report: EdgeReport) -> StructureComparison:
    """Edge precision/recall of the generated model's report against the
    ground truth's, plus polarity agreement on shared edges."""
    if gt_report.state_names != gen_report.state_names:
        raise ValueError("reports cover different state sets")
    gt_set = {(e.source, e.target): e.polarity
              for e in gt_report.present_edges()}
    gen_set = {(e.source, e.target): e.polarity
               for e in gen_report.present_edges()}
    shared = set(gt_set) & set(gen_set)
    disagreements = []
    for key in sorted(set(gt_set) - set(gen_set)):
        disagreements.append((*key, "missing in generated"))
    for key in sorted(set(gen_set) - set(gt_set)):
        disagreements.append((*key, "extra in generated"))
    pol_match = sum(1 for key in shared if gt_set[key] == gen_set[key])
    for key in sorted(shared):
        if gt_set[key] != gen_set[key]:
            disagreements.append((*key, "polarity mismatch"))
    precision = len(shared) / len(gen_set) if gen_set else 1.0
    recall = len(shared) / len(gt_set) if gt_set else 1.0
    polarity_accuracy = pol_match / len(shared) if shared else 1.0
    return StructureComparison(precision=precision, recall=recall,
                               polarity_accuracy=polarity_accuracy,
                               disagreements=tuple(disagreements))
