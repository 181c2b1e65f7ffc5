"""Parameterize the generated model against observed trajectories.

The payoff is the grand sum of squared deviations between simulated and
observed samples across all datasets. Optimizers see it only through
residual evaluations (no analytic gradients), subject to a per-coordinate
box constraint and an evaluation budget.

Two optimizers are registered:

``staged-lm`` (default)
    The all-zero start is a saddle of the payoff: with tanh units on every
    node, perturbing any single weight leaves the output unchanged unless
    its downstream path is already nonzero, so axis-aligned exploration
    (and plain gradient descent) stalls at the best constant fit. The
    staged method sidesteps the saddle with a supervised bootstrap: it
    estimates state derivatives from the observed samples by finite
    differences, fits each target's network to those estimates over every
    subset of its allowed sources, keeps the smallest subset that fits
    about as well as the full set, and then polishes the embedded
    parameters against the true rollout payoff with a Levenberg-Marquardt
    trust-region method whose Jacobians come from finite differences of
    the residuals. First-layer weights of discarded sources stay frozen at
    zero, and a small weight-decay term keeps the networks tame away from
    the training trajectories.

``fd-descent``
    Finite-difference steepest descent with a backtracking step size; the
    documented fallback. It satisfies the convex-problem contract but
    cannot leave the zero-start saddle on the benchmark problem.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .dynsys import ConfigurationError, IntegrationConfig
from .fastsim import CompiledModelShape, compile_shape
from .model import (AdjacencyMask, GeneratedModel, NetworkArchitecture,
                    ScalingSpec, param_count, zero_params)

__all__ = [
    "TrainingConfig",
    "TrainingResult",
    "ResidualProblem",
    "BudgetExhausted",
    "payoff",
    "train",
    "best_so_far_trace",
    "register_optimizer",
    "optimizer_names",
    "run_optimizer",
]

DIVERGENCE_PENALTY = 1e18
DIMENSION_CEILING = 2000

# bootstrap subset selection: a subset is admissible when its supervised
# residual is within NOISE_FLOOR rmse of the derivative estimates, or within
# SLACK_FACTOR of the full-subset residual
_NOISE_FLOOR = 0.05
_SLACK_FACTOR = 20.0
_SUBNET_SEEDS = 2
_SUBNET_ITERS = 80


@dataclass(frozen=True)
class TrainingConfig:
    """Budget, bounds, seed and optimizer selection for a training run."""

    integration: IntegrationConfig = field(default_factory=IntegrationConfig)
    bounds: float = 10.0
    budget: int = 120_000
    seed: int = 0
    optimizer: str = "staged-lm"
    restarts: int = 0
    weight_decay: float = 0.1

    def __post_init__(self):
        if not np.isfinite(self.bounds) or self.bounds <= 0:
            raise ConfigurationError("bounds must be positive and finite")
        if self.budget < 1:
            raise ConfigurationError("budget must be at least 1")
        if self.seed < 0:
            raise ConfigurationError("seed must be non-negative")
        if self.restarts < 0:
            raise ConfigurationError("restarts must be non-negative")
        if self.weight_decay < 0:
            raise ConfigurationError("weight_decay must be non-negative")
        if self.optimizer not in _OPTIMIZERS:
            raise ConfigurationError(
                f"unknown optimizer {self.optimizer!r}; "
                f"registered: {sorted(_OPTIMIZERS)}")


@dataclass(frozen=True)
class TrainingResult:
    """``payoff`` is the pure data payoff of ``params`` (recomputable with
    :func:`payoff`); the trace records the optimized objective, which adds
    the weight-decay term when enabled."""

    params: np.ndarray
    payoff: float
    evaluations_used: int
    converged: bool
    per_state_rmse: tuple
    trace: tuple  # (evaluation index, best payoff) pairs, non-increasing


class BudgetExhausted(Exception):
    """Raised internally when the evaluation budget runs out."""


def _stack_datasets(datasets):
    if not datasets:
        raise ValueError("datasets must be nonempty")
    inits = np.stack([np.asarray(d.initialization, dtype=float)
                      for d in datasets])
    data = np.stack([d.trajectory.samples for d in datasets])
    if inits.shape[1] != data.shape[2]:
        raise ValueError("initialization and trajectory state counts differ")
    return inits, data


def payoff(params, shape, datasets, integration: IntegrationConfig) -> float:
    """Sum of squared simulation errors; 1e18 when a rollout diverges."""
    if isinstance(shape, GeneratedModel):
        shape = compile_shape(shape)
    inits, data = _stack_datasets(datasets)
    r = shape.residuals(np.asarray(params, dtype=float), inits, data,
                        integration.dt, integration.sample_stride)
    return DIVERGENCE_PENALTY if r is None else float(r @ r)


class ResidualProblem:
    """Budget-tracked residual evaluations plus the best-so-far record.

    ``residual_fn(theta)`` returns a flat residual vector or None when the
    evaluation diverged; the payoff is the squared norm (or the penalty).
    """

    def __init__(self, residual_fn, n_params, bounds, budget, seed,
                 penalty=DIVERGENCE_PENALTY):
        self.residual_fn = residual_fn
        self.n_params = int(n_params)
        self.bounds = float(bounds)
        self.budget = int(budget)
        self.seed = int(seed)
        self.penalty = float(penalty)
        self.starts = []
        self.bootstrap = None  # optional () -> (start theta, free indices)
        self.evaluations = 0
        self.best_payoff = np.inf
        self.best_params = None
        self.trace = []

    def evaluate(self, theta):
        """Residual vector (or None) and payoff; counts against the budget."""
        if self.evaluations >= self.budget:
            raise BudgetExhausted
        self.evaluations += 1
        r = self.residual_fn(theta)
        f = self.penalty if r is None else float(r @ r)
        if f < self.best_payoff:
            self.best_payoff = f
            self.best_params = np.asarray(theta, dtype=float).copy()
            self.trace.append((self.evaluations, f))
        return r, f


_OPTIMIZERS = {}


def register_optimizer(name, fn):
    """Register ``fn(problem: ResidualProblem) -> None`` under ``name``."""
    _OPTIMIZERS[name] = fn


def optimizer_names():
    return sorted(_OPTIMIZERS)


def run_optimizer(name, problem: ResidualProblem):
    """Run a registered optimizer; best-so-far state lives on the problem."""
    try:
        _OPTIMIZERS[name](problem)
    except BudgetExhausted:
        pass


def _levenberg_marquardt(evaluate, x0, free, bounds, max_iter,
                         h=1e-5, lam0=1.0, stall_limit=4):
    """Bound-clipped LM on finite-difference Jacobians over ``free`` coords."""
    x = np.asarray(x0, dtype=float).copy()
    r, f = evaluate(x)
    if r is None:
        return x, f
    lam = lam0
    eye = np.eye(free.size)
    tiny = 0
    for _ in range(max_iter):
        jac = np.empty((r.size, free.size))
        for col, j in enumerate(free):
            # probe inward at the upper bound so trial points stay feasible
            sign = -1.0 if x[j] + h > bounds else 1.0
            xp = x.copy()
            xp[j] += sign * h
            rp, _ = evaluate(xp)
            if rp is None:
                xp[j] = x[j] - sign * h
                rp, _ = evaluate(xp)
                rp = r if rp is None else rp
                jac[:, col] = (r - rp) / (sign * h)
            else:
                jac[:, col] = (rp - r) / (sign * h)
        grad = jac.T @ r
        jtj = jac.T @ jac
        accepted = False
        for _ in range(40):
            try:
                step = np.linalg.solve(jtj + lam * eye, -grad)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            xn = x.copy()
            xn[free] = np.clip(x[free] + step, -bounds, bounds)
            rn, fn = evaluate(xn)
            if fn < f:
                rel = (f - fn) / max(f, 1e-300)
                x, r, f = xn, rn, fn
                lam = max(lam * 0.5, 1e-10)
                accepted = True
                tiny = tiny + 1 if rel < 1e-9 else 0
                break
            lam *= 4
        if not accepted or tiny >= stall_limit:
            break
    return x, f


def _staged_lm(problem: ResidualProblem):
    if problem.evaluations >= problem.budget:
        raise BudgetExhausted
    all_free = np.arange(problem.n_params)
    candidates = []
    if problem.bootstrap is not None:
        candidates.append(problem.bootstrap())
        # the zero start (problem.starts[0]) is the saddle the bootstrap
        # exists to avoid; polish only the informative starts
        extra = problem.starts[1:]
    else:
        extra = problem.starts
    candidates.extend((np.asarray(s, dtype=float), all_free) for s in extra)
    for x0, free in candidates:
        _levenberg_marquardt(problem.evaluate, x0, free, problem.bounds,
                             max_iter=150)


def _fd_descent(problem: ResidualProblem):
    h = 1e-6
    for x0 in problem.starts:
        x = np.asarray(x0, dtype=float).copy()
        _, f = problem.evaluate(x)
        step = 1.0
        while True:
            grad = np.empty(problem.n_params)
            for j in range(problem.n_params):
                sign = -1.0 if x[j] + h > problem.bounds else 1.0
                xp = x.copy()
                xp[j] += sign * h
                _, fp = problem.evaluate(xp)
                grad[j] = (fp - f) / (sign * h)
            gnorm = np.linalg.norm(grad)
            if not np.isfinite(gnorm) or gnorm < 1e-12:
                break
            direction = grad / gnorm
            accepted = False
            for _ in range(40):
                xn = np.clip(x - step * direction,
                             -problem.bounds, problem.bounds)
                _, fn = problem.evaluate(xn)
                if fn < f:
                    x, f = xn, fn
                    step *= 2.0
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                break


register_optimizer("staged-lm", _staged_lm)
register_optimizer("fd-descent", _fd_descent)


def _derivative_estimates(datasets):
    """Finite-difference derivative targets from the samples plus the known
    initial point; rows are states, aligned with the derivative columns."""
    states, derivs = [], []
    for ds in datasets:
        traj = ds.trajectory
        rows = traj.samples
        if not traj.includes_t0:
            rows = np.vstack([ds.initialization, rows])
        d = np.gradient(rows, traj.sample_interval, axis=0)
        states.append(rows)
        derivs.append(d)
    return np.vstack(states), np.vstack(derivs)


def _subnet_widths(hidden, n_in):
    return (n_in,) + tuple(hidden) + (1,)


def _subnet_size(widths):
    return sum(a * b + b for a, b in zip(widths[:-1], widths[1:]))


def _subnet_batch(theta, x, widths, mag):
    a = x
    pos = 0
    for n_in, n_out in zip(widths[:-1], widths[1:]):
        w = theta[pos:pos + n_in * n_out].reshape(n_out, n_in)
        pos += n_in * n_out
        b = theta[pos:pos + n_out]
        pos += n_out
        a = np.tanh(a @ w.T + b)
    return a[:, 0] * mag


def _fit_subnet(sub, target, states, y, hidden, mags, bounds, rng):
    """Best supervised fit of one target network restricted to ``sub``."""
    x = states[:, sub] / mags[sub]
    widths = _subnet_widths(hidden, len(sub))
    mag = mags[target]
    best_theta, best_f = None, np.inf
    for _ in range(_SUBNET_SEEDS):
        th0 = 0.3 * rng.standard_normal(_subnet_size(widths))

        def evaluate(theta):
            r = _subnet_batch(theta, x, widths, mag) - y
            return r, float(r @ r)

        th, f = _levenberg_marquardt(evaluate, th0, np.arange(th0.size),
                                     bounds, _SUBNET_ITERS, h=1e-6)
        if f < best_f:
            best_theta, best_f = th, f
    return best_theta, best_f


def _target_block_offsets(arch, mask):
    offsets = []
    pos = 0
    for i in range(arch.n_states):
        offsets.append(pos)
        widths = _subnet_widths(arch.hidden_layers[i],
                                len(mask.sources_for(i)))
        pos += _subnet_size(widths)
    return offsets


def _structure_bootstrap(datasets, arch, mask, scaling, bounds, rng):
    """Subset-select sources per target, pretrain on derivative estimates
    and embed into a full vector; returns the start point and the indices
    left free for polish (first-layer weights of discarded sources stay 0)."""
    states, deriv_targets = _derivative_estimates(datasets)
    m_rows = states.shape[0]
    mags = scaling.magnitudes
    theta = zero_params(arch, mask)
    offsets = _target_block_offsets(arch, mask)
    frozen = np.zeros(theta.size, dtype=bool)
    for i in range(arch.n_states):
        sources = list(mask.sources_for(i))
        if not sources:
            continue
        hidden = arch.hidden_layers[i]
        y = deriv_targets[:, i]
        _, f_full = _fit_subnet(sources, i, states, y, hidden, mags,
                                bounds, rng)
        floor = max(m_rows * _NOISE_FLOOR ** 2, _SLACK_FACTOR * f_full)
        chosen = None
        for size in range(1, len(sources) + 1):
            fits = [(f, sub, th) for sub in combinations(sources, size)
                    for th, f in [_fit_subnet(list(sub), i, states, y,
                                              hidden, mags, bounds, rng)]]
            fits.sort(key=lambda c: c[0])
            if fits[0][0] <= floor:
                chosen = fits[0]
                break
        _, sub, th = chosen
        # embed the narrow first layer into the masked-width slot; the
        # remaining layers share the same flat layout
        k_full = len(sources)
        k_sub = len(sub)
        h1 = hidden[0] if hidden else 1
        block = np.zeros(_subnet_size(_subnet_widths(hidden, k_full)))
        for o in range(h1):
            for c, j in enumerate(sub):
                block[o * k_full + sources.index(j)] = th[o * k_sub + c]
        block[h1 * k_full:] = th[h1 * k_sub:]
        theta[offsets[i]:offsets[i] + block.size] = block
        for j in sources:
            if j not in sub:
                col = sources.index(j)
                rows = offsets[i] + np.arange(h1) * k_full + col
                frozen[rows] = True
    return theta, np.flatnonzero(~frozen)


def train(cfg: TrainingConfig, datasets, arch=None, mask=None, scaling=None,
          extra_starts=()) -> TrainingResult:
    """Fit model parameters to the datasets; deterministic per cfg.seed.

    ``extra_starts`` are additional parameter vectors evaluated up front and
    handed to the optimizer as restart points.
    """
    inits, data = _stack_datasets(datasets)
    n = inits.shape[1]
    if arch is None:
        arch = NetworkArchitecture(n_states=n)
    if mask is None:
        mask = AdjacencyMask.full(n)
    if scaling is None:
        scaling = ScalingSpec.uniform(n)
    n_params = param_count(arch, mask)
    if n_params > DIMENSION_CEILING:
        raise ConfigurationError(
            f"{n_params} parameters exceed the ceiling of {DIMENSION_CEILING}")
    shape = compile_shape(arch, mask, scaling)
    dt = cfg.integration.dt
    stride = cfg.integration.sample_stride
    decay = np.sqrt(cfg.weight_decay)

    def residual_fn(theta):
        r = shape.residuals(theta, inits, data, dt, stride)
        if r is None or cfg.weight_decay == 0:
            return r
        return np.concatenate([r, decay * theta])

    problem = ResidualProblem(residual_fn, n_params, cfg.bounds, cfg.budget,
                              cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    problem.starts = [zero_params(arch, mask)]
    problem.starts += [np.asarray(s, dtype=float) for s in extra_starts]
    problem.starts += [0.3 * rng.standard_normal(n_params)
                       for _ in range(cfg.restarts)]
    problem.bootstrap = lambda: _structure_bootstrap(
        datasets, arch, mask, scaling, cfg.bounds, rng)
    converged = False
    try:
        for start in problem.starts:
            problem.evaluate(start)
        _OPTIMIZERS[cfg.optimizer](problem)
        converged = True
    except BudgetExhausted:
        pass
    best = problem.best_params
    r = shape.residuals(best, inits, data, dt, stride)
    if r is None:
        per_state = tuple(float("inf") for _ in range(n))
        best_payoff = DIVERGENCE_PENALTY
    else:
        sq = (r.reshape(data.shape) ** 2)
        per_state = tuple(float(v) for v in np.sqrt(sq.mean(axis=(0, 1))))
        best_payoff = float(r @ r)
    return TrainingResult(params=best, payoff=best_payoff,
                          evaluations_used=problem.evaluations,
                          converged=converged, per_state_rmse=per_state,
                          trace=tuple(problem.trace))


def best_so_far_trace(result: TrainingResult):
    """(evaluation index, payoff) pairs; non-increasing by construction."""
    return list(result.trace)
