"""Link-score analysis: pairwise state-to-derivative influence measures.

For a target derivative z = f(state) observed over one solver step, the link
score of source x is

    |conditional change of z due to x / total change of z| * sign(slope of z vs x)

and is zero whenever the total change of z or the change of x is zero. Scores
for a common target are normalized so their absolute values sum to one at each
step, giving signed percentage contributions. Scores along a pathway multiply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynsys import Trajectory

__all__ = [
    "LinkProfile",
    "Edge",
    "EdgeReport",
    "conditional_delta",
    "link_score",
    "link_profile",
    "compose_path",
    "classify_edges",
]


def conditional_delta(f, s_prev, s_curr, j: int) -> float:
    """Change in f if only component ``j`` had moved from its previous value
    to its current one."""
    s_prev = np.asarray(s_prev, dtype=float)
    s_curr = np.asarray(s_curr, dtype=float)
    if s_prev.shape != s_curr.shape:
        raise ValueError("state vectors must have the same length")
    hybrid = s_prev.copy()
    hybrid[j] = s_curr[j]
    return float(f(hybrid)) - float(f(s_prev))


def link_score(delta_xz: float, delta_z: float, delta_x: float) -> float:
    """Signed score: magnitude |delta_xz / delta_z|, polarity from the sign of
    delta_xz / delta_x; zero when z or x did not change."""
    if delta_z == 0.0 or delta_x == 0.0:
        return 0.0
    magnitude = abs(delta_xz / delta_z)
    polarity = math.copysign(1.0, delta_xz / delta_x) if delta_xz != 0.0 else 0.0
    return magnitude * polarity


@dataclass(frozen=True)
class LinkProfile:
    """Raw and normalized link-score series on the n x n source/target grid.

    ``raw[k, j, i]`` scores source j on target i over the step ending at
    ``times[k]``.
    """

    times: np.ndarray
    state_names: tuple
    raw: np.ndarray         # (n_steps, n, n)
    normalized: np.ndarray  # (n_steps, n, n)

    @property
    def n_states(self) -> int:
        return len(self.state_names)

    def series(self, source: int, target: int):
        return self.raw[:, source, target], self.normalized[:, source, target]


def link_profile(deriv_functions, dense: Trajectory,
                 atol: float = 1e-9) -> LinkProfile:
    """Score every (source, target) pair over every solver step of a dense
    step-boundary trajectory.

    ``deriv_functions[i]`` maps a full state vector to target i's derivative.
    Deltas smaller than ``atol`` count as "did not move": near a fixed point
    the per-step changes are pure floating-point drift, and scoring ratios
    of that noise would manufacture structure out of a stationary system.
    """
    states = dense.samples
    if states.shape[0] < 2:
        raise ValueError("need at least two step-boundary states")
    n = states.shape[1]
    if len(deriv_functions) != n:
        raise ValueError("need one derivative function per state")
    n_steps = states.shape[0] - 1
    raw = np.zeros((n_steps, n, n))
    for k in range(n_steps):
        s_prev = states[k]
        s_curr = states[k + 1]
        for i, f in enumerate(deriv_functions):
            delta_z = float(f(s_curr)) - float(f(s_prev))
            if abs(delta_z) < atol:
                continue
            for j in range(n):
                delta_x = s_curr[j] - s_prev[j]
                if abs(delta_x) < atol:
                    continue
                raw[k, j, i] = link_score(
                    conditional_delta(f, s_prev, s_curr, j), delta_z, delta_x)
    normalized = np.zeros_like(raw)
    denom = np.abs(raw).sum(axis=1, keepdims=True)
    np.divide(raw, denom, out=normalized, where=denom > 0)
    times = dense.times[1:]
    return LinkProfile(times=times, state_names=dense.state_names,
                       raw=raw, normalized=normalized)


def compose_path(scores) -> float:
    """Chain-rule composition: the product of scores along a pathway."""
    scores = list(scores)
    if not scores:
        raise ValueError("pathway must contain at least one score")
    return float(np.prod(scores))


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    present: bool
    polarity: int
    mean_abs_normalized: float
    mean_normalized: float
    sign_consistency: float
    stable: bool


@dataclass(frozen=True)
class EdgeReport:
    state_names: tuple
    threshold: float
    edges: tuple  # of Edge, full n x n grid in (source, target) order

    def edge(self, source: str, target: str) -> Edge:
        for e in self.edges:
            if e.source == source and e.target == target:
                return e
        raise KeyError((source, target))

    def present_edges(self):
        return tuple(e for e in self.edges if e.present)


def classify_edges(profile: LinkProfile, threshold: float = 0.05,
                   stability_cutoff: float = 0.8) -> EdgeReport:
    """Declare an edge wherever the time-mean |normalized score| clears the
    threshold; polarity is the sign of the time-mean normalized score.

    Edges whose per-step polarities flip often (majority-sign fraction below
    the stability cutoff) are flagged unstable.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    names = profile.state_names
    edges = []
    for j, source in enumerate(names):
        for i, target in enumerate(names):
            series = profile.normalized[:, j, i]
            mean_abs = float(np.mean(np.abs(series)))
            mean_signed = float(np.mean(series))
            nonzero = series[series != 0.0]
            if nonzero.size:
                pos = np.count_nonzero(nonzero > 0)
                consistency = max(pos, nonzero.size - pos) / nonzero.size
            else:
                consistency = 1.0
            present = mean_abs >= threshold
            polarity = int(np.sign(mean_signed)) if present else 0
            edges.append(Edge(source=source, target=target, present=present,
                              polarity=polarity, mean_abs_normalized=mean_abs,
                              mean_normalized=mean_signed,
                              sign_consistency=consistency,
                              stable=consistency >= stability_cutoff))
    return EdgeReport(state_names=names, threshold=threshold,
                      edges=tuple(edges))
