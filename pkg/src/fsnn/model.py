"""Generated model: one small tanh network per state variable.

Each target state's derivative is computed by its own feed-forward network.
Inputs are the current values of the allowed source states divided by their
magnitudes; every node, including the single output node, applies tanh; the
output is multiplied back by the target's magnitude. Learned derivatives are
therefore bounded by +/- magnitude.

Parameter layout (the serialization and optimizer contract): targets in state
order; per target, layers from input to output; per layer, all weights in
output-major order (for each output node, its input weights in source order)
followed by that layer's biases.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dynsys import IntegrationConfig, Trajectory, integrate, integrate_dense

__all__ = [
    "NetworkArchitecture",
    "AdjacencyMask",
    "ScalingSpec",
    "GeneratedModel",
    "param_count",
    "zero_params",
    "model_derivs",
    "unpack_params",
    "save_model",
    "load_model",
]

DEFAULT_HIDDEN = (8, 6, 4)


@dataclass(frozen=True)
class NetworkArchitecture:
    """Hidden-layer sizes per target network; activation is tanh throughout."""

    n_states: int
    hidden_layers: tuple = None

    def __post_init__(self):
        if self.n_states < 1:
            raise ValueError("n_states must be positive")
        hl = self.hidden_layers
        if hl is None:
            hl = tuple(DEFAULT_HIDDEN for _ in range(self.n_states))
        hl = tuple(tuple(int(w) for w in layers) for layers in hl)
        if len(hl) != self.n_states:
            raise ValueError("hidden_layers needs one entry per target state")
        for layers in hl:
            if any(w < 1 for w in layers):
                raise ValueError("layer widths must be positive")
        object.__setattr__(self, "hidden_layers", hl)


@dataclass(frozen=True, eq=False)
class AdjacencyMask:
    """allowed[source][target] says whether a source state feeds the target's
    derivative network."""

    allowed: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, AdjacencyMask):
            return NotImplemented
        return np.array_equal(self.allowed, other.allowed)

    def __hash__(self):
        return hash(self.allowed.tobytes())

    def __post_init__(self):
        allowed = np.asarray(self.allowed, dtype=bool)
        if allowed.ndim != 2 or allowed.shape[0] != allowed.shape[1]:
            raise ValueError("mask must be a square matrix")
        allowed = allowed.copy()
        allowed.setflags(write=False)
        object.__setattr__(self, "allowed", allowed)

    @classmethod
    def full(cls, n: int) -> "AdjacencyMask":
        return cls(np.ones((n, n), dtype=bool))

    def sources_for(self, target: int) -> np.ndarray:
        return np.flatnonzero(self.allowed[:, target])


@dataclass(frozen=True, eq=False)
class ScalingSpec:
    """Per-state magnitude used for linear input/output rescaling."""

    magnitudes: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, ScalingSpec):
            return NotImplemented
        return np.array_equal(self.magnitudes, other.magnitudes)

    def __hash__(self):
        return hash(self.magnitudes.tobytes())

    def __post_init__(self):
        mags = np.asarray(self.magnitudes, dtype=float)
        if mags.ndim != 1 or not np.isfinite(mags).all() or (mags <= 0).any():
            raise ValueError("magnitudes must be positive and finite")
        mags = mags.copy()
        mags.setflags(write=False)
        object.__setattr__(self, "magnitudes", mags)

    @classmethod
    def uniform(cls, n: int, magnitude: float = 100.0) -> "ScalingSpec":
        return cls(np.full(n, float(magnitude)))


def _layer_widths(arch: NetworkArchitecture, mask: AdjacencyMask, target: int):
    n_in = len(mask.sources_for(target))
    return (n_in,) + arch.hidden_layers[target] + (1,)


def param_count(arch: NetworkArchitecture, mask: AdjacencyMask) -> int:
    """Flat parameter vector length for the architecture/mask combination."""
    if mask.allowed.shape[0] != arch.n_states:
        raise ValueError("mask size does not match architecture")
    total = 0
    for i in range(arch.n_states):
        widths = _layer_widths(arch, mask, i)
        for a, b in zip(widths[:-1], widths[1:]):
            total += a * b + b
    return total


def zero_params(arch: NetworkArchitecture, mask: AdjacencyMask) -> np.ndarray:
    """All-zero starting point: no causal structure, all derivatives zero."""
    return np.zeros(param_count(arch, mask))


def unpack_params(arch: NetworkArchitecture, mask: AdjacencyMask, params):
    """Split a flat vector into per-target lists of (weights, biases) pairs.

    Inverse of flattening in the documented layout; round-trips bit-exactly.
    """
    params = np.asarray(params, dtype=float)
    if params.shape != (param_count(arch, mask),):
        raise ValueError("parameter vector has the wrong length")
    nets = []
    pos = 0
    for i in range(arch.n_states):
        widths = _layer_widths(arch, mask, i)
        layers = []
        for a, b in zip(widths[:-1], widths[1:]):
            w = params[pos:pos + a * b].reshape(b, a)
            pos += a * b
            bias = params[pos:pos + b]
            pos += b
            layers.append((w, bias))
        nets.append(layers)
    return nets


@dataclass(frozen=True, eq=False)
class GeneratedModel:
    """Immutable bundle of architecture, mask, scaling and parameters."""

    architecture: NetworkArchitecture
    mask: AdjacencyMask
    scaling: ScalingSpec
    params: np.ndarray
    state_names: tuple

    def __eq__(self, other):
        if not isinstance(other, GeneratedModel):
            return NotImplemented
        return (self.architecture == other.architecture
                and self.mask == other.mask
                and self.scaling == other.scaling
                and np.array_equal(self.params, other.params)
                and self.state_names == other.state_names)

    def __hash__(self):
        return hash((self.architecture, self.params.tobytes(),
                     self.state_names))

    def __post_init__(self):
        n = self.architecture.n_states
        if self.mask.allowed.shape[0] != n:
            raise ValueError("mask size does not match architecture")
        if self.scaling.magnitudes.size != n:
            raise ValueError("scaling size does not match architecture")
        if len(self.state_names) != n:
            raise ValueError("state_names size does not match architecture")
        params = np.asarray(self.params, dtype=float).copy()
        if params.shape != (param_count(self.architecture, self.mask),):
            raise ValueError("parameter vector has the wrong length")
        params.setflags(write=False)
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "state_names", tuple(self.state_names))
        for i in range(n):
            if len(self.mask.sources_for(i)) == 0:
                warnings.warn(
                    f"target {self.state_names[i]} has no allowed sources; "
                    "its network degenerates to a constant derivative")

    @classmethod
    def default(cls, state_names=("State_1", "State_2", "State_3"),
                params=None) -> "GeneratedModel":
        n = len(state_names)
        arch = NetworkArchitecture(n_states=n)
        mask = AdjacencyMask.full(n)
        if params is None:
            params = zero_params(arch, mask)
        return cls(architecture=arch, mask=mask, scaling=ScalingSpec.uniform(n),
                   params=params, state_names=state_names)

    def derivs(self, s) -> np.ndarray:
        return model_derivs(self, s)

    def deriv_functions(self):
        """Per-target derivative functions of the full state vector."""
        return tuple(
            (lambda s, i=i: _target_deriv(self, i, np.asarray(s, dtype=float)))
            for i in range(self.architecture.n_states)
        )

    def simulate(self, init, cfg: IntegrationConfig, include_t0=False) -> Trajectory:
        return integrate(lambda s, t: model_derivs(self, s), init, cfg,
                         state_names=self.state_names, include_t0=include_t0)

    def simulate_dense(self, init, cfg: IntegrationConfig) -> Trajectory:
        return integrate_dense(lambda s, t: model_derivs(self, s), init, cfg,
                               state_names=self.state_names)


def _target_deriv(m: GeneratedModel, target: int, s: np.ndarray) -> float:
    nets = unpack_params(m.architecture, m.mask, m.params)
    sources = m.mask.sources_for(target)
    x = s[sources] / m.scaling.magnitudes[sources]
    for w, bias in nets[target]:
        x = np.tanh(w @ x + bias)
    return float(x[0] * m.scaling.magnitudes[target])


def model_derivs(m: GeneratedModel, s) -> np.ndarray:
    """Evaluate all target networks at state ``s``."""
    s = np.asarray(s, dtype=float)
    n = m.architecture.n_states
    if s.shape != (n,):
        raise ValueError(f"state must have length {n}")
    if not np.isfinite(m.params).all():
        raise ValueError("model parameters contain non-finite values")
    nets = unpack_params(m.architecture, m.mask, m.params)
    out = np.empty(n)
    for i in range(n):
        sources = m.mask.sources_for(i)
        x = s[sources] / m.scaling.magnitudes[sources]
        for w, bias in nets[i]:
            x = np.tanh(w @ x + bias)
        out[i] = x[0] * m.scaling.magnitudes[i]
    return out


def save_model(m: GeneratedModel, path):
    """Write the model file: JSON document with shortest-round-trip floats."""
    doc = {
        "state_names": list(m.state_names),
        "hidden_layers": [list(h) for h in m.architecture.hidden_layers],
        "mask": m.mask.allowed.astype(int).tolist(),
        "magnitudes": [float(v) for v in m.scaling.magnitudes],
        "params": [float(v) for v in m.params],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model(path) -> GeneratedModel:
    with open(path) as fh:
        doc = json.load(fh)
    names = tuple(doc["state_names"])
    arch = NetworkArchitecture(
        n_states=len(names),
        hidden_layers=tuple(tuple(h) for h in doc["hidden_layers"]))
    mask = AdjacencyMask(np.asarray(doc["mask"], dtype=bool))
    scaling = ScalingSpec(np.asarray(doc["magnitudes"], dtype=float))
    return GeneratedModel(architecture=arch, mask=mask, scaling=scaling,
                          params=np.asarray(doc["params"], dtype=float),
                          state_names=names)
