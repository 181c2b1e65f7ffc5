"""Configuration parsing and all table/file persistence.

Formats:
  - run config / manifests: flat ``key = value`` lines, ``#`` comments
  - trajectory tables: CSV, header ``time,State_1,...,State_n``
  - link-score tables: long CSV, header ``time,source,target,raw,normalized``
  - edge reports, Monte Carlo tables: CSV with explicit headers

All numbers serialize with Python's shortest round-trip repr, LF endings,
no locale formatting, so reruns produce byte-identical files.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

from .dynsys import IntegrationConfig, Trajectory
from .ground_truth import GroundTruthParams
from .linkscores import Edge, EdgeReport, LinkProfile
from .model import AdjacencyMask, NetworkArchitecture, ScalingSpec
from .training import TrainingConfig, TrainingResult

__all__ = [
    "InputError",
    "RunConfig",
    "write_trajectory",
    "read_trajectory",
    "write_link_table",
    "read_link_table",
    "write_edge_report",
    "write_run_table",
    "write_envelope_table",
    "write_bin_table",
    "write_training_summary",
    "write_manifest",
]


class InputError(ValueError):
    """Malformed configuration or data file."""


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _parse_vector(text, expect=None):
    try:
        values = [float(part) for part in text.split(",")]
    except ValueError:
        raise InputError(f"cannot parse vector {text!r}")
    if expect is not None and len(values) != expect:
        raise InputError(f"expected {expect} components in {text!r}")
    return np.asarray(values)


@dataclass(frozen=True)
class RunConfig:
    """Flat document of every tunable across the pipeline; unknown keys are
    rejected and parse -> emit -> parse is the identity."""

    # ground truth
    gt_t: float = 5.0
    gt_g: float = 75.0
    gt_sigmoid_halfwidth: float = 40.0
    initializations: str = "29,96,4;22,11,78"
    # integration
    dt: float = 0.25
    horizon: float = 100.0
    sample_interval: float = 1.0
    # generated model
    hidden_layers: str = "8,6,4"
    mask: str = "full"
    magnitude: float = 100.0
    # training
    budget: int = 120_000
    bounds: float = 10.0
    seed: int = 0
    optimizer: str = "staged-lm"
    restarts: int = 0
    weight_decay: float = 0.1
    # analysis
    threshold: float = 0.05
    # Monte Carlo
    runs: int = 100
    sum_range: str = "30:150"
    cube_max: float = 150.0

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        known = {f.name: f.type for f in fields(cls)}
        values = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"line {lineno}: expected 'key = value'")
            key, _, raw = line.partition("=")
            key = key.strip()
            raw = raw.strip()
            if key not in known:
                raise InputError(f"line {lineno}: unknown key {key!r}")
            if key in values:
                raise InputError(f"line {lineno}: duplicate key {key!r}")
            kind = known[key]
            try:
                if kind == "float":
                    values[key] = float(raw)
                elif kind == "int":
                    values[key] = int(raw)
                else:
                    values[key] = raw
            except ValueError:
                raise InputError(f"line {lineno}: bad value for {key!r}")
        return cls(**values)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.parse(fh.read())

    def emit(self) -> str:
        lines = [f"{f.name} = {_fmt(getattr(self, f.name))}"
                 for f in fields(self)]
        return "\n".join(lines) + "\n"

    def save(self, path):
        with open(path, "w", newline="\n") as fh:
            fh.write(self.emit())

    def with_overrides(self, **kwargs) -> "RunConfig":
        return replace(self, **kwargs)

    # ---- typed views -------------------------------------------------
    def ground_truth_params(self) -> GroundTruthParams:
        return GroundTruthParams(t=self.gt_t, g=self.gt_g,
                                 sigmoid_halfwidth=self.gt_sigmoid_halfwidth)

    def initialization_list(self):
        return [_parse_vector(part, expect=3)
                for part in self.initializations.split(";")]

    def integration_config(self) -> IntegrationConfig:
        return IntegrationConfig(dt=self.dt, horizon=self.horizon,
                                 sample_interval=self.sample_interval)

    def architecture(self, n_states: int) -> NetworkArchitecture:
        try:
            hidden = tuple(int(w) for w in self.hidden_layers.split(","))
        except ValueError:
            raise InputError(f"cannot parse hidden_layers {self.hidden_layers!r}")
        return NetworkArchitecture(n_states=n_states,
                                   hidden_layers=(hidden,) * n_states)

    def adjacency_mask(self, n_states: int) -> AdjacencyMask:
        if self.mask == "full":
            return AdjacencyMask.full(n_states)
        rows = self.mask.split(";")
        if len(rows) != n_states or any(len(r) != n_states for r in rows) \
                or any(c not in "01" for r in rows for c in r):
            raise InputError(f"mask must be 'full' or {n_states} rows of 0/1")
        return AdjacencyMask(np.array([[c == "1" for c in row]
                                       for row in rows]))

    def scaling(self, n_states: int) -> ScalingSpec:
        return ScalingSpec.uniform(n_states, self.magnitude)

    def training_config(self) -> TrainingConfig:
        return TrainingConfig(integration=self.integration_config(),
                              bounds=self.bounds, budget=self.budget,
                              seed=self.seed, optimizer=self.optimizer,
                              restarts=self.restarts,
                              weight_decay=self.weight_decay)

    def sum_range_pair(self):
        try:
            lo, _, hi = self.sum_range.partition(":")
            return float(lo), float(hi)
        except ValueError:
            raise InputError(f"cannot parse sum_range {self.sum_range!r}")


# ---- trajectory tables ----------------------------------------------


def write_trajectory(traj: Trajectory, path):
    with open(path, "w", newline="\n") as fh:
        fh.write("time," + ",".join(traj.state_names) + "\n")
        for t, row in zip(traj.times, traj.samples):
            fh.write(_fmt(t) + "," + ",".join(_fmt(v) for v in row) + "\n")


def read_trajectory(path) -> Trajectory:
    with open(path) as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    if not lines or not lines[0].startswith("time,"):
        raise InputError(f"{path}: missing 'time,...' header")
    names = tuple(lines[0].split(",")[1:])
    times = []
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != len(names) + 1:
            raise InputError(f"{path}: row has {len(parts)} fields, "
                             f"expected {len(names) + 1}")
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise InputError(f"{path}: non-numeric field in {line!r}")
        times.append(values[0])
        rows.append(values[1:])
    if len(rows) < 1:
        raise InputError(f"{path}: no data rows")
    times = np.asarray(times)
    if len(times) > 1:
        steps = np.diff(times)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
            raise InputError(f"{path}: sample times are not uniform")
        interval = float(steps[0])
    else:
        interval = float(times[0]) if times[0] > 0 else 1.0
    includes_t0 = bool(times[0] == 0.0)
    t0 = float(times[0]) if includes_t0 else float(times[0]) - interval
    return Trajectory(t0=t0, sample_interval=interval,
                      samples=np.asarray(rows), state_names=names,
                      includes_t0=includes_t0)


# ---- link-score tables ----------------------------------------------


def write_link_table(profile: LinkProfile, path):
    names = profile.state_names
    with open(path, "w", newline="\n") as fh:
        fh.write("time,source,target,raw,normalized\n")
        for k, t in enumerate(profile.times):
            for j, source in enumerate(names):
                for i, target in enumerate(names):
                    fh.write(f"{_fmt(t)},{source},{target},"
                             f"{_fmt(profile.raw[k, j, i])},"
                             f"{_fmt(profile.normalized[k, j, i])}\n")


def read_link_table(path) -> LinkProfile:
    with open(path) as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    if not lines or lines[0] != "time,source,target,raw,normalized":
        raise InputError(f"{path}: missing link-table header")
    names = []
    times = []
    cells = {}
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 5:
            raise InputError(f"{path}: malformed row {line!r}")
        try:
            t = float(parts[0])
            raw_v = float(parts[3])
            norm_v = float(parts[4])
        except ValueError:
            raise InputError(f"{path}: non-numeric field in {line!r}")
        source, target = parts[1], parts[2]
        for name in (source, target):
            if name not in names:
                names.append(name)
        if not times or t != times[-1]:
            times.append(t)
        cells[(t, source, target)] = (raw_v, norm_v)
    n = len(names)
    raw = np.zeros((len(times), n, n))
    normalized = np.zeros((len(times), n, n))
    for k, t in enumerate(times):
        for j, source in enumerate(names):
            for i, target in enumerate(names):
                try:
                    raw[k, j, i], normalized[k, j, i] = cells[(t, source, target)]
                except KeyError:
                    raise InputError(
                        f"{path}: missing entry for {source}->{target} at t={t}")
    return LinkProfile(times=np.asarray(times), state_names=tuple(names),
                       raw=raw, normalized=normalized)


# ---- reports --------------------------------------------------------


def write_edge_report(report: EdgeReport, path):
    with open(path, "w", newline="\n") as fh:
        fh.write("source,target,present,polarity,mean_abs_normalized,"
                 "mean_normalized,sign_consistency,stable\n")
        for e in report.edges:
            fh.write(f"{e.source},{e.target},{_fmt(e.present)},{e.polarity},"
                     f"{_fmt(e.mean_abs_normalized)},{_fmt(e.mean_normalized)},"
                     f"{_fmt(e.sign_consistency)},{_fmt(e.stable)}\n")


def write_run_table(report, path):
    with open(path, "w", newline="\n") as fh:
        names = report.state_names
        fh.write(",".join(f"init_{nm}" for nm in names)
                 + ",init_sum,max_abs_error,failed\n")
        for run in report.runs:
            fh.write(",".join(_fmt(v) for v in run.initialization)
                     + f",{_fmt(run.init_sum)},{_fmt(run.max_abs_error)},"
                     f"{_fmt(run.failed)}\n")


def write_envelope_table(report, path):
    with open(path, "w", newline="\n") as fh:
        fh.write("state,time,q2.5,q50,q97.5\n")
        for i, name in enumerate(report.state_names):
            for k, t in enumerate(report.times):
                fh.write(f"{name},{_fmt(t)},"
                         f"{_fmt(report.envelopes[0, k, i])},"
                         f"{_fmt(report.envelopes[1, k, i])},"
                         f"{_fmt(report.envelopes[2, k, i])}\n")


def write_bin_table(rows, path):
    with open(path, "w", newline="\n") as fh:
        fh.write("sum_lo,sum_hi,count,median_max_abs_error,max_max_abs_error\n")
        for row in rows:
            fh.write(f"{_fmt(row['lo'])},{_fmt(row['hi'])},{row['count']},"
                     f"{_fmt(row['median'])},{_fmt(row['max'])}\n")


def write_training_summary(result: TrainingResult, state_names, path):
    with open(path, "w", newline="\n") as fh:
        fh.write(f"payoff = {_fmt(result.payoff)}\n")
        for name, rmse in zip(state_names, result.per_state_rmse):
            fh.write(f"rmse_{name} = {_fmt(rmse)}\n")
        fh.write(f"evaluations_used = {result.evaluations_used}\n")
        fh.write(f"converged = {_fmt(result.converged)}\n")


def write_manifest(config: RunConfig, path, extra=None):
    """Normalized config echo (plus optional provenance keys) so outputs are
    self-describing and reproducible."""
    with open(path, "w", newline="\n") as fh:
        if extra:
            for key, value in extra.items():
                fh.write(f"# {key}: {value}\n")
        fh.write(config.emit())
