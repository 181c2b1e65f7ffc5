"""Command-line entry point.

Subcommands: generate, train, simulate, analyze, evaluate, compare.
Exit codes: 0 success, 2 usage/input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import evaluation, ground_truth, io, linkscores, plots, training
from .dynsys import ConfigurationError, IntegrationError
from .ground_truth import GroundTruthParams, TrainingDataset, make_derivs
from .model import GeneratedModel, load_model, save_model

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fsnn",
        description="Fit neural-derivative ODE models to trajectories and "
                    "analyze their causal structure.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", type=Path, default=None,
                       help="run configuration file (flat key = value)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--no-figures", action="store_true",
                       help="skip PNG rendering")

    p = sub.add_parser("generate", help="simulate the benchmark system and "
                       "write training trajectories")
    add_common(p)
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("train", help="fit a generated model to trajectories")
    add_common(p)
    p.add_argument("--data", type=Path, nargs="+", required=True,
                   help="trajectory tables, one per configured initialization")
    p.add_argument("--out", type=Path, required=True, help="model file")
    p.add_argument("--restart-params", type=Path, default=None,
                   help="model file whose parameters seed an extra restart")

    p = sub.add_parser("simulate", help="integrate a system and write the "
                       "sampled trajectory")
    add_common(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", type=Path, help="generated-model file")
    src.add_argument("--ground-truth", action="store_true",
                     help="use the benchmark system")
    p.add_argument("--init", required=True, help="initial state a,b,c")
    p.add_argument("--dense", action="store_true",
                   help="write every solver step including t0")
    p.add_argument("--out", type=Path, required=True, help="trajectory file")

    p = sub.add_parser("analyze", help="link-score analysis of a system "
                       "along a trajectory")
    add_common(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", type=Path)
    src.add_argument("--ground-truth", action="store_true")
    p.add_argument("--init", required=True, help="initial state a,b,c")
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("evaluate", help="Monte Carlo prediction-error study "
                       "of a trained model")
    add_common(p)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--self-check", action="store_true",
                   help="evaluate the ground truth against itself instead "
                   "of the model (all errors must be 0)")
    p.add_argument("--runs", type=int, default=None,
                   help="override the configured run count")
    p.add_argument("--sum-range", default=None,
                   help="override the configured lo:hi sum constraint")
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("compare", help="structure agreement between two "
                       "link-score tables")
    add_common(p)
    p.add_argument("--gt-links", type=Path, required=True,
                   help="reference link-score table")
    p.add_argument("--gen-links", type=Path, required=True,
                   help="candidate link-score table")
    p.add_argument("--out", type=Path, required=True, help="output file")
    return parser


def _load_config(args) -> io.RunConfig:
    cfg = io.RunConfig.load(args.config) if args.config else io.RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_overrides(seed=args.seed)
    if getattr(args, "runs", None) is not None:
        cfg = cfg.with_overrides(runs=args.runs)
    if getattr(args, "sum_range", None) is not None:
        cfg = cfg.with_overrides(sum_range=args.sum_range)
    return cfg


def _parse_init(text) -> np.ndarray:
    return io._parse_vector(text, expect=3)


def _load_system(args, cfg):
    """Derivative function and per-target functions for --model/--ground-truth."""
    if getattr(args, "ground_truth", False):
        p = cfg.ground_truth_params()
        derivs = make_derivs(p)
        per_target = ground_truth.flow_functions(p)
        names = ground_truth.STATE_NAMES
    else:
        model = load_model(args.model)
        derivs = (lambda s, t: model.derivs(s))
        per_target = model.deriv_functions()
        names = model.state_names
    return derivs, per_target, names


def cmd_generate(args) -> int:
    cfg = _load_config(args)
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    datasets = ground_truth.generate_training_data(
        cfg.initialization_list(), cfg.ground_truth_params(),
        cfg.integration_config())
    for k, ds in enumerate(datasets, 1):
        io.write_trajectory(ds.trajectory, out / f"dataset_{k}.csv")
    io.write_manifest(cfg, out / "manifest.txt",
                      extra={"command": "generate"})
    if not args.no_figures:
        plots.plot_trajectories([ds.trajectory for ds in datasets],
                                out / "trajectories.png",
                                title="Benchmark trajectories")
    return 0


def _datasets_from_files(cfg, paths):
    inits = cfg.initialization_list()
    if len(paths) != len(inits):
        raise io.InputError(
            f"{len(paths)} data files but {len(inits)} configured "
            "initializations; they must correspond one-to-one")
    datasets = []
    for init, path in zip(inits, paths):
        traj = io.read_trajectory(path)
        if traj.includes_t0:
            raise io.InputError(f"{path}: training tables must exclude t0")
        datasets.append(TrainingDataset(initialization=init, trajectory=traj))
    return datasets


def cmd_train(args) -> int:
    cfg = _load_config(args)
    datasets = _datasets_from_files(cfg, args.data)
    n = datasets[0].trajectory.n_states
    arch = cfg.architecture(n)
    mask = cfg.adjacency_mask(n)
    scaling = cfg.scaling(n)
    extra = []
    if args.restart_params is not None:
        extra.append(load_model(args.restart_params).params)
    result = training.train(cfg.training_config(), datasets, arch, mask,
                            scaling, extra_starts=extra)
    model = GeneratedModel(architecture=arch, mask=mask, scaling=scaling,
                           params=result.params,
                           state_names=datasets[0].trajectory.state_names)
    save_model(model, args.out)
    names = model.state_names
    io.write_training_summary(result, names,
                              args.out.with_suffix(".summary.txt"))
    if not args.no_figures:
        sims = [model.simulate(ds.initialization, cfg.integration_config())
                for ds in datasets]
        plots.plot_training_fit(datasets, sims,
                                args.out.with_suffix(".fit.png"))
    return 0


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    init = _parse_init(args.init)
    integration = cfg.integration_config()
    if args.ground_truth:
        p = cfg.ground_truth_params()
        derivs = make_derivs(p)
        names = ground_truth.STATE_NAMES
        if args.dense:
            from .dynsys import integrate_dense
            traj = integrate_dense(derivs, init, integration,
                                   state_names=names)
        else:
            from .dynsys import integrate
            traj = integrate(derivs, init, integration, state_names=names)
    else:
        model = load_model(args.model)
        if args.dense:
            traj = model.simulate_dense(init, integration)
        else:
            traj = model.simulate(init, integration)
    io.write_trajectory(traj, args.out)
    return 0


def cmd_analyze(args) -> int:
    cfg = _load_config(args)
    init = _parse_init(args.init)
    integration = cfg.integration_config()
    derivs, per_target, names = _load_system(args, cfg)
    from .dynsys import integrate_dense
    dense = integrate_dense(derivs, init, integration, state_names=names)
    profile = linkscores.link_profile(per_target, dense)
    report = linkscores.classify_edges(profile, threshold=cfg.threshold)
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    io.write_link_table(profile, out / "links.csv")
    io.write_edge_report(report, out / "edges.csv")
    io.write_manifest(cfg, out / "manifest.txt",
                      extra={"command": "analyze", "init": args.init})
    if not args.no_figures:
        plots.plot_link_profile(profile, out / "link_profile.png")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    integration = cfg.integration_config()
    p = cfg.ground_truth_params()
    truth = make_derivs(p)
    if args.self_check:
        model_derivs = truth
        names = ground_truth.STATE_NAMES
    else:
        model = load_model(args.model)
        model_derivs = (lambda s, t: model.derivs(s))
        names = model.state_names
    lo, hi = cfg.sum_range_pair()
    inits = evaluation.sample_initializations(cfg.runs, cube_max=cfg.cube_max,
                                              sum_range=(lo, hi))
    report = evaluation.monte_carlo(model_derivs, truth, inits, integration,
                                    names)
    bins = evaluation.bin_max_errors(report)
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    io.write_run_table(report, out / "runs.csv")
    io.write_envelope_table(report, out / "envelopes.csv")
    io.write_bin_table(bins, out / "bins.csv")
    io.write_manifest(cfg, out / "manifest.txt",
                      extra={"command": "evaluate"})
    if not args.no_figures:
        plots.plot_error_envelopes(report, out / "envelopes.png")
        plots.plot_error_by_sum(report, bins, out / "error_by_sum.png")
    return 0


def cmd_compare(args) -> int:
    cfg = _load_config(args)
    gt_profile = io.read_link_table(args.gt_links)
    gen_profile = io.read_link_table(args.gen_links)
    gt_report = linkscores.classify_edges(gt_profile, threshold=cfg.threshold)
    gen_report = linkscores.classify_edges(gen_profile,
                                           threshold=cfg.threshold)
    try:
        comparison = evaluation.structure_recovery(gt_report, gen_report)
    except ValueError as exc:
        raise io.InputError(str(exc))
    with open(args.out, "w", newline="\n") as fh:
        fh.write("metric,value\n")
        fh.write(f"precision,{repr(comparison.precision)}\n")
        fh.write(f"recall,{repr(comparison.recall)}\n")
        fh.write(f"polarity_accuracy,{repr(comparison.polarity_accuracy)}\n")
        for source, target, what in comparison.disagreements:
            fh.write(f"disagreement,{source}->{target}: {what}\n")
    return 0


_COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (io.InputError, ConfigurationError, FileNotFoundError,
            evaluation.SamplingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (IntegrationError, np.linalg.LinAlgError, FloatingPointError,
            ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
