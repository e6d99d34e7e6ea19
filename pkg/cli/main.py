"""
Command-line entry point: ``python -m cli <command> [options]``.

Every command reads the same INI configuration (``--config``) with
``--set section.key=value`` overrides. ``run`` executes the whole cached
pipeline; the other commands run one stage on explicit files.
"""
import argparse
import logging
import sys
from dataclasses import replace
from typing import List, Optional

import pandas as pd

from cli import __version__
from cli.cache import write_frame_lines, write_json
from cli.config import load_config
from cli.gradcheck import CHECKS, TOLERANCE, run_grad_checks
from cli.pipeline import StageError, fit_indicator, rho_series, run_pipeline
from cli.report import report
from cli.sweep import SWEEP_PARAMETERS, sweep
from indicator.model import load_indicator, save_indicator
from policy.config import TRAIN_MODES, configure_mode
from policy.network import load_policy, load_vision_group, save_policy
from policy.train import bc_train, linear_probe
from segment.cpd import segment_dp
from segment.io import change_index_sets, load_segmentations, save_segmentations
from segment.metrics import boundary_precision_recall
from sim.demos import gen_demos
from sim.env import DISTS
from sim.evaluate import RandomAgent, episode_seeds, evaluate
from sim.expert import ExpertAgent
from sim.intervene import CONSISTENT, TRANSITION, intervention_experiment
from trajcore.dataset import load_dataset, save_dataset
from trajcore.errors import (
    ArgumentError, ConfigError, FormatError, InternalError, RefusalError, TrainingError,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CODES = [
    (ConfigError, 2),
    (ArgumentError, 2),
    (FormatError, 3),
    (TrainingError, 4),
    (InternalError, 5),
    (RefusalError, 5),
]


def exit_code(error: BaseException) -> int:
    if isinstance(error, StageError):
        error = error.cause
    for kind, code in EXIT_CODES:
        if isinstance(error, kind):
            return code
    return EXIT_UNEXPECTED


def _segments(path) -> Optional[list]:
    return change_index_sets(load_segmentations(path)) if path else None


def cmd_gen_demos(cfg, args) -> int:
    data = gen_demos(cfg.env_config(), args.n or cfg.get("eval", "n_demos"), args.seed,
                     dist=args.dist, progress=args.progress)
    save_dataset(data, args.out)
    print(f"wrote {len(data)} demonstrations to {args.out}")
    return EXIT_OK


def cmd_segment(cfg, args) -> int:
    data = load_dataset(args.data)
    params = cfg.seg_params()
    results = [segment_dp(traj, params) for traj in data]
    save_segmentations(args.out, results, params)
    tolerance = cfg.get("segment", "tolerance")
    scores = pd.DataFrame([boundary_precision_recall(r.change_indices, traj.boundaries, tolerance)
                           for r, traj in zip(results, data)], columns=["precision", "recall"])
    print(f"segmented {len(results)} trajectories -> {args.out}")
    if any(traj.boundaries for traj in data):
        print(f"boundary precision {scores['precision'].mean():.3f} "
              f"recall {scores['recall'].mean():.3f} (tolerance {tolerance})")
    return EXIT_OK


def cmd_train_indicator(cfg, args) -> int:
    data = load_dataset(args.data)
    model = fit_indicator(cfg, args.seed, data, _segments(args.segments))
    save_indicator(model, args.out, {"seed": args.seed})
    print(f"indicator final loss {model.final_loss:.6f} -> {args.out}")
    return EXIT_OK


def cmd_train_policy(cfg, args) -> int:
    data = load_dataset(args.data)
    model = load_indicator(args.indicator) if args.indicator else None
    rho = rho_series(cfg, args.mode, data, _segments(args.segments), model)
    pcfg, tcfg = configure_mode(args.mode, cfg.policy_config(), cfg.train_config(args.seed))
    result = bc_train(data, pcfg, tcfg, rho)
    save_policy(result.policy, args.out, {"mode": args.mode, "seed": args.seed})
    if args.curve:
        write_frame_lines(args.curve, result.curve)
    print(f"{args.mode} policy final loss {result.curve['train_loss'].iloc[-1]:.6f} -> {args.out}")
    return EXIT_OK


def cmd_evaluate(cfg, args) -> int:
    env = cfg.env_config()
    if args.agent == "policy":
        if not args.policy:
            raise ConfigError("--agent policy needs --policy CHECKPOINT")
        agent = load_policy(args.policy)
    elif args.agent == "expert":
        agent = ExpertAgent(env)
    else:
        agent = RandomAgent(env, args.seed)
    result = evaluate(agent, env, args.n or cfg.get("eval", f"n_{args.dist}"), args.dist,
                      args.seed, progress=args.progress)
    if args.out:
        write_frame_lines(args.out, result.episodes)
    print(f"{args.agent} {args.dist} success rate {result.success_rate:.3f} "
          f"({int(result.episodes['success'].sum())}/{len(result.episodes)})")
    return EXIT_OK


def cmd_intervene(cfg, args) -> int:
    e = cfg.values["eval"]
    result = intervention_experiment(
        load_policy(args.base), load_policy(args.alt), cfg.env_config(),
        window_width=e["window_width"], stride=e["stride"], margin=e["margin"],
        seeds=episode_seeds(args.seed, args.n or e["intervene_rollouts"], args.dist),
        dist=args.dist, progress=args.progress)
    summary = {"baseline_rate": result.baseline_rate,
               "transition_drop": result.drop(TRANSITION),
               "consistent_drop": result.drop(CONSISTENT)}
    if args.out:
        write_frame_lines(args.out, result.pairs)
        write_json(f"{args.out}.summary.json", summary)
    print(f"baseline {summary['baseline_rate']:.3f}  "
          f"transition drop {summary['transition_drop']:.3f}  "
          f"consistent drop {summary['consistent_drop']:.3f}")
    return EXIT_OK


def cmd_probe(cfg, args) -> int:
    env = cfg.env_config()
    vision = load_vision_group(args.vision_from)
    tcfg = replace(cfg.train_config(args.seed), epochs=cfg.get("eval", "probe_epochs"),
                   gap_epochs=0)
    result = linear_probe(vision, load_dataset(args.data), tcfg, cfg.policy_config())
    for dist in DISTS:
        rate = evaluate(result.policy, env, cfg.get("eval", f"n_{dist}"), dist, args.seed).success_rate
        print(f"probe {dist} success rate {rate:.3f}")
    return EXIT_OK


def cmd_grad_check(cfg, args) -> int:
    table = run_grad_checks(args.draws, args.seed, args.targets or None)
    worst = table.groupby("target", sort=False)["rel_error"].max()
    for name, err in worst.items():
        print(f"{name:<10} max rel err {err:.2e} {'ok' if err < TOLERANCE else 'FAIL'}")
    if args.out:
        write_frame_lines(args.out, table)
    return EXIT_OK if bool(table["passed"].all()) else EXIT_UNEXPECTED


def cmd_sweep(cfg, args) -> int:
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    result = sweep(cfg, args.param, values, progress=args.progress)
    print(result.tables["sweep"].to_string(index=False))
    return EXIT_OK


def cmd_report(cfg, args) -> int:
    rep = report(args.dir)
    for name in ("success", "ordering"):
        if name in rep.tables:
            print(rep.tables[name].to_string(index=False))
    for cell in rep.missing:
        print(f"missing cell: {cell}")
    return EXIT_OK


def cmd_run(cfg, args) -> int:
    result = run_pipeline(cfg, dry_run=args.dry_run, progress=args.progress)
    if args.dry_run:
        for stage in result:
            print(stage.describe())
        return EXIT_OK
    if "success" in result.tables:
        print(result.tables["success"].to_string(index=False))
    print(f"report written under {cfg.out_dir / 'report'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="SECTION.KEY=VALUE", help="override one configuration value")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    common.add_argument("-q", "--quiet", action="store_true", help="warnings only")
    common.add_argument("--progress", action="store_true", help="show progress bars")

    parser = argparse.ArgumentParser(prog="python -m cli",
                                     description="Phase-guided gradient adjustment experiments")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(fn=fn)
        return p

    p = add("gen-demos", cmd_gen_demos, "generate expert demonstrations")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dist", choices=DISTS, default="id")

    p = add("segment", cmd_segment, "change-point segmentation of a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)

    p = add("train-indicator", cmd_train_indicator, "train the transition indicator")
    p.add_argument("--data", required=True)
    p.add_argument("--segments", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)

    p = add("train-policy", cmd_train_policy, "behavior-clone one policy")
    p.add_argument("--data", required=True)
    p.add_argument("--mode", choices=TRAIN_MODES, default="concat")
    p.add_argument("--indicator", help="indicator checkpoint (mode gap)")
    p.add_argument("--segments", help="segmentation file (modes smooth and fixed)")
    p.add_argument("--out", required=True)
    p.add_argument("--curve", help="write the loss curve here")
    p.add_argument("--seed", type=int, default=0)

    p = add("evaluate", cmd_evaluate, "closed-loop success rate")
    p.add_argument("--agent", choices=("policy", "expert", "random"), default="policy")
    p.add_argument("--policy")
    p.add_argument("--dist", choices=DISTS, default="id")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = add("intervene", cmd_intervene, "substitute actions inside sliding windows")
    p.add_argument("--base", required=True)
    p.add_argument("--alt", required=True)
    p.add_argument("--dist", choices=DISTS, default="id")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = add("probe", cmd_probe, "linear probe on frozen vision features")
    p.add_argument("--vision-from", required=True, help="policy checkpoint")
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, default=0)

    p = add("grad-check", cmd_grad_check, "finite-difference gradient checks")
    p.add_argument("--draws", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--targets", nargs="*", choices=sorted(CHECKS))
    p.add_argument("--out")

    p = add("sweep", cmd_sweep, "one pipeline run per hyperparameter value")
    p.add_argument("--param", required=True, choices=sorted(SWEEP_PARAMETERS))
    p.add_argument("--values", required=True, help="comma-separated values")

    p = add("report", cmd_report, "consolidate cell outputs into tables")
    p.add_argument("--dir", required=True)

    p = add("run", cmd_run, "run the full cached pipeline")
    p.add_argument("--dry-run", action="store_true", help="print the stage plan only")
    return parser


def setup_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose, args.quiet)
    try:
        cfg = load_config(args.config, args.overrides)
        return args.fn(cfg, args)
    except Exception as e:
        code = exit_code(e)
        if code == EXIT_UNEXPECTED:
            logger.exception("unexpected failure")
        else:
            logger.error("%s", e)
        return code


if __name__ == "__main__":
    sys.exit(main())
