"""Command-line entry point: ``nsdlab --preset fig2 --out results/``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .core import ConstantDelay
from .plot import write_svg
from .presets import UnknownPreset, expand_preset, load_config, preset_names
from .runner import ExperimentConfig, default_threads, run_experiment, write_raw_csv, write_results_csv

log = logging.getLogger("nsdlab")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nsdlab", description="Monte-Carlo regret experiments for NSD bandits.")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", metavar="NAME", help="one of: " + ", ".join(preset_names()))
    src.add_argument("--config", metavar="FILE", help="experiment or instance JSON")
    p.add_argument("--out", default="results", help="output directory (default: results)")
    p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    p.add_argument("--reps", type=int, default=None, help="override the number of replications")
    p.add_argument("--delta", type=float, default=None, help="confidence parameter (default 0.05)")
    p.add_argument("--threads", type=int, default=None, help="worker processes (default $NSD_THREADS or 1)")
    p.add_argument("--plot", action="store_true", help="write plot.svg")
    p.add_argument("--log-y", action="store_true", help="log-scale y axis in the plot")
    p.add_argument("--dump-trajectories", action="store_true", help="write per-replication trajectory CSVs")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def run_header(cfg: ExperimentConfig) -> str:
    inst = cfg.instance
    delay = inst.delay_model
    delay_txt = f"D={delay.delay}" if isinstance(delay, ConstantDelay) else f"geometric(p={delay.p})"
    lines = [
        f"experiment: {cfg.name}",
        f"description: {cfg.description}" if cfg.description else None,
        f"K={inst.num_actions} S={inst.num_signals} T={inst.horizon} {delay_txt}",
        f"theta={inst.theta.tolist()}",
        f"P(segment 1)={inst.segments[0].P.tolist()}",
        f"mixture: alpha={inst.mixture.alpha} mu={inst.mixture.mu.tolist()}" if inst.mixture is not None else "mixture: none",
        f"change_rounds={list(cfg.change_rounds) or [s.start for s in inst.segments[1:]]}"
        + (f" shifts={list(cfg.shifts)}" if cfg.shifts is not None else " shifts=random"),
        f"reps={cfg.reps} seed={cfg.seed} delta={cfg.delta}",
        "policies: " + ", ".join(
            f"{s.key}(W={s.window if s.window is not None else 'T'}, delta={s.delta if s.delta is not None else cfg.delta})"
            for s in cfg.policies),
        "ci: mean +/- 1.96 sd / sqrt(reps)",
    ]
    return "\n".join(x for x in lines if x is not None) + "\n"


def _run(cfg: ExperimentConfig, out: Path, args) -> None:
    out.mkdir(parents=True, exist_ok=True)
    header = run_header(cfg)
    (out / "run-header.txt").write_text(header)
    print(header, end="")
    dump = out / "trajectories" if args.dump_trajectories else None
    threads = args.threads if args.threads is not None else default_threads()
    result = run_experiment(cfg, threads=threads, dump_dir=dump)
    write_results_csv(result, out / "results.csv")
    write_raw_csv(result, out / "replications.csv")
    if args.plot:
        write_svg(result, out / "plot.svg", title=cfg.name, log_y=args.log_y or cfg.log_y)
    width = max(len(k) for k in result.labels)
    print(f"{'policy':<{width}}  final_mean  ci95")
    for k in result.labels:
        print(f"{k:<{width}}  {result.final(k):10.2f}  {result.ci_halfwidth(k)[-1]:.2f}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.preset:
            configs = expand_preset(args.preset)
        else:
            configs = [load_config(args.config)]
    except UnknownPreset as e:
        parser.print_usage(sys.stderr)
        print(f"nsdlab: error: {e}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as e:
        print(f"nsdlab: error: cannot load config {args.config}: {e}", file=sys.stderr)
        return 1
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.reps is not None:
        if args.reps < 1:
            parser.print_usage(sys.stderr)
            print("nsdlab: error: --reps must be >= 1", file=sys.stderr)
            return 2
        overrides["reps"] = args.reps
    if args.delta is not None:
        overrides["delta"] = args.delta
    configs = [dataclasses.replace(c, **overrides) for c in configs]
    out = Path(args.out)
    try:
        for cfg in configs:
            _run(cfg, out / cfg.name if len(configs) > 1 else out, args)
    except OSError as e:
        print(f"nsdlab: error: cannot write output under {out}: {e}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError) as e:
        print(f"nsdlab: error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
