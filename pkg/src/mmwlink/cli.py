"""Command line front end: run or validate campaign configs."""

from __future__ import annotations

import argparse
import dataclasses
import pathlib
import sys

from . import __version__
from .experiments.config import ConfigError, load_campaign, validate_campaign
from .experiments.output import emit_csv, emit_plot_script, write_manifest
from .experiments.runner import run_campaign

_AXIS_LABELS = {
    "snr_sweep": ("SNR [dB]", "per-user rate [bits/s/Hz]"),
    "angle_spread_sweep": ("angle spread [deg]", "per-user rate [bits/s/Hz]"),
    "coverage": ("rate threshold [bits/s/Hz]", "coverage probability"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmwlink",
        description="Monte Carlo link simulator for multi-user mmWave hybrid precoding",
    )
    parser.add_argument("--version", action="version", version=f"mmwlink {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a campaign and write results")
    sim.add_argument("config", help="campaign config JSON file")
    sim.add_argument("--out", default=None, help="output directory (default: config's, else .)")
    sim.add_argument("--seed", type=int, default=None, help="override the master seed")
    sim.add_argument("--workers", type=int, default=1, help="worker process count")
    sim.add_argument("--trials", type=int, default=None, help="override the trial count")

    val = sub.add_parser("validate", help="check a campaign config and exit")
    val.add_argument("config", help="campaign config JSON file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_campaign(args.config)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate":
        print(
            f"{args.config}: valid {cfg.kind} campaign "
            f"({len(cfg.sweep)} points, {cfg.trials} trials, seed {cfg.seed})"
        )
        return 0

    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
        try:
            validate_campaign(cfg)
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return 2

    out_dir = pathlib.Path(args.out or cfg.output or ".")
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        table = run_campaign(cfg, workers=args.workers)
        xlabel, ylabel = _AXIS_LABELS[cfg.kind]
        emit_csv(table, str(out_dir / "results.csv"))
        emit_plot_script(
            table, str(out_dir / "plot.gp"),
            xlabel=xlabel, ylabel=ylabel, title=cfg.kind.replace("_", " "),
        )
        write_manifest(
            cfg, str(out_dir / "manifest.json"),
            workers=args.workers, version=__version__,
        )
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{cfg.kind}: {len(cfg.sweep)} points, {cfg.trials} trials, seed {cfg.seed}")
    print(f"wrote {out_dir / 'results.csv'} ({len(table.rows)} rows), "
          f"{out_dir / 'plot.gp'}, {out_dir / 'manifest.json'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
