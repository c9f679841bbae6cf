"""Command-line entry point.

Subcommands:
  run     one experiment -> result.json + readable summary
  sweep   grid of experiments sharing pretrained teachers -> ranked summary
  ablate  full mode plus the four loss/teacher ablations under shared masks
  report  consolidated accuracy table over a directory of results
  mask    emit a masked-graph bundle (graph + splits) as JSON
  ppr     emit the enhanced adjacency as a weighted edge list

Exit codes: 0 success, 2 configuration error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .config import (OUT_ROOT_ENV, ExperimentConfig, config_to_dict, derive_seed,
                     load_config, resolve_dataset)
from .errors import ConfigError, DuoteachError
from .graphs import MaskSpec, apply_masks, make_splits, save_bundle
from .ppr import build_enhanced_adjacency, write_weighted_edgelist
from .reporting import build_grid, collect_results, render_text, run_summary, write_csv
from .trainer import RunResult, best_by_validation, run_experiment, run_sweep

log = logging.getLogger("duoteach")

ABLATION_MODES = ("full", "no_teacher_fea", "no_teacher_str",
                  "no_distill_log", "no_distill_mid")


def _out_dir(cfg: ExperimentConfig, override: str | None) -> Path:
    base = Path(override) if override else Path(cfg.out_dir)
    root = os.environ.get(OUT_ROOT_ENV)
    if root and not base.is_absolute():
        base = Path(root) / base
    return base


def _write_result(out: Path, result: RunResult) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / "result.json"
    blob = result.to_dict()
    with open(path, "w") as f:
        json.dump(blob, f, indent=2, sort_keys=True)
        f.write("\n")
    with open(out / "result.txt", "w") as f:
        f.write(run_summary(blob))
    return path


def _load(args) -> ExperimentConfig:
    overrides = list(args.set or [])
    if getattr(args, "jobs", None):
        overrides.append(f"jobs={args.jobs}")
    return load_config(args.config, overrides)


def cmd_run(args) -> int:
    cfg = _load(args)
    result = run_experiment(cfg)
    out = _out_dir(cfg, args.out)
    path = _write_result(out, result)
    sys.stdout.write(run_summary(result.to_dict()))
    log.info("wrote %s", path)
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    if args.grid:
        with open(args.grid) as f:
            grid = json.load(f)
    elif args.grid_json:
        grid = json.loads(args.grid_json)
    else:
        raise ConfigError("sweep needs --grid FILE or --grid-json STRING")
    if not isinstance(grid, dict) or not grid:
        raise ConfigError("sweep grid must be a non-empty JSON object")

    results = run_sweep(config_to_dict(cfg), grid)
    out = _out_dir(cfg, args.out) / "sweep"
    summary = []
    for i, (point, result) in enumerate(results):
        _write_result(out / f"point_{i:03d}", result)
        summary.append({
            "point": point,
            "mean_val": float(sum(result.val_accuracies) / len(result.val_accuracies)),
            "mean_test": result.mean,
            "std_test": result.std,
        })
    best_point, best_result = best_by_validation(results)
    ranked = sorted(range(len(summary)), key=lambda i: -summary[i]["mean_val"])
    blob = {"points": summary, "ranked_by_val": ranked,
            "best_point": best_point, "best_mean_test": best_result.mean}
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summary.json", "w") as f:
        json.dump(blob, f, indent=2, sort_keys=True)
        f.write("\n")
    sys.stdout.write(f"best by validation: {best_point} "
                     f"(test {100 * best_result.mean:.2f}±{100 * best_result.std:.2f})\n")
    return 0


def cmd_ablate(args) -> int:
    cfg = _load(args)
    out = _out_dir(cfg, args.out) / "ablate"
    base = config_to_dict(cfg)
    base["fixed_mask"] = True  # identical masks isolate the ablated component
    cache: dict = {}
    summary = {}
    from .config import config_from_dict

    for mode in ABLATION_MODES:
        blob = dict(base)
        blob["mode"] = mode
        variant = config_from_dict(blob)
        variant.validate()
        result = run_experiment(variant, cache)
        _write_result(out / mode, result)
        summary[mode] = {"mean": result.mean, "std": result.std}
        sys.stdout.write(f"{mode:16s} {100 * result.mean:.2f}±{100 * result.std:.2f}\n")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summary.json", "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    return 0


def cmd_report(args) -> int:
    results = collect_results(args.results_dir)
    header, rows = build_grid(results)
    text = render_text(header, rows)
    sys.stdout.write(text)
    if args.csv:
        write_csv(args.csv, header, rows)
        log.info("wrote %s", args.csv)
    return 0


def cmd_mask(args) -> int:
    cfg = _load(args)
    raw = resolve_dataset(cfg)
    splits = make_splits(raw, derive_seed(cfg.seed, "splits"), cfg.n_splits)
    label = "fixed" if cfg.fixed_mask else args.split
    spec = MaskSpec(
        feature_missing_rate=cfg.mask.feature_missing_rate,
        edge_missing_rate=cfg.mask.edge_missing_rate,
        feature_mode=cfg.mask.feature_mode,
        seed=derive_seed(cfg.seed, "mask", label),
    )
    masked = apply_masks(raw, spec)
    save_bundle(args.output, masked, splits, spec)
    log.info("wrote %s", args.output)
    return 0


def cmd_ppr(args) -> int:
    cfg = _load(args)
    raw = resolve_dataset(cfg)
    label = "fixed" if cfg.fixed_mask else args.split
    spec = MaskSpec(
        feature_missing_rate=cfg.mask.feature_missing_rate,
        edge_missing_rate=cfg.mask.edge_missing_rate,
        feature_mode=cfg.mask.feature_mode,
        seed=derive_seed(cfg.seed, "mask", label),
    )
    masked = apply_masks(raw, spec)
    enhanced = build_enhanced_adjacency(masked.adjacency, cfg.ppr)
    write_weighted_edgelist(args.output, enhanced)
    log.info("wrote %s", args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="duoteach",
        description="Dual-teacher distillation for incomplete graphs.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v info, -vv debug")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("-c", "--config", required=True, help="experiment JSON file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override any config field (dotted path, JSON value)")
        p.add_argument("--out", help="output directory (overrides config out_dir)")
        p.add_argument("--jobs", type=int, help="parallel split workers")

    p = sub.add_parser("run", help="run one experiment")
    with_config(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("sweep", help="run a hyperparameter grid")
    with_config(p)
    p.add_argument("-g", "--grid", help="JSON file: {dotted.key: [values...]}")
    p.add_argument("--grid-json", help="inline JSON grid")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("ablate", help="full mode plus the four ablations, shared masks")
    with_config(p)
    p.set_defaults(fn=cmd_ablate)

    p = sub.add_parser("report", help="consolidated table over result files")
    p.add_argument("results_dir")
    p.add_argument("--csv", help="also write the grid as CSV")
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("mask", help="emit a masked-graph bundle as JSON")
    with_config(p)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--split", type=int, default=0, help="mask-seed split index")
    p.set_defaults(fn=cmd_mask)

    p = sub.add_parser("ppr", help="emit the enhanced adjacency as a weighted edge list")
    with_config(p)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--split", type=int, default=0, help="mask-seed split index")
    p.set_defaults(fn=cmd_ppr)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except ConfigError as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    except DuoteachError as e:
        sys.stderr.write(f"error: {e}\n")
        return 1
    except OSError as e:
        sys.stderr.write(f"error: {e}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
