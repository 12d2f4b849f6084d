"""Command-line interface.

Subcommands: ``prepare``, ``analyze``, ``ablate``, ``evaluate``. Exit codes:
0 on success, 1 on data errors, 2 on usage errors. Fixed seeds make
``analyze`` and ``ablate`` byte-reproducible for any ``--jobs`` value.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .ablation import VALID_OPS, AblationSpec, apply_ablations
from .dataset import PrepareConfig
from .errors import ConfigError, SegComplexityError
from .metrics import METRIC_NAMES
from .report import (
    FACTOR_GROUPS,
    AnalyzeConfig,
    analyze_dataset,
    evaluate_dataset,
    prepare_dataset,
    write_factor_csv,
    write_json,
)
from .textures import default_bank, load_bank

_METRIC_TOKENS = {
    "ap": ("ap",),
    "pq": ("pq",),
    "pr": ("precision", "recall"),
    "ari": ("ari",),
    "fgari": ("fg_ari",),
    "arp-arr": ("arp", "arr"),
    "mbo": ("mbo",),
    "bg-recall": ("bg_recall",),
}


def _fail_data(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


@click.group()
def main() -> None:
    """Complexity analysis, ablation, and scoring for segmentation datasets."""


@main.command()
@click.argument("raw_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--crop", type=int, default=None, help="Center-crop size (default: largest square).")
@click.option("--target", type=int, default=128, show_default=True)
@click.option("--min-objects", type=int, default=2, show_default=True)
@click.option("--max-objects", type=int, default=6, show_default=True)
@click.option("--area-bounds", default=None, help="LO,HI area fractions, e.g. 0.007,0.2.")
@click.option("--blank-background", is_flag=True, help="Zero out background pixels.")
@click.option("--train-fraction", type=float, default=10000 / 12000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True,
              help="Accepted for interface uniformity; preparation is hash-deterministic.")
@click.option("--jobs", type=int, default=1, show_default=True)
def prepare(raw_dir, out, crop, target, min_objects, max_objects, area_bounds,
            blank_background, train_fraction, seed, jobs):
    """Crop/resize/filter a raw corpus into train/test datasets."""
    bounds = None
    if area_bounds:
        try:
            lo, hi = (float(part) for part in area_bounds.split(","))
        except ValueError:
            raise click.UsageError("--area-bounds expects LO,HI")
        bounds = (lo, hi)
    try:
        cfg = PrepareConfig(
            crop=crop,
            target_size=target,
            min_objects=min_objects,
            max_objects=max_objects,
            area_bounds=bounds,
            blank_background=blank_background,
        )
        stats = prepare_dataset(Path(raw_dir), Path(out), cfg,
                                train_fraction=train_fraction, jobs=jobs)
    except ConfigError as exc:
        raise click.UsageError(str(exc))
    except (SegComplexityError, OSError) as exc:
        _fail_data(exc)
    click.echo(
        f"kept {stats['kept']} scenes (dropped {stats['dropped']}): "
        + ", ".join(f"{k}={v}" for k, v in stats["splits"].items())
    )


@main.command()
@click.argument("dataset", type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--factors", default="object,scene,background", show_default=True,
              help="Comma list of object,scene,background,candidates or 'all'.")
@click.option("--bins", type=int, default=50, show_default=True)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None,
              help="Also write a flat per-sample CSV.")
@click.option("--hungarian-budget", type=int, default=2048, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
def analyze(dataset, out, factors, bins, csv_path, hungarian_budget, seed, jobs):
    """Compute complexity-factor distributions for a dataset."""
    if factors == "all":
        groups = FACTOR_GROUPS
    else:
        groups = tuple(tok.strip() for tok in factors.split(",") if tok.strip())
        unknown = [g for g in groups if g not in FACTOR_GROUPS]
        if unknown:
            raise click.UsageError(f"unknown factor groups: {', '.join(unknown)}")
    try:
        config = AnalyzeConfig(
            factors=groups, seed=seed, bins=bins, hungarian_budget=hungarian_budget
        )
        report = analyze_dataset(Path(dataset), config, jobs=jobs)
    except (SegComplexityError, OSError) as exc:
        _fail_data(exc)
    write_json(report, Path(out))
    if csv_path:
        write_factor_csv(report, Path(csv_path))
    click.echo(f"analyzed {len(report['scenes'])} scenes -> {out}")


@main.command()
@click.argument("dataset", type=click.Path(exists=True, file_okay=False))
@click.option("--ops", required=True, help=f"Comma list from {','.join(VALID_OPS)}.")
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--textures", type=click.Path(exists=True, file_okay=False), default=None,
              help="Directory of PNG tiles (default: built-in procedural bank).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
def ablate(dataset, ops, out, textures, seed, jobs):
    """Write a simplified copy of a dataset with the given ops applied."""
    op_list = tuple(tok.strip() for tok in ops.split(",") if tok.strip())
    unknown = [op for op in op_list if op not in VALID_OPS]
    if unknown:
        raise click.UsageError(f"unknown ablation ops: {', '.join(unknown)}")
    try:
        bank = None
        if "T" in op_list or "bgT" in op_list:
            bank = load_bank(Path(textures)) if textures else default_bank()
        spec = AblationSpec(ops=op_list, seed=seed, bank=bank)
        manifest = apply_ablations(Path(dataset), spec, Path(out), jobs=jobs)
    except ConfigError as exc:
        raise click.UsageError(str(exc))
    except (SegComplexityError, OSError) as exc:
        _fail_data(exc)
    click.echo(f"ablated {len(manifest.ids)} scenes -> {out}")


@main.command()
@click.argument("dataset", type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--pred", type=click.Path(exists=True, file_okay=False), default=None,
              help="Prediction root (default: DATASET/pred).")
@click.option("--metrics", "metric_spec", default="all", show_default=True,
              help=f"Comma list from {','.join(_METRIC_TOKENS)} or 'all'.")
@click.option("--iou-thresh", type=float, default=0.5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True,
              help="Accepted for interface uniformity; evaluation is deterministic.")
@click.option("--jobs", type=int, default=1, show_default=True)
def evaluate(dataset, out, pred, metric_spec, iou_thresh, seed, jobs):
    """Score predicted segmentations against a dataset's ground truth."""
    if metric_spec == "all":
        names = METRIC_NAMES
    else:
        names = []
        for tok in metric_spec.split(","):
            tok = tok.strip()
            if tok not in _METRIC_TOKENS:
                raise click.UsageError(f"unknown metric token: {tok}")
            names.extend(_METRIC_TOKENS[tok])
        names = tuple(dict.fromkeys(names))
    try:
        report = evaluate_dataset(
            Path(dataset),
            metric_names=names,
            iou_thresh=iou_thresh,
            jobs=jobs,
            pred_root=Path(pred) if pred else None,
        )
    except (SegComplexityError, OSError) as exc:
        _fail_data(exc)
    write_json(report, Path(out))
    means = {
        name: round(entry["mean"], 4)
        for name, entry in report["aggregate"].items()
        if "mean" in entry
    }
    click.echo(f"evaluated {len(report['scenes'])} scenes -> {out} {means}")


if __name__ == "__main__":
    main()
