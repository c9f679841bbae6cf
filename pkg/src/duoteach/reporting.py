"""Consolidated accuracy tables over directories of result files.

The grid has one row per method (backbone/mode pair), one column per dataset
plus a trailing average, and improvement rows comparing each backbone's
distilled run against its undistilled baseline.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ConfigError

RESULT_FILENAME = "result.json"


def collect_results(directory) -> list[dict]:
    root = Path(directory)
    if not root.is_dir():
        raise ConfigError(f"results directory not found: {directory}")
    found = sorted(root.rglob(RESULT_FILENAME))
    results = []
    for path in found:
        with open(path) as f:
            blob = json.load(f)
        if "accuracies" in blob and "config" in blob:
            results.append(blob)
    if not results:
        raise ConfigError(f"no {RESULT_FILENAME} files under {directory}")
    return results


def _method_of(blob: dict) -> str:
    cfg = blob["config"]
    return f"{cfg.get('backbone', '?')}/{cfg.get('mode', '?')}"


def _dataset_of(blob: dict) -> str:
    return blob["config"].get("dataset", "?")


def _pct(x: float) -> float:
    return 100.0 * x


def build_grid(results: list[dict]) -> tuple[list[str], list[list[str]]]:
    """Returns (header, rows) of formatted strings; accuracy cells are
    percent `mean±std`, improvement cells are signed percent deltas."""
    cells: dict[tuple[str, str], tuple[float, float]] = {}
    for blob in results:
        key = (_method_of(blob), _dataset_of(blob))
        cells[key] = (blob["mean"], blob["std"])
    methods = sorted({m for m, _ in cells})
    datasets = sorted({d for _, d in cells})
    header = ["method", *datasets, "avg"]

    rows = []
    for method in methods:
        row = [method]
        means = []
        for ds in datasets:
            got = cells.get((method, ds))
            if got is None:
                row.append("-")
            else:
                row.append(f"{_pct(got[0]):.2f}±{_pct(got[1]):.2f}")
                means.append(got[0])
        row.append(f"{_pct(np.mean(means)):.2f}" if means else "-")
        rows.append(row)

    backbones = sorted({m.split("/")[0] for m in methods})
    for backbone in backbones:
        base = f"{backbone}/student_only"
        full = f"{backbone}/full"
        deltas = []
        row = [f"+impv ({backbone})"]
        usable = False
        for ds in datasets:
            b = cells.get((base, ds))
            f = cells.get((full, ds))
            if b is None or f is None:
                row.append("-")
            else:
                delta = _pct(f[0] - b[0])
                row.append(f"{delta:+.2f}")
                deltas.append(delta)
                usable = True
        row.append(f"{np.mean(deltas):+.2f}" if deltas else "-")
        if usable:
            rows.append(row)
    return header, rows


def render_text(header: list[str], rows: list[list[str]]) -> str:
    table = [header, *rows]
    widths = [max(len(r[c]) for r in table) for c in range(len(header))]
    lines = []
    for i, row in enumerate(table):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def write_csv(path, header: list[str], rows: list[list[str]]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def run_summary(blob: dict) -> str:
    """One-run human-readable block: config line, per-split list, aggregate."""
    cfg = blob["config"]
    accs = ", ".join(f"{_pct(a):.2f}" for a in blob["accuracies"])
    lines = [
        f"dataset={cfg.get('dataset')} backbone={cfg.get('backbone')} "
        f"mode={cfg.get('mode')} seed={cfg.get('seed')}",
        f"splits ({len(blob['accuracies'])}): {accs}",
        f"test accuracy: {_pct(blob['mean']):.2f} ± {_pct(blob['std']):.2f}",
    ]
    return "\n".join(lines) + "\n"
