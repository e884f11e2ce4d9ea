"""Render benchmark CSV output as log-log scalability figures."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .core import ModelError  # noqa: E402


def read_bench_csv(path: str | Path) -> dict[str, list[tuple[int, float, float, float]]]:
    """Parse a bench CSV into {dimension: [(size, median, min, max), ...]}."""
    series: dict[str, list[tuple[int, float, float, float]]] = {}
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        expected = ["dimension", "size", "median_ms", "min_ms", "max_ms"]
        if reader.fieldnames != expected:
            raise ModelError(f"unexpected CSV header {reader.fieldnames}, "
                             f"expected {expected}")
        for record in reader:
            median = float(record["median_ms"])
            if math.isnan(median):
                continue
            series.setdefault(record["dimension"], []).append(
                (int(record["size"]), median,
                 float(record["min_ms"]), float(record["max_ms"])))
    for points in series.values():
        points.sort()
    return series


def plot_bench_csv(csv_path: str | Path, out_path: str | Path | None = None) -> Path:
    """Plot median execution time over model size; returns the figure path."""
    csv_path = Path(csv_path)
    out_path = Path(out_path) if out_path else csv_path.with_suffix(".png")
    series = read_bench_csv(csv_path)
    if not series:
        raise ModelError(f"no plottable rows in {csv_path}")

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for dimension, points in sorted(series.items()):
        sizes = [p[0] for p in points]
        medians = [p[1] for p in points]
        lows = [p[2] for p in points]
        highs = [p[3] for p in points]
        ax.plot(sizes, medians, marker="o", label=dimension)
        ax.fill_between(sizes, lows, highs, alpha=0.2)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("scaled model elements")
    ax.set_ylabel("median execution time [ms]")
    ax.grid(True, which="both", linewidth=0.3, alpha=0.5)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
