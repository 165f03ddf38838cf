"""Budget-curve rendering from a sweep aggregate CSV.

The input is the evaluator's aggregate file: one row per (regime, track,
budget, policy) with `<metric>_mean` and `<metric>_se` columns. Each figure
plots one metric for one (regime, track) slice: a line per policy over the
budget sweep on a log x-axis, with a shaded band of one standard error
around the mean. Rendering is deterministic for identical input.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

DEFAULT_PANELS = (
    ("f1", "default", "privileged"),
    ("f1", "burst_drift", "privileged"),
    ("utility_per_kb", "default", "privileged"),
    ("regret_write_only", "default", "privileged"),
)


class FigureDataError(ValueError):
    """The CSV cannot back the requested figure (empty, or keys missing)."""


@dataclass(frozen=True)
class PlotSpec:
    metric: str
    regime: str
    track: str
    out_path: str | None = None

    @property
    def filename(self) -> str:
        return f"{self.metric}_vs_budget__{self.regime}__{self.track}.png"

    def resolve_path(self, out_dir: str) -> str:
        return self.out_path if self.out_path else os.path.join(out_dir, self.filename)


def read_aggregate(csv_path: str) -> list:
    """Aggregate CSV rows as dictionaries; empty data is an error."""
    with open(csv_path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise FigureDataError(f"{csv_path}: no aggregate rows to plot")
    return rows


def available_keys(rows: list) -> dict:
    """What the CSV offers: metric names and (regime, track) slices."""
    metrics = sorted(
        {name[: -len("_mean")] for name in rows[0] if name.endswith("_mean")}
    )
    slices = sorted({(row["regime"], row["track"]) for row in rows})
    return {"metrics": metrics, "slices": slices}


def build_series(rows: list, spec: PlotSpec) -> dict:
    """Per-policy (budgets, means, ses) for one figure, budgets ascending.

    Raises FigureDataError when the metric column or the (regime, track)
    slice is absent, listing what is available.
    """
    keys = available_keys(rows)
    mean_col = f"{spec.metric}_mean"
    se_col = f"{spec.metric}_se"
    if mean_col not in rows[0] or se_col not in rows[0]:
        raise FigureDataError(
            f"metric {spec.metric!r} not in aggregate (available: {keys['metrics']})"
        )
    subset = [r for r in rows if r["regime"] == spec.regime and r["track"] == spec.track]
    if not subset:
        raise FigureDataError(
            f"no rows for regime={spec.regime!r} track={spec.track!r} "
            f"(available slices: {keys['slices']})"
        )

    series: dict = {}
    for row in subset:
        series.setdefault(row["policy"], []).append(
            (int(row["budget"]), float(row[mean_col]), float(row[se_col]))
        )
    out = {}
    for policy, points in series.items():
        points.sort()
        budgets = [p[0] for p in points]
        means = [p[1] for p in points]
        ses = [p[2] for p in points]
        out[policy] = (budgets, means, ses)
    return out


def render(series: dict, spec: PlotSpec):
    """Draw the figure: one line per policy, SE band, log-scale budgets."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for policy in sorted(series):
        budgets, means, ses = series[policy]
        ax.plot(budgets, means, marker="o", markersize=3.5, label=policy)
        lower = [m - s for m, s in zip(means, ses)]
        upper = [m + s for m, s in zip(means, ses)]
        ax.fill_between(budgets, lower, upper, alpha=0.2)
    ax.set_xscale("log")
    ax.set_xlabel("budget (bytes)")
    ax.set_ylabel(spec.metric)
    ax.set_title(f"{spec.metric} vs budget ({spec.regime}, {spec.track})")
    ax.grid(True, which="both", alpha=0.25)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def plot_budget_curve(csv_path: str, spec: PlotSpec, out_dir: str = ".") -> str:
    """Render one budget-curve figure and write it as PNG; returns the path.

    Nothing is written when the data is missing: errors are raised before
    any file I/O.
    """
    series = build_series(read_aggregate(csv_path), spec)
    path = spec.resolve_path(out_dir)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fig = render(series, spec)
    try:
        fig.savefig(path, dpi=120)
    finally:
        plt.close(fig)
    return path


def make_default_figures(csv_path: str, out_dir: str) -> list:
    """The four standard panels; returns the written paths."""
    return [
        plot_budget_curve(csv_path, PlotSpec(metric=m, regime=r, track=t), out_dir)
        for m, r, t in DEFAULT_PANELS
    ]
