"""Report assembly: the month-by-method table and its machine-readable CSVs.

The text table mirrors the shape used when comparing combined forecasts
against the fixed best single model and the simple average: one row per
month plus an aggregated row, RMSE at 4 decimals, improvements rendered as
whole percentages (half away from zero).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .metrics import AggregateStats, SpreadStats, round_half_away

BASELINES = ("best_model", "simple_average")


@dataclass
class BacktestArtifacts:
    """Raw hourly series behind an evaluation report, over the scored span."""

    timestamps: np.ndarray
    model_ids: tuple[str, ...]
    base: np.ndarray
    simple_average: np.ndarray
    best_model: np.ndarray
    ensemble: np.ndarray
    actual: np.ndarray
    daylight: np.ndarray


@dataclass
class EvaluationReport:
    """Monthly and daily scores for every method, plus aggregates."""

    months: np.ndarray
    methods: tuple[str, ...]
    monthly: np.ndarray
    daily_dates: np.ndarray
    daily: np.ndarray
    improvements: np.ndarray  # (n_months, len(BASELINES)), percent
    aggregates: AggregateStats
    spread: SpreadStats
    best_model_id: str
    artifacts: BacktestArtifacts | None = None

    def method_column(self, name: str) -> np.ndarray:
        return self.monthly[:, self.methods.index(name)]


def render_report(report: EvaluationReport) -> str:
    """Format the monthly table as fixed-width text."""
    header = (
        f"{'Month':<12}{'Best Model':>12}{'Simple Avg':>12}{'Ensemble':>12}"
        f"{'Impr Best':>12}{'Impr Avg':>12}"
    )
    lines = [
        f"best single model: {report.best_model_id}",
        "",
        header,
        "-" * len(header),
    ]
    best = report.method_column("best_model")
    avg = report.method_column("simple_average")
    ens = report.method_column("ensemble")
    for i, month in enumerate(report.months):
        lines.append(
            f"{str(month):<12}{best[i]:>12.4f}{avg[i]:>12.4f}{ens[i]:>12.4f}"
            f"{round_half_away(report.improvements[i, 0]):>11}%"
            f"{round_half_away(report.improvements[i, 1]):>11}%"
        )
    agg = report.aggregates
    mb = agg.mean_rmse[report.methods.index("best_model")]
    ma = agg.mean_rmse[report.methods.index("simple_average")]
    me = agg.mean_rmse[report.methods.index("ensemble")]
    ib = round_half_away(agg.improvement_mean_of_rates["best_model"])
    ia = round_half_away(agg.improvement_mean_of_rates["simple_average"])
    lines.append("-" * len(header))
    lines.append(
        f"{'Aggregated':<12}{mb:>12.4f}{ma:>12.4f}{me:>12.4f}{ib:>11}%{ia:>11}%"
    )
    return "\n".join(lines) + "\n"


def _csv(header: str, rows) -> str:
    return "\n".join([header, *rows]) + "\n"


def report_csv_texts(report: EvaluationReport) -> dict[str, str]:
    """All report CSVs as {filename: content}, floats at full precision."""
    monthly_rows = [
        f"{month},{method},{repr(float(report.monthly[i, j]))}"
        for i, month in enumerate(report.months)
        for j, method in enumerate(report.methods)
    ]
    improvement_rows = [
        f"{month},{baseline},{repr(float(report.improvements[i, j]))}"
        for i, month in enumerate(report.months)
        for j, baseline in enumerate(BASELINES)
    ]
    daily_rows = [
        f"{date},{method},{repr(float(report.daily[i, j]))}"
        for i, date in enumerate(report.daily_dates)
        for j, method in enumerate(report.methods)
    ]
    spread_rows = [
        f"{month},{repr(float(report.spread.mean_std[i]))},"
        f"{repr(float(report.spread.mean_corr[i]))}"
        for i, month in enumerate(report.spread.months)
    ]
    return {
        "monthly_rmse.csv": _csv("month,method,rmse", monthly_rows),
        "improvements.csv": _csv("month,baseline,percent", improvement_rows),
        "daily_rmse.csv": _csv("date,method,rmse", daily_rows),
        "spread.csv": _csv("month,mean_std,mean_corr", spread_rows),
    }


def write_report_csvs(report: EvaluationReport, out_dir: str) -> list[str]:
    """Write the report CSVs into ``out_dir``; returns the paths written."""
    paths = []
    for name, text in report_csv_texts(report).items():
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        paths.append(path)
    return paths
