"""Daylight-masked error metrics and cross-model spread diagnostics.

RMSE is always computed over an explicit hour mask (daylight hours only;
night hours would dilute the metric with trivially correct zeros), and
daily/monthly grouping buckets hours by the site's local calendar, not UTC.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import HourlyDataset
from .validation import check_lengths_match


def rmse(pred, actual, mask) -> float:
    """Root-mean-square error over the masked-in hours.

    The divisor is the number of masked-in hours.  An empty mask is a hard
    error: a metric over nothing must never read as a perfect score.
    """
    pred = np.asarray(pred, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    check_lengths_match(pred=pred, actual=actual, mask=mask)
    if not mask.any():
        raise ValueError("rmse over an empty mask is undefined")
    d = pred[mask] - actual[mask]
    return float(np.sqrt(np.mean(d * d)))


def _grouped_rmse(pred, actual, dataset: HourlyDataset, unit: str):
    pred = np.asarray(pred, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    check_lengths_match(pred=pred, actual=actual, timestamps=dataset.timestamps)
    mask = dataset.daylight_mask()
    keys = dataset.local_timestamps().astype(unit)[mask]
    if keys.size == 0:
        raise ValueError("dataset has no daylight hours to group")
    sq = (pred[mask] - actual[mask]) ** 2
    groups, inverse = np.unique(keys, return_inverse=True)
    sums = np.zeros(len(groups))
    counts = np.zeros(len(groups))
    np.add.at(sums, inverse, sq)
    np.add.at(counts, inverse, 1.0)
    return groups, np.sqrt(sums / counts)


def daily_rmse(pred, actual, dataset: HourlyDataset):
    """Per-local-day RMSE over daylight hours: (days, values).

    Days without any daylight hour are omitted rather than zero-filled.
    """
    return _grouped_rmse(pred, actual, dataset, "M8[D]")


def monthly_rmse(pred, actual, dataset: HourlyDataset):
    """Per-local-month RMSE over daylight hours: (months, values)."""
    return _grouped_rmse(pred, actual, dataset, "M8[M]")


def improvement_rate(other: float, ensemble: float) -> float:
    """Percentage improvement of the ensemble over another method.

    (other - ensemble) / other * 100; positive iff the ensemble is better.
    """
    if other <= 0.0:
        raise ValueError(f"baseline RMSE must be positive, got {other}")
    return (other - ensemble) / other * 100.0


def round_half_away(x: float) -> int:
    """Round to the nearest integer, halves away from zero."""
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


@dataclass(frozen=True)
class AggregateStats:
    """Aggregated-row statistics of a month-by-method RMSE table."""

    methods: tuple[str, ...]
    mean_rmse: np.ndarray
    # primary reading: mean over months of the per-month improvement rates
    improvement_mean_of_rates: dict[str, float]
    # secondary reading: one improvement rate of the aggregated means
    improvement_of_aggregates: dict[str, float]


def aggregate_report(
    monthly: np.ndarray,
    methods: tuple[str, ...],
    ensemble: str = "ensemble",
) -> AggregateStats:
    """Aggregate a month-by-method RMSE table.

    The aggregated mean per method is the plain arithmetic mean of its
    monthly values.  Aggregate improvement is reported two ways: the mean
    of the monthly improvement rates (the primary figure) and the rate of
    the aggregated means (secondary; the two differ whenever monthly RMSE
    levels vary).
    """
    monthly = np.asarray(monthly, dtype=np.float64)
    if monthly.ndim != 2 or monthly.shape[1] != len(methods):
        raise ValueError(
            f"monthly table must be (n_months, {len(methods)}), got {monthly.shape}"
        )
    if ensemble not in methods:
        raise ValueError(f"no {ensemble!r} column among methods")
    e = methods.index(ensemble)
    mean_rmse = monthly.mean(axis=0)
    mean_of_rates: dict[str, float] = {}
    of_aggregates: dict[str, float] = {}
    for j, name in enumerate(methods):
        if j == e:
            continue
        rates = [
            improvement_rate(monthly[i, j], monthly[i, e])
            for i in range(monthly.shape[0])
        ]
        mean_of_rates[name] = float(np.mean(rates))
        of_aggregates[name] = improvement_rate(
            float(mean_rmse[j]), float(mean_rmse[e])
        )
    return AggregateStats(
        methods=tuple(methods),
        mean_rmse=mean_rmse,
        improvement_mean_of_rates=mean_of_rates,
        improvement_of_aggregates=of_aggregates,
    )


@dataclass(frozen=True)
class SpreadStats:
    """Per-month cross-model disagreement: spread and pairwise correlation."""

    months: np.ndarray
    mean_std: np.ndarray
    mean_corr: np.ndarray
    skipped_pairs: np.ndarray


def model_spread_stats(values, mask, month_keys) -> SpreadStats:
    """Monthly disagreement statistics across the K forecast columns.

    mean_std: population standard deviation across the K columns per
    masked-in hour, averaged over the month.  mean_corr: Pearson
    correlation per column pair over the month's masked-in hours, averaged
    over all pairs; pairs involving a constant series are skipped and
    counted.  A month where every pair is skipped is an error.
    """
    values = np.asarray(values, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    month_keys = np.asarray(month_keys)
    if values.ndim != 2 or values.shape[1] < 2:
        raise ValueError("need at least two forecast columns")
    check_lengths_match(values=values, mask=mask, month_keys=month_keys)
    k = values.shape[1]
    n_pairs = k * (k - 1) // 2
    months = np.unique(month_keys[mask])
    mean_std = np.empty(len(months))
    mean_corr = np.empty(len(months))
    skipped = np.empty(len(months), dtype=np.int64)
    for i, m in enumerate(months):
        sel = mask & (month_keys == m)
        if sel.sum() < 2:
            raise ValueError(f"month {m} has fewer than 2 masked-in hours")
        block = values[sel]
        mean_std[i] = float(np.mean(np.std(block, axis=1)))
        stds = block.std(axis=0)
        usable = np.nonzero(stds > 0.0)[0]
        ku = len(usable)
        skipped[i] = n_pairs - ku * (ku - 1) // 2
        if ku < 2:
            raise ValueError(
                f"month {m}: fewer than 2 non-constant forecast series,"
                " no correlation pair usable"
            )
        corr = np.corrcoef(block[:, usable], rowvar=False)
        iu = np.triu_indices(ku, 1)
        mean_corr[i] = float(np.mean(corr[iu]))
    return SpreadStats(
        months=months, mean_std=mean_std, mean_corr=mean_corr, skipped_pairs=skipped
    )
