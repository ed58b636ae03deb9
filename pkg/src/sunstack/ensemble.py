"""Forecast combination: base family runs, the forest combiner, backtesting.

The rolling protocol keeps an archive of genuinely out-of-sample base
forecasts: for every month, the 24 SVRs are retrained on all data strictly
before that month and forecast it; the combiner for an evaluated month then
trains on archive rows only.  The first dataset month bootstraps the base
models and the second seeds the archive, so evaluation can start at the
third month at the earliest.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dataset import HourlyDataset
from .features import build_combiner_matrix
from .forest import RandomForestRegressor
from .metrics import (
    aggregate_report,
    daily_rmse,
    improvement_rate,
    model_spread_stats,
    monthly_rmse,
    rmse,
)
from .report import BASELINES, BacktestArtifacts, EvaluationReport
from .site import normalize_power
from .validation import (
    AlignmentError,
    ConfigurationError,
    IntegrityError,
    SchemaError,
)
from .variants import VariantSpec, make_variant_specs, train_variants

ARCHIVE_LEAD_MONTHS = 2


@dataclass(frozen=True)
class ForecastMatrix:
    """Hour-by-model normalized forecasts, aligned to a dataset's rows."""

    timestamps: np.ndarray
    model_ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype="datetime64[s]")
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vals)
        if vals.shape != (len(ts), len(self.model_ids)):
            raise SchemaError(
                f"forecast values shape {vals.shape}, expected"
                f" ({len(ts)}, {len(self.model_ids)})"
            )
        if not np.all(np.isfinite(vals)):
            raise SchemaError("forecast values must be finite")
        if vals.size and (vals.min() < 0.0 or vals.max() > 1.0):
            raise SchemaError("forecast values must lie in [0, 1]")


def run_base_models(
    dataset: HourlyDataset, models: list[VariantModel]
) -> ForecastMatrix:
    """Predict every dataset hour with every model; night rows exactly 0."""
    if not models:
        raise ConfigurationError("need at least one base model")
    columns = np.empty((len(dataset), len(models)))
    for j, model in enumerate(models):
        try:
            columns[:, j] = model.predict_normalized(dataset)
        except SchemaError as exc:
            raise SchemaError(
                f"variant {model.spec.variant_id} ({model.spec.label}): {exc}"
            ) from exc
    return ForecastMatrix(
        timestamps=dataset.timestamps,
        model_ids=tuple(m.model_id for m in models),
        values=columns,
    )


def simple_average(forecasts: ForecastMatrix) -> np.ndarray:
    """Per-hour arithmetic mean over the model columns."""
    return forecasts.values.mean(axis=1)


def select_best_model(per_model_rmse) -> int:
    """1-based index of the lowest RMSE; ties go to the lowest index."""
    scores = np.asarray(per_model_rmse, dtype=np.float64)
    if scores.ndim != 1 or scores.size == 0:
        raise SchemaError("per-model RMSE must be a non-empty vector")
    return int(np.argmin(scores)) + 1


def _as_window(window) -> tuple[np.datetime64, np.datetime64]:
    start, end = window
    start = np.datetime64(start, "s")
    end = np.datetime64(end, "s")
    if start >= end:
        raise ConfigurationError(f"window start {start} not before end {end}")
    return start, end


@dataclass(frozen=True)
class CombinerConfig:
    """Forest hyperparameters, lag set, and train/forecast windows."""

    n_trees: int = 300
    max_features: int | None = None
    min_samples_leaf: int = 5
    random_state: int = 0
    n_jobs: int = 1
    lag_hours: tuple[int, ...] = (0, 24)
    train_window: tuple | None = None
    forecast_window: tuple | None = None

    def __post_init__(self):
        lags = tuple(int(l) for l in self.lag_hours)
        object.__setattr__(self, "lag_hours", lags)
        if 0 not in lags or any(l < 0 for l in lags) or len(set(lags)) != len(lags):
            raise ConfigurationError(
                f"lag_hours must be distinct non-negative hours including 0,"
                f" got {lags}"
            )
        for name in ("train_window", "forecast_window"):
            win = getattr(self, name)
            if win is not None:
                object.__setattr__(self, name, _as_window(win))
        if self.train_window is not None and self.forecast_window is not None:
            if self.train_window[1] > self.forecast_window[0]:
                raise ConfigurationError(
                    "train_window must end before forecast_window begins"
                )


def _matrix_daylight(dataset: HourlyDataset, matrix_ts: np.ndarray) -> np.ndarray:
    pos = np.searchsorted(dataset.timestamps, matrix_ts)
    return dataset.daylight_mask()[pos]


def train_combiner(
    dataset: HourlyDataset, forecasts: ForecastMatrix, config: CombinerConfig
) -> RandomForestRegressor:
    """Fit the combining forest on daylight rows of the training window."""
    if config.train_window is None:
        raise ConfigurationError("config.train_window is required for training")
    start, end = config.train_window
    matrix = build_combiner_matrix(
        dataset,
        forecasts.timestamps,
        forecasts.values,
        forecasts.model_ids,
        lags=config.lag_hours,
        with_target=True,
    )
    keep = (
        (matrix.timestamps >= start)
        & (matrix.timestamps < end)
        & _matrix_daylight(dataset, matrix.timestamps)
        & ~np.isnan(matrix.target)
    )
    if not keep.any():
        raise ConfigurationError(
            f"no trainable daylight rows inside train_window [{start}, {end})"
        )
    forest = RandomForestRegressor(
        n_trees=config.n_trees,
        max_features=config.max_features,
        min_samples_leaf=config.min_samples_leaf,
        random_state=config.random_state,
        n_jobs=config.n_jobs,
        compute_oob=False,
    )
    forest.fit(matrix.values[keep], matrix.target[keep])
    return forest


def combine(
    combiner: RandomForestRegressor,
    dataset: HourlyDataset,
    forecasts: ForecastMatrix,
    config: CombinerConfig,
) -> np.ndarray:
    """Combined forecast for every dataset hour inside forecast_window.

    Night hours are exactly 0; daylight outputs are clipped to [0, 1].
    Returns one value per dataset row in the window, in row order.
    """
    if config.forecast_window is None:
        raise ConfigurationError("config.forecast_window is required to combine")
    start, end = config.forecast_window
    rows = (dataset.timestamps >= start) & (dataset.timestamps < end)
    if not rows.any():
        raise ConfigurationError(
            f"dataset has no rows inside forecast_window [{start}, {end})"
        )
    matrix = build_combiner_matrix(
        dataset,
        forecasts.timestamps,
        forecasts.values,
        forecasts.model_ids,
        lags=config.lag_hours,
        with_target=False,
    )
    daylight = dataset.daylight_mask()
    wanted = dataset.timestamps[rows & daylight]
    pos = np.searchsorted(matrix.timestamps, wanted)
    pos_clipped = np.minimum(pos, max(len(matrix.timestamps) - 1, 0))
    present = (
        matrix.timestamps[pos_clipped] == wanted
        if len(matrix.timestamps)
        else np.zeros(len(wanted), dtype=bool)
    )
    if not np.all(present):
        first = wanted[np.argmin(present)]
        raise AlignmentError(f"missing lag history for forecast hour {first}")
    out = np.zeros(int(rows.sum()))
    day_rows = daylight[rows]
    out[day_rows] = np.clip(combiner.predict(matrix.values[pos_clipped]), 0.0, 1.0)
    return out


def _month_hours(month: np.datetime64) -> int:
    days = ((month + 1).astype("M8[D]") - month.astype("M8[D]")).astype(np.int64)
    return 24 * int(days)


def _parse_months(months) -> np.ndarray:
    arr = np.asarray(
        [np.datetime64(str(m), "M") for m in months], dtype="datetime64[M]"
    )
    if arr.size == 0:
        raise ConfigurationError("months must name at least one month")
    if np.any(np.diff(arr).astype(np.int64) != 1):
        raise ConfigurationError(
            f"months must be consecutive and ascending, got {[str(m) for m in arr]}"
        )
    return arr


def _month_seed(random_state: int, index: int) -> int:
    return int(
        np.random.SeedSequence([random_state, index]).generate_state(1)[0]
    )


def rolling_backtest(
    dataset: HourlyDataset,
    specs: list[VariantSpec] | None = None,
    config: CombinerConfig = CombinerConfig(),
    months=None,
) -> EvaluationReport:
    """Score the ensemble against its baselines month by month.

    For each month in ``months`` (local calendar, consecutive), base models
    are retrained on all data strictly before the month, the combiner on
    the archive of earlier out-of-sample base forecasts, and every method
    is scored on the month's daylight hours.  The month before the first
    evaluated one seeds the archive; at least one more month must precede
    it to bootstrap the base models.
    """
    if specs is None:
        specs = make_variant_specs()
    local_months = dataset.local_timestamps().astype("M8[M]")
    if months is None:
        first = local_months[0] + ARCHIVE_LEAD_MONTHS
        eval_months = np.unique(local_months)
        eval_months = eval_months[eval_months >= first]
        # drop a trailing partial month
        if eval_months.size and (
            np.count_nonzero(local_months == eval_months[-1])
            != _month_hours(eval_months[-1])
        ):
            eval_months = eval_months[:-1]
        if eval_months.size == 0:
            raise ConfigurationError(
                "dataset too short: no complete month after the lead-in"
            )
    else:
        eval_months = _parse_months(months)

    def month_rows(month: np.datetime64, label: str) -> tuple[int, int]:
        i0 = int(np.searchsorted(local_months, month, "left"))
        i1 = int(np.searchsorted(local_months, month, "right"))
        if i1 - i0 != _month_hours(month):
            raise ConfigurationError(
                f"month {month}: dataset covers {i1 - i0} of"
                f" {_month_hours(month)} hours ({label})"
            )
        return i0, i1

    archive_month = eval_months[0] - 1
    a0, _ = month_rows(archive_month, "forecast archive seed")
    if a0 == 0:
        raise ConfigurationError(
            f"month {eval_months[0]}: insufficient history, need at least"
            " one month before the archive seed month to train base models"
        )

    n = len(dataset)
    k = len(specs)
    model_ids = tuple(s.model_id for s in specs)
    forecast_fill = np.zeros((n, k))
    daylight = dataset.daylight_mask()
    actual = normalize_power(dataset.power_w, dataset.site)

    fill_months = [archive_month, *eval_months]
    bounds = {str(m): month_rows(m, "evaluated month") for m in fill_months}

    best_index: int | None = None
    ensemble_parts = []
    for idx, month in enumerate(fill_months):
        i0, i1 = bounds[str(month)]
        train_ds = dataset.slice(slice(0, i0))
        models = train_variants(train_ds, specs)
        month_ds = dataset.slice(slice(i0, i1))
        month_forecasts = run_base_models(month_ds, models)
        forecast_fill[i0:i1] = month_forecasts.values

        if idx == 0:
            # fix the best-model column once, on archive (training-side) data
            seed_mask = daylight[i0:i1]
            seed_actual = actual[i0:i1]
            if np.any(np.isnan(seed_actual[seed_mask])):
                missing = month_ds.timestamps[seed_mask][
                    np.isnan(seed_actual[seed_mask])
                ][0]
                raise IntegrityError(f"missing power measurement at {missing}")
            scores = [
                rmse(month_forecasts.values[:, j], seed_actual, seed_mask)
                for j in range(k)
            ]
            best_index = select_best_model(scores) - 1
            continue

        sub = dataset.slice(slice(a0, i1))
        sub_forecasts = ForecastMatrix(
            timestamps=dataset.timestamps[a0:i1],
            model_ids=model_ids,
            values=forecast_fill[a0:i1],
        )
        month_config = replace(
            config,
            random_state=_month_seed(config.random_state, idx - 1),
            train_window=(dataset.timestamps[a0], dataset.timestamps[i0]),
            forecast_window=(
                dataset.timestamps[i0],
                dataset.timestamps[i1 - 1] + np.timedelta64(3600, "s"),
            ),
        )
        combiner = train_combiner(sub, sub_forecasts, month_config)
        ensemble_parts.append(combine(combiner, sub, sub_forecasts, month_config))

    e0 = bounds[str(eval_months[0])][0]
    e1 = bounds[str(eval_months[-1])][1]
    eval_ds = dataset.slice(slice(e0, e1))
    eval_daylight = daylight[e0:e1]
    eval_actual = actual[e0:e1]
    if np.any(np.isnan(eval_actual[eval_daylight])):
        missing = eval_ds.timestamps[eval_daylight][
            np.isnan(eval_actual[eval_daylight])
        ][0]
        raise IntegrityError(f"missing power measurement at {missing}")

    base = forecast_fill[e0:e1]
    ensemble_series = np.concatenate(ensemble_parts)
    avg_series = base.mean(axis=1)
    best_series = base[:, best_index]
    best_model_id = model_ids[best_index]

    artifacts = BacktestArtifacts(
        timestamps=eval_ds.timestamps,
        model_ids=model_ids,
        base=base,
        simple_average=avg_series,
        best_model=best_series,
        ensemble=ensemble_series,
        actual=eval_actual,
        daylight=eval_daylight,
    )
    return _assemble_report(eval_ds, artifacts, eval_months, best_model_id)


def _assemble_report(
    eval_ds: HourlyDataset,
    artifacts: BacktestArtifacts,
    eval_months: np.ndarray,
    best_model_id: str,
) -> EvaluationReport:
    methods = artifacts.model_ids + ("simple_average", "best_model", "ensemble")
    series = [artifacts.base[:, j] for j in range(artifacts.base.shape[1])]
    series += [artifacts.simple_average, artifacts.best_model, artifacts.ensemble]

    months_ref = None
    monthly_cols = []
    dates_ref = None
    daily_cols = []
    for values in series:
        months, mvals = monthly_rmse(values, artifacts.actual, eval_ds)
        dates, dvals = daily_rmse(values, artifacts.actual, eval_ds)
        months_ref = months if months_ref is None else months_ref
        dates_ref = dates if dates_ref is None else dates_ref
        monthly_cols.append(mvals)
        daily_cols.append(dvals)
    monthly = np.column_stack(monthly_cols)
    daily = np.column_stack(daily_cols)
    if not np.array_equal(months_ref, eval_months):
        raise ConfigurationError(
            "evaluated months disagree with the dataset's local months"
        )

    e = methods.index("ensemble")
    improvements = np.empty((len(eval_months), len(BASELINES)))
    for i in range(len(eval_months)):
        for j, baseline in enumerate(BASELINES):
            improvements[i, j] = improvement_rate(
                monthly[i, methods.index(baseline)], monthly[i, e]
            )

    aggregates = aggregate_report(monthly, methods)
    local_months = eval_ds.local_timestamps().astype("M8[M]")
    spread = model_spread_stats(artifacts.base, artifacts.daylight, local_months)
    return EvaluationReport(
        months=months_ref,
        methods=methods,
        monthly=monthly,
        daily_dates=dates_ref,
        daily=daily,
        improvements=improvements,
        aggregates=aggregates,
        spread=spread,
        best_model_id=best_model_id,
        artifacts=artifacts,
    )
