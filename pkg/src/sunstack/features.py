"""Design matrices for the base models and the combiner."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import WEATHER_COLUMNS, HourlyDataset
from .site import normalize_power
from .validation import (
    AlignmentError,
    ConfigurationError,
    IntegrityError,
    SchemaError,
    check_unique,
)

INPUT_SETS = ("original14", "extended")

# Extra calendar inputs for the "extended" set, derived from local time.
EXTENDED_COLUMNS = ("hour_sin", "hour_cos", "doy_sin", "doy_cos")


@dataclass
class FeatureMatrix:
    """A named, time-indexed design matrix with an optional target vector.

    ``values`` must be finite everywhere.  ``target`` may contain NaN for
    rows without a measurement; training code rejects those rows explicitly.
    """

    timestamps: np.ndarray
    columns: tuple[str, ...]
    values: np.ndarray
    target: np.ndarray | None = None

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype="datetime64[s]")
        self.values = np.asarray(self.values, dtype=np.float64)
        self.columns = tuple(self.columns)
        check_unique("column", self.columns)
        n = len(self.timestamps)
        if self.values.shape != (n, len(self.columns)):
            raise SchemaError(
                f"values shape {self.values.shape} does not match "
                f"{n} timestamps x {len(self.columns)} columns"
            )
        if not np.all(np.isfinite(self.values)):
            raise IntegrityError("feature values contain NaN or infinities")
        if self.target is not None:
            self.target = np.asarray(self.target, dtype=np.float64)
            if self.target.shape != (n,):
                raise SchemaError(f"target must have shape ({n},)")

    def __len__(self) -> int:
        return len(self.timestamps)


def _calendar_features(dataset: HourlyDataset) -> np.ndarray:
    local = dataset.local_timestamps()
    day_start = local.astype("datetime64[D]").astype("datetime64[s]")
    hour = (local - day_start).astype("timedelta64[s]").astype(np.float64) / 3600.0
    year_start = local.astype("datetime64[Y]").astype("datetime64[s]")
    doy = (local - year_start).astype("timedelta64[s]").astype(np.float64) / 86400.0
    hour_angle = 2.0 * np.pi * hour / 24.0
    doy_angle = 2.0 * np.pi * doy / 365.25
    return np.column_stack(
        [np.sin(hour_angle), np.cos(hour_angle), np.sin(doy_angle), np.cos(doy_angle)]
    )


def build_feature_matrix(
    dataset: HourlyDataset,
    input_set: str = "original14",
    daylight_only: bool = False,
    with_target: bool = True,
) -> FeatureMatrix:
    """Assemble the base-model design matrix for one input set.

    ``original14`` uses the weather columns verbatim; ``extended`` appends
    sine/cosine encodings of local hour-of-day and day-of-year.  With
    ``with_target`` every selected row must carry a power measurement.
    """
    if input_set not in INPUT_SETS:
        raise ConfigurationError(f"input_set must be one of {INPUT_SETS}, got {input_set!r}")
    keep = dataset.daylight_mask() if daylight_only else np.ones(len(dataset), dtype=bool)
    values = dataset.weather[keep]
    columns: tuple[str, ...] = WEATHER_COLUMNS
    if input_set == "extended":
        values = np.hstack([values, _calendar_features(dataset)[keep]])
        columns = WEATHER_COLUMNS + EXTENDED_COLUMNS
    target = None
    if with_target:
        power = dataset.power_w[keep]
        if np.any(np.isnan(power)):
            first = dataset.timestamps[keep][np.isnan(power)][0]
            raise IntegrityError(f"missing power measurement at {first}")
        target = normalize_power(power, dataset.site)
    return FeatureMatrix(
        timestamps=dataset.timestamps[keep],
        columns=columns,
        values=values,
        target=target,
    )


def build_combiner_matrix(
    dataset: HourlyDataset,
    forecast_timestamps: np.ndarray,
    forecast_values: np.ndarray,
    model_ids: tuple[str, ...],
    lags: tuple[int, ...] = (0, 24),
    with_target: bool = True,
) -> FeatureMatrix:
    """Combiner inputs: weather plus present and lagged base-model forecasts.

    ``forecast_values`` is (n_hours, n_models) aligned 1:1 with the dataset
    timestamps.  For each lag L (hours) and model, the column holds that
    model's forecast L hours before the row's timestamp.  Rows whose lagged
    lookups do not exist in the series are dropped.
    """
    lags = tuple(int(l) for l in lags)
    if not lags or any(l < 0 for l in lags):
        raise ConfigurationError(f"lags must be non-negative hours, got {lags}")
    if 0 not in lags:
        raise ConfigurationError("lag 0 (the present forecast) is required")
    if len(set(lags)) != len(lags):
        raise ConfigurationError(f"duplicate lags: {lags}")
    ts = dataset.timestamps
    fts = np.asarray(forecast_timestamps, dtype="datetime64[s]")
    if len(fts) != len(ts) or np.any(fts != ts):
        if len(fts) != len(ts):
            raise AlignmentError(
                f"forecasts cover {len(fts)} hours, dataset {len(ts)}"
            )
        first = ts[np.argmax(fts != ts)]
        raise AlignmentError(f"forecast timestamps diverge from dataset at {first}")
    fv = np.asarray(forecast_values, dtype=np.float64)
    if fv.shape != (len(ts), len(model_ids)):
        raise SchemaError(
            f"forecast values shape {fv.shape}, expected ({len(ts)}, {len(model_ids)})"
        )

    seconds = ts.astype(np.int64)
    lag_cols = []
    valid = np.ones(len(ts), dtype=bool)
    for lag in sorted(lags):
        want = seconds - lag * 3600
        pos = np.searchsorted(seconds, want)
        pos_clipped = np.minimum(pos, len(ts) - 1)
        found = seconds[pos_clipped] == want
        valid &= found
        lag_cols.append((lag, pos_clipped))

    columns = list(WEATHER_COLUMNS)
    blocks = [dataset.weather[valid]]
    for lag, pos in lag_cols:
        blocks.append(fv[pos][valid])
        columns.extend(f"{mid}_lag{lag}" for mid in model_ids)

    target = None
    if with_target:
        target = normalize_power(dataset.power_w, dataset.site)[valid]
    return FeatureMatrix(
        timestamps=ts[valid],
        columns=tuple(columns),
        values=np.hstack(blocks),
        target=target,
    )
