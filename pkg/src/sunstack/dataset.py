"""Hourly weather-forecast and PV-power records, and their CSV form.

The canonical file layout is one header row ``timestamp,var1,...,var14,power_w``
followed by one row per hour.  Timestamps are UTC, ISO-8601 with a trailing Z,
always on the hour.  ``power_w`` may be left empty on forecast-only rows.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .site import POWER_TOLERANCE, SiteConfig
from .solarpos import solar_elevation
from .validation import IntegrityError, ParseError, SchemaError, open_for_write

N_WEATHER_VARS = 14
WEATHER_COLUMNS = tuple(f"var{i}" for i in range(1, N_WEATHER_VARS + 1))
CSV_HEADER = ("timestamp",) + WEATHER_COLUMNS + ("power_w",)

_TS_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


@dataclass
class HourlyDataset:
    """A contiguous block of hourly records for one site.

    ``power_w`` uses NaN for rows with no measurement.  Timestamps are
    ``datetime64[s]`` in UTC, strictly increasing, and on the hour.
    """

    site: SiteConfig
    timestamps: np.ndarray
    weather: np.ndarray
    power_w: np.ndarray
    _daylight_cache: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype="datetime64[s]")
        self.weather = np.asarray(self.weather, dtype=np.float64)
        self.power_w = np.asarray(self.power_w, dtype=np.float64)
        n = len(self.timestamps)
        if self.weather.shape != (n, N_WEATHER_VARS):
            raise SchemaError(
                f"weather must have shape ({n}, {N_WEATHER_VARS}), got {self.weather.shape}"
            )
        if self.power_w.shape != (n,):
            raise SchemaError(f"power_w must have shape ({n},), got {self.power_w.shape}")
        if not np.all(np.isfinite(self.weather)):
            raise IntegrityError("weather contains NaN or infinite values")
        if n > 1:
            deltas = np.diff(self.timestamps).astype("timedelta64[s]").astype(np.int64)
            if np.any(deltas <= 0):
                bad = int(np.argmax(deltas <= 0))
                raise IntegrityError(
                    f"timestamps not strictly increasing at {self.timestamps[bad + 1]}"
                )
        seconds = self.timestamps.astype(np.int64)
        if np.any(seconds % 3600 != 0):
            bad = int(np.argmax(seconds % 3600 != 0))
            raise IntegrityError(f"timestamp not on the hour: {self.timestamps[bad]}")
        measured = self.power_w[~np.isnan(self.power_w)]
        if np.any(measured < 0):
            raise IntegrityError("negative power_w reading")
        limit = self.site.nominal_power_w * POWER_TOLERANCE
        if np.any(measured > limit):
            raise IntegrityError(f"power_w above {limit:g} W")

    def __len__(self) -> int:
        return len(self.timestamps)

    def local_timestamps(self) -> np.ndarray:
        """Timestamps shifted into site-local civil time."""
        return self.timestamps + np.timedelta64(
            int(round(self.site.utc_offset_h * 3600)), "s"
        )

    def daylight_mask(self) -> np.ndarray:
        """True for hours whose mid-point has the sun above the horizon."""
        if self._daylight_cache is None:
            mid = self.timestamps + np.timedelta64(1800, "s")
            elev = solar_elevation(mid, self.site.latitude_deg, self.site.longitude_deg)
            self._daylight_cache = elev > 0.0
        return self._daylight_cache

    def slice(self, mask_or_index) -> "HourlyDataset":
        # always copies: basic indexing would alias this dataset's storage,
        # fancy indexing would not, and callers must never have to care
        return HourlyDataset(
            site=self.site,
            timestamps=self.timestamps[mask_or_index].copy(),
            weather=self.weather[mask_or_index].copy(),
            power_w=self.power_w[mask_or_index].copy(),
        )


def daylight_mask(dataset: HourlyDataset) -> np.ndarray:
    """Hours with the sun up at the mid-point of the hour."""
    return dataset.daylight_mask()


def parse_timestamp(text: str) -> np.datetime64:
    dt = datetime.strptime(text, _TS_FORMAT).replace(tzinfo=timezone.utc)
    return np.datetime64(int(dt.timestamp()), "s")


def format_timestamp(ts: np.datetime64) -> str:
    dt = datetime.fromtimestamp(int(ts.astype("datetime64[s]").astype(np.int64)), timezone.utc)
    return dt.strftime(_TS_FORMAT)


def load_hourly_csv(path, site: SiteConfig) -> HourlyDataset:
    """Parse a canonical hourly CSV into an :class:`HourlyDataset`.

    Errors carry the 1-based line number of the first offending row.
    """
    timestamps: list[np.datetime64] = []
    weather_rows: list[list[float]] = []
    power: list[float] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if tuple(header) != CSV_HEADER:
            raise SchemaError(
                f"{path}: header mismatch, expected {','.join(CSV_HEADER)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(CSV_HEADER):
                raise ParseError(f"expected {len(CSV_HEADER)} fields, got {len(row)}", lineno)
            try:
                ts = parse_timestamp(row[0])
            except ValueError:
                raise ParseError(f"bad timestamp {row[0]!r}", lineno) from None
            try:
                vals = [float(v) for v in row[1:-1]]
            except ValueError:
                raise ParseError(f"bad weather value in {row[1:-1]!r}", lineno) from None
            ptext = row[-1]
            if ptext == "":
                p = np.nan
            else:
                try:
                    p = float(ptext)
                except ValueError:
                    raise ParseError(f"bad power_w value {ptext!r}", lineno) from None
            timestamps.append(ts)
            weather_rows.append(vals)
            power.append(p)
    if not timestamps:
        raise SchemaError(f"{path}: no data rows")
    return HourlyDataset(
        site=site,
        timestamps=np.array(timestamps, dtype="datetime64[s]"),
        weather=np.array(weather_rows, dtype=np.float64),
        power_w=np.array(power, dtype=np.float64),
    )


def write_hourly_csv(dataset: HourlyDataset, path) -> None:
    """Write the canonical CSV; floats keep full round-trip precision."""
    with open_for_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for i in range(len(dataset)):
            p = dataset.power_w[i]
            row = (
                [format_timestamp(dataset.timestamps[i])]
                + [repr(float(v)) for v in dataset.weather[i]]
                + ["" if np.isnan(p) else repr(float(p))]
            )
            writer.writerow(row)
