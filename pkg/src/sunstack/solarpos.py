"""Low-precision solar geometry.

Declination and the equation of time come from the classic Fourier fits on
the fractional year; the hour angle comes from local true solar time.  Good
to well under a degree of elevation, which is all the daylight masking and
the synthetic clear-sky curve need.
"""

from __future__ import annotations

import numpy as np

_SECONDS_PER_DAY = 86400.0


def _day_of_year_and_hour(timestamps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split UTC instants into day-of-year (1-based) and fractional hour."""
    ts = np.asarray(timestamps, dtype="datetime64[s]")
    year_start = ts.astype("datetime64[Y]").astype("datetime64[s]")
    sec_into_year = (ts - year_start).astype("timedelta64[s]").astype(np.float64)
    doy = np.floor(sec_into_year / _SECONDS_PER_DAY) + 1.0
    day_start = ts.astype("datetime64[D]").astype("datetime64[s]")
    hour_utc = (ts - day_start).astype("timedelta64[s]").astype(np.float64) / 3600.0
    return doy, hour_utc


def solar_elevation(timestamps, latitude_deg: float, longitude_deg: float) -> np.ndarray:
    """Solar elevation angle in degrees at the given UTC instants.

    Positive latitude north, positive longitude east.  Accepts a scalar or an
    array of numpy datetime64 values and returns float degrees of matching
    shape.
    """
    scalar = np.ndim(timestamps) == 0
    ts = np.atleast_1d(np.asarray(timestamps, dtype="datetime64[s]"))
    doy, hour_utc = _day_of_year_and_hour(ts)

    # Fractional year in radians, evaluated at the actual time of day.
    g = 2.0 * np.pi / 365.0 * (doy - 1.0 + (hour_utc - 12.0) / 24.0)

    decl = (
        0.006918
        - 0.399912 * np.cos(g)
        + 0.070257 * np.sin(g)
        - 0.006758 * np.cos(2 * g)
        + 0.000907 * np.sin(2 * g)
        - 0.002697 * np.cos(3 * g)
        + 0.00148 * np.sin(3 * g)
    )
    # Equation of time in minutes.
    eqtime = 229.18 * (
        0.000075
        + 0.001868 * np.cos(g)
        - 0.032077 * np.sin(g)
        - 0.014615 * np.cos(2 * g)
        - 0.040849 * np.sin(2 * g)
    )

    true_solar_min = np.mod(hour_utc * 60.0 + eqtime + 4.0 * longitude_deg, 1440.0)
    hour_angle = np.radians(true_solar_min / 4.0 - 180.0)

    lat = np.radians(latitude_deg)
    sin_elev = np.sin(lat) * np.sin(decl) + np.cos(lat) * np.cos(decl) * np.cos(hour_angle)
    elev = np.degrees(np.arcsin(np.clip(sin_elev, -1.0, 1.0)))
    return float(elev[0]) if scalar else elev
