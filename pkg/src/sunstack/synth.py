"""Seeded synthetic generator for hourly PV power and forecast-style weather.

A hidden day-scale sky regime (clear, mixed, cloudy) follows a seasonal
Markov chain.  True plant output is solar geometry times an hourly
transmission path drawn from the regime, with occasional morning fog.  The
14 weather channels mimic numerical weather forecasts: correlated with the
hidden state but corrupted by regime-dependent error, and the irradiance
channel carries a slowly drifting calibration bias.  Models trained on
different windows, inputs, or scalings therefore develop genuinely
different error patterns, which is the condition the downstream combiner
needs to demonstrate value.
"""

from __future__ import annotations

import numpy as np

from .dataset import HourlyDataset
from .site import DEFAULT_SITE, SiteConfig
from .solarpos import solar_elevation

START_UTC = np.datetime64("2021-01-01T00:00:00", "s")

_CLEAR, _MIXED, _CLOUDY = 0, 1, 2
_REGIME_TAU = (0.97, 0.62, 0.28)
_REGIME_SIGMA = (0.015, 0.20, 0.10)
_TAU_RHO = 0.85
_TAU_FLOOR = 0.02
_PERSIST = 0.55
_POWER_EXPONENT = 1.15


def _ar1(rng: np.random.Generator, n: int, rho: float, sigma: float) -> np.ndarray:
    """First-order autoregressive path with innovation scale ``sigma``."""
    eps = rng.normal(0.0, sigma, n)
    out = np.empty(n)
    acc = 0.0
    for t in range(n):
        acc = rho * acc + eps[t]
        out[t] = acc
    return out


def _day_regimes(rng: np.random.Generator, season: np.ndarray) -> np.ndarray:
    """Markov day regimes; ``season`` is +1 midsummer, -1 midwinter."""
    n_days = season.shape[0]
    regimes = np.empty(n_days, np.int64)
    for d in range(n_days):
        u = rng.random()
        if d > 0 and u < _PERSIST:
            regimes[d] = regimes[d - 1]
            continue
        p_clear = 0.40 + 0.22 * season[d]
        p_cloudy = 0.28 - 0.14 * season[d]
        # shoulder seasons are mixed-sky heavy
        p_mixed = (1.0 - p_clear - p_cloudy) + 0.18 * (1.0 - abs(season[d]))
        v = rng.random() * (p_clear + p_cloudy + p_mixed)
        if v < p_clear:
            regimes[d] = _CLEAR
        elif v < p_clear + p_cloudy:
            regimes[d] = _CLOUDY
        else:
            regimes[d] = _MIXED
    return regimes


def synth_generate(
    days: int, seed: int, site: SiteConfig = DEFAULT_SITE
) -> HourlyDataset:
    """Generate ``days`` consecutive UTC days of hourly records from ``seed``.

    Deterministic for a fixed (days, seed, site).  Power is exactly zero
    whenever the sun is below the horizon at the hour midpoint and lies in
    (0, nominal] otherwise.
    """
    if days < 1:
        raise ValueError(f"days must be >= 1, got {days}")
    n = days * 24
    rng = np.random.default_rng(seed)

    timestamps = START_UTC + np.arange(n, dtype=np.int64) * np.timedelta64(3600, "s")
    elev_mid = solar_elevation(
        timestamps + np.timedelta64(1800, "s"), site.latitude_deg, site.longitude_deg
    )
    shape = np.maximum(0.0, np.sin(np.radians(elev_mid))) ** _POWER_EXPONENT
    doy = (timestamps.astype("M8[D]") - timestamps.astype("M8[Y]")).astype(np.int64) + 1
    utc_hour = np.arange(n, dtype=np.int64) % 24
    local_hour = (utc_hour + site.utc_offset_h) % 24.0

    # day bookkeeping follows the site's local calendar so that fog and
    # regime changes land at local midnight, not mid-afternoon UTC
    ldi = ((np.arange(n) + site.utc_offset_h) // 24).astype(np.int64)
    ldi -= ldi[0]
    n_days_eff = int(ldi[-1]) + 1
    first_idx = np.searchsorted(ldi, np.arange(n_days_eff))
    day_doy = doy[first_idx]
    # austral season: +1 around mid-January, -1 around mid-July
    season = np.cos(2.0 * np.pi * (day_doy - 15.0) / 365.25)

    regimes = _day_regimes(rng, season)
    reg_h = regimes[ldi]

    fog_prob = 0.08 + 0.14 * (1.0 - season) / 2.0
    fog_day = rng.random(n_days_eff) < fog_prob
    fog_strength = rng.uniform(0.45, 0.80, n_days_eff)
    fog_hours = rng.integers(2, 5, n_days_eff)

    # true hourly transmission: regime base + AR noise, then morning fog
    tau_noise = _ar1(rng, n, _TAU_RHO, 1.0)
    base = np.array(_REGIME_TAU)[reg_h]
    sig = np.array(_REGIME_SIGMA)[reg_h]
    tau = np.clip(base + sig * tau_noise, _TAU_FLOOR, 1.0)

    fog = np.zeros(n)
    daylight = shape > 0.0
    for d in np.nonzero(fog_day)[0]:
        sel = np.nonzero((ldi == d) & daylight)[0]
        dur = int(fog_hours[d])
        for j, h in enumerate(sel[:dur]):
            fog[h] = fog_strength[d] * (1.0 - j / dur)
    tau_eff = tau * (1.0 - fog)

    power_w = site.nominal_power_w * tau_eff * shape

    # forecast-style weather channels; each has its own error path so no
    # channel is a clean copy of the hidden state
    cloud_true = 1.0 - tau
    is_mixed = (reg_h == _MIXED).astype(float)
    is_cloudy = (reg_h == _CLOUDY).astype(float)

    e1 = _ar1(rng, n, 0.7, 1.0)
    var1 = np.clip(
        cloud_true + (0.04 + 0.08 * is_mixed) * e1 + 0.03 * rng.normal(size=n), 0.0, 1.0
    )
    var2 = np.clip(0.55 * var1 + 0.35 * fog + 0.05 * rng.normal(size=n), 0.0, 1.0)
    var3 = np.clip(0.20 + 0.55 * var1 + 0.06 * rng.normal(size=n), 0.0, 1.0)
    var4 = np.clip(
        0.15
        + 0.40 * var1
        + 0.15 * np.sin(2.0 * np.pi * doy / 365.25 + 2.1)
        + 0.05 * rng.normal(size=n),
        0.0,
        1.0,
    )

    season_h = np.cos(2.0 * np.pi * (doy - 15.0) / 365.25)
    diurnal = -np.cos(2.0 * np.pi * (local_hour - 3.0) / 24.0)
    var5 = (
        19.0
        + 7.5 * season_h
        + 4.0 * diurnal * (0.55 + 0.45 * (1.0 - cloud_true))
        - 2.5 * is_cloudy
        + _ar1(rng, n, 0.8, 0.45)
    )
    spread_day = rng.uniform(2.2, 6.7, n_days_eff)[ldi]
    spread = np.maximum(0.15, spread_day * (1.0 - 1.05 * fog) + 0.25 * rng.normal(size=n))
    var6 = var5 - spread
    var7 = np.clip(96.0 - 7.5 * spread + 2.0 * rng.normal(size=n), 8.0, 100.0)
    var8 = np.abs(
        2.8 + 1.6 * is_cloudy + 0.6 * is_mixed + _ar1(rng, n, 0.9, 0.45)
    )
    var9 = (
        170.0
        + 50.0 * np.sin(2.0 * np.pi * doy / 365.25)
        + 40.0 * cloud_true
        + 15.0 * _ar1(rng, n, 0.8, 1.0)
    ) % 360.0
    var10 = (
        1016.0
        + _ar1(rng, n, 0.985, 0.38)
        - 3.5 * is_cloudy
        + 1.5 * (reg_h == _CLEAR)
        + 0.3 * rng.normal(size=n)
    )

    # irradiance channels: strongest predictors, but their calibration
    # drifts over the record, so a fixed mapping learned early goes stale
    drift_steps = rng.normal(0.0, 0.004, n_days_eff)
    bias_day = np.clip(
        1.0
        + 0.13 * np.sin(2.0 * np.pi * np.arange(n_days_eff) / 290.0 + 0.7)
        + np.cumsum(drift_steps),
        0.78,
        1.22,
    )
    cf = np.clip(cloud_true + 0.05 * rng.normal(size=n), 0.0, 1.0)
    var11 = np.maximum(
        0.0,
        980.0 * shape * (1.0 - 0.72 * cf**1.4) * bias_day[ldi]
        + 14.0 * rng.normal(size=n),
    )
    var12 = np.maximum(
        0.0, 0.87 * var11 * (1.0 - cf) ** 1.2 + 11.0 * rng.normal(size=n)
    )
    var13 = np.clip(
        1.0 / (1.0 + np.exp(-5.0 * (var1 - 0.52))) + 0.05 * rng.normal(size=n), 0.0, 1.0
    )
    var14 = np.clip(
        24.0 * (1.0 - 1.05 * fog) - 7.0 * var1 + 1.6 * rng.normal(size=n), 0.3, 40.0
    )

    weather = np.column_stack(
        (
            var1, var2, var3, var4, var5, var6, var7,
            var8, var9, var10, var11, var12, var13, var14,
        )
    )
    return HourlyDataset(
        site=site, timestamps=timestamps, weather=weather, power_w=power_w
    )
