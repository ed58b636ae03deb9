"""Hourly dataset construction rules and CSV ingestion round-trips."""

import numpy as np
import pytest

from sunstack import DEFAULT_SITE, HourlyDataset, load_hourly_csv, write_hourly_csv
from sunstack.dataset import CSV_HEADER, format_timestamp, parse_timestamp
from sunstack.validation import IntegrityError, ParseError, SchemaError


def _hours(start, n):
    return np.datetime64(start, "s") + np.arange(n) * np.timedelta64(3600, "s")


def _dataset(n=48, power=None):
    gen = np.random.default_rng(1)
    return HourlyDataset(
        site=DEFAULT_SITE,
        timestamps=_hours("2021-06-01T00:00:00", n),
        weather=gen.uniform(0, 1, (n, 14)),
        power_w=np.full(n, 100.0) if power is None else power,
    )


def test_csv_round_trip_is_lossless(tmp_path):
    ds = _dataset()
    ds.power_w[5] = np.nan  # forecast-only row
    path = tmp_path / "data.csv"
    write_hourly_csv(ds, path)
    back = load_hourly_csv(path, DEFAULT_SITE)
    assert np.array_equal(back.timestamps, ds.timestamps)
    assert np.array_equal(back.weather, ds.weather)
    assert np.array_equal(back.power_w, ds.power_w, equal_nan=True)
    # and writing again reproduces the identical bytes
    second = tmp_path / "again.csv"
    write_hourly_csv(back, second)
    assert path.read_bytes() == second.read_bytes()


def test_timestamp_format_round_trip():
    ts = np.datetime64("2021-06-01T07:00:00", "s")
    assert parse_timestamp(format_timestamp(ts)) == ts
    assert format_timestamp(ts) == "2021-06-01T07:00:00Z"


def test_rejects_wrong_header(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("time,oops\n")
    with pytest.raises(SchemaError, match="header mismatch"):
        load_hourly_csv(path, DEFAULT_SITE)


def test_parse_errors_carry_line_numbers(tmp_path):
    path = tmp_path / "data.csv"
    good = "2021-06-01T00:00:00Z," + ",".join(["0.1"] * 14) + ",5.0\n"
    bad = "2021-06-01 01:00:00," + ",".join(["0.1"] * 14) + ",5.0\n"
    path.write_text(",".join(CSV_HEADER) + "\n" + good + bad)
    with pytest.raises(ParseError, match="line 3"):
        load_hourly_csv(path, DEFAULT_SITE)


def test_empty_power_field_means_missing(tmp_path):
    path = tmp_path / "data.csv"
    row = "2021-06-01T00:00:00Z," + ",".join(["0.1"] * 14) + ",\n"
    path.write_text(",".join(CSV_HEADER) + "\n" + row)
    ds = load_hourly_csv(path, DEFAULT_SITE)
    assert np.isnan(ds.power_w[0])


def test_construction_rejects_disorder_and_off_hour():
    ts = _hours("2021-06-01T00:00:00", 3)
    gen = np.random.default_rng(0)
    weather = gen.uniform(0, 1, (3, 14))
    with pytest.raises(IntegrityError, match="strictly increasing"):
        HourlyDataset(DEFAULT_SITE, ts[::-1], weather, np.zeros(3))
    crooked = ts.copy()
    crooked[1] += np.timedelta64(60, "s")
    with pytest.raises(IntegrityError, match="on the hour"):
        HourlyDataset(DEFAULT_SITE, crooked, weather, np.zeros(3))


def test_construction_rejects_nan_weather_and_bad_power():
    ts = _hours("2021-06-01T00:00:00", 2)
    weather = np.zeros((2, 14))
    holed = weather.copy()
    holed[0, 3] = np.nan
    with pytest.raises(IntegrityError, match="weather"):
        HourlyDataset(DEFAULT_SITE, ts, holed, np.zeros(2))
    with pytest.raises(IntegrityError, match="negative"):
        HourlyDataset(DEFAULT_SITE, ts, weather, np.array([-2.0, 0.0]))
    with pytest.raises(IntegrityError, match="above"):
        HourlyDataset(DEFAULT_SITE, ts, weather, np.array([1700.0, 0.0]))
    # NaN power is allowed: it marks forecast-only rows
    HourlyDataset(DEFAULT_SITE, ts, weather, np.array([np.nan, 0.0]))


def test_daylight_mask_is_order_insensitive():
    ds = _dataset(72)
    mask = ds.daylight_mask()
    perm = np.random.default_rng(3).permutation(72)
    # permuted timestamps violate monotonicity, so query elementwise instead
    from sunstack import solar_elevation

    mid = ds.timestamps[perm] + np.timedelta64(1800, "s")
    elev = solar_elevation(mid, DEFAULT_SITE.latitude_deg, DEFAULT_SITE.longitude_deg)
    assert np.array_equal(elev > 0, mask[perm])


def test_daylight_mask_summer_fraction(ds_two_weeks):
    # Two weeks of hourly southern-summer data: long days, but the sun
    # still sets, and no day is ever entirely dark.
    ds = ds_two_weeks
    mask = ds.daylight_mask()
    assert 0.5 < mask.mean() < 0.66
    days = ds.local_timestamps().astype("datetime64[D]")
    for day in np.unique(days):
        sel = mask[days == day]
        assert sel.any() and not sel.all()


def test_slice_keeps_site_and_alignment():
    ds = _dataset(48)
    sub = ds.slice(slice(10, 20))
    assert len(sub) == 10
    assert sub.site == ds.site
    assert np.array_equal(sub.weather, ds.weather[10:20])
    picked = ds.slice(np.array([1, 5, 7]))
    assert np.array_equal(picked.timestamps, ds.timestamps[[1, 5, 7]])


def test_slice_never_aliases_the_parent():
    ds = _dataset(48)
    sub = ds.slice(slice(0, 24))
    sub.power_w[3] = np.nan
    sub.weather[0, 0] = -99.0
    assert not np.isnan(ds.power_w[3])
    assert ds.weather[0, 0] != -99.0
