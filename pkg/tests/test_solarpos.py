"""Solar elevation against an independent ephemeris and basic geometry."""

import numpy as np
import pytest

from sunstack import DEFAULT_SITE, solar_elevation

from oracles import noaa_elevation

LAT = DEFAULT_SITE.latitude_deg
LON = DEFAULT_SITE.longitude_deg


def test_agrees_with_independent_ephemeris_over_a_year():
    # Spencer-style Fourier fits are good to ~0.6 degrees against the
    # Julian-century series; anything worse is an implementation bug.
    hours = np.arange(0, 365 * 24, 7)
    ts = np.datetime64("2021-01-01T00:00:00") + hours * np.timedelta64(3600, "s")
    mine = solar_elevation(ts, LAT, LON)
    ref = np.array([noaa_elevation(t, LAT, LON) for t in ts])
    assert np.abs(mine - ref).max() < 0.6


def test_frozen_solstice_noon_values():
    # local solar noon is close to 02:00 UTC at 149 degrees east
    summer = solar_elevation(np.datetime64("2021-12-21T02:00:00"), LAT, LON)
    winter = solar_elevation(np.datetime64("2021-06-21T02:00:00"), LAT, LON)
    assert summer == pytest.approx(78.137, abs=1e-2)
    assert winter == pytest.approx(31.266, abs=1e-2)
    # noon culmination bounds: 90 - |lat - decl| with |decl| <= 23.44+eps
    assert summer < 90.0 - abs(LAT) + 23.45
    assert winter > 0.0


def test_negative_at_local_midnight():
    ts = np.datetime64("2021-12-21T14:00:00")  # ~midnight local
    assert solar_elevation(ts, LAT, LON) < -20.0


def test_scalar_and_array_calls_agree():
    ts = np.datetime64("2021-03-20T02:00:00")
    one = solar_elevation(ts, LAT, LON)
    many = solar_elevation(np.array([ts, ts]), LAT, LON)
    assert isinstance(one, float)
    assert many.shape == (2,)
    assert one == many[0] == many[1]


def test_morning_rise_is_monotonic():
    base = np.datetime64("2021-09-05T20:00:00")  # local early morning
    ts = base + np.arange(6) * np.timedelta64(3600, "s")
    elev = solar_elevation(ts, LAT, LON)
    assert (np.diff(elev) > 0).all()


def test_equator_noon_mirrors_declination():
    # At the equator the noon elevation is 90 - |declination|; check both
    # solstices land within the fit error of 90 - 23.44.
    for day in ("2021-06-21", "2021-12-21"):
        ts = np.datetime64(f"{day}T12:00:00")  # solar noon at lon 0
        elev = solar_elevation(ts, 0.0, 0.0)
        assert elev == pytest.approx(90.0 - 23.44, abs=0.75)


def test_hemisphere_symmetry_at_equinox():
    ts = np.datetime64("2021-03-20T12:00:00")
    north = solar_elevation(ts, 40.0, 0.0)
    south = solar_elevation(ts, -40.0, 0.0)
    # near-zero declination: both hemispheres see ~(90 - |lat|)
    assert north == pytest.approx(south, abs=1.0)
    assert north == pytest.approx(50.0, abs=1.0)
