"""Site metadata: where the PV array is and how big it is."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .validation import ConfigurationError, ParseError

# Measured power may exceed the nameplate rating slightly on cold clear days.
POWER_TOLERANCE = 1.05


@dataclass(frozen=True)
class SiteConfig:
    latitude_deg: float
    longitude_deg: float
    altitude_m: float
    nominal_power_w: float
    utc_offset_h: float

    def __post_init__(self):
        if not -90.0 <= self.latitude_deg <= 90.0:
            raise ConfigurationError(f"latitude_deg out of range: {self.latitude_deg}")
        if not -180.0 <= self.longitude_deg <= 180.0:
            raise ConfigurationError(f"longitude_deg out of range: {self.longitude_deg}")
        if not self.nominal_power_w > 0:
            raise ConfigurationError(f"nominal_power_w must be positive: {self.nominal_power_w}")
        if not -14.0 <= self.utc_offset_h <= 14.0:
            raise ConfigurationError(f"utc_offset_h out of range: {self.utc_offset_h}")


# The single-roof array the bundled defaults describe: a 1.56 kW installation
# in south-eastern Australia.
DEFAULT_SITE = SiteConfig(
    latitude_deg=-35.275,
    longitude_deg=149.113611,
    altitude_m=595.0,
    nominal_power_w=1560.0,
    utc_offset_h=10.0,
)

_SITE_FIELDS = [f.name for f in fields(SiteConfig)]


def load_site_file(path) -> SiteConfig:
    """Read a flat ``key = value`` site description.

    Blank lines and ``#`` comments are ignored.  All five fields are
    required; unknown keys are rejected.
    """
    values: dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"expected 'key = value', got {raw.strip()!r}", lineno)
            key, _, val = line.partition("=")
            key = key.strip()
            if key not in _SITE_FIELDS:
                raise ParseError(f"unknown site key {key!r}", lineno)
            if key in values:
                raise ParseError(f"duplicate site key {key!r}", lineno)
            try:
                values[key] = float(val.strip())
            except ValueError:
                raise ParseError(f"bad number for {key!r}: {val.strip()!r}", lineno) from None
    missing = [k for k in _SITE_FIELDS if k not in values]
    if missing:
        raise ParseError(f"missing site keys: {', '.join(missing)}")
    return SiteConfig(**values)


def save_site_file(site: SiteConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for name in _SITE_FIELDS:
            fh.write(f"{name} = {float(getattr(site, name))!r}\n")


def normalize_power(power_w, site: SiteConfig) -> np.ndarray:
    """Scale watts to [0, 1] of nameplate capacity, clipping mild over-rating.

    Negative readings are rejected rather than clipped: they indicate a
    metering fault, not a physical output.
    """
    p = np.atleast_1d(np.asarray(power_w, dtype=np.float64))
    valid = ~np.isnan(p)
    if np.any(p[valid] < 0):
        raise ValueError("negative power reading")
    if np.any(p[valid] > site.nominal_power_w * POWER_TOLERANCE):
        raise ValueError(
            f"power reading above {POWER_TOLERANCE:g}x nominal ({site.nominal_power_w} W)"
        )
    return np.clip(p / site.nominal_power_w, 0.0, 1.0)
