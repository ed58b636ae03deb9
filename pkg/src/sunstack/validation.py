"""Error types and small input-validation helpers shared across the package."""

from __future__ import annotations

from contextlib import nullcontext

import numpy as np


def open_for_write(path_or_file):
    """Context manager over a text sink: a path to create or an open file."""
    if hasattr(path_or_file, "write"):
        return nullcontext(path_or_file)
    return open(path_or_file, "w", encoding="utf-8", newline="")


class SchemaError(ValueError):
    """A file or matrix does not have the expected columns or layout."""


class ParseError(ValueError):
    """A text input failed to parse; carries the offending location."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class IntegrityError(ValueError):
    """Data violates an internal consistency rule (duplicates, bad ranges)."""


class AlignmentError(ValueError):
    """Two time-indexed inputs do not cover the same timestamps."""


class ConfigurationError(ValueError):
    """A run was configured with impossible or missing settings."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap before meeting tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual violation {residual:.3e})")
        self.residual = residual


def as_float_array(x, name: str, ndim: int | None = None) -> np.ndarray:
    """Coerce to a finite float64 array, rejecting NaN and infinities."""
    arr = np.asarray(x, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise SchemaError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise IntegrityError(f"{name} contains NaN or infinite values")
    return arr


def check_lengths_match(**named) -> None:
    """Require every named array to have the same leading length."""
    items = list(named.items())
    name_a, a = items[0]
    for name_b, b in items[1:]:
        if len(a) != len(b):
            raise SchemaError(
                f"{name_a} has {len(a)} rows but {name_b} has {len(b)}"
            )


def check_positive(name: str, value: float) -> None:
    if not value > 0:
        raise ConfigurationError(f"{name} must be positive, got {value!r}")


def check_unique(name: str, items) -> None:
    seen = set()
    for item in items:
        if item in seen:
            raise IntegrityError(f"duplicate {name}: {item!r}")
        seen.add(item)
