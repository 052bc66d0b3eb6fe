"""Input validation helpers used at public API boundaries."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError


def as_vector(x, name: str, *, size: int | None = None) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ConfigError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    if size is not None and arr.shape[0] != size:
        raise ConfigError(f"{name} has length {arr.shape[0]}, expected {size}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} contains non-finite values")
    return arr


def as_matrix(x, name: str, *, shape: tuple[int | None, int | None] = (None, None)) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1 and shape[0] is None and shape[1] is not None and arr.size == shape[1]:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ConfigError(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    for axis, want in enumerate(shape):
        if want is not None and arr.shape[axis] != want:
            raise ConfigError(f"{name} has shape {arr.shape}, expected axis {axis} of size {want}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} contains non-finite values")
    return arr


def as_points(y, dim: int, name: str = "y") -> tuple[np.ndarray, bool]:
    """Return ``(points, single)`` where points has shape (n, dim)."""
    arr = np.asarray(y, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ConfigError(f"{name} has shape {np.shape(y)}, expected (..., {dim})")
    return arr, single


def check_count(value, name: str, *, minimum: int = 0) -> int:
    if isinstance(value, (bool, np.bool_)) or int(value) != value:
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return value


def readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.flags.writeable = False
    return arr
