"""Small argument checkers used across the package."""
import math
import numbers

import numpy as np


def check_int(value, name, minimum=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if minimum is not None and value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_real(value, name, lo=None, hi=None, lo_open=False, hi_open=False):
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise TypeError(f"{name} must be a real number, got {type(value).__name__}")
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    if lo is not None and (value < lo or (lo_open and value == lo)):
        raise ValueError(f"{name}={value} below allowed range")
    if hi is not None and (value > hi or (hi_open and value == hi)):
        raise ValueError(f"{name}={value} above allowed range")
    return value


def check_level(s, name="level"):
    return check_real(s, name, 0.0, 1.0, lo_open=True, hi_open=True)


def check_array_1d(a, name, min_len=1):
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if arr.size < min_len:
        raise ValueError(f"{name} needs at least {min_len} entries")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_increasing(a, name):
    arr = check_array_1d(a, name, 2)
    if np.any(np.diff(arr) <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    return arr
