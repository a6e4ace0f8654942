"""Small input-validation helpers used at public API boundaries."""

import numbers
import random

import numpy as np

from .errors import InvalidParameterError, NotFittedError


def check_int(value, name, *, min_value=None, max_value=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise InvalidParameterError(f"{name} must be an integer, got {type(value).__name__}")
    value = int(value)
    if min_value is not None and value < min_value:
        raise InvalidParameterError(f"{name} must be >= {min_value}, got {value}")
    if max_value is not None and value > max_value:
        raise InvalidParameterError(f"{name} must be <= {max_value}, got {value}")
    return value


def check_rate(value, name):
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise InvalidParameterError(f"{name} must lie in [0, 1], got {value}")
    return value


def check_window(w, lo=2, hi=8):
    return check_int(w, "w", min_value=lo, max_value=hi)


def check_random_state(seed):
    """Turn ``seed`` into a ``random.Random`` instance.

    Accepts None, an int, or an existing ``random.Random`` (returned as-is so
    callers can thread one stream through several calls).
    """
    if seed is None:
        return random.Random()
    if isinstance(seed, random.Random):
        return seed
    if isinstance(seed, numbers.Integral):
        return random.Random(int(seed))
    raise InvalidParameterError(f"cannot build a random stream from {seed!r}")


def numpy_rng(rng):
    """Derive a numpy Generator from a ``random.Random`` stream."""
    rng = check_random_state(rng)
    return np.random.default_rng(rng.getrandbits(64))


def check_is_fitted(estimator, attributes):
    if isinstance(attributes, str):
        attributes = [attributes]
    if not all(hasattr(estimator, a) for a in attributes):
        raise NotFittedError(
            f"This {type(estimator).__name__} instance is not fitted yet; call 'fit' first."
        )
