"""Input validation helpers shared by the estimators and the functional API."""
import numbers

import numpy as np

SEED_MAX = 2**64 - 1


class InvalidInputError(ValueError):
    """Raised when an argument violates an operation's precondition."""


class NotFoundError(LookupError):
    """Raised when a node id or country is unknown."""


class SourceError(IOError):
    """Raised when a trend source cannot deliver data (retryable for live sources)."""


def check_positive_int(value, name):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise InvalidInputError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_non_negative_int(value, name):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 0:
        raise InvalidInputError(f"{name} must be a non-negative integer, got {value!r}")
    return int(value)


def check_seed(seed):
    """Validate a 64-bit unsigned seed."""
    if isinstance(seed, bool) or not isinstance(seed, numbers.Integral):
        raise InvalidInputError(f"seed must be an integer, got {seed!r}")
    if not 0 <= seed <= SEED_MAX:
        raise InvalidInputError(f"seed must lie in [0, 2**64), got {seed}")
    return int(seed)


def check_probability(value, name):
    if not 0.0 <= float(value) <= 1.0:
        raise InvalidInputError(f"{name} must lie in [0, 1], got {value!r}")
    return float(value)


def check_chain(chain):
    """Return ``chain`` as a finite 1-d float array."""
    arr = np.asarray(chain, dtype=float)
    if arr.ndim != 1:
        raise InvalidInputError(f"chain must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("chain contains non-finite values")
    return arr
