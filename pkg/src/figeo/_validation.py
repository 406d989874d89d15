import numpy as np

from .exceptions import InvalidConfig, InvalidData


def check_series(X, min_samples=1, name="X"):
    """Return ``X`` as a finite 2-D float array of shape (n_samples, n_dims).

    1-D input is treated as a single-channel series.
    """
    try:
        X = np.asarray(X, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidData(f"{name} is not numeric: {exc}") from None
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise InvalidData(f"{name} must be 2-D, got shape {X.shape}")
    if X.shape[0] < min_samples:
        raise InvalidData(f"{name} needs at least {min_samples} samples, got {X.shape[0]}")
    if X.shape[1] == 0:
        raise InvalidData(f"{name} has no columns")
    bad = ~np.isfinite(X)
    if bad.any():
        row = int(np.argwhere(bad)[0, 0])
        raise InvalidData(f"{name} has a non-finite value at row {row}")
    return X


def check_distance_matrix(D, name="D"):
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise InvalidData(f"{name} must be square, got shape {D.shape}")
    if not np.all(np.isfinite(D)):
        raise InvalidData(f"{name} has non-finite entries")
    if np.any(D < 0):
        raise InvalidData(f"{name} has negative entries")
    return D


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise InvalidConfig(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise InvalidConfig(f"{name} must be >= {minimum}, got {value}")
    return int(value)
