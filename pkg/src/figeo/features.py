"""Windowed basis averages: one feature row per time index."""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_positive_int, check_series
from .basis import BasisSpec, basis_matrix, fit_domain
from .exceptions import InvalidData


def window_indices(i, n, L):
    """Centred window of length ``L`` at index ``i``, clamped to ``[0, n)``.

    Even lengths put ``L // 2`` samples before the centre and ``L // 2 - 1``
    after it.
    """
    if not 0 <= i < n:
        raise InvalidData(f"index {i} outside series of length {n}")
    start = max(0, i - L // 2)
    stop = min(n, i + (L + 1) // 2)
    return range(start, stop)


def window_bounds(n, L, centers=None):
    """Vectorised :func:`window_indices`: arrays of starts and (exclusive) stops."""
    centers = np.arange(n) if centers is None else np.asarray(centers, dtype=int)
    starts = np.maximum(0, centers - L // 2)
    stops = np.minimum(n, centers + (L + 1) // 2)
    return starts, stops


def windowed_mean(values, L, centers=None, neighbors=None):
    """Mean of ``values`` rows over each centred window (or explicit neighbor sets)."""
    values = np.asarray(values, dtype=float)
    if neighbors is not None:
        return np.stack([values[np.asarray(nb, dtype=int)].mean(axis=0) for nb in neighbors])
    starts, stops = window_bounds(len(values), L, centers)
    out = np.empty((len(starts), values.shape[1]))
    for r, (s, e) in enumerate(zip(starts, stops)):
        out[r] = values[s:e].mean(axis=0)
    return out


@dataclass
class FeatureMatrix:
    """Windowed basis averages.

    ``A_hat[r]`` is the mean basis vector over the window centred at sample
    ``centers[r]`` of the original series.
    """

    A_hat: np.ndarray
    spec: BasisSpec
    window: int
    centers: np.ndarray

    @property
    def n(self):
        return self.A_hat.shape[0]


def compute_features(X, spec, L1, centers=None, neighbors=None):
    """Average the basis over a centred window of length ``L1`` at every index.

    ``centers`` restricts the output to a subset of time indices (same
    result as computing every row then selecting). ``neighbors`` overrides
    the time window with explicit index sets, one per output row.
    """
    X = check_series(X)
    L1 = check_positive_int(L1, "L1")
    phi = basis_matrix(X, spec)
    A_hat = windowed_mean(phi, L1, centers=centers, neighbors=neighbors)
    if centers is None:
        centers = np.arange(len(A_hat)) if neighbors is not None else np.arange(len(X))
    return FeatureMatrix(A_hat=A_hat, spec=spec, window=L1, centers=np.asarray(centers, dtype=int))


def stride_centers(n, stride, offset=0):
    stride = check_positive_int(stride, "stride")
    return np.arange(offset, n, stride)


def stride_subsample(F, stride, offset=0):
    """Keep rows ``offset, offset + stride, ...`` of a :class:`FeatureMatrix`."""
    keep = stride_centers(F.n, stride, offset)
    return FeatureMatrix(A_hat=F.A_hat[keep], spec=F.spec, window=F.window, centers=F.centers[keep])


class WindowedFeatures(TransformerMixin, BaseEstimator):
    """Transformer producing windowed Fourier-basis averages of a time series.

    Rows of ``X`` must be ordered in time. The domain of the basis is learned
    in :meth:`fit`; :meth:`transform` windows over the series it is given.

    Parameters
    ----------
    n_basis : int, default=7
    window : int, default=10
        Window length used to average the basis values.
    stride : int, default=1
        Keep every ``stride``-th window centre.
    offset : int, default=0
        First kept window centre.
    """

    def __init__(self, n_basis=7, window=10, stride=1, offset=0):
        self.n_basis = n_basis
        self.window = window
        self.stride = stride
        self.offset = offset

    def fit(self, X, y=None):
        X = check_series(X, min_samples=2)
        self.spec_ = fit_domain(X, check_positive_int(self.n_basis, "n_basis"))
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "spec_")
        X = check_series(X)
        centers = stride_centers(len(X), self.stride, self.offset)
        return compute_features(X, self.spec_, self.window, centers=centers).A_hat
