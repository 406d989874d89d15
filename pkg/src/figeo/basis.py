"""Orthonormal Fourier basis evaluated on min-max rescaled samples.

A multivariate sample ``x`` of dimension ``d`` is mapped to an ``M = B * d``
vector by evaluating ``B`` scalar Fourier functions on every coordinate and
concatenating the per-dimension blocks.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_positive_int, check_series
from .exceptions import InvalidConfig, InvalidData

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class BasisSpec:
    """Basis family, functions per dimension and per-dimension domain bounds."""

    per_dim_count: int
    bounds: tuple
    family: str = "fourier"

    def __post_init__(self):
        check_positive_int(self.per_dim_count, "per_dim_count")
        if self.family != "fourier":
            raise InvalidConfig(f"unsupported basis family {self.family!r}")
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if not bounds:
            raise InvalidConfig("bounds must cover at least one dimension")
        for j, (lo, hi) in enumerate(bounds):
            if not lo < hi:
                raise InvalidConfig(f"dimension {j}: lower bound {lo} is not below {hi}")
        object.__setattr__(self, "bounds", bounds)

    @property
    def data_dim(self):
        return len(self.bounds)

    @property
    def n_features(self):
        return self.per_dim_count * self.data_dim

    @property
    def lower(self):
        return np.array([b[0] for b in self.bounds])

    @property
    def upper(self):
        return np.array([b[1] for b in self.bounds])


def fit_domain(X, per_dim_count=7):
    """Learn padded per-column bounds from data.

    Constant columns get the unit interval centred on their value.
    """
    X = check_series(X, min_samples=2)
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    pad = 1e-9 * (hi - lo + 1.0)
    bounds = []
    for l, h, p in zip(lo, hi, pad):
        if h == l:
            bounds.append((l - 0.5, l + 0.5))
        else:
            bounds.append((l - p, h + p))
    return BasisSpec(per_dim_count=per_dim_count, bounds=tuple(bounds))


def _fourier_columns(u, B):
    # u: array of values in [0, 1]; returns u.shape + (B,)
    out = np.empty(np.shape(u) + (B,))
    out[..., 0] = 1.0
    for idx in range(1, B):
        k = (idx + 1) // 2
        arg = 2.0 * np.pi * k * u
        out[..., idx] = SQRT2 * (np.cos(arg) if idx % 2 == 1 else np.sin(arg))
    return out


def eval_scalar_fourier(u, B):
    """Evaluate the first ``B`` orthonormal Fourier functions on [0, 1] at ``u``.

    Values outside [0, 1] are clamped to the boundary.
    """
    B = check_positive_int(B, "B")
    u = min(max(float(u), 0.0), 1.0)
    return _fourier_columns(np.asarray(u), B)


def rescale(X, spec):
    """Affinely map each column onto [0, 1] using ``spec.bounds`` and clamp."""
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != spec.data_dim:
        raise InvalidData(f"expected {spec.data_dim} dimensions, got {X.shape[-1]}")
    U = (X - spec.lower) / (spec.upper - spec.lower)
    return np.clip(U, 0.0, 1.0)


def basis_matrix(X, spec):
    """Basis values for every row of ``X``; shape (n_samples, B * d)."""
    U = rescale(np.atleast_2d(X), spec)
    cols = _fourier_columns(U, spec.per_dim_count)  # (n, d, B)
    return cols.reshape(U.shape[0], spec.n_features)


def eval_basis(x, spec):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InvalidData(f"expected a single sample vector, got shape {x.shape}")
    return basis_matrix(x[None, :], spec)[0]


def gram(spec, quadrature=False, n_nodes=10001):
    """Gram matrix of the basis over the unit cube.

    The Fourier family is orthonormal, so the closed form is the identity.
    With ``quadrature=True`` each one-dimensional block is integrated with
    composite Simpson on ``n_nodes`` nodes and placed on the block diagonal.
    Cross-dimension blocks are taken as zero since each block is treated as
    its own marginal expansion.
    """
    M = spec.n_features
    if not quadrature:
        return np.eye(M)
    from scipy.integrate import simpson

    if n_nodes % 2 == 0:
        n_nodes += 1
    u = np.linspace(0.0, 1.0, n_nodes)
    phi = _fourier_columns(u, spec.per_dim_count)
    block = simpson(phi[:, :, None] * phi[:, None, :], x=u, axis=0)
    block = 0.5 * (block + block.T)
    return np.kron(np.eye(spec.data_dim), block)


class FourierBasis(TransformerMixin, BaseEstimator):
    """Map samples to concatenated per-dimension Fourier basis values.

    Parameters
    ----------
    n_basis : int, default=7
        Number of Fourier functions per input dimension.

    Attributes
    ----------
    spec_ : BasisSpec
        Domain bounds learned in :meth:`fit`.
    n_features_in_ : int
    """

    def __init__(self, n_basis=7):
        self.n_basis = n_basis

    def fit(self, X, y=None):
        X = check_series(X, min_samples=2)
        self.spec_ = fit_domain(X, check_positive_int(self.n_basis, "n_basis"))
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "spec_")
        return basis_matrix(check_series(X), self.spec_)
