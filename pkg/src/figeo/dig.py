"""Histogram-based Mahalanobis distance used as the comparison baseline.

Each index gets per-dimension probability histograms of the samples in a
centred window; the distance between two indices is

    d^2(t, s) = (h_t - h_s)^T pinv(C_t + C_s) (h_t - h_s)

with ``C_t`` the ridge-stabilized covariance of histogram rows in a second
window around ``t``.

The pseudo-inverse uses a relative cutoff of 1e-10 on the singular values.
When the summed covariance has low rank (short covariance windows, many
bins), the pair is solved in the span of the two windows' centred
histogram rows instead of the full histogram space; the ridge directions
outside that span always fall under the cutoff there.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_positive_int, check_series
from .basis import fit_domain
from .distance import DistanceMatrix, mirror_upper
from .exceptions import InvalidData
from .features import stride_centers, window_bounds
from .fpca import RIDGE, ridge_covariance

RCOND = 1e-10
# Above this conditioning bound a reduced pair is solved by eigendecomposition.
_KAPPA_FAST = 1e6
# Largest ridge-to-smallest-eigenvalue ratio for the first-order ridge correction.
_EPS_FAST = 1e-6
# Factor columns below this fraction of the window's largest are round-off.
_NULL_COLUMN = 1e-13


@dataclass
class HistogramSet:
    H: np.ndarray
    n_bins: int
    edges: list
    window: int
    centers: np.ndarray

    @property
    def n(self):
        return self.H.shape[0]


def bin_index(X, bounds, n_bins):
    """Equal-width bin of every value, per column, clipped to the outer bins."""
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    u = (np.asarray(X, dtype=float) - lo) / (hi - lo)
    return np.clip(np.floor(u * n_bins).astype(int), 0, n_bins - 1)


def local_histograms(X, L1, n_bins=20, bounds=None, centers=None):
    """Windowed per-dimension histograms, each block normalized to sum to one.

    Bin edges are fixed per dimension from ``bounds`` (default: the padded
    data range) so all windows share them.
    """
    X = check_series(X)
    n_bins = check_positive_int(n_bins, "n_bins", minimum=2)
    L1 = check_positive_int(L1, "L1")
    n, d = X.shape
    if bounds is None:
        bounds = fit_domain(X).bounds if n >= 2 else tuple((v - 0.5, v + 0.5) for v in X[0])
    idx = bin_index(X, bounds, n_bins)
    onehot = np.zeros((n, d * n_bins), dtype=np.int64)
    cols = idx + n_bins * np.arange(d)
    onehot[np.arange(n)[:, None], cols] = 1
    csum = np.vstack([np.zeros((1, d * n_bins), dtype=np.int64), np.cumsum(onehot, axis=0)])
    centers = np.arange(n) if centers is None else np.asarray(centers, dtype=int)
    starts, stops = window_bounds(n, L1, centers)
    counts = csum[stops] - csum[starts]
    H = counts / (stops - starts)[:, None]
    edges = [np.linspace(lo, hi, n_bins + 1) for lo, hi in bounds]
    return HistogramSet(H=H, n_bins=n_bins, edges=edges, window=L1, centers=centers)


def histogram_covariances(H, L2):
    """Ridge-stabilized covariance of histogram rows in each centred window."""
    H = getattr(H, "H", H)
    starts, stops = window_bounds(len(H), check_positive_int(L2, "L2"))
    return np.stack([ridge_covariance(H[s:e]) for s, e in zip(starts, stops)])


def pinv_quadratic(h, C, rcond=RCOND):
    """``h^T pinv(C) h`` for a symmetric PSD ``C`` (or a stack of them)."""
    vals, vecs = np.linalg.eigh(C)
    proj = np.einsum("...ij,...i->...j", vecs, h)
    cut = rcond * vals[..., -1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(vals > cut, proj ** 2 / vals, 0.0)
    return terms.sum(axis=-1)


def dig_pair_distance(t, s, H, covs):
    H = getattr(H, "H", H)
    h = H[t] - H[s]
    C = covs[t] + covs[s]
    q = h @ np.linalg.pinv(C, rcond=RCOND) @ h
    return float(np.sqrt(max(q, 0.0)))


def _helmert(m):
    """Orthonormal basis (m, m-1) of vectors orthogonal to the all-ones vector."""
    q, _ = np.linalg.qr(np.column_stack([np.ones(m), np.eye(m)[:, :m - 1]]))
    return q[:, 1:]


def _centred_factors(H, starts, stops, r):
    """Per-index factor ``Z_t`` (n, Dh, r) with ``Z_t Z_t^T`` = window covariance.

    Columns are mutually orthogonal; their norms are returned as ``sigma``
    (n, r). Columns at round-off level (rank-deficient windows) are set to
    exactly zero and flagged in ``absent``.
    """
    n, Dh = H.shape
    Z = np.zeros((n, Dh, r))
    bases = {}
    for t, (s, e) in enumerate(zip(starts, stops)):
        m = e - s
        if m < 2:
            continue
        rows = H[s:e]
        centred = (rows - rows.mean(axis=0)) / np.sqrt(m)
        if m not in bases:
            bases[m] = _helmert(m)
        Z[t, :, :m - 1] = centred.T @ bases[m]
    U, sigma, _ = np.linalg.svd(Z, full_matrices=False)
    absent = sigma <= _NULL_COLUMN * sigma[:, :1]
    sigma = np.where(absent, 0.0, sigma)
    return U * sigma[:, None, :], sigma, absent


def _cholesky(P):
    """Cholesky factors of a stack of symmetric matrices.

    Returns ``(L, ok)``; ``ok`` is False where a pivot was not positive, and
    the factor of such a matrix is meaningless.
    """
    N, m, _ = P.shape
    L = np.zeros_like(P)
    ok = np.ones(N, dtype=bool)
    for j in range(m):
        row = L[:, j, :j]
        pivot = P[:, j, j] - np.einsum("ni,ni->n", row, row)
        bad = ~(pivot > 0)
        ok &= ~bad
        root = np.sqrt(np.where(bad, 1.0, pivot))
        L[:, j, j] = root
        L[:, j + 1:, j] = (P[:, j + 1:, j] - np.einsum("nki,ni->nk", L[:, j + 1:, :j], row)) / root[:, None]
    return L, ok


def _factor(P, near):
    # LAPACK for the pairs that are almost always positive definite; the
    # pivot-checking loop for the rest, or for all if LAPACK rejects one.
    L = np.empty_like(P)
    ok = np.ones(len(P), dtype=bool)
    far = ~near
    try:
        L[far] = np.linalg.cholesky(P[far])
    except np.linalg.LinAlgError:
        near = np.ones(len(P), dtype=bool)
    if near.any():
        L[near], ok[near] = _cholesky(P[near])
    return L, ok


def _lower_inverse(L):
    """Inverses of a stack of lower-triangular matrices."""
    N, m, _ = L.shape
    X = np.zeros_like(L)
    for j in range(m):
        X[:, j, :] = -np.einsum("ni,nik->nk", L[:, j, :j], X[:, :j, :])
        X[:, j, j] += 1.0
        X[:, j, :] /= L[:, j, j][:, None]
    return X


def _forward(L, b):
    """Solve ``L y = b`` for a stack of lower-triangular ``L``."""
    y = np.empty_like(b)
    for j in range(L.shape[-1]):
        y[:, j] = (b[:, j] - np.einsum("ni,ni->n", L[:, j, :j], y[:, :j])) / L[:, j, j]
    return y


def _backward(L, y):
    """Solve ``L^T x = y`` for a stack of lower-triangular ``L``."""
    x = np.empty_like(y)
    for j in range(L.shape[-1] - 1, -1, -1):
        x[:, j] = (y[:, j] - np.einsum("ni,ni->n", L[:, j + 1:, j], x[:, j + 1:])) / L[:, j, j]
    return x


def _spectrum_bounds(cross, sig_t, sig_s):
    """Bounds ``(lo, hi)`` on the eigenvalues of the stacked factor Gram matrix.

    With orthogonal factor columns the Gram matrix is ``D [[I, R], [R^T, I]] D``
    where ``D`` holds the column norms and ``R`` the cosines between columns,
    so its eigenvalues lie in ``[min(D)^2 (1 - |R|), max(D)^2 (1 + |R|)]``.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        R = np.abs(cross / (sig_t[None, :, None] * sig_s[:, None, :]))
        frob = np.sqrt(np.einsum("nij,nij->n", R, R))
        mixed = np.sqrt(R.sum(axis=1).max(axis=1) * R.sum(axis=2).max(axis=1))
        rho = np.minimum(frob, mixed)
        smax = np.maximum(sig_t.max(), sig_s.max(axis=1))
        smin = np.minimum(sig_t.min(), sig_s.min(axis=1))
        lo = np.where(rho < 1, smin ** 2 * (1 - rho), 0.0)
    lo = np.where(np.isfinite(lo), lo, 0.0)
    return lo, smax ** 2 * (1 + rho)


def _first_order(a, z, eps):
    return np.einsum("ni,ni->n", a, a) - eps * np.einsum("ni,ni->n", z, z)


def _reduced_quadratic(P, g, eps, near, lo, hi, rcond=RCOND):
    """Pinv quadratic form solved in the span of the stacked window factors.

    ``P`` is the Gram matrix of the factors, ``g`` the factors applied to the
    histogram difference and ``eps`` the summed ridge; ``near`` marks pairs
    whose windows overlap, where ``P`` is often singular, and ``lo``/``hi``
    are cheap bounds on its spectrum.

    A pair is certified when its condition number is below 1e6, either by
    ``hi / lo`` or, failing that, by ``trace(P) * trace(P^-1)`` from its
    Cholesky factor. Then every eigenvalue of ``P`` survives the cutoff and
    the form is ``g^T (P + eps I)^-1 P^-1 g``, evaluated as
    ``a^T a - eps a^T P^-1 a`` with ``a = P^-1 g``; the dropped terms are
    below ``(eps / lambda_min)^2`` relative. Other pairs go through an
    eigendecomposition.
    """
    out = np.empty(len(P))
    with np.errstate(divide="ignore", invalid="ignore"):
        cheap = (hi < _KAPPA_FAST * lo) & (eps < _EPS_FAST * lo)
    if cheap.any():
        L = np.linalg.cholesky(P[cheap])
        a = _backward(L, _forward(L, g[cheap]))
        out[cheap] = _first_order(a, _forward(L, a), eps[cheap])
    rest = np.flatnonzero(~cheap)
    if len(rest) == 0:
        return out
    P, g, eps = P[rest], g[rest], eps[rest]
    L, ok = _factor(P, near[rest])
    Li = _lower_inverse(L)
    tr_inv = np.einsum("nij,nij->n", Li, Li)
    tr = np.einsum("nii->n", P)
    with np.errstate(over="ignore", invalid="ignore"):
        fast = ok & (tr * tr_inv < _KAPPA_FAST) & (eps * tr_inv < _EPS_FAST)
    if fast.any():
        Li = Li[fast]
        a = np.einsum("nji,nj->ni", Li, np.einsum("nij,nj->ni", Li, g[fast]))
        out[rest[fast]] = _first_order(a, np.einsum("nij,nj->ni", Li, a), eps[fast])
    slow = ~fast
    if slow.any():
        out[rest[slow]] = _eig_quadratic(P[slow], g[slow], eps[slow], rcond)
    return out


def _dig_reduced(H, starts, stops, block=16):
    n, Dh = H.shape
    r = int((stops - starts).max()) - 1
    Z, sigma, absent = _centred_factors(H, starts, stops, r)
    sq = sigma ** 2
    eps = RIDGE * sq.sum(axis=1) / Dh
    # Absent columns are zero, so a positive diagonal entry decouples them
    # without changing the form; the window's largest variance keeps the
    # conditioning bound honest.
    diag = np.where(absent, sq[:, :1], sq)
    scale = np.sqrt(diag)
    Zflat = Z.transpose(0, 2, 1).reshape(n * r, Dh)
    own = np.einsum("tdi,td->ti", Z, H)
    Q = np.zeros((n, n))
    m = 2 * r
    for c0 in range(0, n - 1, block):
        c1 = min(n - 1, c0 + block)
        Zb = Zflat[c0 * r:c1 * r]
        cross = np.ascontiguousarray((Zb @ Zflat.T).reshape(c1 - c0, r, n, r).transpose(0, 2, 1, 3))
        onto_all = (Zb @ H.T).reshape(c1 - c0, r, n)
        all_onto = np.ascontiguousarray((Zflat @ H[c0:c1].T).reshape(n, r, c1 - c0).transpose(2, 0, 1))
        for tl, t in enumerate(range(c0, c1)):
            N = n - t - 1
            X = cross[tl, t + 1:]
            P = np.zeros((N, m, m))
            P[:, :r, r:] = X
            P[:, r:, :r] = X.transpose(0, 2, 1)
            flat = P.reshape(N, m * m)
            flat[:, :r * (m + 1):m + 1] = diag[t]
            flat[:, r * (m + 1)::m + 1] = diag[t + 1:]
            g = np.empty((N, m))
            g[:, :r] = (onto_all[tl, :, t][:, None] - onto_all[tl, :, t + 1:]).T
            g[:, r:] = all_onto[tl, t + 1:] - own[t + 1:]
            near = starts[t + 1:] < stops[t]
            lo, hi = _spectrum_bounds(X, scale[t], scale[t + 1:])
            Q[t, t + 1:] = _reduced_quadratic(P, g, eps[t] + eps[t + 1:], near, lo, hi)
    return Q


def _eig_quadratic(P, g, eps, rcond=RCOND):
    # Eigenvalue lam of the factor Gram maps to lam + eps in the full space.
    vals, vecs = np.linalg.eigh(P)
    proj = np.einsum("nij,ni->nj", vecs, g)
    e = eps[:, None]
    cut = rcond * (vals[:, -1:] + e)
    keep = (vals + e > cut) & (vals > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(keep, proj ** 2 / (vals * (vals + e)), 0.0)
    return terms.sum(axis=1)


def _dig_dense(H, covs_fn, n):
    Q = np.zeros((n, n))
    covs = covs_fn()
    for t in range(n - 1):
        S = np.arange(t + 1, n)
        Q[t, S] = pinv_quadratic(H[t] - H[S], covs[t] + covs[S])
    return Q


def dig_distances_from_histograms(H, L2):
    """Distance matrix between histogram rows (n, Dh) with covariance window ``L2``."""
    H = np.asarray(getattr(H, "H", H), dtype=float)
    n, Dh = H.shape
    L2 = check_positive_int(L2, "L2")
    starts, stops = window_bounds(n, L2)
    r = int((stops - starts).max()) - 1
    if n < 2:
        raise InvalidData("need at least two histogram rows")
    if r == 0:
        return np.zeros((n, n))
    if 2 * r < Dh:
        Q = _dig_reduced(H, starts, stops)
    else:
        Q = _dig_dense(H, lambda: histogram_covariances(H, L2), n)
    return np.sqrt(np.maximum(mirror_upper(Q), 0.0))


def dig_distance_matrix(X, n_bins=20, l1=10, l2=10, stride=1, offset=0):
    X = check_series(X, min_samples=2)
    centers = stride_centers(len(X), stride, offset)
    hs = local_histograms(X, l1, n_bins, centers=centers)
    if hs.n < 2:
        raise InvalidData("need at least two histogram rows")
    D = dig_distances_from_histograms(hs.H, l2)
    meta = {"l1": l1, "l2": l2, "n_bins": n_bins, "stride": stride, "offset": offset}
    return DistanceMatrix(D, "dig", meta)


class DIGDistance(BaseEstimator):
    """Pairwise histogram Mahalanobis distances of a time series.

    Parameters
    ----------
    n_bins : int, default=20
        Histogram bins per input dimension.
    l1 : int, default=10
        Window of samples per histogram.
    l2 : int, default=10
        Window of histograms per local covariance.
    stride, offset : int
        Keep histogram centres ``offset, offset + stride, ...``.
    """

    def __init__(self, n_bins=20, l1=10, l2=10, stride=1, offset=0):
        self.n_bins = n_bins
        self.l1 = l1
        self.l2 = l2
        self.stride = stride
        self.offset = offset

    def fit(self, X, y=None):
        X = check_series(X, min_samples=2)
        centers = stride_centers(len(X), self.stride, self.offset)
        self.histograms_ = local_histograms(X, self.l1, self.n_bins, centers=centers)
        self.distance_ = dig_distances_from_histograms(self.histograms_.H, self.l2)
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).distance_
