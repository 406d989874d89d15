"""Functional Mahalanobis distances between windowed basis averages.

The distance between rows ``i`` and ``j`` sums two one-sided terms, one in
the local principal-component frame of each index:

    d^2(i, j) = sum_k (w_ik (s_iik - s_ijk))^2 + sum_k (w_jk (s_jik - s_jjk))^2

where ``s_ijk`` is the score of feature row ``j`` on component ``k`` of the
model at ``i`` and ``w_ik`` the normalization weight of that component.
Inside a difference the local mean cancels, so each one-sided term is a
quadratic form in ``a_i - a_j``; the matrix assembly uses that.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import os

import numpy as np
from scipy.spatial.distance import pdist, squareform
from sklearn.base import BaseEstimator

from ._validation import check_positive_int, check_series
from .basis import fit_domain
from .exceptions import InvalidConfig, InvalidData
from .features import FeatureMatrix, compute_features, stride_centers, window_bounds
from .fpca import RIDGE, _sorted_eigh, inv_sqrt_psd, normalization_weights, ridge_covariance

METHODS = ("fig", "dig", "euclidean")


@dataclass
class DistanceMatrix:
    """Symmetric, zero-diagonal, nonnegative matrix plus how it was made."""

    D: np.ndarray
    method: str = "fig"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        D = np.asarray(self.D, dtype=float)
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise InvalidData(f"distance matrix must be square, got {D.shape}")
        if self.method not in METHODS:
            raise InvalidConfig(f"unknown method {self.method!r}")
        self.D = D

    @property
    def n(self):
        return self.D.shape[0]

    def upper(self):
        return self.D[np.triu_indices(self.n, k=1)]


def mirror_upper(D2):
    """Symmetric matrix from the strict upper triangle of ``D2``; zero diagonal."""
    out = np.triu(D2, k=1)
    return out + out.T


def resolve_threads(n_jobs=None):
    if n_jobs is None:
        n_jobs = int(os.environ.get("FIG_THREADS", "0") or 0)
    if n_jobs <= 0:
        n_jobs = os.cpu_count() or 1
    return n_jobs


def _chunks(n, size):
    return [(c, min(n, c + size)) for c in range(0, n, size)]


def _projection_block(A, starts, stops, c0, c1, Wm, K, mode):
    """Whitened, weighted eigenvectors for rows ``c0..c1``: shape (c, M, K)."""
    covs = np.stack([ridge_covariance(A[starts[i]:stops[i]]) for i in range(c0, c1)])
    if Wm is not None:
        covs = Wm @ covs @ Wm
    vals, vecs = _sorted_eigh(covs, K)
    weights = np.empty_like(vals)
    skipped = 0
    for r in range(len(vals)):
        weights[r], s = normalization_weights(vals[r], mode)
        skipped += s
    V = vecs * weights[:, None, :]
    if Wm is not None:
        V = Wm @ V
    return V, skipped


def _low_rank_rows(A, starts, stops, c0, c1):
    """One-sided terms for ``exp`` weights, all components and ``W = I``.

    The window scatter has rank below its row count, and the ridge lifts its
    null space to one eigenvalue ``rho`` with one weight ``w0``. Hence
    ``|d V_i|^2 = w0^2 |d|^2 + sum_k (w_k^2 - w0^2) (u_k . d)^2`` over the
    leading directions only, read off a thin SVD of the centred window.
    """
    n, M = A.shape
    T = np.empty((c1 - c0, n))
    for r, i in enumerate(range(c0, c1)):
        rows = A[starts[i]:stops[i]]
        m = len(rows)
        centred = rows - rows.mean(axis=0)
        _, sv, Vt = np.linalg.svd(centred, full_matrices=False)
        lam = sv ** 2 / m
        rho = RIDGE * lam.sum() / M
        (w0,), _ = normalization_weights([rho], "exp")
        w, _ = normalization_weights(lam + rho, "exp")
        diff = A - A[i]
        T[r] = w0 ** 2 * np.einsum("ij,ij->i", diff, diff) + ((diff @ Vt.T) ** 2) @ (w ** 2 - w0 ** 2)
    return T


def _one_sided_rows(A, L2, Wm, K, mode, c0, c1):
    starts, stops = window_bounds(len(A), L2)
    if mode == "exp" and K == A.shape[1] and Wm is None and (stops - starts).max() <= K:
        return _low_rank_rows(A, starts, stops, c0, c1), 0
    V, skipped = _projection_block(A, starts, stops, c0, c1, Wm, K, mode)
    T = np.empty((c1 - c0, len(A)))
    for r, i in enumerate(range(c0, c1)):
        P = A @ V[r]
        T[r] = np.sum((P - P[i]) ** 2, axis=1)
    return T, skipped


def fig_distances_from_features(A, L2, W=None, n_components=None, normalization="exp",
                                n_jobs=None, chunk_size=64):
    """Distance matrix from feature rows ``A`` (n, M).

    Returns ``(D, n_skipped)`` where ``n_skipped`` counts components dropped
    by the ``inv_sqrt`` eigenvalue floor.
    """
    A = np.asarray(A, dtype=float)
    n, M = A.shape
    L2 = check_positive_int(L2, "L2")
    K = M if n_components is None else check_positive_int(n_components, "n_components")
    if K > M:
        raise InvalidConfig(f"n_components={K} exceeds the number of features {M}")
    normalization_weights([0.0], normalization)
    Wm = None if W is None or np.array_equal(W, np.eye(M)) else inv_sqrt_psd(W)

    blocks = _chunks(n, chunk_size)
    n_jobs = resolve_threads(n_jobs)
    run = lambda b: _one_sided_rows(A, L2, Wm, K, normalization, *b)  # noqa: E731
    if n_jobs > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(run, blocks))
    else:
        results = [run(b) for b in blocks]
    T = np.vstack([r[0] for r in results])
    skipped = sum(r[1] for r in results)
    D2 = T + T.T
    return np.sqrt(np.maximum(mirror_upper(D2), 0.0)), skipped


def fig_pair_distance(i, j, models, F, W=None, normalization="exp"):
    """Distance between rows ``i`` and ``j`` directly from normalized scores."""
    mi, mj = models[i], models[j]
    if mi.K != mj.K:
        raise InvalidConfig(f"models at {i} and {j} have different K ({mi.K} vs {mj.K})")
    A = F.A_hat if isinstance(F, FeatureMatrix) else np.asarray(F, dtype=float)
    Wm = np.eye(A.shape[1]) if W is None else inv_sqrt_psd(W)
    total = 0.0
    for m, own, other in ((mi, A[i], A[j]), (mj, A[j], A[i])):
        w, _ = normalization_weights(m.eigvals, normalization)
        dirs = Wm @ m.eigvecs
        omega_own = w * ((own - m.mean) @ dirs)
        omega_other = w * ((other - m.mean) @ dirs)
        total += np.sum((omega_own - omega_other) ** 2)
    return float(np.sqrt(total))


def fig_features(X, n_basis=7, l1=10, stride=1, offset=0):
    """Fit the basis domain on ``X`` and return strided windowed features."""
    X = check_series(X, min_samples=2)
    spec = fit_domain(X, check_positive_int(n_basis, "n_basis"))
    centers = stride_centers(len(X), stride, offset)
    return compute_features(X, spec, check_positive_int(l1, "l1"), centers=centers)


def fig_distance_matrix(X, n_basis=7, l1=10, l2=10, n_components=None, normalization="exp",
                        stride=1, offset=0, n_jobs=None):
    """Full pipeline from a time series to its functional Mahalanobis distances."""
    X = check_series(X, min_samples=2)
    F = fig_features(X, n_basis, l1, stride, offset)
    if F.n < 2:
        raise InvalidData("need at least two feature rows")
    D, skipped = fig_distances_from_features(F.A_hat, l2, None, n_components, normalization, n_jobs)
    meta = {"l1": l1, "l2": l2, "n_basis": n_basis, "n_components": n_components or F.A_hat.shape[1],
            "normalization": normalization, "stride": stride, "offset": offset,
            "skipped_components": skipped}
    return DistanceMatrix(D, "fig", meta)


def euclidean_distance_matrix(X):
    X = check_series(X)
    return DistanceMatrix(squareform(pdist(X)), "euclidean", {})


class FIGDistance(BaseEstimator):
    """Pairwise functional Mahalanobis distances of a time series.

    Parameters
    ----------
    n_basis : int, default=7
        Fourier functions per input dimension.
    l1 : int, default=10
        Window for averaging basis values into features.
    l2 : int, default=10
        Window for local means and covariances of the features.
    n_components : int or None, default=None
        Components kept per local model (``None`` keeps all).
    normalization : {'exp', 'inv_sqrt'}, default='exp'
    stride, offset : int
        Keep feature rows ``offset, offset + stride, ...``.

    Attributes
    ----------
    features_ : FeatureMatrix
    distance_ : ndarray of shape (n_rows, n_rows)
    n_skipped_components_ : int
    """

    def __init__(self, n_basis=7, l1=10, l2=10, n_components=None, normalization="exp",
                 stride=1, offset=0, n_jobs=None):
        self.n_basis = n_basis
        self.l1 = l1
        self.l2 = l2
        self.n_components = n_components
        self.normalization = normalization
        self.stride = stride
        self.offset = offset
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        self.features_ = fig_features(X, self.n_basis, self.l1, self.stride, self.offset)
        self.distance_, self.n_skipped_components_ = fig_distances_from_features(
            self.features_.A_hat, self.l2, None, self.n_components, self.normalization, self.n_jobs)
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).distance_
