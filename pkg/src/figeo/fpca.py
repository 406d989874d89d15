"""Local functional PCA of windowed basis averages.

For every index ``i`` the feature rows inside a centred window are used to
estimate a local mean and (population) covariance. The eigenpairs of the
whitened covariance give principal component scores of any other feature
row relative to that local model; scores are normalized by their
eigenvalue before entering a distance.
"""

from dataclasses import dataclass
import warnings

import numpy as np

from ._validation import check_positive_int
from .exceptions import InvalidConfig
from .features import FeatureMatrix, window_bounds

EIG_CLAMP = 1e-8
LAMBDA_FLOOR = 1e-12
RIDGE = 1e-10
NORMALIZATIONS = ("exp", "inv_sqrt")


def _rows(F):
    return F.A_hat if isinstance(F, FeatureMatrix) else np.asarray(F, dtype=float)


def local_mean(F, i, L2):
    A = _rows(F)
    (s,), (e,) = window_bounds(len(A), L2, [i])
    return A[s:e].mean(axis=0)


def ridge_covariance(window_rows):
    """Population covariance of ``window_rows`` with a small trace-scaled ridge."""
    window_rows = np.asarray(window_rows, dtype=float)
    centered = window_rows - window_rows.mean(axis=0)
    cov = centered.T @ centered / len(window_rows)
    cov = 0.5 * (cov + cov.T)
    M = cov.shape[0]
    cov[np.diag_indices(M)] += RIDGE * np.trace(cov) / M
    return cov


def local_covariance(F, i, L2):
    A = _rows(F)
    (s,), (e,) = window_bounds(len(A), L2, [i])
    return ridge_covariance(A[s:e])


def inv_sqrt_psd(W):
    """Symmetric inverse square root of a positive-definite matrix."""
    W = np.asarray(W, dtype=float)
    if np.array_equal(W, np.eye(len(W))):
        return np.eye(len(W))
    vals, vecs = np.linalg.eigh(0.5 * (W + W.T))
    if vals.min() <= 0:
        raise InvalidConfig("Gram matrix W must be positive definite")
    return (vecs / np.sqrt(vals)) @ vecs.T


def fix_signs(vecs):
    """Flip eigenvector columns so their first nonzero entry is positive.

    Works on a single (M, K) matrix or a stack (..., M, K).
    """
    nonzero = np.abs(vecs) > 1e-12
    first = np.argmax(nonzero, axis=-2)
    lead = np.take_along_axis(vecs, first[..., None, :], axis=-2)
    signs = np.where(lead < 0, -1.0, 1.0)
    return vecs * signs


def _sorted_eigh(mats, K):
    vals, vecs = np.linalg.eigh(mats)
    vals = vals[..., ::-1][..., :K]
    vecs = vecs[..., ::-1][..., :K]
    vals = np.where((vals < 0) & (vals >= -EIG_CLAMP), 0.0, vals)
    return vals, fix_signs(vecs)


def eigendecompose(cov, W=None, K=None):
    """Top-``K`` eigenpairs of ``W^{-1/2} cov W^{-1/2}``, descending.

    Returns ``(eigvals, eigvecs)`` with eigenvectors as columns.
    """
    cov = np.asarray(cov, dtype=float)
    M = cov.shape[0]
    K = M if K is None else check_positive_int(K, "K")
    if K > M:
        raise InvalidConfig(f"K={K} exceeds the number of basis features {M}")
    if W is not None:
        Wm = inv_sqrt_psd(W)
        cov = Wm @ cov @ Wm
    return _sorted_eigh(0.5 * (cov + cov.T), K)


@dataclass(frozen=True)
class LocalModel:
    index: int
    mean: np.ndarray
    cov: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray

    @property
    def K(self):
        return len(self.eigvals)

    @classmethod
    def from_covariance(cls, mean, cov, W=None, K=None, index=-1):
        vals, vecs = eigendecompose(cov, W, K)
        return cls(index=index, mean=np.asarray(mean, dtype=float), cov=np.asarray(cov),
                   eigvals=vals, eigvecs=vecs)


def fit_local_models(F, L2, W=None, K=None):
    """Build one :class:`LocalModel` per feature row."""
    A = _rows(F)
    starts, stops = window_bounds(len(A), check_positive_int(L2, "L2"))
    models = []
    for i, (s, e) in enumerate(zip(starts, stops)):
        rows = A[s:e]
        models.append(LocalModel.from_covariance(rows.mean(axis=0), ridge_covariance(rows), W, K, i))
    return models


def pc_score(a_j, model, W, k):
    """Score of feature row ``a_j`` on component ``k`` of ``model``."""
    if not 0 <= k < model.K:
        raise InvalidConfig(f"component {k} outside 0..{model.K - 1}")
    direction = inv_sqrt_psd(W) @ model.eigvecs[:, k] if W is not None else model.eigvecs[:, k]
    return float((np.asarray(a_j) - model.mean) @ direction)


def normalization_weights(eigvals, mode="exp", floor=LAMBDA_FLOOR):
    """Per-component multipliers turning raw scores into normalized scores.

    Returns ``(weights, n_skipped)``. In ``inv_sqrt`` mode components with an
    eigenvalue at or below ``floor`` get weight zero and are counted.
    """
    eigvals = np.asarray(eigvals, dtype=float)
    if mode == "exp":
        return np.exp(-eigvals), 0
    if mode == "inv_sqrt":
        keep = eigvals > floor
        weights = np.zeros_like(eigvals)
        weights[keep] = 1.0 / np.sqrt(eigvals[keep])
        return weights, int(np.count_nonzero(~keep))
    raise InvalidConfig(f"unknown normalization {mode!r}; expected one of {NORMALIZATIONS}")


def normalize_score(s, lam, mode="exp"):
    """Normalize a single score; skipped ``inv_sqrt`` components return 0."""
    (w,), _ = normalization_weights([lam], mode)
    return float(s) * float(w)


def vector_mahalanobis_direct(u, v, C_u, C_v):
    """Two-sided Mahalanobis distance via explicit inverses of both covariances."""
    diff = np.asarray(u, dtype=float) - np.asarray(v, dtype=float)
    inv = []
    for C in (C_u, C_v):
        C = np.asarray(C, dtype=float)
        try:
            if np.linalg.cond(C) > 1e14:
                raise np.linalg.LinAlgError
            inv.append(np.linalg.inv(C))
        except np.linalg.LinAlgError:
            warnings.warn("singular covariance; using pseudo-inverse", RuntimeWarning, stacklevel=2)
            inv.append(np.linalg.pinv(C))
    return float(np.sqrt(max(diff @ (inv[0] + inv[1]) @ diff, 0.0)))


def vector_mahalanobis_pc(u, v, C_u, C_v, m_u=None, m_v=None, mode="inv_sqrt"):
    """Same distance through principal component scores of each covariance.

    The means only shift the scores and cancel in the differences, so they
    default to zero.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    m_u = np.zeros_like(u) if m_u is None else m_u
    m_v = np.zeros_like(v) if m_v is None else m_v
    total = 0.0
    for a, b, C, m in ((u, v, C_u, m_u), (v, u, C_v, m_v)):
        vals, vecs = eigendecompose(C)
        w, _ = normalization_weights(vals, mode)
        s_own = vecs.T @ (a - m)
        s_other = vecs.T @ (b - m)
        total += np.sum((w * (s_own - s_other)) ** 2)
    return float(np.sqrt(total))
