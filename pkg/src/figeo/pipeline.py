"""End-to-end pipeline: time series -> distance matrix -> embedding."""

import numpy as np
from scipy.spatial.distance import pdist, squareform
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_series
from .config import PipelineConfig
from .dig import dig_distance_matrix
from .distance import DistanceMatrix, fig_distance_matrix
from .embed import embed
from .exceptions import InvalidConfig, InvalidData
from .features import stride_centers


def distance_from_config(X, cfg, method=None):
    """Distance matrix of ``X`` by ``method`` (default: ``cfg["method"]``)."""
    cfg = cfg if cfg is not None else PipelineConfig()
    method = method or cfg["method"]
    stride, offset = cfg["windows.stride"], cfg["windows.offset"]
    if method == "fig":
        return fig_distance_matrix(X, cfg["basis.b"], cfg["windows.l1"], cfg["windows.l2"],
                                   cfg["fpca.k"], cfg["fpca.normalization"], stride, offset)
    if method == "dig":
        return dig_distance_matrix(X, cfg["dig.n_bins"], cfg["windows.l1"], cfg["windows.l2"],
                                   stride, offset)
    if method == "euclidean":
        X = check_series(X, min_samples=2)
        rows = X[stride_centers(len(X), stride, offset)]
        if len(rows) < 2:
            raise InvalidData("need at least two rows")
        return DistanceMatrix(squareform(pdist(rows)), "euclidean",
                              {"stride": stride, "offset": offset})
    raise InvalidConfig(f"unknown method {method!r}")


def embedding_from_config(D, cfg):
    cfg = cfg if cfg is not None else PipelineConfig()
    t = "auto" if cfg["embed.t"] is None else cfg["embed.t"]
    return embed(D, cfg["embed.r"], cfg["embed.knn"], cfg["embed.alpha"], t, cfg["embed.t_max"],
                 cfg["embed.mds_max_iter"], cfg["embed.mds_tol"])


class FIG(TransformerMixin, BaseEstimator):
    """Low-dimensional embedding of time-series samples from local distributions.

    Each sample is described by the distribution of the observations in a
    window around it. Those local distributions are compared with a
    noise-resilient Mahalanobis distance (``method='fig'``), the histogram
    baseline (``'dig'``) or plain Euclidean distance (``'euclidean'``), and
    the distance matrix is embedded by diffusion potentials and metric MDS.

    Parameters
    ----------
    n_components : int, default=2
        Embedding dimension.
    method : {'fig', 'dig', 'euclidean'}, default='fig'
    n_basis : int, default=7
        Fourier functions per input dimension.
    l1 : int, default=10
        Samples per local distribution estimate.
    l2 : int, default=10
        Neighbouring estimates per local covariance.
    n_pcs : int or None, default=None
        Principal components per local model; ``None`` keeps all.
    normalization : {'exp', 'inv_sqrt'}, default='exp'
    n_bins : int, default=20
        Histogram bins per dimension for ``method='dig'``.
    stride, offset : int, default=1, 0
        Embed samples ``offset, offset + stride, ...`` only.
    knn, alpha, t, t_max, mds_max_iter, mds_tol
        Embedding settings, see :func:`figeo.embed.embed`.

    Attributes
    ----------
    distance_ : DistanceMatrix
    embedding_ : ndarray of shape (n_rows, n_components)
    stress_history_ : list of float
    t_ : int
        Diffusion time used.
    """

    def __init__(self, n_components=2, method="fig", n_basis=7, l1=10, l2=10, n_pcs=None,
                 normalization="exp", n_bins=20, stride=1, offset=0, knn=5, alpha=40.0,
                 t="auto", t_max=100, mds_max_iter=500, mds_tol=1e-6):
        self.n_components = n_components
        self.method = method
        self.n_basis = n_basis
        self.l1 = l1
        self.l2 = l2
        self.n_pcs = n_pcs
        self.normalization = normalization
        self.n_bins = n_bins
        self.stride = stride
        self.offset = offset
        self.knn = knn
        self.alpha = alpha
        self.t = t
        self.t_max = t_max
        self.mds_max_iter = mds_max_iter
        self.mds_tol = mds_tol

    def to_config(self):
        return PipelineConfig({
            "method": self.method, "basis.b": self.n_basis, "windows.l1": self.l1,
            "windows.l2": self.l2, "windows.stride": self.stride, "windows.offset": self.offset,
            "fpca.k": self.n_pcs, "fpca.normalization": self.normalization,
            "dig.n_bins": self.n_bins, "embed.r": self.n_components, "embed.knn": self.knn,
            "embed.alpha": self.alpha, "embed.t": None if self.t in (None, "auto") else self.t,
            "embed.t_max": self.t_max, "embed.mds_max_iter": self.mds_max_iter,
            "embed.mds_tol": self.mds_tol,
        })

    def fit(self, X, y=None):
        cfg = self.to_config()
        self.distance_ = distance_from_config(X, cfg)
        result = embedding_from_config(self.distance_, cfg)
        self.embedding_ = result.Y
        self.stress_history_ = result.stress_history
        self.t_ = result.metadata["t"]
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X, y).embedding_

    def centers(self, n_samples):
        """Sample indices of the embedded rows for a series of ``n_samples``."""
        return stride_centers(n_samples, self.stride, self.offset)


def embedding_distances(Y):
    return squareform(pdist(np.asarray(Y, dtype=float)))
