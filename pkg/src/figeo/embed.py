"""Diffusion-potential embedding of a precomputed distance matrix.

Pipeline: alpha-decay affinities with a k-NN adaptive bandwidth, a
row-stochastic diffusion operator, diffusion time picked at the knee of the
von Neumann entropy curve, log-potential distances, then metric MDS
(classical MDS initialization refined by SMACOF).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist, squareform
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_distance_matrix, check_positive_int, check_series
from .exceptions import DisconnectedPoint, IdenticalPoints, InvalidConfig
from .fpca import fix_signs

POTENTIAL_EPS = 1e-7


@dataclass
class AffinityGraph:
    K: np.ndarray
    knn: int
    alpha: float
    bandwidth: np.ndarray


@dataclass
class DiffusionOperator:
    P: np.ndarray
    degrees: np.ndarray = None
    t: int = None


@dataclass
class Embedding:
    Y: np.ndarray
    stress_history: list
    metadata: dict = field(default_factory=dict)

    @property
    def r(self):
        return self.Y.shape[1]


def _bandwidths(D, knn):
    n = len(D)
    off = D[~np.eye(n, dtype=bool)].reshape(n, n - 1)
    ordered = np.sort(off, axis=1)
    eps = ordered[:, knn - 1].copy()
    for i in np.flatnonzero(eps == 0):
        positive = ordered[i][ordered[i] > 0]
        eps[i] = positive[0] if len(positive) else 1.0
    return eps


def alpha_decay_kernel(D, knn=5, alpha=40.0):
    """Symmetrized alpha-decay affinities ``exp(-(D_ij / eps_i) ** alpha)``.

    ``eps_i`` is the distance from ``i`` to its ``knn``-th nearest other point.
    """
    D = check_distance_matrix(D)
    n = len(D)
    knn = check_positive_int(knn, "knn")
    if knn >= n:
        raise InvalidConfig(f"knn={knn} must be smaller than the number of points {n}")
    if alpha <= 0:
        raise InvalidConfig("alpha must be positive")
    if not np.any(D > 0):
        raise IdenticalPoints("all pairwise distances are zero")
    eps = _bandwidths(D, knn)
    with np.errstate(over="ignore"):
        Kt = np.exp(-np.power(D / eps[:, None], alpha))
    return AffinityGraph(K=0.5 * (Kt + Kt.T), knn=knn, alpha=float(alpha), bandwidth=eps)


def row_normalize(K):
    K = K.K if isinstance(K, AffinityGraph) else np.asarray(K, dtype=float)
    degrees = K.sum(axis=1)
    zero = np.flatnonzero(degrees <= 0)
    if len(zero):
        raise DisconnectedPoint(zero[0])
    return DiffusionOperator(P=K / degrees[:, None], degrees=degrees)


def _operator_spectrum(op):
    P = op.P
    if op.degrees is not None:
        root = np.sqrt(op.degrees)
        A = root[:, None] * P / root[None, :]
        return np.linalg.eigvalsh(0.5 * (A + A.T))
    return np.real(np.linalg.eigvals(P))


def von_neumann_entropy(eigvals, t_max=100):
    """Entropy of the normalized ``|eigvals| ** t`` for ``t = 1..t_max``."""
    mags = np.abs(np.asarray(eigvals, dtype=float))
    out = np.empty(t_max)
    for t in range(1, t_max + 1):
        p = mags ** t
        total = p.sum()
        p = p / total if total > 0 else p
        p = p[p > 0]
        out[t - 1] = -np.sum(p * np.log(p))
    return out


def knee_point(values):
    """1-based position farthest from the chord joining the first and last points."""
    values = np.asarray(values, dtype=float)
    x = np.arange(1, len(values) + 1, dtype=float)
    x1, y1, x2, y2 = x[0], values[0], x[-1], values[-1]
    cross = np.abs((x2 - x1) * (y1 - values) - (x1 - x) * (y2 - y1))
    return int(np.argmax(cross)) + 1


def select_diffusion_time(op, t_max=100):
    t_max = check_positive_int(t_max, "t_max", minimum=2)
    return knee_point(von_neumann_entropy(_operator_spectrum(op), t_max))


def potential_distances(op, t):
    """Euclidean distances between rows of ``-log(P^t + 1e-7)``."""
    P = op.P if isinstance(op, DiffusionOperator) else np.asarray(op, dtype=float)
    t = check_positive_int(t, "t")
    U = -np.log(np.linalg.matrix_power(P, t) + POTENTIAL_EPS)
    return squareform(pdist(U))


def classical_mds(D, r=2):
    """Torgerson scaling: top-``r`` eigenpairs of the double-centred squared distances."""
    D = check_distance_matrix(D)
    n = len(D)
    r = check_positive_int(r, "r")
    if r >= n:
        raise InvalidConfig(f"r={r} must be smaller than the number of points {n}")
    J = np.eye(n) - 1.0 / n
    B = -0.5 * J @ (D * D) @ J
    vals, vecs = np.linalg.eigh(0.5 * (B + B.T))
    vals, vecs = vals[::-1][:r], fix_signs(vecs[:, ::-1][:, :r])
    return vecs * np.sqrt(np.maximum(vals, 0.0))


def stress(Y, D):
    """Raw stress: sum over pairs of squared residuals between embedded and target distances."""
    iu = np.triu_indices(len(D), k=1)
    return float(np.sum((pdist(Y) - D[iu]) ** 2))


def _guttman(Y, d_target, d_current):
    # Condensed (upper-triangle) inputs; the transform is B(Y) Y / n.
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(d_current > 0, d_target / d_current, 0.0)
    B = -squareform(ratio)
    np.fill_diagonal(B, -B.sum(axis=1))
    return B @ Y / len(Y)


def smacof_mds(D, r=2, init=None, max_iter=500, tol=1e-6):
    """Metric MDS by stress majorization, started from ``init``.

    Stops when the relative stress decrease drops below ``tol``, after
    ``max_iter`` transforms, or if a transform fails to lower the stress
    (round-off at a fixed point); such a step is discarded.
    """
    D = check_distance_matrix(D)
    Y = classical_mds(D, r) if init is None else np.array(init, dtype=float)
    if Y.shape != (len(D), r):
        raise InvalidConfig(f"init must have shape {(len(D), r)}, got {Y.shape}")
    iu = np.triu_indices(len(D), k=1)
    target = D[iu]
    dist = pdist(Y)
    history = [float(np.sum((dist - target) ** 2))]
    for _ in range(max_iter):
        prev = history[-1]
        if prev == 0:
            break
        candidate = _guttman(Y, target, dist)
        cand_dist = pdist(candidate)
        current = float(np.sum((cand_dist - target) ** 2))
        if current > prev:
            break
        Y, dist = candidate, cand_dist
        history.append(current)
        if (prev - current) / prev < tol:
            break
    return Embedding(Y=Y, stress_history=history)


def embed(D, n_components=2, knn=5, alpha=40.0, t="auto", t_max=100, mds_max_iter=500,
          mds_tol=1e-6):
    """Embed a distance matrix into ``n_components`` dimensions."""
    D = check_distance_matrix(getattr(D, "D", D))
    n = len(D)
    if n < max(knn + 1, n_components + 1):
        raise InvalidConfig(f"need at least {max(knn + 1, n_components + 1)} points, got {n}")
    graph = alpha_decay_kernel(D, knn, alpha)
    op = row_normalize(graph)
    t_used = select_diffusion_time(op, t_max) if t in (None, "auto") else check_positive_int(t, "t")
    op.t = t_used
    pot = potential_distances(op, t_used)
    init = classical_mds(pot, n_components)
    result = smacof_mds(pot, n_components, init, mds_max_iter, mds_tol)
    result.metadata = {"knn": knn, "alpha": alpha, "t": t_used, "t_selection": "vne_knee"
                       if t in (None, "auto") else "fixed", "t_max": t_max,
                       "potential_eps": POTENTIAL_EPS, "mds_max_iter": mds_max_iter,
                       "mds_tol": mds_tol, "mds_iterations": len(result.stress_history) - 1,
                       "n_components": n_components}
    return result


class DiffusionEmbedding(TransformerMixin, BaseEstimator):
    """Low-dimensional embedding from a distance matrix via diffusion potentials.

    Parameters
    ----------
    n_components : int, default=2
    knn : int, default=5
        Neighbor rank setting each point's kernel bandwidth.
    alpha : float, default=40.0
        Decay exponent of the kernel.
    t : int or 'auto', default='auto'
        Diffusion time; 'auto' picks the entropy knee.
    metric : {'precomputed', 'euclidean'}, default='precomputed'
        How to read ``X`` in :meth:`fit`.

    Attributes
    ----------
    embedding_ : ndarray of shape (n_samples, n_components)
    stress_history_ : list of float
    t_ : int
    """

    def __init__(self, n_components=2, knn=5, alpha=40.0, t="auto", t_max=100,
                 mds_max_iter=500, mds_tol=1e-6, metric="precomputed"):
        self.n_components = n_components
        self.knn = knn
        self.alpha = alpha
        self.t = t
        self.t_max = t_max
        self.mds_max_iter = mds_max_iter
        self.mds_tol = mds_tol
        self.metric = metric

    def fit(self, X, y=None):
        if self.metric == "precomputed":
            D = check_distance_matrix(getattr(X, "D", X))
        elif self.metric == "euclidean":
            D = squareform(pdist(check_series(X)))
        else:
            raise InvalidConfig(f"unknown metric {self.metric!r}")
        result = embed(D, self.n_components, self.knn, self.alpha, self.t, self.t_max,
                       self.mds_max_iter, self.mds_tol)
        self.embedding_ = result.Y
        self.stress_history_ = result.stress_history
        self.t_ = result.metadata["t"]
        self.metadata_ = result.metadata
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_
