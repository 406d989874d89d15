"""Mantel correlation, noise and window sweeps, and distance-stage timing."""

from dataclasses import dataclass, field
import time

import numpy as np
from scipy.spatial.distance import pdist, squareform

from ._validation import check_distance_matrix, check_positive_int
from .basis import fit_domain
from .config import PipelineConfig
from .dig import dig_distances_from_histograms, local_histograms
from .distance import fig_distances_from_features
from .exceptions import InvalidConfig, InvalidData, UndefinedCorrelation
from .features import compute_features, stride_centers
from .pipeline import distance_from_config, embedding_from_config
from .simulation import _rng, simulate_sphere_walk, simulate_staged_surrogate

SWEEP_METHODS = ("raw", "fig", "dig")


@dataclass
class MantelResult:
    r: float
    p_value: float = None
    n_perm: int = 0


def _upper(D):
    return D[np.triu_indices(len(D), k=1)]


def _pearson(x, y):
    xc = x - x.mean()
    yc = y - y.mean()
    sx = np.sqrt(xc @ xc)
    sy = np.sqrt(yc @ yc)
    if sx == 0 or sy == 0:
        raise UndefinedCorrelation("a distance vector has zero variance")
    return float(np.clip((xc @ yc) / (sx * sy), -1.0, 1.0))


def mantel(D1, D2, n_perm=0, seed=0):
    """Pearson correlation between the off-diagonal entries of two distance matrices.

    With ``n_perm > 0`` the p-value counts joint row/column permutations of
    ``D2`` whose correlation reaches the observed one:
    ``(1 + #{r_perm >= r}) / (1 + n_perm)``.
    """
    D1 = check_distance_matrix(getattr(D1, "D", D1), "D1")
    D2 = check_distance_matrix(getattr(D2, "D", D2), "D2")
    if D1.shape != D2.shape:
        raise InvalidData(f"distance matrices differ in shape: {D1.shape} vs {D2.shape}")
    n = len(D1)
    if n < 4:
        raise InvalidData(f"need at least 4 points, got {n}")
    for name, D in (("D1", D1), ("D2", D2)):
        if not (np.array_equal(D, D.T) and not np.any(np.diag(D))):
            raise InvalidData(f"{name} must be symmetric with a zero diagonal")
    n_perm = check_positive_int(n_perm, "n_perm", minimum=0)
    x = _upper(D1)
    r = _pearson(x, _upper(D2))
    if n_perm == 0:
        return MantelResult(r=r)
    rng = _rng(seed)
    iu = np.triu_indices(n, k=1)
    hits = 0
    for _ in range(n_perm):
        perm = rng.permutation(n)
        if _pearson(x, D2[perm][:, perm][iu]) >= r:
            hits += 1
    return MantelResult(r=r, p_value=(1 + hits) / (1 + n_perm), n_perm=n_perm)


def _euclidean(Y):
    return squareform(pdist(np.asarray(Y, dtype=float)))


@dataclass
class SweepTable:
    """One row per (method, grid value, seed) cell plus per-value summaries."""

    rows: list
    grid_name: str = "sigma"

    def values(self, method, grid_value):
        return np.array([r["mantel_r"] for r in self.rows
                         if r["method"] == method and r["sigma_or_window"] == grid_value])

    def summary(self):
        out = []
        seen = []
        for r in self.rows:
            key = (r["method"], r["sigma_or_window"])
            if key not in seen:
                seen.append(key)
        for method, value in seen:
            v = self.values(method, value)
            out.append({"method": method, "sigma_or_window": value, "n_seeds": len(v),
                        "mantel_mean": float(v.mean()), "mantel_std": float(v.std())})
        return out

    def mean(self, method, grid_value):
        return float(self.values(method, grid_value).mean())


def noise_sweep(sigma_grid, seeds, cfg=None, methods=SWEEP_METHODS):
    """Mantel agreement with the hidden angles as observation noise grows.

    For every (sigma, seed) the sphere walk is simulated and scored three
    ways: the noisy observations themselves (``raw``) and the embeddings of
    their FIG and DIG distances, each by Mantel correlation of Euclidean
    distances against Euclidean distances of the angles.
    """
    cfg = cfg if cfg is not None else PipelineConfig()
    sigma_grid = [float(s) for s in sigma_grid]
    seeds = [int(s) for s in seeds]
    if len(sigma_grid) < 2 or len(seeds) < 2:
        raise InvalidConfig("a noise sweep needs at least two sigmas and two seeds")
    unknown = set(methods) - set(SWEEP_METHODS)
    if unknown:
        raise InvalidConfig(f"unknown sweep methods {sorted(unknown)}")
    rows = []
    for sigma in sigma_grid:
        for seed in seeds:
            walk = simulate_sphere_walk(cfg["simulate.n"], cfg["simulate.step"], sigma, seed)
            keep = stride_centers(len(walk.X), cfg["windows.stride"], cfg["windows.offset"])
            truth = _euclidean(walk.theta[keep])
            for method in methods:
                start = time.perf_counter()
                if method == "raw":
                    D = _euclidean(walk.X[keep])
                else:
                    dm = distance_from_config(walk.X, cfg, method)
                    D = _euclidean(embedding_from_config(dm, cfg).Y)
                elapsed = time.perf_counter() - start
                rows.append({"method": method, "sigma_or_window": sigma, "seed": seed,
                             "mantel_r": mantel(D, truth).r, "runtime_s": elapsed})
    return SweepTable(rows=rows, grid_name="sigma")


@dataclass
class RobustnessGrid:
    """Pairwise Mantel agreement between embeddings at different windows.

    ``M`` is the seed-averaged grid and ``M_std`` its per-cell spread;
    ``summary_mean`` / ``summary_std`` are taken over seeds of the mean
    off-diagonal entry.
    """

    window_values: list
    M: np.ndarray
    M_std: np.ndarray
    summary_mean: float
    summary_std: float
    per_seed: list = field(default_factory=list)


def _offdiag_mean(M):
    k = len(M)
    if k < 2:
        return 1.0
    return float(M[~np.eye(k, dtype=bool)].mean())


def _grid(embeddings):
    k = len(embeddings)
    dists = [_euclidean(Y) for Y in embeddings]
    M = np.eye(k)
    for a in range(k):
        for b in range(a + 1, k):
            M[a, b] = M[b, a] = mantel(dists[a], dists[b]).r
    return M


def surrogate_sampling(cfg):
    """``(l1, stride, offset)`` giving one feature row per surrogate segment."""
    seg = cfg["surrogate.segment_length"]
    return seg, seg, seg // 2


def window_sweep(L2_values, cfg=None, seeds=None, methods=("fig", "dig")):
    """Embed the staged surrogate at every covariance window in ``L2_values``.

    Each surrogate segment contributes one feature row (window and stride
    equal to the segment length, centred in the segment). Features and
    histograms are computed once per seed; only the covariance window
    changes across the grid.

    Returns ``(grids, table)``: a :class:`RobustnessGrid` per method, and a
    :class:`SweepTable` whose cell value is the mean Mantel of one window's
    embedding against the other windows' embeddings.
    """
    cfg = cfg if cfg is not None else PipelineConfig()
    L2_values = [check_positive_int(v, "L2") for v in L2_values]
    if len(L2_values) < 1:
        raise InvalidConfig("need at least one window value")
    seeds = list(cfg["seeds"] if seeds is None else seeds)
    l1, stride, offset = surrogate_sampling(cfg)
    per_method = {m: [] for m in methods}
    rows = []
    for seed in seeds:
        X, _ = simulate_staged_surrogate(cfg["surrogate.segments"], cfg["surrogate.d"], seed,
                                         cfg["surrogate.segment_length"])
        centers = stride_centers(len(X), stride, offset)
        for method in methods:
            start = time.perf_counter()
            if method == "fig":
                rows_in = compute_features(X, fit_domain(X, cfg["basis.b"]), l1, centers).A_hat
            elif method == "dig":
                rows_in = local_histograms(X, l1, cfg["dig.n_bins"], centers=centers).H
            else:
                raise InvalidConfig(f"unknown window-sweep method {method!r}")
            shared = time.perf_counter() - start
            embeddings, times = [], []
            for L2 in L2_values:
                start = time.perf_counter()
                if method == "fig":
                    D, _ = fig_distances_from_features(rows_in, L2, None, cfg["fpca.k"],
                                                       cfg["fpca.normalization"])
                else:
                    D = dig_distances_from_histograms(rows_in, L2)
                embeddings.append(embedding_from_config(D, cfg).Y)
                times.append(time.perf_counter() - start + shared / len(L2_values))
            M = _grid(embeddings)
            per_method[method].append(M)
            k = len(L2_values)
            for a, L2 in enumerate(L2_values):
                others = [M[a, b] for b in range(k) if b != a]
                rows.append({"method": method, "sigma_or_window": L2, "seed": seed,
                             "mantel_r": float(np.mean(others)) if others else 1.0,
                             "runtime_s": times[a]})
    grids = {}
    for method, mats in per_method.items():
        stack = np.stack(mats)
        means = [_offdiag_mean(M) for M in mats]
        grids[method] = RobustnessGrid(window_values=L2_values, M=stack.mean(axis=0),
                                       M_std=stack.std(axis=0), summary_mean=float(np.mean(means)),
                                       summary_std=float(np.std(means)), per_seed=mats)
    # Restore method-major row order so tables read one method at a time.
    order = {m: i for i, m in enumerate(methods)}
    rows.sort(key=lambda r: (order[r["method"]], L2_values.index(r["sigma_or_window"]),
                             seeds.index(r["seed"])))
    return grids, SweepTable(rows=rows, grid_name="window")


@dataclass
class TimingTable:
    rows: list

    def times(self, method):
        return np.array([r["runtime_s"] for r in self.rows if r["method"] == method])

    def median(self, method):
        return float(np.median(self.times(method)))

    def summary(self):
        methods = list(dict.fromkeys(r["method"] for r in self.rows))
        return [{"method": m, "repetitions": len(self.times(m)), "median_s": self.median(m),
                 "mean_s": float(self.times(m).mean()), "std_s": float(self.times(m).std())}
                for m in methods]


def benchmark_distance_stage(X, cfg=None, repetitions=5, methods=("fig", "dig")):
    """Wall-clock time of the distance stage (features or histograms through
    the distance matrix) per method and repetition, run sequentially.
    """
    cfg = cfg if cfg is not None else PipelineConfig()
    repetitions = check_positive_int(repetitions, "repetitions", minimum=3)
    rows = []
    for rep in range(repetitions):
        for method in methods:
            start = time.perf_counter()
            distance_from_config(X, cfg, method)
            rows.append({"method": method, "repetition": rep,
                         "runtime_s": time.perf_counter() - start})
    return TimingTable(rows=rows)


def benchmark_data(n=5000, d=18, seed=0):
    """Multichannel random-walk-plus-noise series used for timing runs."""
    rng = _rng(seed)
    return np.cumsum(rng.standard_normal((n, d)), axis=0) * 0.05 + rng.standard_normal((n, d))
