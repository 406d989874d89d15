import numpy as np
import pytest

from figeo.dig import (DIGDistance, dig_distance_matrix, dig_distances_from_histograms,
                       dig_pair_distance, histogram_covariances, local_histograms)
from figeo.exceptions import InvalidConfig
from figeo.features import window_indices


def _naive_histograms(X, L1, n_bins, bounds):
    n, d = X.shape
    H = np.zeros((n, d * n_bins))
    for i in range(n):
        idx = list(window_indices(i, n, L1))
        for j in range(d):
            lo, hi = bounds[j]
            for t in idx:
                b = int(np.floor((X[t, j] - lo) / (hi - lo) * n_bins))
                b = min(max(b, 0), n_bins - 1)
                H[i, j * n_bins + b] += 1.0 / len(idx)
    return H


def _pinv_oracle(h, C):
    U, s, Vt = np.linalg.svd(C)
    keep = s > 1e-10 * s[0]
    inv = (Vt[keep].T / s[keep]) @ U[:, keep].T
    return float(np.sqrt(max(h @ inv @ h, 0.0)))


def test_constant_column_single_bin():
    X = np.column_stack([np.full(20, 2.0), np.linspace(0, 1, 20)])
    hs = local_histograms(X, 5, 10)
    first = hs.H[:, :10]
    assert np.all(first.max(axis=1) == 1.0)


def test_uniform_grid_near_uniform():
    X = (np.arange(20) + 0.5)[:, None] / 20
    hs = local_histograms(X, 40, 20, bounds=((0.0, 1.0),))
    np.testing.assert_allclose(hs.H[10], 1 / 20)


def test_histograms_match_naive_binning():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((60, 3))
    hs = local_histograms(X, 7, 12)
    bounds = [(e[0], e[-1]) for e in hs.edges]
    ref = _naive_histograms(X, 7, 12, bounds)
    assert np.abs(hs.H - ref).max() < 1e-12
    blocks = hs.H.reshape(60, 3, 12).sum(axis=2)
    assert np.abs(blocks - 1).max() < 1e-12
    assert np.all(hs.H >= 0)


def test_bins_validated():
    with pytest.raises(InvalidConfig):
        local_histograms(np.zeros((5, 1)), 3, 1)


def test_pair_distance_cases():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((40, 2))
    hs = local_histograms(X, 8, 10)
    covs = histogram_covariances(hs.H, 8)
    assert dig_pair_distance(5, 5, hs.H, covs) == 0.0
    assert dig_pair_distance(3, 30, hs.H, covs) == dig_pair_distance(30, 3, hs.H, covs)
    eye = np.stack([0.5 * np.eye(hs.H.shape[1])] * 40)
    h = hs.H[3] - hs.H[30]
    assert dig_pair_distance(3, 30, hs.H, eye) == pytest.approx(np.linalg.norm(h), rel=1e-12)
    assert dig_pair_distance(3, 30, hs.H, covs) == pytest.approx(
        _pinv_oracle(h, covs[3] + covs[30]), rel=1e-8)


@pytest.mark.parametrize("n,d,L1,L2,bins", [(90, 3, 10, 10, 20), (60, 2, 15, 7, 20),
                                            (50, 1, 5, 30, 20), (70, 6, 12, 10, 20)])
def test_matrix_matches_svd_pinv(n, d, L1, L2, bins):
    rng = np.random.default_rng(n + d)
    X = np.cumsum(rng.standard_normal((n, d)), axis=0) * 0.1 + rng.standard_normal((n, d))
    hs = local_histograms(X, L1, bins)
    covs = histogram_covariances(hs.H, L2)
    D = dig_distances_from_histograms(hs.H, L2)
    ref = np.zeros((n, n))
    for t in range(n):
        for s in range(t + 1, n):
            ref[t, s] = ref[s, t] = _pinv_oracle(hs.H[t] - hs.H[s], covs[t] + covs[s])
    assert np.abs(D - ref).max() <= 1e-8 * max(1.0, ref.max())


def test_well_conditioned_pinv_equals_inverse():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((200, 1))
    hs = local_histograms(X, 60, 4)
    covs = histogram_covariances(hs.H, 80)
    for t, s in [(40, 150), (60, 120)]:
        C = covs[t] + covs[s]
        # Drop the direction fixed by the sum-to-one constraint before inverting.
        Q = np.linalg.qr(np.column_stack([np.ones(4), np.eye(4)[:, :3]]))[0][:, 1:]
        Cr = Q.T @ C @ Q
        assert np.linalg.cond(Cr) < 1e6
        h = hs.H[t] - hs.H[s]
        dense = float(np.sqrt((Q.T @ h) @ np.linalg.inv(Cr) @ (Q.T @ h)))
        assert dig_pair_distance(t, s, hs.H, covs) == pytest.approx(dense, rel=1e-8)


def test_matrix_symmetric_zero_diagonal():
    X = np.random.default_rng(3).standard_normal((80, 3))
    D = dig_distance_matrix(X, 20, 10, 10).D
    np.testing.assert_array_equal(D, D.T)
    np.testing.assert_array_equal(np.diag(D), 0.0)
    assert np.all(D >= 0)


def test_estimator_and_stride():
    X = np.random.default_rng(4).standard_normal((100, 2))
    est = DIGDistance(n_bins=8, l1=10, l2=5, stride=10, offset=5)
    D = est.fit_transform(X)
    assert D.shape == (10, 10)
    np.testing.assert_array_equal(est.histograms_.centers, np.arange(5, 100, 10))
    np.testing.assert_array_equal(D, dig_distance_matrix(X, 8, 10, 5, 10, 5).D)
