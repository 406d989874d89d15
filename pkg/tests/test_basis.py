import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from figeo.basis import (BasisSpec, FourierBasis, basis_matrix, eval_basis, eval_scalar_fourier,
                         fit_domain, gram)
from figeo.exceptions import InvalidData

from oracles import oracle_quadrature_gram

SQ2 = math.sqrt(2.0)


def test_fit_domain_pads_range():
    spec = fit_domain(np.array([[0.0], [1.0]]))
    lo, hi = spec.bounds[0]
    assert lo == pytest.approx(-2e-9, abs=1e-15)
    assert hi == pytest.approx(1 + 2e-9, abs=1e-15)


def test_fit_domain_constant_column():
    spec = fit_domain(np.array([[3.0, 0.0], [3.0, 1.0], [3.0, 2.0]]))
    assert spec.bounds[0] == (2.5, 3.5)
    assert spec.bounds[1][0] < 0 and spec.bounds[1][1] > 2


def test_fit_domain_rejects_nonfinite():
    with pytest.raises(InvalidData):
        fit_domain(np.array([[0.0], [np.nan]]))


def test_scalar_fourier_values():
    np.testing.assert_allclose(eval_scalar_fourier(0.0, 3), [1, SQ2, 0], atol=1e-15)
    np.testing.assert_allclose(eval_scalar_fourier(0.25, 3), [1, 0, SQ2], atol=1e-15)
    assert len(eval_scalar_fourier(0.3, 6)) == 6


def test_scalar_fourier_clamps():
    np.testing.assert_array_equal(eval_scalar_fourier(-0.2, 5), eval_scalar_fourier(0.0, 5))
    np.testing.assert_array_equal(eval_scalar_fourier(1.7, 5), eval_scalar_fourier(1.0, 5))


def test_eval_basis_blocks():
    spec = BasisSpec(3, ((0.0, 1.0), (-1.0, 1.0)))
    np.testing.assert_allclose(eval_basis([0.0, -1.0], spec), [1, SQ2, 0, 1, SQ2, 0], atol=1e-15)
    one_d = BasisSpec(5, ((0.0, 2.0),))
    np.testing.assert_allclose(eval_basis([0.5], one_d), eval_scalar_fourier(0.25, 5), atol=1e-15)


def test_eval_basis_dimension_mismatch():
    spec = BasisSpec(3, ((0.0, 1.0), (0.0, 1.0)))
    with pytest.raises(InvalidData):
        eval_basis([0.1, 0.2, 0.3], spec)


def test_feature_count_matches_blocks():
    X = np.random.default_rng(0).standard_normal((20, 3))
    spec = fit_domain(X, 7)
    assert spec.n_features == 21
    assert basis_matrix(X, spec).shape == (20, 21)


def test_gram_identity():
    spec = fit_domain(np.random.default_rng(1).standard_normal((10, 2)), 7)
    np.testing.assert_array_equal(gram(spec), np.eye(14))


def test_quadrature_gram_matches_oracle():
    spec = BasisSpec(7, ((0.0, 1.0),))
    W = gram(spec, quadrature=True)
    ref = oracle_quadrature_gram(7)
    assert np.abs(W - np.eye(7)).max() < 1e-6
    assert np.abs(ref - np.eye(7)).max() < 1e-6
    np.testing.assert_allclose(W, ref, atol=1e-10)
    np.testing.assert_array_equal(W, W.T)


def test_fourier_orthonormal_to_quadrature_tolerance():
    # Orthonormality of every pair up to index 7 on [0, 1].
    assert np.abs(oracle_quadrature_gram(7) - np.eye(7)).max() < 1e-8


@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=30), st.integers(1, 9))
@settings(max_examples=50, deadline=None)
def test_basis_values_bounded(values, B):
    X = np.array(values)[:, None]
    phi = basis_matrix(X, fit_domain(X, B))
    assert np.all(np.abs(phi) <= SQ2 + 1e-12)
    np.testing.assert_array_equal(phi[:, 0], 1.0)


def test_basis_is_deterministic():
    X = np.random.default_rng(2).standard_normal((15, 2))
    spec = fit_domain(X)
    np.testing.assert_array_equal(basis_matrix(X, spec), basis_matrix(X, spec))


def test_fourier_basis_estimator():
    X = np.random.default_rng(3).standard_normal((12, 2))
    est = FourierBasis(n_basis=5).fit(X)
    assert est.transform(X).shape == (12, 10)
    assert est.get_params() == {"n_basis": 5}
