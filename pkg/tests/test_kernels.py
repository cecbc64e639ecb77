import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from vcvforge.kernels import (
    JitterPolicy,
    KernelHyperparams,
    gram,
    gram_gradients,
    matern52,
    matern52_matrix,
    white,
)

# frozen with mpmath (30 digits): (1 + sqrt5 + 5/3) * exp(-sqrt5)
MATERN_AT_L = 0.523994108832


def test_matern_at_zero_is_signal_variance():
    assert matern52(3.0, 3.0, 2.0, 5.0) == 2.0


def test_matern_at_one_lengthscale():
    assert_allclose(matern52(0.0, 1.0, 1.0, 1.0), MATERN_AT_L, rtol=1e-10)


def test_matern_far_field_decay():
    assert matern52(0.0, 100.0, 1.0, 1.0) < 1e-80


def test_matern_rejects_bad_params():
    with pytest.raises(ValueError):
        matern52(0.0, 1.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        matern52(0.0, 1.0, 1.0, 0.0)


def test_matern_matrix_matches_sklearn():
    # independent route: sklearn's Matern kernel with nu=2.5
    from sklearn.gaussian_process.kernels import Matern

    xs = np.array([0.0, 1.0, 3.0, 7.0, 20.0])
    ours = matern52_matrix(xs, xs, 2.5, 11.0)
    ref = 2.5 * Matern(length_scale=11.0, nu=2.5)(xs[:, None])
    assert_allclose(ours, ref, rtol=1e-12)


def test_white_kernel():
    assert white(4, 4, 3.1) == 3.1
    assert white(4, 5, 3.1) == 0.0
    assert white(2, 2, 0.0) == 0.0
    with pytest.raises(ValueError):
        white(0, 0, -1.0)


def test_gram_t2_hand_instance():
    gm = gram([0, 1], KernelHyperparams(1.0, 1.0, 1.0))
    expected = np.array([[2.0, MATERN_AT_L], [MATERN_AT_L, 2.0]])
    assert_allclose(gm.values, expected, rtol=1e-10)
    assert gm.jitter_applied == 0.0


def test_gram_diagonal_and_symmetry():
    rng = np.random.default_rng(1)
    xs = np.sort(rng.choice(np.arange(600), size=120, replace=False)).astype(float)
    p = KernelHyperparams(2.3, 17.0, 0.9)
    gm = gram(xs, p)
    assert_allclose(np.diag(gm.values), 2.3 + 0.9, rtol=1e-14)
    assert np.array_equal(gm.values, gm.values.T)  # bitwise symmetric
    # Cholesky succeeded inside gram
    assert_allclose(gm.chol @ gm.chol.T, gm.values, rtol=0, atol=1e-10)


def test_gram_white_only_limit():
    p = KernelHyperparams(1e-30, 1.0, 2.0)
    gm = gram(np.arange(5.0), p)
    off = gm.values - np.diag(np.diag(gm.values))
    assert np.abs(off).max() < 1e-29
    assert_allclose(np.diag(gm.values), 2.0, rtol=1e-10)


def test_gram_rejects_degenerate_inputs():
    p = KernelHyperparams(1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        gram([0.0], p)
    with pytest.raises(ValueError):
        gram([0.0, 0.0, 1.0], p)


def test_gram_no_jitter_with_reasonable_noise():
    # sn2 >= eps * sf2 * T keeps the factorization clean without jitter
    rng = np.random.default_rng(7)
    for t in (50, 200, 500):
        xs = np.sort(rng.choice(np.arange(3 * t), size=t, replace=False)).astype(float)
        sf2 = 3.0
        sn2 = np.finfo(float).eps * sf2 * t
        gm = gram(xs, KernelHyperparams(sf2, 40.0, sn2))
        assert gm.jitter_applied == 0.0


def test_gram_jitter_escalation_on_singular_matrix():
    # duplicate-ish inputs with zero-ish noise force the jitter path
    xs = np.array([0.0, 1e-13, 1.0, 2.0])
    with pytest.raises(ValueError):
        # strictly increasing is enforced first
        gram(np.array([0.0, 0.0, 1.0, 2.0]), KernelHyperparams(1.0, 1.0, 1e-18))
    gm = gram(xs, KernelHyperparams(1.0, 1.0, 1e-18), JitterPolicy())
    assert gm.jitter_applied > 0.0


@given(
    d1=st.floats(min_value=0.0, max_value=50.0),
    d2=st.floats(min_value=0.0, max_value=50.0),
    ell=st.floats(min_value=0.1, max_value=100.0),
    sf2=st.floats(min_value=1e-3, max_value=100.0),
)
def test_matern_monotone_nonincreasing_in_distance(d1, d2, ell, sf2):
    lo, hi = sorted((d1, d2))
    assert matern52(0.0, hi, sf2, ell) <= matern52(0.0, lo, sf2, ell) + 1e-15 * sf2


def _finite_difference_gram_grads(xs, params, h=1e-6):
    """Independent central-difference oracle in log-hyperparameter space."""

    def k_of(theta):
        p = KernelHyperparams.from_log_array(theta)
        k = matern52_matrix(xs, xs, p.signal_variance, p.lengthscale)
        return k + p.noise_variance * np.eye(len(xs))

    theta0 = params.log_array()
    out = []
    for j in range(3):
        up, dn = theta0.copy(), theta0.copy()
        up[j] += h
        dn[j] -= h
        out.append((k_of(up) - k_of(dn)) / (2 * h))
    return out


@pytest.mark.parametrize("seed", range(5))
def test_gram_gradients_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    xs = np.sort(rng.choice(np.arange(100), size=20, replace=False)).astype(float)
    params = KernelHyperparams(
        float(rng.uniform(0.3, 5.0)),
        float(rng.uniform(2.0, 60.0)),
        float(rng.uniform(0.1, 3.0)),
    )
    analytic = gram_gradients(xs, params)
    fd = _finite_difference_gram_grads(xs, params)
    for a, f in zip(analytic, fd):
        rel = np.abs(a - f) / (1e-8 + np.abs(f))
        assert rel.max() < 1e-5


def test_gram_gradient_structure():
    xs = np.arange(10.0)
    p = KernelHyperparams(2.0, 5.0, 0.7)
    d_sf2, d_ell, d_sn2 = gram_gradients(xs, p)
    assert_allclose(np.diag(d_sf2), 2.0)  # matern scales linearly in sf2
    assert_allclose(np.diag(d_ell), 0.0)  # k(0) independent of lengthscale
    assert_allclose(d_sn2, 0.7 * np.eye(10))
    for g in (d_sf2, d_ell, d_sn2):
        assert np.array_equal(g, g.T)


@settings(max_examples=30, deadline=None)
@given(
    sf2=st.floats(min_value=1e-4, max_value=1e3),
    ell=st.floats(min_value=1.0, max_value=1e4),
    sn2=st.floats(min_value=1e-4, max_value=1e2),
)
def test_gram_positive_definite_within_bounds(sf2, ell, sn2):
    xs = np.arange(0.0, 60.0, 2.0)
    gm = gram(xs, KernelHyperparams(sf2, ell, sn2))
    assert gm.jitter_applied == 0.0
    assert np.all(np.diag(gm.chol) > 0)
