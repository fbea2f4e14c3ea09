import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectral_lift.approx import degree_of_approx_l2
from spectral_lift.digraph import (
    apply_isometry,
    build_directed_pair,
    chung_symmetrization_identity_check,
    frame_check,
    kernel,
    lp_norm,
    pair_from_system,
    polar_decompose,
    shifted_gaussian_kernel,
    sigma,
    sigma_coefficients,
    tau_pyramid,
)
from spectral_lift.filters import make_cutoff_filter, make_filter
from spectral_lift.system import coefficients, orthonormality_residual

from conftest import random_directed


def test_polar_rotation():
    W = np.array([[0.0, -1.0], [1.0, 0.0]])
    pd = polar_decompose(W)
    assert np.allclose(pd.P, np.eye(2))
    assert np.allclose(pd.U, W)
    assert not pd.non_unique


def test_polar_psd():
    W = np.array([[2.0, 1.0], [1.0, 2.0]])
    pd = polar_decompose(W)
    assert np.allclose(pd.P, W)
    assert np.allclose(pd.U, np.eye(2))


def test_polar_rank_deficient():
    W = np.array([[0.0, 2.0], [0.0, 0.0]])
    pd = polar_decompose(W)
    assert np.allclose(pd.P, np.diag([2.0, 0.0]))
    assert np.allclose(pd.U[0], [0.0, 1.0])
    assert pd.non_unique and pd.rank == 1
    assert np.allclose(pd.U @ pd.U.T, np.eye(2))
    assert np.allclose(pd.P @ pd.U, W)


def test_polar_errors():
    with pytest.raises(ValueError):
        polar_decompose(np.ones((2, 3)))
    with pytest.raises(ValueError):
        polar_decompose(np.array([[1.0, np.inf], [0, 1]]))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**31 - 1), st.booleans())
def test_polar_invariants(n, seed, deficient):
    rng = np.random.default_rng(seed)
    W = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    if deficient and n > 1:
        W[:, 0] = W[:, 1]
    pd = polar_decompose(W)
    scale = max(np.linalg.norm(W), 1e-300)
    assert np.linalg.norm(pd.P @ pd.U - W) / scale < 1e-8
    assert np.linalg.eigvalsh(pd.P).min() >= -1e-10 * scale
    assert np.linalg.matrix_rank(pd.P) == np.linalg.matrix_rank(W)


def test_pair_symmetric_psd_degenerates(rng):
    B = rng.normal(size=(6, 6))
    W = B @ B.T + 0.5 * np.eye(6)
    pair = build_directed_pair(W)
    assert pair.undirected
    assert np.allclose(pair.base.eigenfunctions, pair.dual.eigenfunctions, atol=1e-8)


def test_pair_orthogonal_unit_singular_values(rng):
    Q, _ = np.linalg.qr(rng.normal(size=(7, 7)))
    pair = build_directed_pair(Q, weights=np.ones(7))
    assert np.allclose(pair.eigenvalues, 1.0)


@pytest.mark.parametrize("uniform", [True, False])
def test_pair_reconstruction(rng, uniform):
    W = rng.random((5, 5))
    w = None if uniform else rng.uniform(0.5, 2.0, 5)
    pair = build_directed_pair(W, weights=w)
    wts = pair.base.weights
    R = (pair.base.eigenfunctions * pair.eigenvalues) @ np.conj(pair.dual.eigenfunctions).T * wts[None, :]
    assert np.linalg.norm(R - W) / np.linalg.norm(W) < 1e-6
    assert orthonormality_residual(pair.base) < 1e-8
    assert orthonormality_residual(pair.dual) < 1e-8
    assert np.all(np.diff(pair.eigenvalues) >= 0)


def test_pair_truncation_and_errors(rng):
    W = rng.random((6, 6))
    pair = build_directed_pair(W, K=3)
    assert pair.base.n_modes == 3
    with pytest.raises(ValueError):
        build_directed_pair(W, K=0)
    with pytest.raises(ValueError):
        build_directed_pair(np.ones((2, 3)))


def test_shifted_gaussian_kernel():
    pts = np.linspace(0, 3, 7)
    W0 = shifted_gaussian_kernel(pts, 0.5, [0.0])
    assert np.allclose(W0, W0.T)
    Wp = shifted_gaussian_kernel(pts, 0.5, [0.4])
    Wm = shifted_gaussian_kernel(pts, 0.5, [-0.4])
    assert np.allclose(Wp.T, Wm)
    assert not np.allclose(Wp, Wp.T)
    W = shifted_gaussian_kernel(np.array([0.0, 1.0]), 1.0, [1.0], weights=[0.3, 0.7])
    c = (2 * np.pi) ** -0.5
    # x_2 - x_1 - z = 0, x_1 - x_2 - z = -2
    assert W[1, 0] == pytest.approx(c * 0.3)
    assert W[0, 1] == pytest.approx(c * np.exp(-4) * 0.7)
    with pytest.raises(ValueError):
        shifted_gaussian_kernel(np.zeros((3, 2)), 1.0, [1.0])


def test_chung_identity(rng):
    for _ in range(10):
        W = rng.normal(size=(4, 4))
        assert chung_symmetrization_identity_check(W).max_abs_diff < 1e-12
    assert chung_symmetrization_identity_check(np.eye(3)).max_abs_diff < 1e-15
    chk = chung_symmetrization_identity_check(np.zeros((3, 3)))
    assert np.allclose(chk.lhs, np.eye(3)) and np.allclose(chk.rhs, np.eye(3))


@pytest.fixture
def pair(rng):
    return build_directed_pair(random_directed(rng, 12))


def test_sigma_cutoff_full(pair, rng):
    f = rng.normal(size=12)
    out = sigma(pair, make_cutoff_filter(), pair.eigenvalues[-1] * 1.01, f)
    assert np.allclose(out, apply_isometry(pair, f), atol=1e-12)


def test_sigma_single_mode(pair):
    h = make_filter(4)
    k0, n = 7, 1.3 * pair.eigenvalues[7]
    out = sigma(pair, h, n, pair.dual.eigenfunctions[:, k0])
    assert np.allclose(out, h(pair.eigenvalues[k0] / n) * pair.base.eigenfunctions[:, k0], atol=1e-10)


def test_sigma_low_frequency_projection(rng):
    W = random_directed(rng, 8)
    W[:, 0] = 0.0  # rank deficient: lambda_0 = 0
    pair = build_directed_pair(W)
    assert pair.eigenvalues[0] < 1e-12 and pair.eigenvalues[1] > 0
    n = pair.eigenvalues[1]
    out = sigma(pair, make_filter(3), n, pair.dual.eigenfunctions[:, 0])
    assert np.allclose(out, pair.base.eigenfunctions[:, 0], atol=1e-10)


def test_sigma_band_and_equivalence(pair, rng):
    h = make_filter(5)
    f = rng.normal(size=12)
    Uf = apply_isometry(pair, f)
    base_pair = pair_from_system(pair.base)
    for n in (0.05, 0.3, 1.0, 4.0):
        c = coefficients(pair.base, sigma(pair, h, n, f))
        assert np.all(np.abs(c[pair.eigenvalues >= n]) < 1e-12)
        assert np.allclose(sigma(pair, h, n, f), sigma(base_pair, h, n, Uf), atol=1e-8)
    with pytest.raises(ValueError):
        sigma(pair, h, 0.0, f)


def test_tau_pyramid_examples(rng):
    W = random_directed(rng, 8)
    W[:, 0] = 0.0
    pair = build_directed_pair(W)
    h = make_filter(4)
    taus = tau_pyramid(pair, h, 5, pair.dual.eigenfunctions[:, 0])
    assert np.allclose(taus[0], pair.base.eigenfunctions[:, 0], atol=1e-10)
    for t in taus[1:]:
        assert np.allclose(t, 0, atol=1e-12)

    f = rng.normal(size=8)
    for J in (0, 1, 3, 6):
        taus = tau_pyramid(pair, h, J, f)
        assert np.allclose(sum(taus), sigma(pair, h, 2.0**J, f), atol=1e-12)


def _pair_with_singular_values(lam, seed=0):
    Q, _ = np.linalg.qr(np.random.default_rng(seed).normal(size=(len(lam), len(lam))))
    return build_directed_pair(Q @ np.diag(lam) @ Q.T)


def test_tau_level_weights():
    lam = np.array([0.5, 2.2, 9.0])
    pair = _pair_with_singular_values(lam)
    assert np.allclose(pair.eigenvalues, lam)
    h = make_filter(4)
    taus = tau_pyramid(pair, h, 5, pair.dual.eigenfunctions[:, 1])
    weights = [h(lam[1])] + [h(lam[1] / 2**j) - h(lam[1] / 2 ** (j - 1)) for j in range(1, 6)]
    for t, wj in zip(taus, weights):
        assert np.allclose(t, wj * pair.base.eigenfunctions[:, 1], atol=1e-10)


@pytest.mark.parametrize("lam, levels", [(2.0, [2]), (5.0, [3, 4]), (0.25, [0])])
def test_tau_band_capture(lam, levels):
    # h = 1 on [0, 1/2] and 0 on [1, inf): lambda = 2 lands entirely in tau_2
    pair = _pair_with_singular_values(np.array([0.1, lam, 40.0]) if lam > 0.1 else np.array([lam, 3.0, 40.0]))
    k = 1 if lam > 0.1 else 0
    taus = tau_pyramid(pair, make_filter(4), 8, pair.dual.eigenfunctions[:, k])
    nz = [j for j, t in enumerate(taus) if np.abs(t).max() > 1e-12]
    assert nz == levels
    assert np.allclose(sum(taus), pair.base.eigenfunctions[:, k], atol=1e-10)


def test_frame_check_examples(rng):
    W = random_directed(rng, 9)
    W[:, 0] = 0.0
    pair = build_directed_pair(W)
    h = make_filter(4)
    fc = frame_check(pair, h, pair.dual.eigenfunctions[:, 0])
    assert fc.sum_sq == pytest.approx(1.0) and fc.energy == pytest.approx(1.0)
    assert fc.lower_ok and fc.upper_ok
    fc = frame_check(pair, h, np.zeros(9))
    assert fc.sum_sq == 0 and fc.energy == 0 and fc.lower_ok and fc.upper_ok
    for _ in range(20):
        fc = frame_check(pair, h, rng.normal(size=9))
        assert fc.lower_ok and fc.upper_ok
        assert fc.energy <= 2 * fc.sum_sq * (1 + 1e-12)


def test_lp_norm(pair):
    base = pair.base
    assert lp_norm(base, np.ones(12), 1) == pytest.approx(1.0)
    assert lp_norm(base, np.ones(12), 3.5) == pytest.approx(1.0)
    assert lp_norm(base, np.ones(12), np.inf) == 1.0
    two = build_directed_pair(np.eye(2))
    assert lp_norm(two.base, np.array([3.0, -4.0]), np.inf) == 4.0
    c = np.arange(12.0)
    f = base.eigenfunctions @ c
    assert lp_norm(base, f, 2) == pytest.approx(np.linalg.norm(c))
    with pytest.raises(ValueError):
        lp_norm(base, f, 0.5)


def test_kernel_matches_sigma(pair, rng):
    h = make_filter(3)
    f = rng.normal(size=12)
    n = 0.7
    K = np.array([[kernel(pair, h, n, i, j) for j in range(12)] for i in range(12)])
    assert np.allclose(K @ (pair.base.weights * f), sigma(pair, h, n, f), atol=1e-12)


def test_sandwich_correct_direction(rng):
    # E_{n,2} <= |Uf - sigma_n f|_2 <= E_{n/2,2}; cutoff filter gives E_{n,2} exactly
    h, cut = make_filter(4), make_cutoff_filter()
    for _ in range(30):
        pair = build_directed_pair(random_directed(rng, int(rng.integers(3, 25))))
        f = rng.normal(size=pair.n_points)
        Uf = apply_isometry(pair, f)
        for n in 2.0 ** np.arange(-3, 6):
            err = lp_norm(pair.base, Uf - sigma(pair, h, n, f), 2)
            assert degree_of_approx_l2(pair.base, Uf, n) <= err + 1e-9
            assert err <= degree_of_approx_l2(pair.base, Uf, n / 2) + 1e-9
            exact = lp_norm(pair.base, Uf - sigma(pair, cut, n, f), 2)
            assert exact == pytest.approx(degree_of_approx_l2(pair.base, Uf, n), abs=1e-9)


def test_wrapped_system_projection(rng):
    from spectral_lift.digraph import isometry_matrix
    from spectral_lift.jacobi import build_circle_system
    c = build_circle_system(32, 9)
    pair = pair_from_system(c)
    assert pair.isometry is None
    f = rng.normal(size=32)
    U = isometry_matrix(pair)
    assert np.allclose(U @ f, apply_isometry(pair, f))
    assert np.allclose(U @ U, U)
