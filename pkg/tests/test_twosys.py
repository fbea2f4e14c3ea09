import math

import numpy as np
import pytest

from spectral_lift.digraph import build_directed_pair, sigma
from spectral_lift.filters import make_filter
from spectral_lift.jacobi import build_circle_system, circle_distance
from spectral_lift.system import AdmissibleSystem, coefficients, heat_kernel, heat_kernel_matrix, synthesize
from spectral_lift.twosys import (
    ConnectionMatrix,
    JointDistance,
    LandmarkSet,
    band_factor,
    diffusion_distance,
    identity_connection,
    joint_distance,
    joint_heat_kernel,
    joint_lift,
    joint_sigma,
    landmark_connection,
    tensor_lift,
    tensor_sigma,
    verify_joint_gaussian,
)

from conftest import random_directed


def exp_system(N, freqs, lam=None, name=""):
    """exp(i k theta) on N equispaced points, probability measure."""
    theta = 2 * np.pi * np.arange(N) / N
    freqs = np.asarray(freqs)
    lam = np.abs(freqs).astype(float) if lam is None else np.asarray(lam, dtype=float)
    order = np.argsort(lam, kind="stable")
    return AdmissibleSystem(
        points=theta,
        weights=np.full(N, 1.0 / N),
        eigenvalues=lam[order],
        eigenfunctions=np.exp(1j * np.outer(theta, freqs[order])),
        metric=circle_distance,
        provenance="analytic",
        name=name,
    )


def prob_circle(N, K):
    """Circle system rescaled to a probability measure, so uniform landmarks give nu = mu."""
    c = build_circle_system(N, K)
    s = math.sqrt(2 * math.pi)
    return AdmissibleSystem(points=c.points, weights=c.weights / (2 * math.pi), eigenvalues=c.eigenvalues,
                            eigenfunctions=c.eigenfunctions * s, metric=circle_distance,
                            provenance="analytic", name="circle")


@pytest.fixture(scope="module")
def circ():
    return prob_circle(48, 21)


@pytest.fixture(scope="module")
def full_landmarks():
    return LandmarkSet.uniform(np.arange(48))


def test_landmark_set_validation():
    with pytest.raises(ValueError):
        LandmarkSet([0, 1], [0], [0.5, 0.5])
    with pytest.raises(ValueError):
        LandmarkSet([], [], [])
    with pytest.raises(ValueError):
        LandmarkSet([0, 1], [0, 1], [0.5, 0.6])
    with pytest.raises(ValueError):
        LandmarkSet([0, 1], [0, 1], [1.5, -0.5])
    assert len(LandmarkSet.uniform([3, 4, 5])) == 3


def test_connection_matrix_storage():
    A = np.array([[1.0, 1e-16], [0.0, 2.0 - 1j]])
    C = ConnectionMatrix.from_dense(A, 3.0)
    assert C.nnz == 2
    assert np.allclose(C.dense(), np.array([[1, 0], [0, 2 - 1j]]))
    C2 = ConnectionMatrix.from_json(C.to_json())
    assert np.array_equal(C2.dense(), C.dense()) and np.array_equal(C2.ell, C.ell)
    with pytest.raises(ValueError):
        ConnectionMatrix([0], [5], [1.0], [1.0], (2, 2))
    with pytest.raises(ValueError):
        ConnectionMatrix([0], [0], [1.0], [-1.0], (2, 2))
    assert np.allclose(C.with_ell(np.full((2, 2), 7.0)).ell, 7.0)


def test_identity_gamma_from_full_landmarks():
    s = exp_system(24, np.arange(-5, 6))
    G = landmark_connection(s, s, LandmarkSet.uniform(np.arange(24)))
    assert np.allclose(G.dense(), np.eye(s.n_modes), atol=1e-12)
    circ = build_circle_system(24, 9)
    ident = identity_connection(circ)
    assert np.allclose(ident.dense(), np.eye(9))
    assert np.allclose(ident.ell, circ.eigenvalues)


def test_single_landmark_rank_one(circ):
    G = landmark_connection(circ, circ, LandmarkSet([5], [5], [1.0]))
    D = G.dense()
    assert np.linalg.matrix_rank(D, tol=1e-10) == 1
    p = circ.eigenfunctions[5]
    assert np.allclose(D, np.outer(p, p))


def test_gamma_entry_bound(circ):
    rng = np.random.default_rng(3)
    idx = rng.choice(48, 10, replace=False)
    nu = rng.random(10)
    lm = LandmarkSet(idx, idx, nu / nu.sum())
    D = np.abs(landmark_connection(circ, circ, lm).dense())
    sup = np.abs(circ.eigenfunctions).max(axis=0)
    assert np.all(D <= np.outer(sup, sup) + 1e-12)


def test_joint_ell_rules(circ, full_landmarks):
    G = landmark_connection(circ, circ, full_landmarks, joint="sqrt-sum")
    lam = circ.eigenvalues
    assert np.allclose(G.ell, np.sqrt(lam[G.rows] ** 2 + lam[G.cols] ** 2))
    with pytest.raises(ValueError):
        landmark_connection(circ, circ, full_landmarks, joint="min")
    with pytest.raises(IndexError):
        landmark_connection(circ, circ, LandmarkSet([99], [0], [1.0]))


def test_tensor_sigma_identity(circ, full_landmarks):
    G = landmark_connection(circ, circ, full_landmarks)
    h = make_filter(4)
    f = np.random.default_rng(4).normal(size=48)
    c = coefficients(circ, f)
    for n in (1.0, 3.0, 6.0):
        expect = synthesize(circ, h(circ.eigenvalues / n) ** 2 * c)
        assert np.allclose(tensor_sigma(circ, circ, G, h, n, f), expect, atol=1e-12)
    res = tensor_lift(circ, circ, G, h, f, J=6)
    assert res.converged
    assert np.allclose(res.lift, synthesize(circ, c), atol=1e-10)
    with pytest.raises(ValueError):
        tensor_sigma(circ, circ, G, h, -1.0, f)


def test_joint_sigma_matches_pair_sigma():
    rng = np.random.default_rng(5)
    pair = build_directed_pair(random_directed(rng, 10))
    A = identity_connection(pair.base, pair.dual, ell="first")
    h = make_filter(3)
    f = rng.normal(size=10)
    for n in (0.2, 0.8, 3.0):
        assert np.allclose(joint_sigma(pair.base, pair.dual, A, h, n, f), sigma(pair, h, n, f), atol=1e-12)


def test_joint_sigma_zero_and_single_entry(circ):
    h = make_filter(4)
    f = np.random.default_rng(6).normal(size=48)
    Z = ConnectionMatrix([], [], [], [], (21, 21))
    assert np.allclose(joint_sigma(circ, circ, Z, h, 4.0, f), 0)
    A = ConnectionMatrix([2], [5], [0.5], [1.0], (21, 21))
    c = coefficients(circ, f)
    n = 3.0
    expect = h(1.0 / n) * 0.5 * c[5] * circ.eigenfunctions[:, 2]
    assert np.allclose(joint_sigma(circ, circ, A, h, n, f), expect)
    with pytest.raises(ValueError):
        joint_sigma(circ, circ, ConnectionMatrix([], [], [], [], (3, 3)), h, 1.0, f)


def test_joint_sigma_linear(circ, full_landmarks):
    rng = np.random.default_rng(7)
    A = landmark_connection(circ, circ, LandmarkSet.uniform(rng.choice(48, 12, replace=False)))
    h = make_filter(2)
    f, g = rng.normal(size=48), rng.normal(size=48)
    lhs = joint_sigma(circ, circ, A, h, 2.5, 2 * f - 3j * g)
    rhs = 2 * joint_sigma(circ, circ, A, h, 2.5, f) - 3j * joint_sigma(circ, circ, A, h, 2.5, g)
    assert np.allclose(lhs, rhs)


def test_band_factor(circ):
    ident = identity_connection(circ)
    assert band_factor(circ, ident) == pytest.approx(1.0)
    A = ConnectionMatrix([4], [1], [1.0], [1.0], (21, 21))  # lambda_{1,4} = 2
    assert band_factor(circ, A) == pytest.approx(2.0)
    B = ConnectionMatrix([4], [0], [1.0], [0.0], (21, 21))
    assert band_factor(circ, B) == math.inf


def test_joint_lift_identity(circ):
    h = make_filter(4)
    f = synthesize(circ, np.random.default_rng(8).normal(size=21))
    res = joint_lift(circ, circ, identity_connection(circ), h, f, J=6)
    assert res.converged and res.band_factor == pytest.approx(1.0)
    assert np.allclose(res.lift, f, atol=1e-10)
    doc = res.to_json()
    assert len(doc["level_increments"]) == 6
    assert len(doc["sufficient_condition_partial_sums"]) == 7
    with pytest.raises(ValueError):
        joint_lift(circ, circ, identity_connection(circ), h, f, J=0)


def test_joint_lift_reports_non_convergence(circ):
    h = make_filter(4)
    f = np.random.default_rng(9).normal(size=48)
    res = joint_lift(circ, circ, identity_connection(circ), h, f, J=2)
    assert not res.converged


def test_joint_distance(circ):
    lm = LandmarkSet.uniform([0, 12, 24, 36])
    d1 = circ.distances
    assert joint_distance(circ, circ, lm, 12, 12) == 0.0
    single = LandmarkSet([12], [12], [1.0])
    assert joint_distance(circ, circ, single, 3, 40) == pytest.approx(d1[3, 12] + d1[12, 40])
    table = JointDistance.from_landmarks(circ, circ, lm)
    for a, b, c in [(1, 5, 30), (7, 20, 44), (0, 47, 23)]:
        assert table(a, c) <= d1[a, b] + table(b, c) + 1e-12
        assert table(a, c) <= table(a, b) + d1[b, c] + 1e-12
        assert table(a, c) >= d1[a, c] - 1e-12
        assert table(a, c) == pytest.approx(joint_distance(circ, circ, lm, a, c))
    with pytest.raises(ValueError):
        JointDistance("explicit-table")


def test_diffusion_distance_identity(circ, full_landmarks):
    G = landmark_connection(circ, circ, full_landmarks)
    for i in (0, 7, 30):
        assert diffusion_distance(circ, circ, G, 0.1, i, i) < 1e-6
    d = diffusion_distance(circ, circ, G, 0.1, 3, 20)
    assert d == pytest.approx(diffusion_distance(circ, circ, G, 0.1, 20, 3))
    Z = ConnectionMatrix([], [], [], [], G.shape)
    t = 0.2
    expect = math.sqrt(heat_kernel(circ, 2 * t, 4, 4).real + heat_kernel(circ, 2 * t, 9, 9).real)
    assert diffusion_distance(circ, circ, Z, t, 4, 9) == pytest.approx(expect)
    with pytest.raises(ValueError):
        diffusion_distance(circ, circ, G, 0.0, 1, 2)


def test_diffusion_distance_complex_systems():
    N = 30
    s1 = exp_system(N, np.arange(-6, 7))
    s2 = exp_system(N, np.arange(-3, 10), lam=np.abs(np.arange(-3, 10)) + 0.5)
    lm = LandmarkSet.uniform(np.arange(N))
    G = landmark_connection(s1, s2, lm)
    t = 0.15
    K1 = heat_kernel_matrix(s1, t)
    K2 = heat_kernel_matrix(s2, t)
    for i1, i2 in [(0, 0), (3, 11), (17, 4)]:
        direct = math.sqrt(np.sum(np.abs(K1[i1] - K2[i2]) ** 2) / N)
        assert diffusion_distance(s1, s2, G, t, i1, i2) == pytest.approx(direct, rel=1e-9)


def test_diffusion_distance_inconsistent_connection(circ):
    big = ConnectionMatrix.from_dense(50 * np.eye(21), 0.0)
    with pytest.raises(ArithmeticError):
        diffusion_distance(circ, circ, big, 0.1, 0, 0)


def test_joint_heat_kernel_factorizes(circ, full_landmarks):
    G = landmark_connection(circ, circ, full_landmarks, joint="sqrt-sum")
    t = 0.1
    for i1, i2 in [(0, 0), (2, 17), (40, 9)]:
        assert joint_heat_kernel(circ, circ, G, t, i1, i2) == pytest.approx(heat_kernel(circ, 2 * t, i1, i2))
        # and as an integral over Y of K_t(x1, y) K_t(x2, y)
        K = heat_kernel_matrix(circ, t)
        assert joint_heat_kernel(circ, circ, G, t, i1, i2).real == pytest.approx(np.mean(K[i1] * K[i2]))


def test_verify_joint_gaussian_identity():
    circ = build_circle_system(256, 65)
    d12 = JointDistance("explicit-table", circ.distances)
    fit = verify_joint_gaussian(circ, circ, identity_connection(circ), d12,
                                t_grid=2.0 ** -np.arange(2, 6), n_grid=[4, 8, 16, 32])
    assert abs(fit.Q_hat - 1.0) <= 0.5
    assert abs(fit.C_hat - 0.5) <= 0.25
    assert np.all(np.diff(fit.ondiag_sums) >= 0)
    empty = ConnectionMatrix([], [], [], [], (65, 65))
    fit0 = verify_joint_gaussian(circ, circ, empty, d12, [0.1], [4])
    assert fit0.Q_hat == 0.0 and fit0.notes == ["empty connection"]
