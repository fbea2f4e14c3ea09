"""Directed-graph spectral pairs via polar decomposition / SVD.

A non-symmetric weight matrix W = P U gives two orthonormal systems that
share the singular values: left vectors phi_k and right vectors
psi_k = U* phi_k.  Analysis of f against psi_k is analysis of U f against
phi_k, so sigma_n and the dyadic pyramid tau_j work on U f.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .filters import LowPassFilter
from .system import AdmissibleSystem, as_samples, coefficients, synthesize

__all__ = [
    "PolarDecomposition",
    "DirectedPair",
    "ChungCheck",
    "FrameCheck",
    "polar_decompose",
    "build_directed_pair",
    "shifted_gaussian_kernel",
    "chung_symmetrization_identity_check",
    "sigma",
    "sigma_coefficients",
    "kernel",
    "tau_pyramid",
    "frame_check",
    "lp_norm",
    "apply_isometry",
    "isometry_matrix",
    "pair_from_system",
    "dyadic_depth",
]


@dataclass
class PolarDecomposition:
    P: np.ndarray
    U: np.ndarray
    rank: int
    non_unique: bool


def _rank(s: np.ndarray, shape) -> int:
    if s.size == 0 or s[0] == 0:
        return 0
    tol = max(shape) * np.finfo(float).eps * s[0]
    return int(np.sum(s > tol))


def polar_decompose(W) -> PolarDecomposition:
    """W = P U with P = sqrt(W W*) positive semidefinite and U unitary.

    For rank-deficient W the unitary factor is not unique; the completion on
    the null space is whatever the (deterministic) LAPACK SVD returns and
    ``non_unique`` is set.
    """
    W = np.asarray(W)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("polar decomposition needs a square matrix")
    if not np.all(np.isfinite(W)):
        raise ValueError("non-finite entries in W")
    A, s, Bh = np.linalg.svd(W)
    P = (A * s) @ np.conj(A).T
    P = 0.5 * (P + np.conj(P).T)
    U = A @ Bh
    r = _rank(s, W.shape)
    return PolarDecomposition(P, U, r, r < W.shape[0])


@dataclass(frozen=True, eq=False)
class DirectedPair:
    """Systems (Xi, Xi') sharing points, measure and singular values.

    ``isometry`` is the stored-mode partial isometry
    U = sum_k phi_k <., psi_k>_mu as an N x N matrix acting on samples, or
    None for a single system wrapped as (Xi, Xi), where U is the projection
    onto the stored modes and is never formed unless asked for
    (see :func:`isometry_matrix`).
    """

    base: AdmissibleSystem
    dual: AdmissibleSystem
    isometry: np.ndarray | None
    non_unique_isometry: bool = False
    undirected: bool = False

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.base.eigenvalues

    @property
    def n_points(self) -> int:
        return self.base.n_points


def build_directed_pair(W, K: int | None = None, weights=None, points=None, metric=None) -> DirectedPair:
    """Measure-weighted SVD of W, K singular triples in ascending order.

    W acts on samples by plain matrix-vector product.  With D = diag(w),
    the SVD of D^{1/2} W D^{-1/2} = A S B* gives phi = D^{-1/2} A and
    psi = D^{-1/2} B, both orthonormal in L^2(mu), and
    W_ij = sum_k s_k phi_k(x_i) conj(psi_k(x_j)) w_j.
    """
    W = np.asarray(W)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("W must be square")
    if not np.all(np.isfinite(W)):
        raise ValueError("non-finite entries in W")
    n = W.shape[0]
    K = n if K is None else int(K)
    if not 1 <= K <= n:
        raise ValueError(f"need 1 <= K <= N, got K={K}")
    w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float)
    sw = np.sqrt(w)
    M = W * sw[:, None] / sw[None, :]
    A, s, Bh = np.linalg.svd(M)
    # ascending singular values; stable sort keeps LAPACK order among ties
    order = np.argsort(s, kind="stable")[:K]
    s_k = s[order]
    B = np.conj(Bh).T
    phi = A[:, order] / sw[:, None]
    psi = B[:, order] / sw[:, None]

    symmetric = np.allclose(W, np.conj(W).T, atol=1e-12 * max(1.0, np.abs(W).max()))
    if symmetric:
        # symmetric PSD: left and right vectors agree up to sign
        signs = np.sign(np.real(np.sum(np.conj(phi) * psi * w[:, None], axis=0)))
        signs[signs == 0] = 1
        psd = np.all(signs > 0)
    else:
        psd = False
    if not np.iscomplexobj(W):
        phi, psi = phi.real, psi.real

    r = _rank(s, W.shape)
    U = phi @ (np.conj(psi) * w[:, None]).T
    pts = np.arange(n, dtype=float)[:, None] if points is None else points
    met = metric
    if met is None:
        met = "euclidean" if points is not None else np.zeros((n, n))
    base = AdmissibleSystem(pts, w, s_k, phi, met, provenance="svd-left", name="base")
    dual = AdmissibleSystem(pts, w, s_k, psi, base.metric, provenance="svd-right", name="dual")
    return DirectedPair(base, dual, U, non_unique_isometry=(r < n), undirected=bool(psd))


def pair_from_system(system: AdmissibleSystem) -> DirectedPair:
    """Undirected case: Xi' = Xi and U is the projection onto the stored modes."""
    return DirectedPair(system, system, None, non_unique_isometry=False, undirected=True)


def isometry_matrix(pair: DirectedPair) -> np.ndarray:
    """U as a dense N x N matrix."""
    if pair.isometry is not None:
        return pair.isometry
    phi, psi = pair.base.eigenfunctions, pair.dual.eigenfunctions
    return phi @ (np.conj(psi) * pair.base.weights[:, None]).T


def apply_isometry(pair: DirectedPair, f) -> np.ndarray:
    """U f = sum_k <f, psi_k> phi_k over the stored modes."""
    v = as_samples(pair.base, f)
    if pair.isometry is None:
        return synthesize(pair.base, coefficients(pair.dual, v))
    return pair.isometry @ v


def shifted_gaussian_kernel(points, t: float, z_star, weights=None) -> np.ndarray:
    """W_ij = (2 pi t)^{-1/2} exp(-|x_i - x_j - z*|^2 / t) w_j."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    z = np.atleast_1d(np.asarray(z_star, dtype=float))
    if z.shape != (pts.shape[1],):
        raise ValueError(f"shift has dimension {z.shape}, points have {pts.shape[1]}")
    if t <= 0:
        raise ValueError("t must be positive")
    n = pts.shape[0]
    w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float)
    diff = pts[:, None, :] - pts[None, :, :] - z
    return (2 * np.pi * t) ** -0.5 * np.exp(-np.sum(diff ** 2, axis=-1) / t) * w[None, :]


@dataclass
class ChungCheck:
    lhs: np.ndarray
    rhs: np.ndarray
    max_abs_diff: float


def chung_symmetrization_identity_check(W) -> ChungCheck:
    """I - (W+W*)/2 against 2(I - ((W+I)/2)((W+I)*/2)) - (I - W W*)/2."""
    W = np.asarray(W)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("W must be square")
    I = np.eye(W.shape[0])
    Wh = np.conj(W).T
    lhs = I - (W + Wh) / 2
    rhs = 2 * (I - ((W + I) / 2) @ ((Wh + I) / 2)) - 0.5 * (I - W @ Wh)
    return ChungCheck(lhs, rhs, float(np.max(np.abs(lhs - rhs))))


def sigma_coefficients(pair: DirectedPair, h: LowPassFilter, n: float, f) -> np.ndarray:
    """Coefficients h(lambda_k/n) f_hat(Xi'; k) of sigma_n f against phi_k."""
    if n <= 0:
        raise ValueError("n must be positive")
    return h(pair.eigenvalues / n) * coefficients(pair.dual, f)


def sigma(pair: DirectedPair, h: LowPassFilter, n: float, f) -> np.ndarray:
    """sigma_n(Xi, Xi'; h, f) = sum_k h(lambda_k/n) f_hat(Xi'; k) phi_k."""
    return synthesize(pair.base, sigma_coefficients(pair, h, n, f))


def kernel(pair: DirectedPair, h: LowPassFilter, n: float, i: int, j: int) -> complex:
    """Phi_n(x_i, x_j) = sum_k h(lambda_k/n) phi_k(x_i) conj(psi_k(x_j))."""
    hv = h(pair.eigenvalues / n)
    return complex(np.sum(hv * pair.base.eigenfunctions[i] * np.conj(pair.dual.eigenfunctions[j])))


def tau_pyramid(pair: DirectedPair, h: LowPassFilter, J: int, f) -> list[np.ndarray]:
    """tau_0 = sigma_1 f, tau_j = sigma_{2^j} f - sigma_{2^{j-1}} f."""
    if J < 0:
        raise ValueError("J must be nonnegative")
    c = coefficients(pair.dual, f)
    lam = pair.eigenvalues
    prev = h(lam / 1.0)
    out = [synthesize(pair.base, prev * c)]
    for j in range(1, J + 1):
        cur = h(lam / 2.0 ** j)
        out.append(synthesize(pair.base, (cur - prev) * c))
        prev = cur
    return out


def lp_norm(system: AdmissibleSystem, f, p) -> float:
    """Discrete L^p(mu*) norm; p = inf gives max |f|."""
    v = np.abs(as_samples(system, f))
    p = float(p)
    if p < 1:
        raise ValueError("p must be >= 1")
    if np.isinf(p):
        return float(v.max()) if v.size else 0.0
    return float(np.sum(system.weights * v ** p) ** (1.0 / p))


@dataclass
class FrameCheck:
    sum_sq: float
    energy: float
    lower_ok: bool
    upper_ok: bool
    levels: int


def dyadic_depth(eigenvalues) -> int:
    """Smallest J with h(lambda/2^J) = 1 for every stored lambda."""
    top = float(np.max(eigenvalues)) if len(eigenvalues) else 0.0
    J = 0
    while top >= 2.0 ** (J - 1):
        J += 1
    return J


def frame_check(pair: DirectedPair, h: LowPassFilter, f, J: int | None = None,
                rtol: float = 1e-9) -> FrameCheck:
    """sum_j |tau_j|^2 <= |Uf|^2 <= 5 sum_j |tau_j|^2 in L^2(mu*)."""
    if J is None:
        J = dyadic_depth(pair.eigenvalues)
    taus = tau_pyramid(pair, h, J, f)
    ssq = sum(lp_norm(pair.base, t, 2) ** 2 for t in taus)
    energy = lp_norm(pair.base, apply_isometry(pair, f), 2) ** 2
    slack = rtol * max(energy, ssq, 1e-300)
    return FrameCheck(ssq, energy, ssq <= energy + slack, energy <= 5 * ssq + slack, J + 1)
