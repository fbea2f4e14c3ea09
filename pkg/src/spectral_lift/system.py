"""Finite admissible systems and their elementary spectral operations.

An :class:`AdmissibleSystem` is a point set with quadrature weights, a
metric, and a truncated eigensystem (frequencies ``lambda_k`` stored in
ascending order, eigenfunction table ``phi[i, k] = phi_k(x_i)``).  Everything
downstream works on the K stored modes only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Union

import numpy as np
from scipy.linalg import eigh
from scipy.spatial.distance import cdist

__all__ = [
    "AdmissibleSystem",
    "GaussianBoundFit",
    "build_undirected_system",
    "coefficients",
    "synthesize",
    "heat_kernel",
    "heat_kernel_matrix",
    "estimate_gaussian_bound",
    "ball_measure",
    "orthonormality_residual",
    "as_samples",
]

ORTHONORMAL_TOL = 1e-8

Metric = Union[str, np.ndarray, Callable[[np.ndarray, np.ndarray], np.ndarray]]


@dataclass(frozen=True, eq=False)
class AdmissibleSystem:
    """Discretized (X, d, mu*, {lambda_k}, {phi_k}).

    ``metric`` is ``"euclidean"`` (computed from ``points``), an explicit
    N x N table, or a callable ``metric(P, R)`` returning the distance
    table between point arrays ``P`` and ``R``.
    """

    points: Optional[np.ndarray]
    weights: np.ndarray
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray
    metric: Metric = "euclidean"
    provenance: str = "laplacian"
    orthonormal: bool = True
    name: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        lam = np.asarray(self.eigenvalues, dtype=float)
        phi = np.asarray(self.eigenfunctions)
        if phi.ndim != 2:
            raise ValueError("eigenfunctions must be an N x K table")
        n, k = phi.shape
        if w.shape != (n,):
            raise ValueError(f"expected {n} weights, got shape {w.shape}")
        if lam.shape != (k,):
            raise ValueError(f"expected {k} eigenvalues, got shape {lam.shape}")
        if not np.all(w > 0):
            raise ValueError("measure weights must be positive")
        if np.any(lam < 0) or np.any(np.diff(lam) < 0):
            raise ValueError("eigenvalues must be nonnegative and nondecreasing")
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(lam))):
            raise ValueError("non-finite entries in eigensystem")
        if self.points is not None:
            pts = np.asarray(self.points, dtype=float)
            if pts.ndim == 1:
                pts = pts[:, None]
            if pts.shape[0] != n:
                raise ValueError("points and eigenfunction rows disagree")
            object.__setattr__(self, "points", pts)
        elif isinstance(self.metric, str):
            raise ValueError("a euclidean metric needs point coordinates")
        if isinstance(self.metric, np.ndarray) or (
            not isinstance(self.metric, str) and not callable(self.metric)
        ):
            d = np.asarray(self.metric, dtype=float)
            if d.shape != (n, n):
                raise ValueError("explicit metric must be N x N")
            object.__setattr__(self, "metric", d)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "eigenfunctions", phi)

    @property
    def n_points(self) -> int:
        return self.eigenfunctions.shape[0]

    @property
    def n_modes(self) -> int:
        return self.eigenfunctions.shape[1]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @cached_property
    def distances(self) -> np.ndarray:
        if isinstance(self.metric, np.ndarray):
            return self.metric
        if isinstance(self.metric, str):
            if self.metric != "euclidean":
                raise ValueError(f"unknown metric {self.metric!r}")
            return cdist(self.points, self.points)
        return np.asarray(self.metric(self.points, self.points), dtype=float)

    def distance(self, i: int, j: int) -> float:
        return float(self.distances[i, j])

    def truncate(self, k: int) -> "AdmissibleSystem":
        """Keep the first ``k`` modes."""
        if not 1 <= k <= self.n_modes:
            raise ValueError("truncation out of range")
        return AdmissibleSystem(
            self.points, self.weights, self.eigenvalues[:k], self.eigenfunctions[:, :k],
            self.metric, self.provenance, self.orthonormal, self.name, dict(self.metadata),
        )


def as_samples(system: AdmissibleSystem, f) -> np.ndarray:
    """Validate a function sample vector against ``system``."""
    v = np.asarray(f)
    if v.ndim != 1 or v.shape[0] != system.n_points:
        raise ValueError(
            f"function has {v.shape} samples, system {system.name or ''} has {system.n_points} points"
        )
    return v


def build_undirected_system(
    points,
    epsilon: float,
    K: int,
    normalization: str = "unnormalized",
    weights=None,
) -> AdmissibleSystem:
    """Gaussian-kernel graph Laplacian eigensystem of a point cloud.

    W_ij = exp(-|x_i - x_j|^2 / epsilon), L = diag(row sums) - W.  The K
    smallest eigenvalues l_k of L give frequencies lambda_k = sqrt(l_k).

    ``normalization="random-walk"`` uses L_rw = I - D^{-1} W instead; its
    eigenvectors are orthonormal for the degree measure d_i / sum(d), which
    then replaces the measure weights.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if not np.all(np.isfinite(pts)):
        raise ValueError("non-finite coordinates")
    n = pts.shape[0]
    if not 1 <= K <= n:
        raise ValueError(f"need 1 <= K <= N, got K={K}, N={n}")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")

    W = np.exp(-cdist(pts, pts, "sqeuclidean") / epsilon)
    deg = W.sum(axis=1)
    if normalization == "unnormalized":
        w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float)
        if w.shape != (n,) or np.any(w <= 0):
            raise ValueError("weights must be N positive numbers")
        M = np.diag(deg) - W
        # generalized problem L v = l B v; B = I for uniform weights
        B = np.diag(w / w.mean())
    elif normalization == "random-walk":
        w = deg / deg.sum()
        M = np.diag(deg) - W
        B = np.diag(deg)
    else:
        raise ValueError(f"unknown normalization {normalization!r}")

    vals, vecs = eigh(M, B, subset_by_index=[0, K - 1])
    resid = np.linalg.norm(M @ vecs - (B @ vecs) * vals) / max(1.0, np.linalg.norm(M))
    if not np.isfinite(resid) or resid > 1e-6:
        raise np.linalg.LinAlgError(f"eigendecomposition failed, residual {resid:.3e}")
    vals = np.clip(vals, 0.0, None)
    # rescale to mu-orthonormality: sum_i w_i phi_k(x_i) phi_l(x_i) = delta_kl
    gram = np.sqrt(np.einsum("ik,i,ik->k", vecs, w, vecs))
    phi = vecs / gram
    idx = np.argmax(np.abs(phi), axis=0)
    phi = phi * np.sign(phi[idx, np.arange(K)])
    if K == 1 or vals[1] > 1e-10 * max(1.0, vals[-1]):
        # simple zero eigenvalue: its eigenvector is exactly constant
        phi[:, 0] = 1.0 / np.sqrt(w.sum())
    return AdmissibleSystem(
        points=pts,
        weights=w,
        eigenvalues=np.sqrt(vals),
        eigenfunctions=phi,
        metric="euclidean",
        provenance="laplacian",
        metadata={"epsilon": epsilon, "normalization": normalization, "eig_residual": float(resid)},
    )


def coefficients(system: AdmissibleSystem, f) -> np.ndarray:
    """f_hat(k) = sum_i w_i f(x_i) conj(phi_k(x_i))."""
    v = as_samples(system, f)
    return (system.weights * v) @ np.conj(system.eigenfunctions)


def synthesize(system: AdmissibleSystem, coeffs) -> np.ndarray:
    """sum_k a_k phi_k evaluated at the points."""
    a = np.asarray(coeffs)
    if a.shape != (system.n_modes,):
        raise ValueError("coefficient vector length must equal K")
    out = system.eigenfunctions @ a
    return out


def heat_kernel(system: AdmissibleSystem, t: float, i: int, j: int) -> complex:
    """K_t(x_i, x_j) over the stored truncation."""
    if t <= 0:
        raise ValueError("t must be positive")
    phi = system.eigenfunctions
    e = np.exp(-system.eigenvalues ** 2 * t)
    return complex(np.sum(e * phi[i] * np.conj(phi[j])))


def heat_kernel_matrix(system: AdmissibleSystem, t: float, rows=None, cols=None) -> np.ndarray:
    """Block of K_t(x_i, x_j) for the given row/column index sets."""
    if t <= 0:
        raise ValueError("t must be positive")
    phi = system.eigenfunctions
    pr = phi if rows is None else phi[rows]
    pc = phi if cols is None else phi[cols]
    e = np.exp(-system.eigenvalues ** 2 * t)
    return (pr * e) @ np.conj(pc).T


def orthonormality_residual(system: AdmissibleSystem) -> float:
    phi = system.eigenfunctions
    G = np.conj(phi).T @ (phi * system.weights[:, None])
    return float(np.max(np.abs(G - np.eye(system.n_modes))))


@dataclass
class GaussianBoundFit:
    q_hat: float
    c1_hat: float
    c2_hat: float
    max_violation: float


def _sample_indices(n: int, max_points: int) -> np.ndarray:
    if n <= max_points:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, max_points).round().astype(int))


def estimate_gaussian_bound(system: AdmissibleSystem, t_grid, max_points: int = 64) -> GaussianBoundFit:
    """Fit |K_t(x,y)| <= c1 t^{-q/2} exp(-c2 d(x,y)^2 / t) on a t grid.

    q comes from the on-diagonal scaling of sup_x K_t(x,x); c1, c2 from a
    linear fit of log|K_t| + (q/2) log t against d^2/t over off-diagonal
    samples.  A diagnostic only.
    """
    ts = np.asarray(t_grid, dtype=float)
    if ts.size == 0 or np.any(ts <= 0) or np.any(ts > 1):
        raise ValueError("t_grid must lie in (0, 1]")
    idx = _sample_indices(system.n_points, max_points)
    D = system.distances[np.ix_(idx, idx)]

    diag = np.array([np.max(np.abs(np.einsum(
        "ik,k,ik->i", system.eigenfunctions[idx], np.exp(-system.eigenvalues ** 2 * t),
        np.conj(system.eigenfunctions[idx])))) for t in ts])
    if ts.size >= 2 and np.ptp(np.log(ts)) > 0:
        slope = np.polyfit(np.log(ts), np.log(diag), 1)[0]
        q_hat = max(0.0, -2.0 * slope)
    else:
        q_hat = 0.0

    off = ~np.eye(len(idx), dtype=bool)
    if not np.any(D[off] > 0):
        if len(idx) > 1:
            raise ValueError("degenerate fit: all distances are zero")
        c1 = float(np.max(diag * ts ** (q_hat / 2)))
        return GaussianBoundFit(q_hat, c1, 0.0, 0.0)

    xs, ys = [], []
    for t in ts:
        Kt = np.abs(heat_kernel_matrix(system, t, idx, idx))
        keep = off & (D > 0) & (Kt > 1e-13 * Kt.max())
        xs.append(D[keep] ** 2 / t)
        ys.append(np.log(Kt[keep]) + 0.5 * q_hat * np.log(t))
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    if x.size >= 2 and np.ptp(x) > 0:
        slope, intercept = np.polyfit(x, y, 1)
    else:
        slope, intercept = 0.0, float(np.max(y)) if y.size else 0.0
    c2 = max(0.0, -slope)
    c1 = float(np.exp(intercept))

    worst = 0.0
    for t in ts:
        Kt = np.abs(heat_kernel_matrix(system, t, idx, idx))
        bound = c1 * t ** (-q_hat / 2) * np.exp(-c2 * D ** 2 / t)
        worst = max(worst, float(np.max(Kt / bound - 1.0)))
    return GaussianBoundFit(float(q_hat), c1, float(c2), max(0.0, worst))


def ball_measure(system: AdmissibleSystem, i: int, r: float) -> float:
    """mu*(B(x_i, r)) = sum of w_j over d(x_i, x_j) <= r."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    d = system.distances[i]
    return float(system.weights[d <= r].sum())
