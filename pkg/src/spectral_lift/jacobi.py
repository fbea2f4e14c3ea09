"""Exactly computable reference systems.

* orthonormal Jacobi polynomials by three-term recurrence,
* the hemisphere / disc pair built from them, with its connection
  coefficients,
* the circle (trigonometric) system.

Every integral here goes through one Gauss-Legendre engine; Jacobi
weights are folded into the integrand after a square-root substitution at
each endpoint so that half-integer exponents stay smooth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .system import AdmissibleSystem, orthonormality_residual
from .twosys import ConnectionMatrix, JointDistance

__all__ = [
    "JacobiBasis",
    "jacobi_eval",
    "jacobi_table",
    "jacobi_weighted_integral",
    "gram_matrix",
    "connection_coeff",
    "connection_scale",
    "verify_jacobi_ultra",
    "UltraCheck",
    "HemisphereDiscPair",
    "build_hemisphere_disc_pair",
    "hemisphere_eigenfunction",
    "disc_eigenfunction",
    "build_circle_system",
    "circle_distance",
]


@dataclass(frozen=True)
class JacobiBasis:
    alpha: float
    beta: float
    max_degree: int

    def __post_init__(self):
        if self.alpha <= -1 or self.beta <= -1:
            raise ValueError("Jacobi parameters must exceed -1")
        if self.max_degree < 0:
            raise ValueError("max_degree must be nonnegative")

    def __call__(self, k: int, x):
        return jacobi_eval(self, k, x)


@lru_cache(maxsize=256)
def _recurrence(alpha: float, beta: float, n: int):
    """Orthonormal recurrence x p_k = a_{k+1} p_{k+1} + b_k p_k + a_k p_{k-1}.

    Returns (a[0..n], b[0..n-1], p0) with a[0] unused, in extended precision.
    """
    LD = np.longdouble
    al, be = LD(alpha), LD(beta)
    a = np.zeros(n + 1, dtype=LD)
    b = np.zeros(max(n, 1), dtype=LD)
    ab = al + be
    for k in range(n):
        s = 2 * k + ab
        if k == 0:
            b[0] = (be - al) / (ab + 2)
        else:
            b[k] = (be * be - al * al) / (s * (s + 2))
    for k in range(1, n + 1):
        s = 2 * k + ab
        if k == 1:
            a[1] = np.sqrt(4 * (1 + al) * (1 + be) / ((2 + ab) ** 2 * (3 + ab)))
        else:
            a[k] = np.sqrt(4 * k * (k + al) * (k + be) * (k + ab) / (s * s * (s + 1) * (s - 1)))
    log_mu0 = (alpha + beta + 1) * math.log(2) + gammaln(alpha + 1) + gammaln(beta + 1) - gammaln(alpha + beta + 2)
    p0 = LD(math.exp(-0.5 * log_mu0))
    return a, b, p0


def _table(alpha, beta, max_degree, x):
    # extended precision: at x near 1 the values reach 1e4 for alpha = 3 and
    # double-precision recurrence loses about 1e-10 absolute
    x = np.asarray(x, dtype=np.longdouble)
    a, b, p0 = _recurrence(float(alpha), float(beta), max(max_degree, 1))
    out = np.empty((max_degree + 1,) + x.shape, dtype=np.longdouble)
    out[0] = p0
    if max_degree >= 1:
        out[1] = (x - b[0]) * out[0] / a[1]
    for k in range(1, max_degree):
        out[k + 1] = ((x - b[k]) * out[k] - a[k] * out[k - 1]) / a[k + 1]
    return out


def jacobi_table(alpha: float, beta: float, max_degree: int, x) -> np.ndarray:
    """Values p_k^{(alpha,beta)}(x) for k = 0..max_degree, shape (max_degree+1, *x.shape)."""
    return _table(alpha, beta, max_degree, x).astype(float)


def jacobi_eval(basis: JacobiBasis, k: int, x):
    """Orthonormal Jacobi polynomial of degree ``k`` with positive leading coefficient."""
    if not 0 <= k <= basis.max_degree:
        raise ValueError(f"degree {k} outside 0..{basis.max_degree}")
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1 + 1e-14):
        raise ValueError("x must lie in [-1, 1]")
    val = jacobi_table(basis.alpha, basis.beta, k, np.clip(xa, -1.0, 1.0))[k]
    return float(val) if np.ndim(val) == 0 else val


@lru_cache(maxsize=64)
def _legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


def jacobi_weighted_integral(g, alpha: float, beta: float, n_nodes: int = 64) -> float:
    """int_{-1}^{1} g(x) (1-x)^alpha (1+x)^beta dx by Gauss-Legendre.

    The interval is split at 0; x = -1 + y^2 on the left half and
    x = 1 - z^2 on the right half remove the endpoint singularities.
    ``g`` must be vectorized.
    """
    t, wt = _legendre(n_nodes)
    y = 0.5 * (t + 1.0)
    wy = 0.5 * wt
    xl = -1.0 + y * y
    left = np.sum(wy * g(xl) * 2 * y ** (2 * beta + 1) * (2 - y * y) ** alpha)
    xr = 1.0 - y * y
    right = np.sum(wy * g(xr) * 2 * y ** (2 * alpha + 1) * (2 - y * y) ** beta)
    return float(left + right)


def gram_matrix(alpha: float, beta: float, max_degree: int, n_nodes: int | None = None) -> np.ndarray:
    """Quadrature Gram matrix of p_0..p_max_degree under their own weight."""
    if n_nodes is None:
        n_nodes = max_degree + 20
    t, wt = _legendre(n_nodes)
    y = 0.5 * (t + 1.0)
    wy = 0.5 * wt
    G = np.zeros((max_degree + 1, max_degree + 1))
    for x, wx in (
        (-1.0 + y * y, wy * 2 * y ** (2 * beta + 1) * (2 - y * y) ** alpha),
        (1.0 - y * y, wy * 2 * y ** (2 * alpha + 1) * (2 - y * y) ** beta),
    ):
        P = jacobi_table(alpha, beta, max_degree, x)
        G += (P * wx) @ P.T
    return G


def connection_coeff(m: int, j: int, k: int) -> float:
    """a_{j,k}^{(m)} = int p_j^{(|m|,1/2)} p_k^{(|m|,1)} (1-x)^{|m|} (1+x) dx, 0 <= k <= j."""
    if k > j or k < 0:
        raise ValueError("connection coefficients need 0 <= k <= j")
    return float(_connection_block(abs(int(m)), j)[j, k])


@lru_cache(maxsize=128)
def _connection_block(am: int, jmax: int) -> np.ndarray:
    n_nodes = jmax + am + 8
    t, wt = np.polynomial.legendre.leggauss(n_nodes)
    Pj = jacobi_table(am, 0.5, jmax, t)
    Pk = jacobi_table(am, 1.0, jmax, t)
    w = wt * (1 - t) ** am * (1 + t)
    a = (Pj * w) @ Pk.T
    return np.tril(a)


def connection_scale(m: int) -> float:
    """Factor c_m in A_{(j,m),(k,m)} = c_m a_{j,k}^{(m)}.

    With the eigenfunction normalizations of the hemisphere and disc
    systems, the synthesis identity sum_k A phi_2 = phi_1 forces
    c_m = sqrt(pi) * 2^{1/4} for every m.
    """
    return math.sqrt(math.pi) * 2.0 ** 0.25


@dataclass
class UltraCheck:
    lhs: float
    rhs: float
    abs_diff: float


def verify_jacobi_ultra(alpha: float, j: int, theta) -> UltraCheck:
    """Compare p_{2j+1}^{(a,a)}(cos t) with 2^{a/2+3/4} cos t p_j^{(a,1/2)}(cos 2t)."""
    th = np.asarray(theta, dtype=float)
    if np.any(th < -1e-15) or np.any(th > np.pi / 2 + 1e-15):
        raise ValueError("theta must lie in [0, pi/2]")
    tl = th.astype(np.longdouble)
    c = np.cos(tl)
    lhs = _table(alpha, alpha, 2 * j + 1, c)[2 * j + 1]
    rhs = np.longdouble(2.0) ** (np.longdouble(alpha) / 2 + np.longdouble(0.75)) * c * _table(alpha, 0.5, j, np.cos(2 * tl))[j]
    diff = np.abs(lhs - rhs).astype(float)
    lhs, rhs = lhs.astype(float), rhs.astype(float)
    if np.ndim(diff) == 0:
        return UltraCheck(float(lhs), float(rhs), float(diff))
    return UltraCheck(lhs, rhs, float(np.max(diff)))


# hemisphere / disc --------------------------------------------------------

def hemisphere_eigenvalue(j: int, ell: int) -> float:
    s = j + abs(ell)
    return math.sqrt(s * (s + 1))


def disc_eigenvalue(k: int, m: int) -> float:
    return float(k * abs(m) + k + abs(m))


def hemisphere_eigenfunction(j: int, ell: int, theta, phi):
    """sqrt(2) sin^|l| t p_{2j+1}^{(|l|,|l|)}(cos t) e^{i l phi}."""
    al = abs(ell)
    theta = np.asarray(theta, dtype=float)
    p = jacobi_table(al, al, 2 * j + 1, np.cos(theta))[2 * j + 1]
    return math.sqrt(2) * np.sin(theta) ** al * p * np.exp(1j * ell * np.asarray(phi))


def disc_eigenfunction(k: int, m: int, theta, phi):
    """sqrt(2^{|m|+2}/pi) sin^|m| t cos t p_k^{(|m|,1)}(cos 2t) e^{i m phi} at q(t, phi)."""
    am = abs(m)
    theta = np.asarray(theta, dtype=float)
    p = jacobi_table(am, 1.0, k, np.cos(2 * theta))[k]
    return (math.sqrt(2.0 ** (am + 2) / math.pi) * np.sin(theta) ** am * np.cos(theta) * p
            * np.exp(1j * m * np.asarray(phi)))


def _sphere_geodesic(P, R):
    return np.arccos(np.clip(P @ R.T, -1.0, 1.0))


@dataclass
class HemisphereDiscPair:
    """Hemisphere system (index (j, l)) and disc system (index (k, m)) on a shared (theta, phi) grid.

    ``connection`` carries the synthesis coefficients A (joint eigenvalues
    lambda_{1,j}); ``lift_connection`` carries the coefficients that move
    disc expansions onto hemisphere expansions, L = A^{-T} blockwise in m.
    """

    n_theta: int
    n_phi: int
    j_max: int
    m_max: int
    theta: np.ndarray
    phi: np.ndarray
    hemisphere: AdmissibleSystem
    disc: AdmissibleSystem
    hemisphere_modes: list
    disc_modes: list
    connection: ConnectionMatrix
    lift_connection: ConnectionMatrix
    joint_distance: JointDistance
    metadata: dict = field(default_factory=dict)


def _grid(n_theta: int, n_phi: int):
    u, gw = np.polynomial.legendre.leggauss(n_theta)
    u = 0.5 * (u + 1.0)
    gw = 0.5 * gw
    order = np.argsort(-u)  # theta increasing
    u, gw = u[order], gw[order]
    theta = np.arccos(u)
    phis = -np.pi + 2 * np.pi * (np.arange(n_phi) + 1) / n_phi
    T, F = np.meshgrid(theta, phis, indexing="ij")
    U = np.cos(T)
    GW = np.repeat(gw[:, None], n_phi, axis=1)
    return theta, phis, T.ravel(), F.ravel(), U.ravel(), GW.ravel()


def build_hemisphere_disc_pair(
    n_theta: int = 64,
    n_phi: int = 64,
    j_max: int = 8,
    m_max: int = 8,
    orthonormality_tol: float = 1e-6,
) -> HemisphereDiscPair:
    """Tabulate both eigensystems on the product grid and assemble the connections.

    Hemisphere measure: area normalized to a probability measure.  Disc
    measure: plain area (total mass pi).  Grid: Gauss-Legendre in cos(theta)
    times the trapezoid rule in phi.
    """
    if j_max < 1 or m_max < 1:
        raise ValueError("truncation must be at least 1")
    theta, phis, T, F, U, GW = _grid(n_theta, n_phi)
    w1 = GW / n_phi
    w2 = GW * U * 2 * np.pi / n_phi

    h_modes = [(j, l) for j in range(j_max + 1) for l in range(-m_max, m_max + 1)]
    d_modes = [(k, m) for k in range(j_max + 1) for m in range(-m_max, m_max + 1)]
    lam1 = np.array([hemisphere_eigenvalue(j, l) for j, l in h_modes])
    lam2 = np.array([disc_eigenvalue(k, m) for k, m in d_modes])
    o1 = np.argsort(lam1, kind="stable")
    o2 = np.argsort(lam2, kind="stable")
    h_modes = [h_modes[i] for i in o1]
    d_modes = [d_modes[i] for i in o2]
    lam1, lam2 = lam1[o1], lam2[o2]

    Phi1 = np.column_stack([hemisphere_eigenfunction(j, l, T, F) for j, l in h_modes])
    Phi2 = np.column_stack([disc_eigenfunction(k, m, T, F) for k, m in d_modes])

    pts1 = np.column_stack([np.sin(T) * np.cos(F), np.sin(T) * np.sin(F), np.cos(T)])
    pts2 = pts1[:, :2].copy()
    hemi = AdmissibleSystem(pts1, w1, lam1, Phi1, metric=_sphere_geodesic, provenance="analytic",
                            name="hemisphere", metadata={"measure": "area, normalized to probability"})
    disc = AdmissibleSystem(pts2, w2, lam2, Phi2, metric="euclidean", provenance="analytic",
                            name="disc", metadata={"measure": "area (total mass pi)"})
    for sys in (hemi, disc):
        r = orthonormality_residual(sys)
        if r > orthonormality_tol:
            raise ValueError(f"{sys.name} grid too coarse: orthonormality residual {r:.2e}")

    h_index = {mode: i for i, mode in enumerate(h_modes)}
    d_index = {mode: i for i, mode in enumerate(d_modes)}
    rows, cols, vals, ells = [], [], [], []
    lrows, lcols, lvals, lells = [], [], [], []
    for m in range(-m_max, m_max + 1):
        a = connection_scale(m) * _connection_block(abs(m), j_max)
        lift = np.linalg.inv(a).T
        for j in range(j_max + 1):
            for k in range(j_max + 1):
                r, c = h_index[(j, m)], d_index[(k, m)]
                if k <= j and abs(a[j, k]) >= 1e-14:
                    rows.append(r); cols.append(c); vals.append(a[j, k]); ells.append(lam1[r])
                if abs(lift[j, k]) >= 1e-14:
                    lrows.append(r); lcols.append(c); lvals.append(lift[j, k])
                    lells.append(max(lam1[r], lam2[c]))
    K1, K2 = len(h_modes), len(d_modes)
    A = ConnectionMatrix(np.array(rows), np.array(cols), np.array(vals, dtype=complex),
                         np.array(ells), shape=(K1, K2))
    L = ConnectionMatrix(np.array(lrows), np.array(lcols), np.array(lvals, dtype=complex),
                         np.array(lells), shape=(K1, K2))
    jd = JointDistance(mode="explicit-table", table=hemi.distances)
    return HemisphereDiscPair(
        n_theta, n_phi, j_max, m_max, theta, phis, hemi, disc, h_modes, d_modes, A, L, jd,
        metadata={
            "hemisphere_measure": "area, normalized to probability",
            "disc_measure": "area (total mass pi)",
            "connection_scale": connection_scale(0),
        },
    )


# circle -------------------------------------------------------------------

def circle_distance(P, R):
    d = np.abs(np.asarray(P, dtype=float).reshape(-1, 1) - np.asarray(R, dtype=float).reshape(1, -1))
    d = np.mod(d, 2 * np.pi)
    return np.minimum(d, 2 * np.pi - d)


def build_circle_system(N: int, K: int) -> AdmissibleSystem:
    """Trigonometric system on N equispaced angles.

    Weights are 2 pi / N (arc length), so phi_0 = 1/sqrt(2 pi) and
    phi = cos(k t)/sqrt(pi), sin(k t)/sqrt(pi) with frequencies 0, 1, 1, 2, 2, ...
    """
    if K < 1 or N < 2 * K + 1:
        raise ValueError(f"need N >= 2K + 1, got N={N}, K={K}")
    theta = 2 * np.pi * np.arange(N) / N
    cols = [np.full(N, 1 / math.sqrt(2 * math.pi))]
    lam = [0.0]
    k = 1
    while len(cols) < K:
        cols.append(np.cos(k * theta) / math.sqrt(math.pi)); lam.append(float(k))
        if len(cols) < K:
            cols.append(np.sin(k * theta) / math.sqrt(math.pi)); lam.append(float(k))
        k += 1
    return AdmissibleSystem(
        points=theta,
        weights=np.full(N, 2 * math.pi / N),
        eigenvalues=np.array(lam),
        eigenfunctions=np.column_stack(cols),
        metric=circle_distance,
        provenance="analytic",
        name="circle",
        metadata={"measure": "arc length, total mass 2 pi"},
    )
