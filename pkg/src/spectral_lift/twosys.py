"""Two coupled systems: connection matrices, filtered lifts, joint distances.

A function f on system 2 is analysed against {phi_{2,k}}, its coefficients
are pushed through a connection matrix A (or the landmark matrix Gamma),
and synthesized against {phi_{1,j}} on system 1.  The dyadic limit of
those filtered operators is the lift of f.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .approx import degree_of_approx_l2, degree_of_approx_lp
from .digraph import lp_norm
from .filters import LowPassFilter
from .system import AdmissibleSystem, _sample_indices, as_samples, coefficients, heat_kernel_matrix, synthesize

__all__ = [
    "DROP_TOL",
    "LandmarkSet",
    "ConnectionMatrix",
    "JointDistance",
    "LiftResult",
    "JointGaussianFit",
    "landmark_connection",
    "identity_connection",
    "tensor_sigma",
    "tensor_lift",
    "joint_sigma",
    "joint_lift",
    "band_factor",
    "joint_distance",
    "diffusion_distance",
    "joint_heat_kernel",
    "verify_joint_gaussian",
]

DROP_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class LandmarkSet:
    """Common points Y, located in both systems, with a probability measure nu."""

    indices_in_1: np.ndarray
    indices_in_2: np.ndarray
    nu_weights: np.ndarray

    def __post_init__(self):
        i1 = np.asarray(self.indices_in_1, dtype=int).ravel()
        i2 = np.asarray(self.indices_in_2, dtype=int).ravel()
        nu = np.asarray(self.nu_weights, dtype=float).ravel()
        if not (len(i1) == len(i2) == len(nu)):
            raise ValueError("landmark index and weight lists must have equal length")
        if len(nu) == 0:
            raise ValueError("empty landmark set")
        if np.any(nu <= 0):
            raise ValueError("landmark weights must be positive")
        if abs(nu.sum() - 1.0) > 1e-12:
            raise ValueError(f"landmark weights sum to {nu.sum():.15g}, not 1")
        object.__setattr__(self, "indices_in_1", i1)
        object.__setattr__(self, "indices_in_2", i2)
        object.__setattr__(self, "nu_weights", nu)

    def __len__(self):
        return len(self.nu_weights)

    @classmethod
    def uniform(cls, indices_in_1, indices_in_2=None) -> "LandmarkSet":
        i1 = np.asarray(indices_in_1, dtype=int)
        i2 = i1 if indices_in_2 is None else np.asarray(indices_in_2, dtype=int)
        return cls(i1, i2, np.full(len(i1), 1.0 / len(i1)))


@dataclass(frozen=True, eq=False)
class ConnectionMatrix:
    """Sparse A_{j,k} with joint eigenvalues ell_{j,k}, stored as COO arrays.

    Entries with |A_{j,k}| < 1e-14 are dropped on construction.
    """

    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    ell: np.ndarray
    shape: tuple

    def __post_init__(self):
        r = np.asarray(self.rows, dtype=int).ravel()
        c = np.asarray(self.cols, dtype=int).ravel()
        v = np.asarray(self.values, dtype=complex).ravel()
        ell = np.asarray(self.ell, dtype=float).ravel()
        if not (len(r) == len(c) == len(v)):
            raise ValueError("rows, cols and values must have equal length")
        if len(ell) != len(v):
            raise ValueError("every stored entry needs a joint eigenvalue")
        K1, K2 = (int(s) for s in self.shape)
        if len(r) and (r.min() < 0 or r.max() >= K1 or c.min() < 0 or c.max() >= K2):
            raise ValueError("connection entry outside the systems' index ranges")
        if np.any(ell < 0) or not np.all(np.isfinite(ell)):
            raise ValueError("joint eigenvalues must be finite and nonnegative")
        keep = np.abs(v) >= DROP_TOL
        object.__setattr__(self, "rows", r[keep])
        object.__setattr__(self, "cols", c[keep])
        object.__setattr__(self, "values", v[keep])
        object.__setattr__(self, "ell", ell[keep])
        object.__setattr__(self, "shape", (K1, K2))

    @property
    def nnz(self) -> int:
        return len(self.values)

    @classmethod
    def from_dense(cls, A, ell) -> "ConnectionMatrix":
        A = np.asarray(A)
        ell = np.broadcast_to(np.asarray(ell, dtype=float), A.shape)
        r, c = np.nonzero(np.abs(A) >= DROP_TOL)
        return cls(r, c, A[r, c], ell[r, c], A.shape)

    def dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=complex)
        np.add.at(out, (self.rows, self.cols), self.values)
        return out

    def with_ell(self, ell) -> "ConnectionMatrix":
        """Same entries, new joint eigenvalues (array over entries or K1 x K2 table)."""
        ell = np.asarray(ell, dtype=float)
        if ell.shape == self.shape:
            ell = ell[self.rows, self.cols]
        return ConnectionMatrix(self.rows, self.cols, self.values, ell, self.shape)

    def to_json(self) -> dict:
        return {
            "shape": list(self.shape),
            "entries": [
                {"j": int(j), "k": int(k), "re": float(v.real), "im": float(v.imag), "ell": float(l)}
                for j, k, v, l in zip(self.rows, self.cols, self.values, self.ell)
            ],
        }

    @classmethod
    def from_json(cls, doc: dict, shape=None) -> "ConnectionMatrix":
        ents = doc.get("entries", [])
        try:
            r = [int(e["j"]) for e in ents]
            c = [int(e["k"]) for e in ents]
            v = [complex(float(e["re"]), float(e.get("im", 0.0))) for e in ents]
            ell = [float(e["ell"]) for e in ents]
        except KeyError as exc:
            raise ValueError(f"connection entry missing field {exc}") from None
        if shape is None:
            shape = doc.get("shape") or (max(r, default=-1) + 1, max(c, default=-1) + 1)
        return cls(np.array(r, dtype=int), np.array(c, dtype=int), np.array(v, dtype=complex),
                   np.array(ell), tuple(shape))


@dataclass(frozen=True, eq=False)
class JointDistance:
    """d_{1,2} as a landmark infimum, or as an explicit |X1| x |X2| table."""

    mode: str = "landmark-infimum"
    table: np.ndarray | None = None

    def __post_init__(self):
        if self.mode not in ("landmark-infimum", "explicit-table"):
            raise ValueError(f"unknown joint distance mode {self.mode!r}")
        if self.mode == "explicit-table":
            if self.table is None:
                raise ValueError("explicit-table mode needs a table")
            t = np.asarray(self.table, dtype=float)
            if np.any(t < 0):
                raise ValueError("joint distances must be nonnegative")
            object.__setattr__(self, "table", t)

    @classmethod
    def from_landmarks(cls, sys1: AdmissibleSystem, sys2: AdmissibleSystem, landmarks: LandmarkSet):
        d1 = sys1.distances[:, landmarks.indices_in_1]
        d2 = sys2.distances[landmarks.indices_in_2, :]
        # min over y of d1(x1, y) + d2(y, x2)
        table = np.min(d1[:, :, None] + d2[None, :, :], axis=1)
        return cls("landmark-infimum", table)

    def __call__(self, i1: int, i2: int) -> float:
        return float(self.table[i1, i2])


def _joint_ell(lam1, lam2, rule: str):
    if rule == "max":
        return np.maximum.outer(lam1, lam2)
    if rule == "sqrt-sum":
        return np.sqrt(np.add.outer(lam1 ** 2, lam2 ** 2))
    raise ValueError(f"unknown joint eigenvalue rule {rule!r}")


def landmark_connection(sys1: AdmissibleSystem, sys2: AdmissibleSystem, landmarks: LandmarkSet,
                        joint: str = "max") -> ConnectionMatrix:
    """Gamma_{j,k} = sum_y nu_y conj(phi_{1,j}(y)) phi_{2,k}(y).

    ``joint`` picks ell_{j,k}: ``"max"`` (max of the two frequencies) or
    ``"sqrt-sum"`` (sqrt(lambda_1^2 + lambda_2^2)).
    """
    i1, i2 = landmarks.indices_in_1, landmarks.indices_in_2
    if i1.min() < 0 or i1.max() >= sys1.n_points or i2.min() < 0 or i2.max() >= sys2.n_points:
        raise IndexError("landmark index out of range")
    P1 = sys1.eigenfunctions[i1]
    P2 = sys2.eigenfunctions[i2]
    G = np.conj(P1).T @ (P2 * landmarks.nu_weights[:, None])
    return ConnectionMatrix.from_dense(G, _joint_ell(sys1.eigenvalues, sys2.eigenvalues, joint))


def identity_connection(sys1: AdmissibleSystem, sys2: AdmissibleSystem | None = None,
                        ell: str = "first") -> ConnectionMatrix:
    """A_{j,k} = delta_{jk}; ell_{j,j} = lambda_{1,j} (or the max of both)."""
    sys2 = sys1 if sys2 is None else sys2
    K = min(sys1.n_modes, sys2.n_modes)
    idx = np.arange(K)
    lam = sys1.eigenvalues[:K]
    if ell == "max":
        lam = np.maximum(lam, sys2.eigenvalues[:K])
    return ConnectionMatrix(idx, idx, np.ones(K), lam, (sys1.n_modes, sys2.n_modes))


def _check_shape(A: ConnectionMatrix, sys1, sys2):
    if A.shape != (sys1.n_modes, sys2.n_modes):
        raise ValueError(f"connection shape {A.shape} does not match systems "
                         f"({sys1.n_modes}, {sys2.n_modes})")


def tensor_sigma(sys1, sys2, gamma: ConnectionMatrix, h: LowPassFilter, n: float, f) -> np.ndarray:
    """sum_{j,k} h(lambda_{1,j}/n) h(lambda_{2,k}/n) Gamma_{j,k} f_hat(Xi_2; k) phi_{1,j}."""
    if n <= 0:
        raise ValueError("n must be positive")
    _check_shape(gamma, sys1, sys2)
    c = h(sys2.eigenvalues / n) * coefficients(sys2, f)
    b = np.zeros(sys1.n_modes, dtype=complex)
    np.add.at(b, gamma.rows, gamma.values * c[gamma.cols])
    b *= h(sys1.eigenvalues / n)
    return synthesize(sys1, b)


def joint_sigma(sys1, sys2, A: ConnectionMatrix, h: LowPassFilter, n: float, f) -> np.ndarray:
    """sum_{j,k} h(ell_{j,k}/n) A_{j,k} f_hat(Xi_2; k) phi_{1,j}.

    When alpha ell_{j,k} >= lambda_{1,j} on every stored entry the output
    lies in Pi_{alpha n}(Xi_1); see :func:`band_factor`.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    _check_shape(A, sys1, sys2)
    c = coefficients(sys2, f)
    b = np.zeros(sys1.n_modes, dtype=complex)
    np.add.at(b, A.rows, h(A.ell / n) * A.values * c[A.cols])
    return synthesize(sys1, b)


def band_factor(sys1: AdmissibleSystem, A: ConnectionMatrix) -> float:
    """Smallest alpha with alpha ell_{j,k} >= lambda_{1,j} over stored entries (inf if none)."""
    lam = sys1.eigenvalues[A.rows]
    if A.nnz == 0:
        return 1.0
    if np.any((A.ell == 0) & (lam > 0)):
        return math.inf
    pos = A.ell > 0
    return float(max(1.0 if not pos.any() else np.max(lam[pos] / A.ell[pos]), 0.0))


@dataclass
class LiftResult:
    lift: np.ndarray
    level_increments: list
    converged: bool
    levels: int
    tol: float
    p: float
    sufficient_sums: list = field(default_factory=list)
    exponent: float = 0.0
    beta_hat: float | None = None
    band_factor: float | None = None

    def to_json(self) -> dict:
        return {
            "converged": self.converged,
            "levels": self.levels,
            "tol": self.tol,
            "p": "inf" if math.isinf(self.p) else self.p,
            "level_increments": [float(x) for x in self.level_increments],
            "sufficient_condition_partial_sums": [float(x) for x in self.sufficient_sums],
            "exponent": self.exponent,
            "beta_hat": self.beta_hat,
            "band_factor": self.band_factor,
        }


def _decay_slope(incs) -> float | None:
    a = np.asarray(incs, dtype=float)
    keep = np.flatnonzero(a > 1e-12)
    if keep.size < 2:
        return None
    return float(-np.polyfit(keep.astype(float), np.log2(a[keep]), 1)[0])


def _lift(op, sys1, sys2, h, f, J, tol, p, exponent):
    if J < 1:
        raise ValueError("J must be at least 1")
    v = as_samples(sys2, f)
    prev = op(1.0)
    incs = []
    for m in range(1, J + 1):
        cur = op(2.0 ** m)
        incs.append(lp_norm(sys1, cur - prev, p))
        prev = cur
    # partial sums of sum_m 2^{m s} E_{2^m, p}(Xi_2; f)
    sums, total = [], 0.0
    for m in range(J + 1):
        if float(p) == 2.0:
            e = degree_of_approx_l2(sys2, v, 2.0 ** m)
        else:
            e = degree_of_approx_lp(sys2, v, 2.0 ** m, p, h)
        total += 2.0 ** (m * exponent) * e
        sums.append(total)
    return LiftResult(prev, incs, bool(incs[-1] < tol), J, tol, float(p), sums, exponent,
                      _decay_slope(incs))


def tensor_lift(sys1, sys2, gamma: ConnectionMatrix, h: LowPassFilter, f, J: int, tol: float = 1e-8,
                p=2, exponent: float = 0.0) -> LiftResult:
    """Iterate sigma_{2^m, tensor}(f) for m = 0..J.

    ``exponent`` is q_1 + (q_2 - q_1)/p for the reported sufficient-condition
    sums; non-convergence is reported, never raised.
    """
    return _lift(lambda n: tensor_sigma(sys1, sys2, gamma, h, n, f), sys1, sys2, h, f, J, tol, p,
                 exponent)


def joint_lift(sys1, sys2, A: ConnectionMatrix, h: LowPassFilter, f, J: int, tol: float = 1e-8,
               p=2, exponent: float = 0.0) -> LiftResult:
    """Iterate sigma_{2^m}(Xi_1, Xi_2; A, ell; h, f) for m = 0..J.

    ``exponent`` is Q - q_2 - (q_1 - q_2)/p for the sufficient-condition sums.
    """
    res = _lift(lambda n: joint_sigma(sys1, sys2, A, h, n, f), sys1, sys2, h, f, J, tol, p, exponent)
    res.band_factor = band_factor(sys1, A)
    return res


def joint_distance(sys1, sys2, landmarks: LandmarkSet, i1: int, i2: int) -> float:
    """min over landmarks y of d_1(x_1, y) + d_2(y, x_2)."""
    if landmarks is None or len(landmarks) == 0:
        raise ValueError("empty landmark set")
    d1 = sys1.distances[i1, landmarks.indices_in_1]
    d2 = sys2.distances[landmarks.indices_in_2, i2]
    return float(np.min(d1 + d2))


def diffusion_distance(sys1, sys2, gamma: ConnectionMatrix, t: float, i1: int, i2: int) -> float:
    """Diffusion distance between x_1 in Xi_1 and x_2 in Xi_2 through Gamma.

    K_{2t}(x_1, x_1) + K_{2t}(x_2, x_2)
      - 2 Re sum exp(-t(lambda_1^2 + lambda_2^2)) Gamma_{j,k} phi_{1,j}(x_1) conj(phi_{2,k}(x_2)).
    """
    if t <= 0:
        raise ValueError("t must be positive")
    _check_shape(gamma, sys1, sys2)
    p1 = sys1.eigenfunctions[i1]
    p2 = sys2.eigenfunctions[i2]
    k1 = float(np.real(np.sum(np.exp(-2 * t * sys1.eigenvalues ** 2) * np.abs(p1) ** 2)))
    k2 = float(np.real(np.sum(np.exp(-2 * t * sys2.eigenvalues ** 2) * np.abs(p2) ** 2)))
    e = np.exp(-t * (sys1.eigenvalues[gamma.rows] ** 2 + sys2.eigenvalues[gamma.cols] ** 2))
    cross = np.real(np.sum(e * gamma.values * p1[gamma.rows] * np.conj(p2[gamma.cols])))
    rad = k1 + k2 - 2 * cross
    if rad < -1e-10:
        raise ArithmeticError(f"negative radicand {rad:.3e}: connection inconsistent with systems")
    return math.sqrt(max(rad, 0.0))


def joint_heat_kernel(sys1, sys2, A: ConnectionMatrix, t: float, i1: int, i2: int) -> complex:
    """sum exp(-ell_{j,k}^2 t) A_{j,k} phi_{1,j}(x_1) conj(phi_{2,k}(x_2))."""
    if t <= 0:
        raise ValueError("t must be positive")
    p1 = sys1.eigenfunctions[i1, A.rows]
    p2 = np.conj(sys2.eigenfunctions[i2, A.cols])
    return complex(np.sum(np.exp(-A.ell ** 2 * t) * A.values * p1 * p2))


def _joint_heat_block(sys1, sys2, A: ConnectionMatrix, t: float, idx1, idx2) -> np.ndarray:
    M = np.zeros(A.shape, dtype=complex)
    np.add.at(M, (A.rows, A.cols), np.exp(-A.ell ** 2 * t) * A.values)
    return sys1.eigenfunctions[idx1] @ M @ np.conj(sys2.eigenfunctions[idx2]).T


@dataclass
class JointGaussianFit:
    Q_hat: float
    ondiag_sums: list
    C_hat: float
    c1_hat: float
    c2_hat: float
    max_violation: float
    notes: list = field(default_factory=list)


def verify_joint_gaussian(sys1, sys2, A: ConnectionMatrix, d12: JointDistance, t_grid, n_grid,
                          max_points: int = 48) -> JointGaussianFit:
    """Empirical exponents for the joint Gaussian upper bound.

    Q_hat: growth of sup sum_{ell < n} |A phi_1(x_1) phi_2(x_2)| in n.
    C_hat, c1_hat, c2_hat: fit of |K_t(x_1, x_2)| <= c1 t^{-C} exp(-c2 d12^2 / t).
    Diagnostic only.
    """
    ns = np.asarray(n_grid, dtype=float)
    ts = np.asarray(t_grid, dtype=float)
    if ns.size == 0 or ts.size == 0:
        raise ValueError("grids must be nonempty")
    if np.any(ts <= 0) or np.any(ns <= 0):
        raise ValueError("grids must be positive")
    _check_shape(A, sys1, sys2)
    idx1 = _sample_indices(sys1.n_points, max_points)
    idx2 = _sample_indices(sys2.n_points, max_points)
    notes = []
    if A.nnz == 0:
        return JointGaussianFit(0.0, [0.0] * ns.size, 0.0, 0.0, 0.0, 0.0, ["empty connection"])

    a1 = np.abs(sys1.eigenfunctions[idx1])
    a2 = np.abs(sys2.eigenfunctions[idx2])
    sums = []
    for n in ns:
        M = np.zeros(A.shape)
        sel = A.ell < n
        np.add.at(M, (A.rows[sel], A.cols[sel]), np.abs(A.values[sel]))
        sums.append(float(np.max(a1 @ M @ a2.T)))
    sums = np.array(sums)
    ok = sums > 0
    if ok.sum() >= 2 and np.ptp(np.log(ns[ok])) > 0:
        Q_hat = float(np.polyfit(np.log(ns[ok]), np.log(sums[ok]), 1)[0])
    else:
        Q_hat = 0.0
        notes.append("too few nonzero partial sums to fit Q")

    D = d12.table[np.ix_(idx1, idx2)]
    blocks = [np.abs(_joint_heat_block(sys1, sys2, A, t, idx1, idx2)) for t in ts]
    sup = np.array([b.max() for b in blocks])
    if ts.size >= 2 and np.ptp(np.log(ts)) > 0 and np.all(sup > 0):
        C_hat = max(0.0, float(-np.polyfit(np.log(ts), np.log(sup), 1)[0]))
    else:
        C_hat = 0.0
    xs, ys = [], []
    for t, Kt in zip(ts, blocks):
        keep = (D > 0) & (Kt > 1e-13 * max(Kt.max(), 1e-300))
        xs.append(D[keep] ** 2 / t)
        ys.append(np.log(Kt[keep]) + C_hat * np.log(t))
    x, y = np.concatenate(xs), np.concatenate(ys)
    if x.size >= 2 and np.ptp(x) > 0:
        slope, intercept = np.polyfit(x, y, 1)
    else:
        slope = 0.0
        intercept = float(np.max(np.log(sup) + C_hat * np.log(ts))) if np.all(sup > 0) else 0.0
    c2 = max(0.0, float(-slope))
    c1 = float(np.exp(intercept))
    worst = 0.0
    for t, Kt in zip(ts, blocks):
        bound = c1 * t ** (-C_hat) * np.exp(-c2 * D ** 2 / t)
        worst = max(worst, float(np.max(Kt / bound - 1.0)))
    return JointGaussianFit(Q_hat, [float(s) for s in sums], C_hat, c1, c2, max(0.0, worst), notes)
