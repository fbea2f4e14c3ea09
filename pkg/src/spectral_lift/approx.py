"""Degrees of approximation, Besov sequence norms and smoothness estimates.

E_{n,2} is exact through Parseval.  For other p the error of the filtered
reconstruction sigma_n is used as a near-best stand-in for E_{n,p}; it is
within a constant factor of the true value but is not the value itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .digraph import DirectedPair, lp_norm, pair_from_system, tau_pyramid
from .filters import LowPassFilter
from .system import AdmissibleSystem, as_samples, coefficients, synthesize

__all__ = [
    "BesovParams",
    "DecaySequence",
    "SmoothnessReport",
    "InsufficientLevelsError",
    "NOISE_FLOOR",
    "degree_of_approx_l2",
    "degree_of_approx_lp",
    "best_approx_linf",
    "besov_seq_norm",
    "classify_smoothness",
    "pyramid_norms",
]

NOISE_FLOOR = 1e-12


class InsufficientLevelsError(ValueError):
    """Fewer than three pyramid levels above the noise floor."""


@dataclass(frozen=True)
class BesovParams:
    p: float
    rho: float
    gamma: float

    def __post_init__(self):
        if not (1 <= float(self.p) <= math.inf):
            raise ValueError("p must lie in [1, inf]")
        if not float(self.rho) > 0:
            raise ValueError("rho must lie in (0, inf]")
        if not float(self.gamma) > 0:
            raise ValueError("gamma must be positive")


@dataclass(frozen=True)
class DecaySequence:
    """Nonnegative a_0, ..., a_J indexed by dyadic level."""

    entries: tuple

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float).ravel()
        if not np.all(np.isfinite(a)) or np.any(a < 0):
            raise ValueError("decay sequence entries must be finite and nonnegative")
        object.__setattr__(self, "entries", tuple(float(x) for x in a))

    def __len__(self):
        return len(self.entries)

    def as_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=float)


def degree_of_approx_l2(system: AdmissibleSystem, f, n: float) -> float:
    """E_{n,2}(f) = (sum_{lambda_k >= n} |f_hat(k)|^2)^{1/2}."""
    c = coefficients(system, f)
    tail = system.eigenvalues >= n
    return float(np.sqrt(np.sum(np.abs(c[tail]) ** 2)))


def degree_of_approx_lp(system: AdmissibleSystem, f, n: float, p, h: LowPassFilter) -> float:
    """Near-best surrogate |f - sigma_n(f)|_p for E_{n,p}(f).

    Constant-factor equivalent to E_{n,p} for smooth h; not the exact
    best-approximation error.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    v = as_samples(system, f)
    s = synthesize(system, h(system.eigenvalues / n) * coefficients(system, v))
    return lp_norm(system, v - s, p)


def best_approx_linf(system: AdmissibleSystem, f, n: float, max_points: int = 64) -> float:
    """Exact min over P in Pi_n of max_i |f(x_i) - P(x_i)|, by linear programming.

    Small real systems only; meant as an oracle for the surrogate.
    """
    if system.n_points > max_points:
        raise ValueError(f"LP oracle limited to {max_points} points")
    v = as_samples(system, f)
    phi = system.eigenfunctions[:, system.eigenvalues < n]
    if np.iscomplexobj(v) or np.iscomplexobj(phi):
        if np.abs(np.imag(v)).max(initial=0) > 0 or np.abs(np.imag(phi)).max(initial=0) > 0:
            raise ValueError("LP oracle needs real-valued data")
        v, phi = np.real(v), np.real(phi)
    m = phi.shape[1]
    if m == 0:
        return float(np.abs(v).max())
    # variables (c_1..c_m, t): minimize t subject to |v - phi c| <= t
    cost = np.zeros(m + 1)
    cost[-1] = 1.0
    ones = np.ones((len(v), 1))
    A = np.vstack([np.hstack([phi, -ones]), np.hstack([-phi, -ones])])
    b = np.concatenate([v, -v])
    bounds = [(None, None)] * m + [(0, None)]
    res = linprog(cost, A_ub=A, b_ub=b, bounds=bounds, method="highs")
    if not res.success:
        raise RuntimeError(f"LP failed: {res.message}")
    return float(res.x[-1])


def besov_seq_norm(seq, rho, gamma) -> float:
    """(sum_j 2^{gamma rho j} a_j^rho)^{1/rho}; sup_j 2^{j gamma} a_j for rho = inf."""
    a = seq.as_array() if isinstance(seq, DecaySequence) else DecaySequence(tuple(seq)).as_array()
    rho = float(rho)
    if not rho > 0:
        raise ValueError("rho must be positive")
    if a.size == 0:
        return 0.0
    scale = 2.0 ** (gamma * np.arange(a.size))
    if math.isinf(rho):
        return float(np.max(scale * a))
    return float(np.sum((scale * a) ** rho) ** (1.0 / rho))


@dataclass
class SmoothnessReport:
    gamma_hat: float
    fit_residual: float
    levels_used: list
    per_level_norms: list
    p: float = 2.0
    band_limited: bool = False
    surrogate: bool = False
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        p = self.p
        return {
            "gamma_hat": self.gamma_hat,
            "residual": self.fit_residual,
            "per_level_norms": list(self.per_level_norms),
            "levels_used": list(self.levels_used),
            "p": "inf" if math.isinf(p) else p,
            "surrogate": self.surrogate,
            "band_limited": self.band_limited,
        }


def classify_smoothness(norms, p=2, first_level: int = 0) -> SmoothnessReport:
    """Fit log2 |tau_j| = c - gamma j over the levels above the noise floor.

    Levels below ``first_level`` are reported but not fitted (tau_0 only
    carries the mean and says nothing about decay).  If the trailing levels
    vanish the input is band-limited; gamma_hat is then only the decay seen
    before the cut and the report says so.
    """
    a = norms.as_array() if isinstance(norms, DecaySequence) else DecaySequence(tuple(norms)).as_array()
    used = np.flatnonzero(a > NOISE_FLOOR)
    used = used[used >= first_level]
    if used.size < 3:
        raise InsufficientLevelsError(
            f"insufficient levels: {used.size} above {NOISE_FLOOR:g}, need 3"
        )
    j = used.astype(float)
    y = np.log2(a[used])
    coef, res, *_ = np.polyfit(j, y, 1, full=True)
    resid = float(np.sqrt(res[0] / used.size)) if res.size else 0.0
    band = bool(used[-1] < a.size - 1)
    rep = SmoothnessReport(
        gamma_hat=float(-coef[0]),
        fit_residual=resid,
        levels_used=[int(x) for x in used],
        per_level_norms=[float(x) for x in a],
        p=float(p),
        band_limited=band,
        surrogate=float(p) != 2.0,
    )
    if band:
        rep.notes.append("band-limited input: levels past %d vanish" % used[-1])
    return rep


def pyramid_norms(src, h: LowPassFilter, J: int, f, p=2) -> DecaySequence:
    """|tau_j|_p for j = 0..J on a pair, or on a single system (Xi' = Xi)."""
    pair = src if isinstance(src, DirectedPair) else pair_from_system(src)
    taus = tau_pyramid(pair, h, J, f)
    return DecaySequence(tuple(lp_norm(pair.base, t, p) for t in taus))
