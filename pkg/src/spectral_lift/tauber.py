"""Atomic spectral measures and the quantities of the Tauberian estimate.

For points x_1, x_2 the kernel sum_k H(lambda_k/n) phi_k(x_1) conj(psi_k(x_2))
is the integral of H(u/n) against the atomic measure with masses
phi_k(x_1) conj(psi_k(x_2)) at u = lambda_k.  Heat kernels, filtered kernels
and Bochner-Riesz means are all transforms of that one measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .digraph import DirectedPair
from .filters import LowPassFilter
from .system import AdmissibleSystem
from .twosys import ConnectionMatrix

__all__ = [
    "DiscreteMeasure",
    "LocalizationReport",
    "measure_from_pair",
    "christoffel_sup",
    "heat_transform",
    "filter_transform",
    "bochner_riesz",
    "verify_localization",
]


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Atoms (u_m, c_m) on [0, inf), u strictly increasing.

    An atom at u = 0 is rejected unless ``allow_zero_atom`` is set; spectral
    measures of systems with lambda_0 = 0 carry one, and the localization
    estimate then does not apply to them as stated.
    """

    locations: np.ndarray
    masses: np.ndarray
    allow_zero_atom: bool = False

    def __post_init__(self):
        u = np.asarray(self.locations, dtype=float).ravel()
        c = np.asarray(self.masses, dtype=complex).ravel()
        if u.shape != c.shape:
            raise ValueError("locations and masses must have equal length")
        if not np.all(np.isfinite(u)) or not np.all(np.isfinite(c)):
            raise ValueError("non-finite atoms")
        if np.any(u < 0):
            raise ValueError("atom locations must be nonnegative")
        if np.any(np.diff(u) <= 0):
            raise ValueError("atom locations must be strictly increasing")
        if not self.allow_zero_atom and u.size and u[0] == 0 and c[0] != 0:
            raise ValueError("atom at u = 0 not permitted (mu({0}) must vanish)")
        object.__setattr__(self, "locations", u)
        object.__setattr__(self, "masses", c)

    @classmethod
    def from_atoms(cls, atoms, allow_zero_atom: bool = False) -> "DiscreteMeasure":
        """Build from (location, mass) pairs; equal locations are merged."""
        if len(atoms) == 0:
            return cls(np.zeros(0), np.zeros(0, dtype=complex), allow_zero_atom)
        u = np.array([a[0] for a in atoms], dtype=float)
        c = np.array([a[1] for a in atoms], dtype=complex)
        return _merge(u, c, allow_zero_atom)

    def __len__(self):
        return len(self.locations)

    @property
    def atom_at_zero(self) -> bool:
        return bool(len(self) and self.locations[0] == 0 and self.masses[0] != 0)

    @property
    def total_mass(self) -> complex:
        return complex(self.masses.sum())

    def __add__(self, other: "DiscreteMeasure") -> "DiscreteMeasure":
        return _merge(np.concatenate([self.locations, other.locations]),
                      np.concatenate([self.masses, other.masses]),
                      self.allow_zero_atom or other.allow_zero_atom)

    def scale(self, s) -> "DiscreteMeasure":
        return DiscreteMeasure(self.locations, s * self.masses, self.allow_zero_atom)


def _merge(u, c, allow_zero) -> DiscreteMeasure:
    locs, inv = np.unique(u, return_inverse=True)
    masses = np.zeros(len(locs), dtype=complex)
    np.add.at(masses, inv, c)
    keep = masses != 0
    return DiscreteMeasure(locs[keep], masses[keep], allow_zero)


def measure_from_pair(src, i1: int, i2: int, sys2: AdmissibleSystem | None = None,
                      A: ConnectionMatrix | None = None) -> DiscreteMeasure:
    """Spectral measure at (x_1, x_2).

    ``src`` is a :class:`DirectedPair` (atoms lambda_k, masses
    phi_k(x_1) conj(psi_k(x_2))) or system 1, with ``sys2`` and connection
    ``A`` (atoms ell_{j,k}, masses A_{j,k} phi_{1,j}(x_1) conj(phi_{2,k}(x_2))).
    """
    if isinstance(src, DirectedPair):
        u = src.eigenvalues
        c = src.base.eigenfunctions[i1] * np.conj(src.dual.eigenfunctions[i2])
    else:
        if sys2 is None or A is None:
            raise ValueError("need sys2 and a connection matrix")
        u = A.ell
        c = A.values * src.eigenfunctions[i1, A.rows] * np.conj(sys2.eigenfunctions[i2, A.cols])
    return _merge(np.asarray(u, dtype=float), np.asarray(c, dtype=complex), True)


def christoffel_sup(mu: DiscreteMeasure, Q: float) -> float:
    """|||mu|||_Q = sup_u |mu|([0, u)) / (u + 2)^Q, evaluated just past each atom."""
    if Q <= 0:
        raise ValueError("Q must be positive")
    if len(mu) == 0:
        return 0.0
    tv = np.cumsum(np.abs(mu.masses))
    return float(np.max(tv / (mu.locations + 2.0) ** Q))


def heat_transform(mu: DiscreteMeasure, t: float) -> complex:
    """int exp(-u^2 t) d mu(u)."""
    if t <= 0:
        raise ValueError("t must be positive")
    return complex(np.sum(mu.masses * np.exp(-mu.locations ** 2 * t)))


def filter_transform(mu: DiscreteMeasure, h: LowPassFilter, n: float) -> complex:
    """int h(u/n) d mu(u)."""
    if n <= 0:
        raise ValueError("n must be positive")
    if len(mu) == 0:
        return 0j
    return complex(np.sum(mu.masses * h(mu.locations / n)))


def bochner_riesz(mu: DiscreteMeasure, S: int, n: float) -> complex:
    """R_{S;n}(mu) = int (1 - u^2/n^2)_+^S d mu(u); S = 0 is the partial sum over u < n."""
    if S < 0:
        raise ValueError("S must be nonnegative")
    if n <= 0:
        raise ValueError("n must be positive")
    base = 1.0 - (mu.locations / n) ** 2
    w = np.where(base > 0, np.maximum(base, 0.0) ** S, 0.0)
    return complex(np.sum(mu.masses * w))


@dataclass
class LocalizationReport:
    status: str
    n_grid: list
    transforms: list
    christoffel: float
    empirical_c: float | None = None
    slope_hat: float | None = None
    expected_slope: float | None = None
    slope_ok: bool | None = None
    bound_holds_with_c: bool | None = None
    far_points: int = 0
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "n_grid": self.n_grid,
            "abs_transforms": self.transforms,
            "christoffel_sup": self.christoffel,
            "empirical_c": self.empirical_c,
            "slope_hat": self.slope_hat,
            "expected_slope": self.expected_slope,
            "slope_ok": self.slope_ok,
            "bound_holds_with_c": self.bound_holds_with_c,
            "far_points": self.far_points,
            "notes": self.notes,
        }


def verify_localization(mu: DiscreteMeasure, h: LowPassFilter, Q: float, S: int, r: float, n_grid,
                        c: float | None = None, slope_tol: float = 0.75) -> LocalizationReport:
    """Check |int h(u/n) d mu| <= c n^Q / max(1, (n r)^S) |||mu|||_Q along ``n_grid``.

    The slope of log|transform| against log n over the far regime n r > 1
    is compared with Q - S.  The filter's own representation constant is
    folded into ``empirical_c``.  A cutoff filter is not checked.
    """
    ns = np.asarray(n_grid, dtype=float)
    if r <= 0:
        raise ValueError("r must be positive")
    if ns.size == 0 or np.any(ns <= 0):
        raise ValueError("n_grid must be nonempty and positive")
    chris = christoffel_sup(mu, Q) if len(mu) else 0.0
    if not h.is_smooth:
        return LocalizationReport("non-smooth filter", ns.tolist(), [], chris,
                                  notes=["cutoff filter: localization hypothesis fails, check skipped"])
    vals = np.array([abs(filter_transform(mu, h, n)) for n in ns])
    notes = []
    if mu.atom_at_zero:
        notes.append("measure has an atom at u = 0")
    if np.any(ns < 1):
        notes.append("grid contains n < 1")
    damp = np.maximum(1.0, (ns * r) ** S)
    if chris > 0:
        emp = float(np.max(vals * damp / (ns ** Q * chris)))
    else:
        emp = 0.0
    far = (ns * r > 1) & (vals > 1e-13)
    slope = None
    if far.sum() >= 2:
        slope = float(np.polyfit(np.log(ns[far]), np.log(vals[far]), 1)[0])
    else:
        notes.append("fewer than two usable far-regime grid points")
    expected = float(Q - S)
    ok = None if slope is None else bool(abs(slope - expected) <= slope_tol)
    holds = None if c is None else bool(emp <= c)
    status = "ok" if ok else ("slope mismatch" if ok is False else "inconclusive")
    return LocalizationReport(status, ns.tolist(), vals.tolist(), chris, emp, slope, expected, ok,
                              holds, int(far.sum()), notes)
