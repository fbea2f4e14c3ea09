"""Low-pass filters h used inside every localized kernel.

A low-pass filter is even, equals 1 on [0, 1/2), vanishes on [1, inf) and
is non-increasing in between.  The default transition is the odd-symmetric
polynomial smoothstep of degree 2S+1, which has S vanishing derivatives at
both ends of [1/2, 1].  That polynomial is exactly the regularized
incomplete beta function I_t(S+1, S+1), which is how it is evaluated here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

__all__ = [
    "LowPassFilter",
    "PROFILES",
    "make_filter",
    "make_cutoff_filter",
    "smoothstep_polynomial",
]

PROFILES = ("smoothed-polynomial", "exp", "cutoff")


def smoothstep_polynomial(t, order: int):
    """Closed-form degree-(2S+1) smoothstep on [0, 1].

    Explicit sum form, kept separate from the incomplete-beta evaluation
    used by :class:`LowPassFilter` so the two can be checked against each
    other.
    """
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    s = order
    total = np.zeros_like(t)
    for k in range(s + 1):
        total = total + math.comb(s + k, k) * math.comb(2 * s + 1, s - k) * (-t) ** k
    return total * t ** (s + 1)


def _exp_step(t):
    # C-infinity step from 0 to 1 on [0, 1]
    t = np.clip(t, 0.0, 1.0)
    out = np.zeros_like(t)
    inner = (t > 0) & (t < 1)
    ti = t[inner]
    a = np.exp(-1.0 / ti)
    b = np.exp(-1.0 / (1.0 - ti))
    out[inner] = a / (a + b)
    out[t >= 1] = 1.0
    return out


@dataclass(frozen=True)
class LowPassFilter:
    """Immutable low-pass filter.

    Attributes
    ----------
    smoothness_order : int
        Number of continuous derivatives of the transition; 0 marks the
        non-smooth cutoff filter.
    transition_profile : str
        One of ``"smoothed-polynomial"``, ``"exp"`` or ``"cutoff"``.
    """

    smoothness_order: int
    transition_profile: str = "smoothed-polynomial"

    def __post_init__(self):
        if self.transition_profile not in PROFILES:
            raise ValueError(f"unknown filter profile {self.transition_profile!r}")

    @property
    def is_smooth(self) -> bool:
        return self.transition_profile != "cutoff"

    def __call__(self, u):
        """Evaluate h(u); scalar in, float out, array in, array out."""
        arr = np.asarray(u, dtype=float)
        if np.isnan(arr).any():
            raise ValueError("filter evaluated at NaN")
        a = np.abs(arr)
        if self.transition_profile == "cutoff":
            out = np.where(a < 1.0, 1.0, 0.0)
        else:
            t = np.clip(2.0 * a - 1.0, 0.0, 1.0)
            if self.transition_profile == "exp":
                step = _exp_step(np.atleast_1d(t)).reshape(t.shape)
            else:
                k = self.smoothness_order + 1
                step = betainc(k, k, t)
            out = np.where(a < 0.5, 1.0, np.where(a >= 1.0, 0.0, 1.0 - step))
        if np.ndim(out) == 0:
            return float(out)
        return out

    def eval(self, u):
        return self(u)

    def to_config(self) -> dict:
        return {"order": self.smoothness_order, "profile": self.transition_profile}

    @classmethod
    def from_config(cls, cfg: dict) -> "LowPassFilter":
        profile = cfg.get("profile", "smoothed-polynomial")
        if profile == "cutoff":
            return make_cutoff_filter()
        return make_filter(int(cfg.get("order", 4)), profile)


def make_filter(smoothness_order: int, profile: str = "smoothed-polynomial") -> LowPassFilter:
    """Smooth low-pass filter with the requested number of derivatives.

    The ``"exp"`` profile is infinitely differentiable; ``smoothness_order``
    is then only recorded.
    """
    if int(smoothness_order) != smoothness_order or smoothness_order < 1:
        raise ValueError(
            "smoothness_order must be a positive integer; use make_cutoff_filter() for order 0"
        )
    if profile == "cutoff":
        raise ValueError("use make_cutoff_filter() for the cutoff profile")
    return LowPassFilter(int(smoothness_order), profile)


def make_cutoff_filter() -> LowPassFilter:
    """h(t) = 1 for 0 <= t < 1, 0 otherwise."""
    return LowPassFilter(0, "cutoff")
