"""Closed-form upper-bound evaluators for the blended-policy regret.

Two forms are implemented. The first charges the online term with the
Thompson-sampling rate and the constrained term linearly through the gap
between the optimal and constrained weight vectors. The second measures
regret against the blended optimum and is sublinear in both the horizon
and the teaching budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError


@dataclass(frozen=True)
class BoundInputs:
    """Scalar inputs shared by both bound evaluators.

    ``c_max`` is the largest context 2-norm, ``mu_star_max`` the largest
    per-arm 1-norm of the optimal reward weights, and ``mu_e_extreme``
    the largest per-arm 1-norm of the constrained weights (the form the
    derivation actually uses; see the field name rather than any min/max
    shorthand).
    """

    d: int
    z: float
    gamma: float
    sigma_online: float
    T: int
    N: int = 1
    sigma_star: float = 1.0
    c_max: float = 1.0
    mu_star_max: float = 1.0
    mu_e_extreme: float = 1.0

    def __post_init__(self):
        if self.d < 1:
            raise ParameterError(f"d must be positive, got {self.d}")
        if not 0 < self.z <= 1:
            raise ParameterError(f"z must lie in (0, 1], got {self.z}")
        if not 0 < self.gamma < 1:
            raise ParameterError(f"gamma must lie in (0, 1), got {self.gamma}")
        for name in ("sigma_online", "sigma_star"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ParameterError(f"{name} must lie in [0, 1], got {val}")
        for name in ("c_max", "mu_star_max", "mu_e_extreme"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be nonnegative")


def _ts_rate(d: int, z: float, gamma: float, horizon: int) -> float:
    """(d*gamma/z) * sqrt(horizon^(z+1)) * (ln(horizon) * d) * ln(1/gamma)."""
    return (
        (d * gamma / z)
        * math.sqrt(horizon ** (z + 1.0))
        * (math.log(horizon) * d)
        * math.log(1.0 / gamma)
    )


def theorem1_bound(b: BoundInputs) -> float:
    """Online Thompson rate plus a linear constrained-gap term.

    The constrained term weights ``c_max * T`` by the scalar 2-norm of
    ``mu_star_max + mu_e_extreme`` (an absolute value, both norms being
    nonnegative). Degenerate weights zero the matching term exactly.
    """
    if b.T < 1:
        raise ParameterError(f"T must be positive, got {b.T}")
    sigma = b.sigma_online
    online = sigma * _ts_rate(b.d, b.z, b.gamma, b.T)
    constrained = (1.0 - sigma) * b.c_max * b.T * abs(b.mu_star_max + b.mu_e_extreme)
    return online + constrained


def theorem2_bound(b: BoundInputs) -> float:
    """Blended-optimum form: Thompson rates in both the horizon and budget.

    The online term carries weight ``max(sigma_star, sigma_online)``, the
    teaching term ``max(1 - sigma_star, 1 - sigma_online)``; equal weights
    collapse to sigma and 1 - sigma.
    """
    if b.T < 1:
        raise ParameterError(f"T must be positive, got {b.T}")
    if b.N < 1:
        raise ParameterError(f"N must be positive, got {b.N}")
    w_online = max(b.sigma_star, b.sigma_online)
    w_teach = max(1.0 - b.sigma_star, 1.0 - b.sigma_online)
    return w_online * _ts_rate(b.d, b.z, b.gamma, b.T) + w_teach * _ts_rate(
        b.d, b.z, b.gamma, b.N
    )
