"""Per-arm Bayesian linear-model state and multivariate Gaussian sampling.

Each arm keeps a ridge-style posterior over a weight vector: a precision
accumulator ``B`` (identity plus a sum of context outer products), a
context-weighted reward accumulator ``g``, and the posterior mean
``mu_hat`` solving ``B mu_hat = g``. Thompson-style selection draws
weights from ``N(mu_hat, v^2 B^{-1})`` and scores contexts by inner
product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import NumericError, ParameterError, PosteriorStateError, ShapeError

# Rank-one updates of the cached inverse drift slowly; refresh it exactly
# every so many updates.
_INVERSE_REFRESH_INTERVAL = 512


def compute_v(R: float, z: float, gamma: float, d: int) -> float:
    """Sampling scale ``R * sqrt((24 / z) * d * ln(1 / gamma))``.

    ``R`` is the sub-Gaussian scale of the reward noise, ``z`` an
    exploration constant in (0, 1], ``gamma`` a confidence parameter in
    (0, 1], and ``d`` the context dimensionality. ``gamma = 1`` gives
    ``v = 0`` (no exploration noise).
    """
    if not R > 0:
        raise ParameterError(f"R must be positive, got {R}")
    if not 0 < z <= 1:
        raise ParameterError(f"z must lie in (0, 1], got {z}")
    if not 0 < gamma <= 1:
        raise ParameterError(f"gamma must lie in (0, 1], got {gamma}")
    if d < 1:
        raise ParameterError(f"d must be a positive integer, got {d}")
    return R * math.sqrt((24.0 / z) * d * math.log(1.0 / gamma))


@dataclass(frozen=True)
class SamplerParams:
    """Constants governing the posterior sampling scale.

    ``v`` is derived from the other fields and recomputed at
    construction; passing an inconsistent value is an error.
    """

    R: float = 1.0
    z: float = 0.5
    gamma: float = 0.1
    d: int = 1
    v: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ParameterError(f"gamma must lie in (0, 1), got {self.gamma}")
        expected = compute_v(self.R, self.z, self.gamma, self.d)
        if self.v is None:
            object.__setattr__(self, "v", expected)
        elif not math.isclose(self.v, expected, rel_tol=1e-12, abs_tol=1e-12):
            raise ParameterError(
                f"v={self.v} inconsistent with R={self.R}, z={self.z}, "
                f"gamma={self.gamma}, d={self.d} (expected {expected})"
            )


@dataclass
class ArmPosterior:
    """Incremental ridge posterior for one arm.

    ``B`` stays symmetric positive definite (identity seed plus rank-one
    updates), ``mu_hat`` always solves ``B mu_hat = g``. ``B_inv`` is a
    cached inverse maintained by rank-one (Sherman-Morrison) updates and
    refreshed exactly at a fixed interval.
    """

    B: np.ndarray
    g: np.ndarray
    mu_hat: np.ndarray
    update_count: int = 0
    B_inv: np.ndarray = None  # type: ignore[assignment]
    _cov_factor: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.B_inv is None:
            self.B_inv = np.linalg.inv(self.B)

    @property
    def d(self) -> int:
        return self.B.shape[0]

    def copy(self) -> "ArmPosterior":
        return ArmPosterior(
            B=self.B.copy(),
            g=self.g.copy(),
            mu_hat=self.mu_hat.copy(),
            update_count=self.update_count,
            B_inv=self.B_inv.copy(),
        )

    def cov_factor(self) -> np.ndarray:
        """Matrix ``A`` with ``A A^T = B^{-1}``, via the Cholesky factor of B."""
        if self._cov_factor is None:
            try:
                lower = np.linalg.cholesky(self.B)
            except np.linalg.LinAlgError as exc:
                raise PosteriorStateError(
                    "precision matrix is not positive definite"
                ) from exc
            identity = np.eye(self.d)
            # inv(L).T is upper triangular; (inv(L).T)(inv(L).T)^T = B^{-1}
            self._cov_factor = scipy.linalg.solve_triangular(
                lower, identity, lower=True, check_finite=False
            ).T
        return self._cov_factor


def init_posterior(d: int) -> ArmPosterior:
    """Fresh posterior: ``B = I_d``, zero accumulator, zero mean."""
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise ParameterError(f"dimensionality must be a positive integer, got {d}")
    d = int(d)
    return ArmPosterior(
        B=np.eye(d),
        g=np.zeros(d),
        mu_hat=np.zeros(d),
        update_count=0,
        B_inv=np.eye(d),
    )


def _check_context(post: ArmPosterior, c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.shape != (post.d,):
        raise ShapeError(f"context shape {c.shape} does not match dimension {post.d}")
    if not np.all(np.isfinite(c)):
        raise NumericError("context contains non-finite entries")
    return c


def update_posterior(post: ArmPosterior, c: np.ndarray, r: float) -> ArmPosterior:
    """Fold one (context, reward) observation into the posterior, in place.

    ``B += c c^T``, ``g += c r``; the mean is re-solved from scratch with a
    symmetric positive-definite solve. Returns the same object.
    """
    c = _check_context(post, c)
    r = float(r)
    if not math.isfinite(r):
        raise NumericError(f"reward must be finite, got {r}")

    post.B += np.outer(c, c)
    post.g += c * r
    post.update_count += 1
    post._cov_factor = None

    # Sherman-Morrison on the cached inverse; exact refresh at intervals.
    if post.update_count % _INVERSE_REFRESH_INTERVAL == 0:
        post.B_inv = np.linalg.inv(post.B)
    else:
        Bc = post.B_inv @ c
        post.B_inv -= np.outer(Bc, Bc) / (1.0 + c @ Bc)

    try:
        post.mu_hat = scipy.linalg.solve(post.B, post.g, assume_a="pos")
    except np.linalg.LinAlgError as exc:  # pragma: no cover - SPD by construction
        raise PosteriorStateError("posterior solve failed") from exc
    return post


def sample_weights(
    post: ArmPosterior, v: float, rng: np.random.Generator
) -> np.ndarray:
    """Draw a weight vector from ``N(mu_hat, v^2 B^{-1})``.

    Always consumes exactly ``d`` standard normals so that parallel
    substreams stay aligned; ``v = 0`` returns the mean exactly.
    """
    if v < 0:
        raise ParameterError(f"sampling scale must be nonnegative, got {v}")
    z = rng.standard_normal(post.d)
    if v == 0.0:
        return post.mu_hat.copy()
    return post.mu_hat + v * (post.cov_factor() @ z)


def score(w: np.ndarray, c: np.ndarray) -> float:
    """Inner product of a weight sample and a context vector."""
    w = np.asarray(w, dtype=float)
    c = np.asarray(c, dtype=float)
    if w.shape != c.shape:
        raise ShapeError(f"shape mismatch: {w.shape} vs {c.shape}")
    return float(w @ c)
