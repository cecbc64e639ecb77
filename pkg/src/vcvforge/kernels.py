"""Matern 5/2 and white-noise covariance functions, Gram matrix, gradients.

The composite kernel over day indices x_i, x_j is

    k(x_i, x_j) = sf2 * (1 + sqrt5*r + 5*r^2/3) * exp(-sqrt5*r) + delta_ij * sn2

with r = |x_i - x_j| / lengthscale.  The white term applies only between
identical training points (Kronecker delta on the index), so it appears on
the Gram diagonal but never in test/train cross covariances.

Hyperparameter gradients are taken with respect to the *logs* of the three
parameters, which is the space the optimizer works in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SQRT5 = math.sqrt(5.0)


@dataclass(frozen=True)
class KernelHyperparams:
    """Composite-kernel hyperparameters: variances in return-%^2, lengthscale in days."""

    signal_variance: float
    lengthscale: float
    noise_variance: float

    def __post_init__(self):
        for name in ("signal_variance", "lengthscale", "noise_variance"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v!r}")

    def log_array(self) -> np.ndarray:
        return np.log([self.signal_variance, self.lengthscale, self.noise_variance])

    @classmethod
    def from_log_array(cls, theta) -> "KernelHyperparams":
        sf2, ell, sn2 = np.exp(theta)
        return cls(float(sf2), float(ell), float(sn2))


@dataclass(frozen=True)
class JitterPolicy:
    """Diagonal-jitter escalation used when a Gram matrix fails to factorize.

    Scales are relative to the mean diagonal entry.  Starting from
    ``initial_scale`` the jitter grows by ``growth`` until ``max_scale``,
    after which Gram construction raises.
    """

    initial_scale: float = 1e-10
    growth: float = 10.0
    max_scale: float = 1e-4


@dataclass(frozen=True)
class GramMatrix:
    """Training Gram matrix with its Cholesky factor and any jitter added."""

    values: np.ndarray
    chol: np.ndarray  # lower triangular
    jitter_applied: float


def matern52(x_i: float, x_j: float, signal_variance: float, lengthscale: float) -> float:
    """Matern 5/2 covariance between two day indices."""
    if lengthscale <= 0 or signal_variance <= 0:
        raise ValueError("matern52 requires positive signal_variance and lengthscale")
    r = abs(x_i - x_j) / lengthscale
    return signal_variance * (1.0 + SQRT5 * r + 5.0 * r * r / 3.0) * math.exp(-SQRT5 * r)


def white(i: int, j: int, noise_variance: float) -> float:
    """White-noise covariance: sn2 between identical training points, else 0."""
    if noise_variance < 0:
        raise ValueError("noise_variance must be >= 0")
    return noise_variance if i == j else 0.0


def matern52_matrix(xa, xb, signal_variance: float, lengthscale: float) -> np.ndarray:
    """Matern 5/2 cross-covariance matrix for two sets of day indices."""
    if lengthscale <= 0 or signal_variance <= 0:
        raise ValueError("matern52 requires positive signal_variance and lengthscale")
    xa = np.asarray(xa, dtype=float)
    xb = np.asarray(xb, dtype=float)
    r = np.abs(xa[:, None] - xb[None, :]) / lengthscale
    return signal_variance * (1.0 + SQRT5 * r + (5.0 / 3.0) * r * r) * np.exp(-SQRT5 * r)


def gram(xs, params: KernelHyperparams, jitter_policy: JitterPolicy = JitterPolicy()) -> GramMatrix:
    """Build K = K_matern + sn2*I over training inputs and factorize it.

    The matrix is bitwise symmetric by construction.  If the Cholesky
    factorization fails, diagonal jitter is escalated per ``jitter_policy``;
    exhausting the policy raises ``np.linalg.LinAlgError`` with a condition
    estimate.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1 or xs.size < 2:
        raise ValueError("gram requires at least 2 one-dimensional inputs")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("gram inputs must be strictly increasing")

    K = matern52_matrix(xs, xs, params.signal_variance, params.lengthscale)
    K[np.diag_indices_from(K)] += params.noise_variance

    mean_diag = float(np.mean(np.diag(K)))
    jitter = 0.0
    scale = jitter_policy.initial_scale
    while True:
        try:
            L = np.linalg.cholesky(K if jitter == 0.0 else K + jitter * np.eye(len(xs)))
            break
        except np.linalg.LinAlgError:
            if scale > jitter_policy.max_scale:
                cond = _condition_estimate(K)
                raise np.linalg.LinAlgError(
                    f"Gram matrix not positive definite after jitter up to "
                    f"{jitter:.3e} (condition estimate {cond:.3e})"
                )
            jitter = scale * mean_diag
            scale *= jitter_policy.growth
    values = K if jitter == 0.0 else K + jitter * np.eye(len(xs))
    return GramMatrix(values=values, chol=L, jitter_applied=jitter)


def _condition_estimate(K: np.ndarray) -> float:
    w = np.linalg.eigvalsh(K)
    lo = float(np.min(np.abs(w)))
    return float(np.max(np.abs(w)) / lo) if lo > 0 else np.inf


def gram_gradients(xs, params: KernelHyperparams):
    """Gradients of the Gram matrix w.r.t. (log sf2, log lengthscale, log sn2).

    dK/dlog(sf2) is the Matern block itself, dK/dlog(ell) follows from
    d k / d r = -sf2 * (5/3) * r * (1 + sqrt5*r) * exp(-sqrt5*r) with
    dr/dlog(ell) = -r, and dK/dlog(sn2) = sn2 * I.
    """
    xs = np.asarray(xs, dtype=float)
    r = np.abs(xs[:, None] - xs[None, :]) / params.lengthscale
    decay = np.exp(-SQRT5 * r)
    d_sf2 = params.signal_variance * (1.0 + SQRT5 * r + (5.0 / 3.0) * r * r) * decay
    d_ell = params.signal_variance * (5.0 / 3.0) * r * r * (1.0 + SQRT5 * r) * decay
    d_sn2 = params.noise_variance * np.eye(len(xs))
    return d_sf2, d_ell, d_sn2
