"""Hybrid covariance assembly: GP variances on the diagonal, history off it.

``literal`` mode copies the historical covariance and overwrites the
diagonal with the GP variance forecasts, which can break positive
definiteness when forecasts are far below historical variances;
``ensure_pd`` repairs that by eigenvalue clipping.  ``corr_scaled`` mode
rescales the historical correlation matrix by the GP stdevs and is PD by
construction whenever the historical matrix is.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PD_CLIP_REL = 1e-10  # eigenvalue floor relative to the largest eigenvalue
PD_CLIP_ABS = 1e-12  # absolute floor for degenerate (e.g. zero) input


@dataclass(frozen=True, eq=False)
class HistoricalCov:
    """Unbiased (T-1 divisor) sample covariance of the training-window returns."""

    matrix: np.ndarray
    window: tuple  # (first train date, last train date)


@dataclass(frozen=True, eq=False)
class PortfolioWeights:
    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        object.__setattr__(self, "w", w)

    @classmethod
    def equal(cls, n: int) -> "PortfolioWeights":
        return cls(np.full(n, 1.0 / n))


@dataclass(frozen=True, eq=False)
class VcvForecast:
    """Per-date hybrid covariance with repair bookkeeping and portfolio variance."""

    date: object
    sigma: np.ndarray
    repaired: bool
    shift: float
    portfolio_variance: float


def historical_cov(train_returns, window=(None, None)) -> HistoricalCov:
    """Sample covariance of a T x N return block; requires T >= N + 2."""
    r = np.asarray(train_returns, dtype=float)
    if r.ndim != 2:
        raise ValueError("train_returns must be 2-dimensional")
    t, n = r.shape
    if t < n + 2:
        raise ValueError(f"need at least N+2={n + 2} observations, got {t}")
    return HistoricalCov(matrix=np.cov(r, rowvar=False, ddof=1), window=tuple(window))


def assemble(hist: HistoricalCov, gp_vars, mode: str = "literal") -> np.ndarray:
    """Combine historical covariance with GP variance forecasts for one date."""
    gp_vars = np.asarray(gp_vars, dtype=float)
    if np.any(gp_vars <= 0):
        raise ValueError("GP variance forecasts must be strictly positive")
    h = hist.matrix
    if gp_vars.shape != (h.shape[0],):
        raise ValueError("gp_vars length does not match covariance dimension")
    if mode == "literal":
        sigma = h.copy()
        sigma[np.diag_indices_from(sigma)] = gp_vars
        return sigma
    if mode == "corr_scaled":
        s_hist = np.sqrt(np.diag(h))
        corr = h / np.outer(s_hist, s_hist)
        d = np.sqrt(gp_vars)
        sigma = corr * np.outer(d, d)
        return 0.5 * (sigma + sigma.T)
    raise ValueError(f"unknown assembly mode {mode!r}")


def ensure_pd(sigma) -> tuple:
    """Clip eigenvalues below 1e-10 * lambda_max up to that floor.

    Returns ``(repaired_matrix, repaired_flag, largest_clip)``.  Already-PD
    input is returned unchanged.  Degenerate input (lambda_max <= 0, e.g. a
    zero matrix) gets an absolute diagonal floor instead.
    """
    s = np.asarray(sigma, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError("sigma must be square")
    if not np.allclose(s, s.T, rtol=0, atol=1e-8 * max(1.0, float(np.abs(s).max()))):
        raise ValueError("sigma must be symmetric")
    s = 0.5 * (s + s.T)
    eigvals, eigvecs = np.linalg.eigh(s)
    lam_max = float(eigvals[-1])
    eps = max(PD_CLIP_REL * lam_max, PD_CLIP_ABS)
    if eigvals[0] >= eps:
        return np.asarray(sigma, dtype=float), False, 0.0
    shift = float(eps - eigvals[0])
    clipped = np.maximum(eigvals, eps)
    repaired = (eigvecs * clipped) @ eigvecs.T
    return 0.5 * (repaired + repaired.T), True, shift


def portfolio_variance(sigma, weights: PortfolioWeights) -> float:
    """w' Sigma w; strictly positive for PD sigma."""
    w = weights.w
    value = float(w @ np.asarray(sigma, dtype=float) @ w)
    if value <= 0:
        raise ValueError(f"non-positive portfolio variance {value!r}; sigma not PD?")
    return value


def hybrid_forecast(
    hist: HistoricalCov,
    gp_vars,
    weights: PortfolioWeights,
    mode: str = "literal",
    date=None,
) -> VcvForecast:
    """Assemble, repair if needed, and price the portfolio variance for one date."""
    sigma = assemble(hist, gp_vars, mode)
    sigma, repaired, shift = ensure_pd(sigma)
    return VcvForecast(
        date=date,
        sigma=sigma,
        repaired=repaired,
        shift=shift,
        portfolio_variance=portfolio_variance(sigma, weights),
    )
