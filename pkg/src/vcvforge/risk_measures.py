"""Student-t VaR/ES from a volatility forecast, plus the historical benchmark.

VaR and ES are stored as negative percent-return thresholds.  The Student-t
engine scales quantiles by sqrt((nu-2)/nu) by default so the forecast
distribution's variance equals the model variance (``t_scaling="raw"``
skips that).  For tail probability a and |q| = |t_nu^-1(a)|,

    VaR = scale * t_nu^-1(a)
    ES  = -scale * f_nu(q)/a * (nu + q^2) / (nu - 1)

so ES/VaR depends only on (nu, a).  The historical benchmark is the
empirical a-quantile of the training returns (linear interpolation between
order statistics), held constant over the test window.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betaincinv, gammaln

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RiskForecast:
    """One-day VaR/ES forecast at a given confidence level (signed %, negative)."""

    date: object
    var_level: float
    var_t: float
    es_t: float


def student_t_quantile(p: float, nu: float) -> float:
    """Quantile of the standard Student-t via the inverse incomplete beta.

    For p < 1/2, with x = I^-1_{2p}(nu/2, 1/2), the quantile is
    -sqrt(nu*(1-x)/x); the upper half follows by symmetry.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    if nu <= 0:
        raise ValueError(f"nu must be > 0, got {nu}")
    if p == 0.5:
        return 0.0
    tail = min(p, 1.0 - p)
    x = float(betaincinv(nu / 2.0, 0.5, 2.0 * tail))
    q = math.sqrt(nu * (1.0 - x) / x)
    return -q if p < 0.5 else q


def student_t_pdf(x: float, nu: float) -> float:
    """Density of the standard Student-t."""
    lognorm = gammaln((nu + 1.0) / 2.0) - gammaln(nu / 2.0) - 0.5 * math.log(nu * math.pi)
    return math.exp(lognorm - 0.5 * (nu + 1.0) * math.log1p(x * x / nu))


def student_t_cdf(x: float, nu: float) -> float:
    """CDF of the standard Student-t (via the regularized incomplete beta)."""
    from scipy.special import betainc

    z = nu / (nu + x * x)
    half_tail = 0.5 * float(betainc(nu / 2.0, 0.5, z))
    return half_tail if x < 0 else 1.0 - half_tail


def t_var_es(sigma_p: float, alpha: float, nu: float, t_scaling: str = "variance"):
    """(var_t, es_t) for portfolio stdev ``sigma_p`` at tail probability ``alpha``.

    Both are negative; linear in sigma_p, so their ratio depends only on
    (nu, alpha).  Requires nu > 2 (the variance scaling is undefined below).
    """
    if sigma_p <= 0:
        raise ValueError(f"sigma_p must be > 0, got {sigma_p}")
    if nu <= 2:
        raise ValueError(f"nu must be > 2 for a finite-variance forecast, got {nu}")
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"tail probability must be in (0, 0.5), got {alpha}")
    if t_scaling == "variance":
        scale = sigma_p * math.sqrt((nu - 2.0) / nu)
    elif t_scaling == "raw":
        scale = sigma_p
    else:
        raise ValueError(f"unknown t_scaling {t_scaling!r}")
    q_signed = student_t_quantile(alpha, nu)
    q = abs(q_signed)
    var_t = scale * q_signed
    es_t = -scale * (student_t_pdf(q, nu) / alpha) * (nu + q * q) / (nu - 1.0)
    return var_t, es_t


def t_var_es_series(sigma_series, alpha: float, nu: float, t_scaling: str = "variance"):
    """Vectorized t_var_es over a stdev series (the ratio is date-invariant)."""
    sigma = np.asarray(sigma_series, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("all sigma values must be > 0")
    unit_var, unit_es = t_var_es(1.0, alpha, nu, t_scaling)
    return sigma * unit_var, sigma * unit_es


def historical_var_es(train_returns, alpha: float):
    """Historical-simulation VaR/ES from the training return distribution.

    VaR is the empirical alpha-quantile (linear interpolation between order
    statistics); ES is the mean of returns at or below it.  With fewer than
    2 tail observations ES falls back to VaR with a warning.
    """
    r = np.asarray(train_returns, dtype=float)
    if r.ndim != 1 or r.size < 100:
        raise ValueError(f"need at least 100 observations, got {r.size}")
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"tail probability must be in (0, 0.5), got {alpha}")
    var_hs = float(np.quantile(r, alpha))
    tail = r[r <= var_hs]
    if tail.size < 2:
        log.warning(
            "historical ES: only %d observation(s) at or below the %.4f quantile; "
            "falling back to VaR",
            tail.size,
            alpha,
        )
        return var_hs, var_hs
    return var_hs, float(tail.mean())


def portfolio_series(returns, weights) -> np.ndarray:
    """Weighted portfolio return series r_p[t] = sum_i w_i * r[t, i]."""
    r = np.asarray(returns, dtype=float)
    w = weights.w if hasattr(weights, "w") else np.asarray(weights, dtype=float)
    return r @ w
