"""Per-asset GP fitting: aggressive noise initialization, LML maximization, forecasts.

Each asset gets an independent zero-mean GP over its day index with the
Matern 5/2 + white composite kernel.  The optimizer starts from the
aggressive noise initialization (initial sn2 equal to the full empirical
variance of the training returns), works in log-hyperparameter space under
box bounds, and maximizes the exact log-marginal likelihood

    LML = -0.5 * y' K^-1 y - 0.5 * log|K| - (T/2) * log(2*pi)

with analytic gradients.  The volatility forecast for a test day is the
posterior predictive variance, by default including the noise term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.linalg.lapack import dpotri
from scipy.optimize import minimize

from .kernels import (
    GramMatrix,
    JitterPolicy,
    KernelHyperparams,
    gram,
    gram_gradients,
    matern52_matrix,
)

LOG_2PI = math.log(2.0 * math.pi)

ANI_LENGTHSCALE_INIT = 30.0  # one trading month
LENGTHSCALE_BOUNDS = (1.0, 1e5)
SIGNAL_VARIANCE_BOUNDS = (1e-6, 1e4)
NOISE_BOUNDS_REL = (1e-5, 10.0)  # relative to the ANI value


@dataclass(frozen=True)
class HyperparamBounds:
    signal_variance: tuple
    lengthscale: tuple
    noise_variance: tuple

    def log_bounds(self) -> list:
        return [
            tuple(np.log(self.signal_variance)),
            tuple(np.log(self.lengthscale)),
            tuple(np.log(self.noise_variance)),
        ]

    def contains(self, params: KernelHyperparams, rtol: float = 1e-9) -> bool:
        for (lo, hi), v in zip(
            (self.signal_variance, self.lengthscale, self.noise_variance),
            (params.signal_variance, params.lengthscale, params.noise_variance),
        ):
            if v < lo * (1 - rtol) or v > hi * (1 + rtol):
                return False
        return True


@dataclass(frozen=True)
class FitConfig:
    maxiter: int = 200
    gtol: float = 1e-6
    restarts: int = 2
    seed: int = 0
    jitter_policy: JitterPolicy = field(default_factory=JitterPolicy)


@dataclass(frozen=True)
class OptimizerTrace:
    iterations: int
    converged: bool
    n_starts: int
    start_used: str  # "ani", "restart<k>", or "ani-init" if no run improved on it


@dataclass(frozen=True, eq=False)
class GprModel:
    xs_train: np.ndarray
    y_train: np.ndarray
    params: KernelHyperparams
    chol: np.ndarray
    dual_weights: np.ndarray
    lml: float
    jitter_applied: float
    trace: OptimizerTrace


@dataclass(frozen=True, eq=False)
class VolForecast:
    """Predicted conditional variance (return-%^2) and stdev per test day index."""

    xs: np.ndarray
    variance: np.ndarray
    stdev: np.ndarray


def ani_init(y_train) -> tuple[KernelHyperparams, HyperparamBounds]:
    """Aggressive noise initialization from the training returns.

    The initial noise variance equals the full (population) empirical
    variance of the training returns; the signal variance starts at the
    same value and the lengthscale at 30 days.  Noise bounds are anchored
    to the ANI value, structural bounds are wide.
    """
    y = np.asarray(y_train, dtype=float)
    if y.ndim != 1 or y.size < 30:
        raise ValueError(f"ani_init requires at least 30 observations, got {y.size}")
    var = float(np.var(y))
    if var <= 0.0:
        raise ValueError("degenerate asset: training returns have zero variance")
    sig0 = float(np.clip(var, *SIGNAL_VARIANCE_BOUNDS))
    bounds = HyperparamBounds(
        signal_variance=SIGNAL_VARIANCE_BOUNDS,
        lengthscale=LENGTHSCALE_BOUNDS,
        noise_variance=(NOISE_BOUNDS_REL[0] * var, NOISE_BOUNDS_REL[1] * var),
    )
    return KernelHyperparams(sig0, ANI_LENGTHSCALE_INIT, var), bounds


def log_marginal_likelihood(
    xs, y, params: KernelHyperparams, jitter_policy: JitterPolicy = JitterPolicy()
):
    """Exact LML and its gradient w.r.t. the log-hyperparameters.

    Returns ``(lml, grad)`` with ``grad`` of length 3 ordered as
    (log sf2, log ell, log sn2).  log|K| comes from the Cholesky diagonal;
    the gradient uses 0.5 * tr((aa' - K^-1) dK) with a = K^-1 y.
    """
    y = np.asarray(y, dtype=float)
    gm = gram(xs, params, jitter_policy)
    lml, alpha = _lml_from_gram(gm, y)
    kinv = _cholesky_inverse(gm.chol)
    w = np.outer(alpha, alpha) - kinv
    grads = np.array([0.5 * float(np.sum(w * dk)) for dk in gram_gradients(xs, params)])
    return lml, grads


def _lml_from_gram(gm: GramMatrix, y: np.ndarray):
    alpha = cho_solve((gm.chol, True), y)
    logdet = 2.0 * float(np.sum(np.log(np.diag(gm.chol))))
    lml = -0.5 * float(y @ alpha) - 0.5 * logdet - 0.5 * len(y) * LOG_2PI
    return lml, alpha

def _cholesky_inverse(chol: np.ndarray) -> np.ndarray:
    kinv, info = dpotri(chol, lower=1)
    if info != 0:
        raise np.linalg.LinAlgError(f"dpotri failed with info={info}")
    return kinv + np.tril(kinv, -1).T


def fit(xs, y, config: FitConfig = FitConfig()) -> GprModel:
    """Maximize the LML from the ANI start plus seeded random restarts.

    The ANI starting point itself is always kept as a candidate, so the
    returned model never scores below it.  Non-convergence within
    ``maxiter`` is recorded on the trace, not raised.
    """
    xs = np.asarray(xs, dtype=float)
    y = np.asarray(y, dtype=float)
    init, bounds = ani_init(y)
    log_bounds = bounds.log_bounds()

    def objective(theta):
        try:
            params = KernelHyperparams.from_log_array(theta)
            lml, grad = log_marginal_likelihood(xs, y, params, config.jitter_policy)
            return -lml, -grad
        except np.linalg.LinAlgError:
            return 1e25, np.zeros(3)

    rng = np.random.default_rng(config.seed)
    starts = [("ani", init.log_array())]
    for k in range(config.restarts):
        theta = np.array([rng.uniform(lo, hi) for lo, hi in log_bounds])
        starts.append((f"restart{k}", theta))

    # The unoptimized ANI point is the fallback candidate.
    ani_lml = -objective(init.log_array())[0]
    best = ("ani-init", ani_lml, init.log_array(), 0, True)
    n_failed = 0
    for label, theta0 in starts:
        res = minimize(
            objective,
            theta0,
            jac=True,
            method="L-BFGS-B",
            bounds=log_bounds,
            options={"maxiter": config.maxiter, "gtol": config.gtol},
        )
        if not np.isfinite(res.fun) or res.fun >= 1e24:
            n_failed += 1
            continue
        if -res.fun > best[1]:
            best = (label, -res.fun, res.x, int(res.nit), bool(res.success))
    if n_failed == len(starts):
        raise np.linalg.LinAlgError("every optimizer start failed to factorize the Gram matrix")

    label, lml_best, theta_best, nit, success = best
    params = KernelHyperparams.from_log_array(theta_best)
    gm = gram(xs, params, config.jitter_policy)
    lml, alpha = _lml_from_gram(gm, y)
    trace = OptimizerTrace(
        iterations=nit, converged=success, n_starts=len(starts), start_used=label
    )
    return GprModel(
        xs_train=xs,
        y_train=y,
        params=params,
        chol=gm.chol,
        dual_weights=alpha,
        lml=lml,
        jitter_applied=gm.jitter_applied,
        trace=trace,
    )


def predict_variance(model: GprModel, xs_test, include_noise: bool = True) -> VolForecast:
    """Posterior predictive variance per test day.

    var(x*) = k(x*,x*) [+ sn2] - k*' K^-1 k*, with k* the Matern-only
    cross covariance (the white term never couples distinct points).
    Extrapolation beyond the training window is the normal mode; far from
    the data the variance reverts to sf2 [+ sn2].
    """
    xs_test = np.atleast_1d(np.asarray(xs_test, dtype=float))
    kstar = matern52_matrix(
        model.xs_train, xs_test, model.params.signal_variance, model.params.lengthscale
    )
    v = solve_triangular(model.chol, kstar, lower=True)
    var = model.params.signal_variance - np.sum(v * v, axis=0)
    if include_noise:
        var = var + model.params.noise_variance
    # guard against cancellation at (near-)duplicated training inputs
    var = np.maximum(var, 1e-12 * model.params.signal_variance)
    if not np.all(np.isfinite(var)):
        raise FloatingPointError("non-finite predictive variance")
    return VolForecast(xs=xs_test, variance=var, stdev=np.sqrt(var))
