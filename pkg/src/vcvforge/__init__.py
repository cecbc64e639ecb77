"""vcvforge: hybrid GP-volatility / historical-covariance market risk engine.

Per-asset volatility is forecast with a univariate Gaussian process
(Matern 5/2 + white noise, aggressive noise initialization); the portfolio
covariance matrix combines those forecasts with historical covariances.
VaR and expected shortfall come from a scaled Student-t, and everything is
validated with a walk-forward regulatory backtesting harness.
"""

__version__ = "0.1.0"
