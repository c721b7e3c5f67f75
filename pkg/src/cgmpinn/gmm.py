"""One-dimensional Gaussian mixture fitting on PDE residuals.

Plain EM with a deterministic initialisation: component means start at k
evenly spaced empirical quantiles of the data, every variance starts at the
sample variance and weights start uniform.  Variances are floored at
reg_covar after each M-step.  All log-density work happens in log space
with a row-wise max shift, so extreme residual spreads stay stable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigurationError, InputError, NumericalError


@dataclass(frozen=True)
class GmmModel:
    """Mixture weights, means and variances for k one-dimensional components."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    reg_covar: float
    k: int

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        m = np.asarray(self.means, dtype=np.float64)
        v = np.asarray(self.variances, dtype=np.float64)
        if not (w.shape == m.shape == v.shape == (self.k,)):
            raise ConfigurationError("weights, means, variances must all have shape (k,)")
        if self.k < 1:
            raise ConfigurationError("k must be >= 1")
        if not np.isfinite(w).all() or (w < 0).any() or abs(w.sum() - 1.0) > 1e-9:
            raise ConfigurationError("weights must be a probability vector")
        if not np.isfinite(m).all() or not np.isfinite(v).all() or (v <= 0).any():
            raise ConfigurationError("means must be finite, variances finite and positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "variances", v)


def _check_residuals(residuals) -> np.ndarray:
    r = np.asarray(residuals, dtype=np.float64).reshape(-1)
    if r.size == 0:
        raise InputError("residuals are empty")
    if not np.isfinite(r).all():
        raise NumericalError("residuals contain non-finite entries")
    return r


def _log_densities(model: GmmModel, r: np.ndarray) -> np.ndarray:
    """log(pi_m) + log N(r_i | mu_m, sigma_m^2), shape (n, k)."""
    var = model.variances[None, :]
    diff = r[:, None] - model.means[None, :]
    return (
        np.log(model.weights[None, :])
        - 0.5 * np.log(2.0 * np.pi * var)
        - 0.5 * diff * diff / var
    )


def log_likelihood(model: GmmModel, residuals) -> float:
    """Total data log-likelihood under the mixture."""
    r = _check_residuals(residuals)
    return float(logsumexp(_log_densities(model, r), axis=1).sum())


def responsibilities(model: GmmModel, residuals) -> np.ndarray:
    """Posterior component memberships, one row per residual, rows sum to 1."""
    r = _check_residuals(residuals)
    logd = _log_densities(model, r)
    logd -= logsumexp(logd, axis=1, keepdims=True)
    return np.exp(logd)


def em_step(model: GmmModel, residuals) -> GmmModel:
    """One E+M update with the variance floor applied."""
    r = _check_residuals(residuals)
    gamma = responsibilities(model, r)
    nk = np.maximum(gamma.sum(axis=0), 1e-300)
    weights = nk / r.size
    means = (gamma * r[:, None]).sum(axis=0) / nk
    diff = r[:, None] - means[None, :]
    variances = np.maximum((gamma * diff * diff).sum(axis=0) / nk, model.reg_covar)
    weights = weights / weights.sum()
    return GmmModel(weights, means, variances, model.reg_covar, model.k)


def _initial_model(r: np.ndarray, k: int, reg_covar: float) -> GmmModel:
    qs = np.quantile(r, np.linspace(0.0, 1.0, k)) if k > 1 else np.array([np.median(r)])
    var0 = max(float(r.var()), reg_covar)
    return GmmModel(np.full(k, 1.0 / k), qs, np.full(k, var0), reg_covar, k)


def fit_gmm(
    residuals,
    k: int = 4,
    reg_covar: float = 1e-6,
    tol: float = 1e-6,
    max_iter: int = 100,
    seed: int = 0,
) -> GmmModel:
    """Fit a k-component mixture to scalar residuals.

    Initialisation is fully deterministic (quantile-spread means), so the
    seed argument is accepted for interface stability but not consumed.
    Iteration stops when the per-sample mean log-likelihood improves by less
    than tol, or after max_iter EM steps.
    """
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    if reg_covar <= 0:
        raise ConfigurationError("reg_covar must be positive")
    if max_iter < 0:
        raise ConfigurationError("max_iter must be >= 0")
    r = _check_residuals(residuals)
    if r.size < k:
        raise InputError(f"need at least k={k} residuals, got {r.size}")
    model = _initial_model(r, k, reg_covar)
    prev = log_likelihood(model, r) / r.size
    for _ in range(max_iter):
        model = em_step(model, r)
        cur = log_likelihood(model, r) / r.size
        if cur - prev < tol:
            break
        prev = cur
    return model
