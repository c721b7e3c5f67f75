"""Curriculum-guided residual reweighting.

A mixture model is fitted to the interior residual snapshot; each component
gets a difficulty score (responsibility-weighted mean squared residual,
min-max normalised) and a precision factor (inverse variance, scaled by the
sharpest component).  A schedule tau ramps from 0 to 1 over the first
c_sat fraction of training and blends an easy-first weighting exp(-beta*d)
into a hard-first weighting exp(-beta*(1-d)), while the precision factor
fades to 1.  Per-sample weights aggregate the component weights through the
responsibilities and are normalised to unit mean.

Two ablation variants share the plumbing: gmm_only statically up-weights
hard components with exp(+beta*d)*precision (no schedule), and cl_only maps
each sample's raw squared residual through the same easy/hard blend with no
mixture model at all.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InputError, NumericalError
from .gmm import GmmModel, fit_gmm, responsibilities

VARIANTS = ("cgm", "gmm_only", "cl_only", "uniform")


@dataclass(frozen=True)
class CurriculumConfig:
    beta: float = 2.0
    c_sat: float = 0.5
    k_max: int = 7000
    k_upd: int = 100
    eps: float = 1e-8
    k_components: int = 4
    variant: str = "cgm"
    reg_covar: float = 1e-6
    gmm_tol: float = 1e-6
    gmm_max_iter: int = 100

    def __post_init__(self):
        if self.beta < 0:
            raise ConfigurationError("beta must be >= 0")
        if not 0.0 < self.c_sat <= 1.0:
            raise ConfigurationError("c_sat must be in (0, 1]")
        if self.k_max < 1 or self.k_upd < 1 or self.k_components < 1:
            raise ConfigurationError("k_max, k_upd and k_components must be >= 1")
        if self.eps <= 0:
            raise ConfigurationError("eps must be positive")
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"variant must be one of {VARIANTS}")


def tau(k: int, cfg: CurriculumConfig) -> float:
    """Curriculum progress: min(k / (k_max * c_sat), 1)."""
    if k < 0:
        raise InputError("iteration index must be >= 0")
    return min(k / (cfg.k_max * cfg.c_sat), 1.0)


def component_difficulty(residuals, gamma, eps: float) -> np.ndarray:
    """Responsibility-weighted mean squared residual per component."""
    r = np.asarray(residuals, dtype=np.float64).reshape(-1)
    g = np.asarray(gamma, dtype=np.float64)
    if g.shape[0] != r.shape[0]:
        raise InputError("gamma rows must match residual count")
    r2 = r * r
    return (g * r2[:, None]).sum(axis=0) / (g.sum(axis=0) + eps)


def normalize_difficulty(d, eps: float) -> np.ndarray:
    """Min-max normalisation with an eps guard; a constant vector maps to 0."""
    d = np.asarray(d, dtype=np.float64).reshape(-1)
    lo, hi = d.min(), d.max()
    return (d - lo) / (hi - lo + eps)


def precision_factors(variances, eps: float) -> np.ndarray:
    """Inverse variances scaled so the sharpest component gets 1."""
    v = np.asarray(variances, dtype=np.float64).reshape(-1)
    inv = 1.0 / (v + eps)
    return inv / inv.max()


def curriculum_component_weights(
    d_tilde, variances, tau_value: float, cfg: CurriculumConfig
) -> np.ndarray:
    """Component weights for the active variant.

    cgm: blend exp(-beta*d) with exp(-beta*(1-d)) by tau and multiply by the
    tau-faded precision factor.  gmm_only: exp(+beta*d) times the raw
    precision factor, schedule-free.
    """
    d = np.asarray(d_tilde, dtype=np.float64).reshape(-1)
    if ((d < -1e-12) | (d > 1.0 + 1e-12)).any():
        raise InputError("normalised difficulty must lie in [0, 1]")
    if cfg.variant == "gmm_only":
        return np.exp(cfg.beta * d) * precision_factors(variances, cfg.eps)
    w_easy = np.exp(-cfg.beta * d)
    w_hard = np.exp(-cfg.beta * (1.0 - d))
    w_cl = (1.0 - tau_value) * w_easy + tau_value * w_hard
    v = precision_factors(variances, cfg.eps)
    v_faded = (1.0 - tau_value) * v + tau_value
    return w_cl * v_faded


def _unit_mean(w_raw: np.ndarray, eps: float) -> np.ndarray:
    n = w_raw.shape[0]
    return n * w_raw / (w_raw.sum() + eps)


def sample_weights(
    gamma,
    component_weights,
    n: int,
    eps: float,
    variant: str = "cgm",
    raw_residuals=None,
    beta: float | None = None,
    tau_value: float | None = None,
) -> np.ndarray:
    """Per-sample weights, normalised to (almost exactly) unit mean.

    cgm and gmm_only aggregate component weights through the responsibility
    matrix.  cl_only takes each sample's squared residual, min-max
    normalises it and applies the easy/hard blend directly, which is why it
    needs beta and tau_value.  uniform returns ones untouched.
    """
    if variant == "uniform":
        return np.ones(n)
    if variant == "cl_only":
        if raw_residuals is None or beta is None or tau_value is None:
            raise InputError("cl_only needs raw_residuals, beta and tau_value")
        r = np.asarray(raw_residuals, dtype=np.float64).reshape(-1)
        if r.shape[0] != n:
            raise InputError("raw_residuals length must equal n")
        d = normalize_difficulty(r * r, eps)
        w_raw = (1.0 - tau_value) * np.exp(-beta * d) + tau_value * np.exp(-beta * (1.0 - d))
        return _unit_mean(w_raw, eps)
    g = np.asarray(gamma, dtype=np.float64)
    wc = np.asarray(component_weights, dtype=np.float64).reshape(-1)
    if g.shape != (n, wc.shape[0]):
        raise InputError(f"gamma shape {g.shape} incompatible with n={n}, k={wc.shape[0]}")
    w_raw = g @ wc
    return _unit_mean(w_raw, eps)


def bound_constants(beta: float, eps: float, n: int, var_min: float, var_max: float):
    """Deterministic envelope (c_minus, c_plus) for normalised sample weights.

    v_low = (var_min + eps) / (var_max + eps) is the smallest precision
    factor; every raw weight then lies in [exp(-beta)*v_low, 1], which after
    unit-mean normalisation pins each weight inside [c_minus, c_plus].
    """
    v_low = (var_min + eps) / (var_max + eps)
    floor = np.exp(-beta) * v_low
    c_minus = n * floor / (n + eps)
    c_plus = n / (n * floor + eps)
    return float(c_minus), float(c_plus)


@dataclass(frozen=True)
class CurriculumState:
    """Frozen weighting state between refreshes."""

    tau: float
    model: GmmModel | None
    component_weights: np.ndarray | None
    sample_weights: np.ndarray
    last_refresh_iter: int
    difficulty: np.ndarray | None = None
    difficulty_norm: np.ndarray | None = None


def initial_state(n: int) -> CurriculumState:
    """Uniform weights before the first refresh."""
    return CurriculumState(
        tau=0.0,
        model=None,
        component_weights=None,
        sample_weights=np.ones(n),
        last_refresh_iter=-1,
    )


def refresh(
    state: CurriculumState, residual_snapshot, k: int, cfg: CurriculumConfig
) -> CurriculumState:
    """Recompute weights from a residual snapshot at iteration k.

    The caller controls cadence (iteration 0 and every k_upd iterations);
    between refreshes the returned state is used as-is, so the training
    objective stays fixed.
    """
    r = np.asarray(residual_snapshot, dtype=np.float64).reshape(-1)
    if r.size == 0:
        raise InputError("residual snapshot is empty")
    if not np.isfinite(r).all():
        raise NumericalError("residual snapshot contains non-finite entries")
    t = tau(k, cfg)
    n = r.size
    if cfg.variant == "uniform":
        return CurriculumState(t, None, None, np.ones(n), k)
    if cfg.variant == "cl_only":
        w = sample_weights(
            None, None, n, cfg.eps, "cl_only", raw_residuals=r, beta=cfg.beta, tau_value=t
        )
        return CurriculumState(t, None, None, w, k)
    model = fit_gmm(
        r,
        k=cfg.k_components,
        reg_covar=cfg.reg_covar,
        tol=cfg.gmm_tol,
        max_iter=cfg.gmm_max_iter,
    )
    gamma = responsibilities(model, r)
    d = component_difficulty(r, gamma, cfg.eps)
    d_tilde = normalize_difficulty(d, cfg.eps)
    w_comp = curriculum_component_weights(d_tilde, model.variances, t, cfg)
    w = sample_weights(gamma, w_comp, n, cfg.eps, cfg.variant)
    return CurriculumState(t, model, w_comp, w, k, difficulty=d, difficulty_norm=d_tilde)
