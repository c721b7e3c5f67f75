"""Relative loss balancing with random lookback (ReLoBRaLo).

Keeps an exponential moving average of each loss component and a bounded
history of past loss vectors.  Each iteration one shared Bernoulli draw
decides whether the reference is the previous EMA or the losses at a single
uniformly drawn past iteration; the component weights are then
C * softmax(ratios / kappa), computed with a max shift.  Disabled mode
returns all-ones weights and consumes no randomness.

Call order per iteration: update_ema first (it records the current losses
and advances the EMA), then compute_lambdas.  The ratio reference uses the
EMA from before the current update.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InputError, NumericalError


@dataclass(frozen=True)
class BalancerConfig:
    enabled: bool = False
    alpha: float = 0.999
    rho: float = 0.99
    kappa: float = 0.1
    history: int = 1000
    eps: float = 1e-12

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ConfigurationError("alpha must be in [0, 1)")
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigurationError("rho must be in [0, 1]")
        if self.kappa <= 0:
            raise ConfigurationError("kappa must be positive")
        if self.history < 1:
            raise ConfigurationError("history must be >= 1")
        if self.eps <= 0:
            raise ConfigurationError("eps must be positive")


@dataclass
class BalancerState:
    cfg: BalancerConfig
    n_components: int
    rng: np.random.Generator
    ema: np.ndarray | None = None
    ema_prev: np.ndarray | None = None
    past: deque = field(default_factory=deque)


def new_balancer(cfg: BalancerConfig, n_components: int, seed: int) -> BalancerState:
    if n_components < 1:
        raise ConfigurationError("need at least one loss component")
    state = BalancerState(cfg, n_components, np.random.default_rng(int(seed)))
    state.past = deque(maxlen=cfg.history)
    return state


def _check_losses(state: BalancerState, losses) -> np.ndarray:
    vec = np.asarray(losses, dtype=np.float64).reshape(-1)
    if vec.shape[0] != state.n_components:
        raise InputError(f"expected {state.n_components} losses, got {vec.shape[0]}")
    if not np.isfinite(vec).all():
        raise NumericalError("losses contain non-finite entries")
    if (vec < 0).any():
        raise InputError("losses must be non-negative")
    return vec


def update_ema(state: BalancerState, losses) -> BalancerState:
    """Record the current losses and advance the moving average in place."""
    vec = _check_losses(state, losses)
    if state.ema is None:
        state.ema_prev = vec.copy()
        state.ema = vec.copy()
    else:
        state.ema_prev = state.ema.copy()
        state.ema = state.cfg.alpha * state.ema + (1.0 - state.cfg.alpha) * vec
    state.past.append(vec.copy())
    return state


def compute_lambdas(state: BalancerState, losses) -> np.ndarray:
    """Per-component weights summing to the number of components.

    Requires update_ema to have run this iteration.  The lookback pool
    excludes the entry update_ema just appended, so a drawn index always
    refers to a strictly earlier iteration.
    """
    if not state.cfg.enabled:
        return np.ones(state.n_components)
    if state.ema_prev is None:
        raise InputError("compute_lambdas called before the first update_ema")
    vec = _check_losses(state, losses)
    use_ema = state.rng.random() < state.cfg.rho
    pool_size = len(state.past) - 1
    if use_ema or pool_size < 1:
        reference = state.ema_prev
    else:
        idx = int(state.rng.integers(0, pool_size))
        reference = state.past[idx]
    ratios = vec / (reference + state.cfg.eps)
    z = ratios / state.cfg.kappa
    z = z - z.max()
    # keep every weight strictly positive even when a shifted exponent
    # underflows; the max entry is exp(0)=1 so the sum is unaffected
    expz = np.maximum(np.exp(z), np.finfo(np.float64).tiny)
    return state.n_components * expz / expz.sum()
