"""Loss assembly, optimizers and the two-stage training loop.

The composite objective is

    total = lam_pde * L_pde^w + lam_bc * L_bc [+ lam_ic * L_ic]

where L_pde^w = mean_i(w_i * r_i^2) over the interior collocation points and
the boundary/initial terms are plain mean squared residuals (periodic
problems contribute a value gap and a derivative gap per time sample, the
wave problem a value and a velocity mismatch per initial point).  Gradients
with respect to the parameters are exact, assembled by the network's
reverse pass over its jet propagation.

Training runs Adam (or plain gradient descent) first, with the curriculum
weights refreshed from a pre-step residual snapshot at iteration 0 and
every k_upd iterations, then hands the flat parameter vector to L-BFGS with
the sample weights and balancing lambdas frozen at their values when that
stage begins.  A non-finite loss or gradient aborts the run; rows logged up
to that point are preserved and the summary carries an aborted status.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from . import curriculum as cur
from . import problems as prob
from .balancing import compute_lambdas, new_balancer, update_ema
from .config import TrainConfig, resolve_method
from .errors import ConfigurationError, InputError, NumericalError
from .network import ApproximatorParams, backprop_jets, forward_jets, init_network
from .records import IterRow, RefreshRow, RunRecord


def _check_weights(weights, n: int) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if w.shape[0] != n:
        raise InputError(f"expected {n} weights, got {w.shape[0]}")
    if not np.isfinite(w).all() or (w < 0).any():
        raise InputError("weights must be finite and non-negative")
    return w


class PinnLoss:
    """Residuals, component losses and exact gradients for one point set."""

    def __init__(self, spec: prob.ProblemSpec, points: prob.PointSets):
        self.spec = spec
        self.points = points
        self.f_int = prob.source_values(spec, points.interior)
        self.has_ic = spec.time_dependent
        if not spec.periodic:
            self.g_bc = prob.boundary_values(spec, points.boundary)
        if self.has_ic:
            self.u0 = prob.initial_values(spec, points.initial)
            if spec.problem_id == "damped_wave":
                self.v0 = prob.initial_velocity(spec, points.initial)

    def forward(self, params: ApproximatorParams) -> dict:
        jets = {"interior": forward_jets(params, self.points.interior)}
        jets["boundary"] = forward_jets(params, self.points.boundary)
        if self.has_ic:
            jets["initial"] = forward_jets(params, self.points.initial)
        return jets

    def residuals(self, jets: dict) -> dict:
        ji = jets["interior"]
        res = {
            "pde": prob.pde_residuals(
                self.spec, ji.values, ji.grads, ji.hesses, self.points.interior
            )
        }
        jb = jets["boundary"]
        if self.spec.periodic:
            res["bc_val"] = jb.values[0::2] - jb.values[1::2]
            res["bc_der"] = jb.grads[0::2, 0] - jb.grads[1::2, 0]
        else:
            res["bc"] = jb.values - self.g_bc
        if self.has_ic:
            j0 = jets["initial"]
            res["ic"] = j0.values - self.u0
            if self.spec.problem_id == "damped_wave":
                res["ic_vel"] = j0.grads[:, 1] - self.v0
        return res

    def components(self, res: dict, weights) -> dict:
        r = res["pde"]
        w = _check_weights(weights, r.shape[0])
        comps = {
            "pde_w": float(np.mean(w * r * r)),
            "pde_unweighted": float(np.mean(r * r)),
        }
        if self.spec.periodic:
            comps["bc"] = float(
                (np.sum(res["bc_val"] ** 2) + np.sum(res["bc_der"] ** 2))
                / (res["bc_val"].size + res["bc_der"].size)
            )
        else:
            comps["bc"] = float(np.mean(res["bc"] ** 2))
        if self.has_ic:
            if "ic_vel" in res:
                comps["ic"] = float(
                    (np.sum(res["ic"] ** 2) + np.sum(res["ic_vel"] ** 2))
                    / (res["ic"].size + res["ic_vel"].size)
                )
            else:
                comps["ic"] = float(np.mean(res["ic"] ** 2))
        else:
            comps["ic"] = 0.0
        return comps

    def combine(self, comps: dict, lam: np.ndarray) -> float:
        total = lam[0] * comps["pde_w"] + lam[1] * comps["bc"]
        if self.has_ic:
            total += lam[2] * comps["ic"]
        return float(total)

    def gradient(self, params, jets, res, weights, lam) -> np.ndarray:
        n = res["pde"].shape[0]
        w = _check_weights(weights, n)
        rbar = (2.0 * lam[0] / n) * w * res["pde"]
        ji = jets["interior"]
        vb, gb, hb = prob.residual_jet_bars(self.spec, ji.values, rbar)
        grad = backprop_jets(params, ji, vb, gb, hb)

        jb = jets["boundary"]
        if self.spec.periodic:
            m = res["bc_val"].size + res["bc_der"].size
            vb_b = np.zeros(len(jb))
            gb_b = np.zeros((len(jb), self.spec.input_dim))
            scale = 2.0 * lam[1] / m
            vb_b[0::2] = scale * res["bc_val"]
            vb_b[1::2] = -scale * res["bc_val"]
            gb_b[0::2, 0] = scale * res["bc_der"]
            gb_b[1::2, 0] = -scale * res["bc_der"]
            grad += backprop_jets(params, jb, vb_b, gb_b, None)
        else:
            vb_b = (2.0 * lam[1] / res["bc"].size) * res["bc"]
            grad += backprop_jets(params, jb, vb_b, None, None)

        if self.has_ic:
            j0 = jets["initial"]
            if "ic_vel" in res:
                m = res["ic"].size + res["ic_vel"].size
                scale = 2.0 * lam[2] / m
                vb_0 = scale * res["ic"]
                gb_0 = np.zeros((len(j0), self.spec.input_dim))
                gb_0[:, 1] = scale * res["ic_vel"]
                grad += backprop_jets(params, j0, vb_0, gb_0, None)
            else:
                vb_0 = (2.0 * lam[2] / res["ic"].size) * res["ic"]
                grad += backprop_jets(params, j0, vb_0, None, None)
        return grad

    def evaluate(self, params, weights, lam):
        """One full (total, components, gradient, interior residuals) pass."""
        jets = self.forward(params)
        res = self.residuals(jets)
        comps = self.components(res, weights)
        total = self.combine(comps, lam)
        grad = self.gradient(params, jets, res, weights, lam)
        return total, comps, grad, res["pde"]


def weighted_pde_loss(spec, params, interior_points, weights) -> float:
    """mean_i(w_i * r_i^2) over the given interior points."""
    pts = np.asarray(interior_points, dtype=np.float64)
    jets = forward_jets(params, pts)
    r = prob.pde_residuals(spec, jets.values, jets.grads, jets.hesses, pts)
    w = _check_weights(weights, r.shape[0])
    return float(np.mean(w * r * r))


def _lambda_vector(spec, lambdas) -> np.ndarray:
    lam = np.asarray(lambdas, dtype=np.float64).reshape(-1)
    want = 3 if spec.time_dependent else 2
    if lam.shape[0] == 2 and want == 3:
        raise InputError("time-dependent problems need (lam_pde, lam_bc, lam_ic)")
    if lam.shape[0] not in (2, 3):
        raise InputError("lambdas must have 2 or 3 entries")
    if lam.shape[0] == 2:
        lam = np.array([lam[0], lam[1], 0.0])
    if not np.isfinite(lam).all() or (lam < 0).any():
        raise InputError("lambdas must be finite and non-negative")
    return lam


def total_loss(spec, params, point_sets: prob.PointSets, weights, lambdas):
    """Composite loss and its components for explicit weights and lambdas."""
    loss = PinnLoss(spec, point_sets)
    lam = _lambda_vector(spec, lambdas)
    jets = loss.forward(params)
    comps = loss.components(loss.residuals(jets), weights)
    return loss.combine(comps, lam), comps


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_init(n: int) -> AdamState:
    return AdamState(np.zeros(n), np.zeros(n), 0)


def adam_step(state: AdamState, values: np.ndarray, grad: np.ndarray, lr: float):
    """Bias-corrected Adam update; returns the new state and new values."""
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_values = values - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return AdamState(m, v, t, state.beta1, state.beta2, state.eps), new_values


def gd_step(values: np.ndarray, grad: np.ndarray, eta: float) -> np.ndarray:
    return values - eta * grad


def _cubic_minimizer(a, fa, dfa, b, fb, dfb):
    """Minimizer of the cubic through (a, fa, dfa), (b, fb, dfb), or None."""
    d1 = dfa + dfb - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - dfa * dfb
    if disc < 0.0 or not np.isfinite(disc):
        return None
    d2 = np.sqrt(disc)
    if b < a:
        d2 = -d2
    denom = dfb - dfa + 2.0 * d2
    if denom == 0.0 or not np.isfinite(denom):
        return None
    t = b - (b - a) * (dfb + d2 - d1) / denom
    return t if np.isfinite(t) else None


def _zoom(phi, alo, flo, dflo, ahi, fhi, dfhi, f0, df0, c1, c2, max_iter=30):
    """Refine a bracketing interval until the strong Wolfe conditions hold.

    If the interval collapses before the curvature condition is met, a point
    that still satisfies sufficient decrease is accepted so late-stage float
    noise does not discard real progress; otherwise the search fails.
    """
    for _ in range(max_iter):
        trial = None
        if np.isfinite(fhi) and np.isfinite(dfhi):
            trial = _cubic_minimizer(alo, flo, dflo, ahi, fhi, dfhi)
        lo, hi = (alo, ahi) if alo < ahi else (ahi, alo)
        span = hi - lo
        if trial is None or not (lo + 0.05 * span < trial < hi - 0.05 * span):
            trial = 0.5 * (alo + ahi)
        f, df = phi(trial)
        if not np.isfinite(f) or f > f0 + c1 * trial * df0 or f >= flo:
            ahi, fhi, dfhi = trial, f, df
        else:
            if abs(df) <= -c2 * df0:
                return trial, f, df
            if df * (ahi - alo) >= 0.0:
                ahi, fhi, dfhi = alo, flo, dflo
            alo, flo, dflo = trial, f, df
        if abs(ahi - alo) <= 1e-16 * max(1.0, abs(alo)):
            break
    if alo > 0.0 and flo < f0 + c1 * alo * df0:
        return alo, flo, dflo
    return None


def _strong_wolfe(phi, f0, df0, c1, c2, alpha_init=1.0, max_iter=12):
    """Bracket then zoom; returns (alpha, f, df) or None on failure."""
    a_prev, f_prev, df_prev = 0.0, f0, df0
    alpha = alpha_init
    for i in range(max_iter):
        f, df = phi(alpha)
        if not np.isfinite(f) or f > f0 + c1 * alpha * df0 or (f >= f_prev and i > 0):
            return _zoom(phi, a_prev, f_prev, df_prev, alpha, f, df, f0, df0, c1, c2)
        if abs(df) <= -c2 * df0:
            return alpha, f, df
        if df >= 0.0:
            return _zoom(phi, alpha, f, df, a_prev, f_prev, df_prev, f0, df0, c1, c2)
        a_prev, f_prev, df_prev = alpha, f, df
        alpha *= 2.0
    return None


def lbfgs_run(
    x0: np.ndarray,
    value_and_grad,
    iters: int,
    memory: int = 10,
    c1: float = 1e-4,
    c2: float = 0.9,
    grad_tol: float = 1e-10,
    callback=None,
):
    """Limited-memory BFGS with a strong Wolfe line search.

    Two-loop recursion over at most `memory` curvature pairs; pairs with
    s.y <= 1e-10 are skipped.  Stops on the iteration budget, on a gradient
    norm below grad_tol, or on line-search failure, returning the best
    iterate seen.  callback(i, x, f, grad_norm) fires once per accepted
    iterate.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    f, g = value_and_grad(x)
    if not np.isfinite(f) or not np.isfinite(g).all():
        raise NumericalError("objective not finite at the L-BFGS start")
    best_f, best_x = f, x.copy()
    s_hist, y_hist, rho_hist = [], [], []

    def direction(grad):
        q = grad.copy()
        alphas = []
        for s, y, rho_i in zip(reversed(s_hist), reversed(y_hist), reversed(rho_hist)):
            a = rho_i * (s @ q)
            alphas.append(a)
            q -= a * y
        if y_hist:
            gamma = (s_hist[-1] @ y_hist[-1]) / (y_hist[-1] @ y_hist[-1])
            q *= gamma
        for (s, y, rho_i), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
            b = rho_i * (y @ q)
            q += (a - b) * s
        return -q

    for it in range(iters):
        gnorm = float(np.linalg.norm(g))
        if gnorm <= grad_tol:
            break
        d = direction(g)
        df0 = float(d @ g)
        if df0 >= 0.0:
            s_hist.clear()
            y_hist.clear()
            rho_hist.clear()
            d = -g
            df0 = float(d @ g)
            if df0 >= 0.0:
                break

        cache = {}

        def phi(alpha):
            xa = x + alpha * d
            fa, ga = value_and_grad(xa)
            cache[alpha] = (xa, fa, ga)
            return fa, float(ga @ d)

        hit = _strong_wolfe(phi, f, df0, c1, c2)
        if hit is None:
            break
        alpha, f_new, _ = hit
        x_new, f_new, g_new = cache[alpha]
        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-10:
            s_hist.append(s)
            y_hist.append(y)
            rho_hist.append(1.0 / sy)
            if len(s_hist) > memory:
                s_hist.pop(0)
                y_hist.pop(0)
                rho_hist.pop(0)
        x, f, g = x_new, f_new, g_new
        if f < best_f:
            best_f, best_x = f, x.copy()
        if callback is not None:
            callback(it, x, f, float(np.linalg.norm(g)))
    if f <= best_f:
        return x
    return best_x


def _stage_plan(cfg: TrainConfig):
    if cfg.optimizer == "adam":
        return ("adam", cfg.adam_iters), 0
    if cfg.optimizer == "gd":
        return ("gd", cfg.gd_iters), 0
    if cfg.optimizer == "lbfgs":
        return None, cfg.lbfgs_iters
    if cfg.optimizer == "adam_then_lbfgs":
        return ("adam", cfg.adam_iters), cfg.lbfgs_iters
    raise ConfigurationError(f"unknown optimizer {cfg.optimizer!r}")


def _refresh_row(k, state: cur.CurriculumState, ccfg: cur.CurriculumConfig) -> RefreshRow:
    w = state.sample_weights
    if state.model is not None:
        c_minus, c_plus = cur.bound_constants(
            ccfg.beta,
            ccfg.eps,
            w.shape[0],
            float(state.model.variances.min()),
            float(state.model.variances.max()),
        )
        return RefreshRow(
            iteration=k,
            tau=state.tau,
            pis=tuple(state.model.weights),
            mus=tuple(state.model.means),
            sigma2s=tuple(state.model.variances),
            difficulties=tuple(state.difficulty),
            difficulties_norm=tuple(state.difficulty_norm),
            component_weights=tuple(state.component_weights),
            c_minus=c_minus,
            c_plus=c_plus,
            w_min=float(w.min()),
            w_max=float(w.max()),
            w_mean=float(w.mean()),
        )
    nank = ()
    return RefreshRow(
        iteration=k,
        tau=state.tau,
        pis=nank,
        mus=nank,
        sigma2s=nank,
        difficulties=nank,
        difficulties_norm=nank,
        component_weights=nank,
        c_minus=float("nan"),
        c_plus=float("nan"),
        w_min=float(w.min()),
        w_max=float(w.max()),
        w_mean=float(w.mean()),
    )


def train(problem, cfg: TrainConfig, n_test_axis: int | None = None) -> RunRecord:
    """Run one (problem, method, seed) training job end to end.

    Returns the per-iteration rows, refresh log, summary (with error
    metrics on the evaluation grid) and the final parameters.  Runs that
    hit a non-finite loss or gradient stop early with status
    "aborted: ...", keeping everything logged up to the failure.
    """
    spec = prob.make_problem(problem) if isinstance(problem, str) else problem
    variant, bal_enabled = resolve_method(cfg.method, cfg.relobralo)

    n_int = cfg.n_interior or spec.n_interior
    n_bc = cfg.n_boundary or spec.n_boundary
    n_ic = cfg.n_initial if cfg.n_initial is not None else spec.n_initial
    if not spec.time_dependent:
        n_ic = 0
    hidden = cfg.hidden or spec.hidden
    layer_sizes = (spec.input_dim, *hidden, 1)

    stage1, lbfgs_iters = _stage_plan(cfg)
    total_iters = (stage1[1] if stage1 else 0) + lbfgs_iters
    ccfg = replace(cfg.curriculum, variant=variant, k_max=max(total_iters, 1))

    points = prob.sample_points(spec, n_int, n_bc, n_ic, cfg.seed)
    params = init_network(layer_sizes, cfg.seed)
    loss = PinnLoss(spec, points)
    n_comp = 3 if spec.time_dependent else 2
    bal = new_balancer(replace(cfg.balancer, enabled=bal_enabled), n_comp, cfg.seed)

    state = cur.initial_state(n_int)
    lam = np.ones(3)
    record = RunRecord(problem=spec.problem_id, method=cfg.method, seed=cfg.seed)
    status = "completed"
    t_start = time.process_time()

    def lam_from_active(active: np.ndarray) -> np.ndarray:
        if spec.time_dependent:
            return np.asarray(active, dtype=np.float64)
        return np.array([active[0], active[1], 0.0])

    def active_losses(comps: dict) -> np.ndarray:
        vec = [comps["pde_w"], comps["bc"]]
        if spec.time_dependent:
            vec.append(comps["ic"])
        return np.array(vec)

    try:
        k = 0
        if stage1 is not None:
            kind, n_stage = stage1
            adam = adam_init(params.values.shape[0])
            for k in range(n_stage):
                t_iter = time.perf_counter()
                jets = loss.forward(params)
                res = loss.residuals(jets)
                if k % ccfg.k_upd == 0:
                    state = cur.refresh(state, res["pde"], k, ccfg)
                    record.refreshes.append(_refresh_row(k, state, ccfg))
                comps = loss.components(res, state.sample_weights)
                bal = update_ema(bal, active_losses(comps))
                lam = lam_from_active(compute_lambdas(bal, active_losses(comps)))
                total = loss.combine(comps, lam)
                grad = loss.gradient(params, jets, res, state.sample_weights, lam)
                if not np.isfinite(total) or not np.isfinite(grad).all():
                    raise NumericalError(f"non-finite loss or gradient at iteration {k}")
                gnorm = float(np.linalg.norm(grad))
                record.rows.append(
                    IterRow(
                        k,
                        total,
                        comps["pde_w"],
                        comps["pde_unweighted"],
                        comps["bc"],
                        comps["ic"] if spec.time_dependent else float("nan"),
                        lam[0],
                        lam[1],
                        lam[2] if spec.time_dependent else float("nan"),
                        state.tau,
                        gnorm,
                        (time.perf_counter() - t_iter) * 1e3,
                    )
                )
                if kind == "adam":
                    adam, new_values = adam_step(adam, params.values, grad, cfg.adam_lr)
                else:
                    new_values = gd_step(params.values, grad, cfg.gd_lr)
                params = params.with_values(new_values)
            k = stage1[1]

        if lbfgs_iters > 0:
            if state.last_refresh_iter < 0:
                jets = loss.forward(params)
                res = loss.residuals(jets)
                state = cur.refresh(state, res["pde"], 0, ccfg)
                record.refreshes.append(_refresh_row(0, state, ccfg))
            frozen_w = state.sample_weights
            frozen_lam = lam.copy()
            offset = k
            comps_by_f = {}

            def value_and_grad(x):
                p = params.with_values(x)
                jets = loss.forward(p)
                res = loss.residuals(jets)
                comps = loss.components(res, frozen_w)
                total = loss.combine(comps, frozen_lam)
                grad = loss.gradient(p, jets, res, frozen_w, frozen_lam)
                if len(comps_by_f) > 200:
                    comps_by_f.clear()
                comps_by_f[total] = comps
                return total, grad

            t_stage = time.perf_counter()

            def on_iterate(i, x, fval, gnorm):
                nonlocal t_stage
                comps = comps_by_f[fval]
                record.rows.append(
                    IterRow(
                        offset + i,
                        fval,
                        comps["pde_w"],
                        comps["pde_unweighted"],
                        comps["bc"],
                        comps["ic"] if spec.time_dependent else float("nan"),
                        frozen_lam[0],
                        frozen_lam[1],
                        frozen_lam[2] if spec.time_dependent else float("nan"),
                        state.tau,
                        gnorm,
                        (time.perf_counter() - t_stage) * 1e3,
                    )
                )
                t_stage = time.perf_counter()

            final_values = lbfgs_run(
                params.values,
                value_and_grad,
                lbfgs_iters,
                memory=cfg.lbfgs_memory,
                c1=cfg.wolfe_c1,
                c2=cfg.wolfe_c2,
                callback=on_iterate,
            )
            params = params.with_values(final_values)
    except NumericalError as exc:
        status = f"aborted: {exc}"

    cpu_s = time.process_time() - t_start
    record.params = params

    try:
        jets = loss.forward(params)
        comps = loss.components(loss.residuals(jets), state.sample_weights)
        e_loss = loss.combine(comps, lam)
    except (NumericalError, FloatingPointError):
        e_loss = float("nan")
    grid = prob.make_test_grid(spec, n_test_axis)
    metrics = prob.evaluate_metrics(params, spec, grid)

    record.summary = {
        "problem": spec.problem_id,
        "method": cfg.method,
        "seed": cfg.seed,
        "status": status,
        "e_loss": e_loss,
        "e2": metrics.e2,
        "rel_e2": metrics.rel_e2,
        "e_inf": metrics.e_inf,
        "cpu_s": cpu_s,
        "config": {
            "optimizer": cfg.optimizer,
            "adam_iters": cfg.adam_iters,
            "lbfgs_iters": cfg.lbfgs_iters,
            "gd_iters": cfg.gd_iters,
            "adam_lr": cfg.adam_lr,
            "gd_lr": cfg.gd_lr,
            "lbfgs_memory": cfg.lbfgs_memory,
            "wolfe_c1": cfg.wolfe_c1,
            "wolfe_c2": cfg.wolfe_c2,
            "method": cfg.method,
            "variant": variant,
            "relobralo": bal_enabled,
            "layer_sizes": list(layer_sizes),
            "n_interior": n_int,
            "n_boundary": n_bc,
            "n_initial": n_ic,
            "n_test_axis": n_test_axis or spec.n_test_axis,
            "coeffs": {key: float(val) for key, val in spec.coeffs.items()},
            "curriculum": {
                "beta": ccfg.beta,
                "c_sat": ccfg.c_sat,
                "k_max": ccfg.k_max,
                "k_upd": ccfg.k_upd,
                "eps": ccfg.eps,
                "k_components": ccfg.k_components,
                "variant": ccfg.variant,
                "reg_covar": ccfg.reg_covar,
                "gmm_tol": ccfg.gmm_tol,
                "gmm_max_iter": ccfg.gmm_max_iter,
            },
            "balancer": {
                "enabled": bal_enabled,
                "alpha": cfg.balancer.alpha,
                "rho": cfg.balancer.rho,
                "kappa": cfg.balancer.kappa,
                "history": cfg.balancer.history,
                "eps": cfg.balancer.eps,
            },
        },
    }
    return record
