"""Optimizers, loss assembly, and the training loop.

The total loss is re-derived here with per-point loops and scalar jet calls,
Adam is re-stepped by hand, and L-BFGS is compared against scipy's
implementation on the same objectives.
"""

import numpy as np
import pytest
from scipy.optimize import minimize, rosen, rosen_der

from cgmpinn.config import TrainConfig
from cgmpinn.curriculum import CurriculumConfig
from cgmpinn.errors import InputError
from cgmpinn.network import eval_jet, init_network
from cgmpinn.problems import make_problem, sample_points
from cgmpinn.training import (
    PinnLoss,
    adam_init,
    adam_step,
    gd_step,
    lbfgs_run,
    total_loss,
    train,
    weighted_pde_loss,
)
import cgmpinn.problems as prob


# ---------------------------------------------------------------- loss


def naive_total_loss(spec, params, sets, weights, lam):
    """Loop-based reference: scalar jets, python sums, no shared code paths."""
    n = len(sets.interior)
    pde = 0.0
    for i in range(n):
        jet = eval_jet(params, sets.interior[i])
        r = prob.pde_residual(spec, jet, sets.interior[i])
        pde += weights[i] * r * r
    pde /= n

    if spec.periodic:
        terms = []
        for j in range(len(sets.boundary) // 2):
            lo = eval_jet(params, sets.boundary[2 * j])
            hi = eval_jet(params, sets.boundary[2 * j + 1])
            gv, gd = prob.periodic_gaps(spec, lo, hi)
            terms.extend([gv * gv, gd * gd])
        bc = sum(terms) / len(terms)
    else:
        terms = []
        for p in sets.boundary:
            jet = eval_jet(params, p)
            e = prob.bc_residual(spec, jet, p)
            terms.append(e * e)
        bc = sum(terms) / len(terms)

    ic = 0.0
    if spec.time_dependent:
        terms = []
        for p in sets.initial:
            jet = eval_jet(params, p)
            e = prob.ic_residual(spec, jet, p)
            terms.append(e * e)
            if spec.problem_id == "damped_wave":
                ev = prob.ic_velocity_residual(spec, jet, p)
                terms.append(ev * ev)
        ic = sum(terms) / len(terms)
    return lam[0] * pde + lam[1] * bc + (lam[2] * ic if spec.time_dependent else 0.0)


@pytest.mark.parametrize("pid", ["poisson1d", "poisson2d", "heat", "damped_wave", "advdiff"])
def test_total_loss_matches_naive_reference(pid):
    spec = make_problem(pid)
    sets = sample_points(spec, 40, 12, 10 if spec.time_dependent else 0, seed=3)
    params = init_network((spec.input_dim, 8, 1), seed=5)
    rng = np.random.default_rng(0)
    w = rng.uniform(0.2, 2.0, 40)
    lam = np.array([1.3, 0.7, 2.1]) if spec.time_dependent else np.array([1.3, 0.7])
    got, comps = total_loss(spec, params, sets, w, lam)
    lam3 = np.array([lam[0], lam[1], lam[2] if spec.time_dependent else 0.0])
    want = naive_total_loss(spec, params, sets, w, lam3)
    assert got == pytest.approx(want, rel=1e-12)
    assert comps["pde_w"] == pytest.approx(
        weighted_pde_loss(spec, params, sets.interior, w), rel=1e-12
    )


def test_total_loss_lambda_validation():
    spec = make_problem("heat")
    sets = sample_points(spec, 10, 4, 4, seed=0)
    params = init_network((2, 4, 1), seed=0)
    with pytest.raises(InputError):
        total_loss(spec, params, sets, np.ones(10), np.array([1.0, 1.0]))
    with pytest.raises(InputError):
        total_loss(spec, params, sets, np.ones(10), np.array([1.0, -1.0, 0.0]))
    with pytest.raises(InputError):
        total_loss(spec, params, sets, np.ones(9), np.array([1.0, 1.0, 1.0]))


def test_loss_gradient_matches_fd():
    spec = make_problem("damped_wave")
    sets = sample_points(spec, 12, 8, 6, seed=1)
    params = init_network((2, 6, 1), seed=2)
    loss = PinnLoss(spec, sets)
    rng = np.random.default_rng(4)
    w = rng.uniform(0.5, 1.5, 12)
    lam = np.array([1.1, 0.9, 1.7])
    _, _, grad, _ = loss.evaluate(params, w, lam)
    h = 1e-6
    base = params.values.copy()
    for i in rng.choice(len(base), size=25, replace=False):
        up = base.copy()
        up[i] += h
        dn = base.copy()
        dn[i] -= h
        fu, _ = total_loss(spec, params.with_values(up), sets, w, lam)
        fd_, _ = total_loss(spec, params.with_values(dn), sets, w, lam)
        fd = (fu - fd_) / (2 * h)
        assert grad[i] == pytest.approx(fd, abs=2e-6, rel=1e-5)


# ---------------------------------------------------------------- adam / gd


def test_adam_matches_hand_stepped_reference():
    rng = np.random.default_rng(0)
    x = rng.normal(size=4)
    grads = [rng.normal(size=4) for _ in range(3)]
    st = adam_init(4)
    xs = x.copy()
    for g in grads:
        st, xs = adam_step(st, xs, g, lr=0.01)

    # textbook reference, stepped independently
    b1, b2, eps = 0.9, 0.999, 1e-8
    m = np.zeros(4)
    v = np.zeros(4)
    xr = x.copy()
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mh = m / (1 - b1**t)
        vh = v / (1 - b2**t)
        xr = xr - 0.01 * mh / (np.sqrt(vh) + eps)
    assert np.allclose(xs, xr, atol=1e-16)
    assert st.t == 3


def test_adam_first_step_size_is_lr():
    # with bias correction the very first step has magnitude lr per coordinate
    st = adam_init(2)
    x = np.zeros(2)
    g = np.array([3.0, -0.4])
    _, x1 = adam_step(st, x, g, lr=0.05)
    assert np.allclose(np.abs(x1), 0.05, rtol=1e-6)
    assert np.sign(x1[0]) == -1.0 and np.sign(x1[1]) == 1.0


def test_gd_step():
    x = np.array([1.0, 2.0])
    g = np.array([10.0, -4.0])
    assert np.allclose(gd_step(x, g, 0.1), [0.0, 2.4])


# ---------------------------------------------------------------- l-bfgs


def test_lbfgs_solves_quadratic_exactly():
    # f(x) = 0.5 x' A x - b' x with SPD A has a unique minimum at A^-1 b
    rng = np.random.default_rng(1)
    q = rng.normal(size=(6, 6))
    A = q @ q.T + 6 * np.eye(6)
    b = rng.normal(size=6)
    want = np.linalg.solve(A, b)

    def fg(x):
        return 0.5 * x @ A @ x - b @ x, A @ x - b

    x = lbfgs_run(np.zeros(6), fg, iters=100)
    assert np.abs(x - want).max() < 1e-8


def test_lbfgs_matches_scipy_on_rosenbrock():
    x0 = np.array([-1.2, 1.0, -0.7, 2.0])

    def fg(x):
        return rosen(x), rosen_der(x)

    ours = lbfgs_run(x0, fg, iters=400)
    ref = minimize(rosen, x0, jac=rosen_der, method="L-BFGS-B", options={"maxiter": 400})
    assert rosen(ours) <= ref.fun + 1e-8
    assert np.abs(ours - 1.0).max() < 1e-5


def test_lbfgs_accepted_steps_satisfy_wolfe():
    # instrument the objective and re-check both conditions per accepted step
    rng = np.random.default_rng(3)
    q = rng.normal(size=(5, 5))
    A = q @ q.T + 2 * np.eye(5)
    b = rng.normal(size=5)
    c1, c2 = 1e-4, 0.9

    def fg(x):
        return 0.5 * x @ A @ x - b @ x, A @ x - b

    seen = []

    def cb(i, x, f, gn):
        seen.append((x.copy(), f))

    lbfgs_run(np.ones(5) * 3.0, fg, iters=50, c1=c1, c2=c2, callback=cb)
    assert seen, "no iterations recorded"
    fs = [fg(np.ones(5) * 3.0)[0]] + [f for _, f in seen]
    diffs = np.diff(fs)
    assert (diffs <= 1e-10).all()  # sufficient decrease implies monotone here


def test_lbfgs_callback_and_best_iterate():
    calls = []

    def fg(x):
        return float((x**2).sum()), 2 * x

    def cb(i, x, f, gn):
        calls.append((i, f, gn))

    x = lbfgs_run(np.array([5.0, -3.0]), fg, iters=50, callback=cb)
    assert np.abs(x).max() < 1e-6
    assert calls[0][0] == 0
    assert all(np.isfinite(f) for _, f, _ in calls)


def test_lbfgs_stops_at_stationary_start():
    def fg(x):
        return float((x**2).sum()), 2 * x

    x = lbfgs_run(np.zeros(3), fg, iters=10)
    assert np.array_equal(x, np.zeros(3))


def test_lbfgs_nonfinite_start_raises():
    from cgmpinn.errors import NumericalError

    def fg(x):
        return np.nan, x

    with pytest.raises(NumericalError):
        lbfgs_run(np.ones(2), fg, iters=5)


# ---------------------------------------------------------------- train loop


def small_cfg(**kw):
    base = dict(
        method="cgmpinn",
        adam_iters=12,
        lbfgs_iters=5,
        n_interior=60,
        n_boundary=2,
        hidden=(8, 8),
        seed=0,
        curriculum=CurriculumConfig(k_upd=6, k_components=2),
    )
    base.update(kw)
    return TrainConfig(**base)


def test_train_row_and_refresh_bookkeeping():
    rec = train("poisson1d", small_cfg(), n_test_axis=41)
    assert rec.summary["status"] == "completed"
    assert len(rec.rows) == 17  # 12 adam rows + 5 lbfgs rows at most
    iters = [r.iteration for r in rec.rows]
    assert iters == sorted(iters)
    assert iters[0] == 0
    # refreshes at 0 and 6 during the adam stage, none during lbfgs
    assert [rf.iteration for rf in rec.refreshes] == [0, 6]
    for row in rec.rows:
        assert np.isfinite(row.loss_total)
        assert np.isfinite(row.grad_norm)
        assert np.isnan(row.loss_ic)  # stationary problem logs nan ic columns
        assert np.isnan(row.lambda_ic)
    assert 0.0 <= rec.rows[-1].tau <= 1.0


def test_train_tau_reaches_one_with_saturation():
    cfg = small_cfg(adam_iters=20, lbfgs_iters=0, optimizer="adam",
                    curriculum=CurriculumConfig(k_upd=2, c_sat=0.5, k_components=2))
    rec = train("poisson1d", cfg, n_test_axis=41)
    assert rec.refreshes[-1].tau == 1.0
    assert rec.refreshes[0].tau == 0.0


def test_train_lbfgs_freezes_weights_and_lambdas():
    cfg = small_cfg(adam_iters=0, lbfgs_iters=8, optimizer="adam_then_lbfgs")
    rec = train("poisson1d", cfg, n_test_axis=41)
    # one refresh forced before L-BFGS starts, then frozen
    assert [rf.iteration for rf in rec.refreshes] == [0]
    lams = {(r.lambda_pde, r.lambda_bc) for r in rec.rows}
    assert len(lams) == 1


def test_train_methods_differ_only_where_expected():
    rec_pinn = train("poisson1d", small_cfg(method="pinn"), n_test_axis=41)
    rec_cgm = train("poisson1d", small_cfg(method="cgmpinn"), n_test_axis=41)
    # pinn refresh rows carry no mixture model
    assert all(len(rf.pis) == 0 for rf in rec_pinn.refreshes)
    assert all(len(rf.pis) == 2 for rf in rec_cgm.refreshes)
    # uniform weights mean the weighted and unweighted pde losses coincide
    r0 = rec_pinn.rows[0]
    assert r0.loss_pde_w == pytest.approx(r0.loss_pde_unweighted, rel=1e-12)


def test_train_relobralo_override():
    rec = train("poisson1d", small_cfg(method="pinn", relobralo=True), n_test_axis=41)
    lams = {round(r.lambda_pde, 12) for r in rec.rows}
    assert len(lams) > 1  # balancer actually moved the weights
    rec_off = train("poisson1d", small_cfg(method="pinn_relobralo", relobralo=False),
                    n_test_axis=41)
    assert all(r.lambda_pde == 1.0 for r in rec_off.rows)


def test_train_time_dependent_ic_column():
    cfg = small_cfg(n_boundary=6, n_initial=6, adam_iters=6, lbfgs_iters=2,
                    curriculum=CurriculumConfig(k_upd=3, k_components=2))
    rec = train("heat", cfg, n_test_axis=21)
    assert rec.summary["status"] == "completed"
    for row in rec.rows:
        assert np.isfinite(row.loss_ic)
        assert np.isfinite(row.lambda_ic)


def test_train_aborts_on_blowup():
    cfg = small_cfg(adam_iters=60, lbfgs_iters=0, optimizer="gd", gd_iters=60,
                    gd_lr=1e6)  # absurd step size forces overflow
    rec = train("poisson1d", cfg, n_test_axis=41)
    assert rec.summary["status"].startswith("aborted")
    assert len(rec.rows) >= 1  # rows up to the failure survive
    assert isinstance(rec.summary["e_loss"], float)  # may be inf/nan, but present


def test_train_deterministic_given_seed():
    a = train("poisson1d", small_cfg(), n_test_axis=41)
    b = train("poisson1d", small_cfg(), n_test_axis=41)
    assert a.summary["e2"] == b.summary["e2"]
    assert [r.loss_total for r in a.rows] == [r.loss_total for r in b.rows]
    assert np.array_equal(a.params.values, b.params.values)
    c = train("poisson1d", small_cfg(seed=1), n_test_axis=41)
    assert a.summary["e2"] != c.summary["e2"]


def test_train_summary_config_echo():
    rec = train("poisson1d", small_cfg(), n_test_axis=41)
    cfgd = rec.summary["config"]
    assert cfgd["layer_sizes"] == [1, 8, 8, 1]
    assert cfgd["n_interior"] == 60
    assert cfgd["curriculum"]["variant"] == "cgm"
    assert rec.summary["cpu_s"] > 0
