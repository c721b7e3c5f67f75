"""Benchmark problems: closed-form solutions checked against a symbolic oracle.

Each manufactured solution is rebuilt in sympy and differentiated by the CAS,
so the hand-coded derivative arrays and the residual operators are validated
against something the package never touches.
"""

import numpy as np
import pytest
import sympy as sp

from cgmpinn.errors import ConfigurationError, InputError
from cgmpinn.network import init_network
from cgmpinn.problems import (
    PROBLEM_IDS,
    boundary_values,
    evaluate_metrics,
    exact_jet,
    exact_jet_arrays,
    exact_solution,
    exact_values,
    initial_values,
    initial_velocity,
    make_problem,
    make_test_grid,
    pde_residuals,
    periodic_gaps,
    sample_points,
    source_values,
)

X, Y, T = sp.symbols("x y t", real=True)


def sym_solution(spec):
    """The manufactured solution as a sympy expression plus its variables."""
    c = spec.coeffs
    pid = spec.problem_id
    if pid == "poisson1d":
        u = sp.sin(c["alpha1"] * sp.pi * X) * sp.cos(c["alpha2"] * sp.pi * X) + sp.tanh(
            c["s"] * X
        )
        return u, (X,)
    if pid == "poisson2d":
        u = sp.sin(c["beta1"] * sp.pi * X) * sp.sin(c["beta2"] * sp.pi * Y) + sp.exp(
            -(X**2) - Y**2
        )
        return u, (X, Y)
    if pid == "heat":
        u = (sp.sin(c["alpha1"] * sp.pi * X) + sp.tanh(c["s"] * X)) * sp.sin(
            c["alpha2"] * sp.pi * T
        )
        return u, (X, T)
    if pid == "damped_wave":
        u = (
            sp.exp(-c["gamma"] * T)
            * sp.sin(c["alpha1"] * sp.pi * X)
            * sp.cos(c["alpha2"] * sp.pi * T)
        )
        return u, (X, T)
    if pid == "advdiff":
        u = sp.exp(-c["nu"] * sp.pi**2 * T) * sp.sin(sp.pi * (X - c["a"] * T))
        return u, (X, T)
    if pid == "fisher_kpp":
        u = (1 + sp.exp(c["front_slope"] * (X - c["front_speed"] * T))) ** -2
        return u, (X, T)
    raise AssertionError(pid)


def sym_jets(spec, pts):
    """Value, gradient, and full Hessian evaluated through sympy lambdify."""
    u, xs = sym_solution(spec)
    d = len(xs)
    n = pts.shape[0]
    val = sp.lambdify(xs, u, "numpy")(*pts.T)
    grad = np.zeros((n, d))
    hess = np.zeros((n, d, d))
    for i in range(d):
        grad[:, i] = sp.lambdify(xs, sp.diff(u, xs[i]), "numpy")(*pts.T)
        for j in range(d):
            hess[:, i, j] = sp.lambdify(xs, sp.diff(u, xs[i], xs[j]), "numpy")(*pts.T)
    return np.asarray(val, dtype=float), grad, hess


def interior_points(spec, n, seed):
    rng = np.random.default_rng(seed)
    pts = np.empty((n, spec.input_dim))
    for axis, (lo, hi) in enumerate(spec.domain):
        pts[:, axis] = rng.uniform(lo, hi, n)
    if spec.time_dependent:
        pts[:, -1] = rng.uniform(0.0, spec.t_final, n)
    return pts


@pytest.mark.parametrize("pid", PROBLEM_IDS)
def test_exact_jets_match_symbolic_oracle(pid):
    spec = make_problem(pid)
    pts = interior_points(spec, 200, seed=1)
    u, gu, hu = exact_jet_arrays(spec, pts)
    su, sg, sh = sym_jets(spec, pts)
    scale = max(np.abs(su).max(), 1.0)
    assert np.abs(u - su).max() / scale < 1e-12
    assert np.abs(gu - sg).max() / max(np.abs(sg).max(), 1.0) < 1e-11
    assert np.abs(hu - sh).max() / max(np.abs(sh).max(), 1.0) < 1e-11


@pytest.mark.parametrize("pid", PROBLEM_IDS)
def test_residual_operator_annihilates_symbolic_jets(pid):
    # feed CAS-computed jets to the residual operator directly; this checks
    # the operator and the source term without touching exact_jet_arrays
    spec = make_problem(pid)
    pts = interior_points(spec, 200, seed=2)
    su, sg, sh = sym_jets(spec, pts)
    r = pde_residuals(spec, su, sg, sh, pts)
    assert np.abs(r).max() < 1e-8


@pytest.mark.parametrize("pid", PROBLEM_IDS)
def test_exact_solution_residuals_tiny(pid):
    spec = make_problem(pid)
    pts = interior_points(spec, 1000, seed=3)
    u, gu, hu = exact_jet_arrays(spec, pts)
    r = pde_residuals(spec, u, gu, hu, pts)
    assert np.abs(r).max() < 1e-8


def test_fisher_derived_coefficients():
    spec = make_problem("fisher_kpp")
    D, r = spec.coeffs["diffusivity"], spec.coeffs["growth"]
    assert spec.coeffs["front_slope"] == pytest.approx(np.sqrt(r / (6 * D)))
    assert spec.coeffs["front_speed"] == pytest.approx(5 * np.sqrt(D * r / 6))


def test_damped_wave_speed_makes_source_vanish():
    spec = make_problem("damped_wave")
    pts = interior_points(spec, 50, seed=4)
    assert np.all(source_values(spec, pts) == 0.0)
    # and the residual is still tiny, so the wave speed is the right one
    u, gu, hu = exact_jet_arrays(spec, pts)
    assert np.abs(pde_residuals(spec, u, gu, hu, pts)).max() < 1e-8


def test_boundary_and_initial_data_match_exact_solution():
    for pid in PROBLEM_IDS:
        spec = make_problem(pid)
        sets = sample_points(spec, 50, 20, 20 if spec.time_dependent else 0, seed=5)
        if not spec.periodic:
            gap = boundary_values(spec, sets.boundary) - exact_values(spec, sets.boundary)
            assert np.abs(gap).max() < 1e-12, pid
        if spec.time_dependent:
            gap = initial_values(spec, sets.initial) - exact_values(spec, sets.initial)
            assert np.abs(gap).max() < 1e-12, pid


def test_damped_wave_initial_velocity_matches_symbolic():
    spec = make_problem("damped_wave")
    sets = sample_points(spec, 10, 10, 40, seed=6)
    u, xs = sym_solution(spec)
    ut = sp.lambdify(xs, sp.diff(u, T), "numpy")
    want = ut(sets.initial[:, 0], np.zeros(len(sets.initial)))
    got = initial_velocity(spec, sets.initial)
    assert np.abs(got - want).max() < 1e-12


def test_periodic_gaps_vanish_for_exact_solution():
    spec = make_problem("advdiff")
    sets = sample_points(spec, 10, 25, 10, seed=7)
    for j in range(len(sets.boundary) // 2):
        lo = exact_jet(spec, sets.boundary[2 * j])
        hi = exact_jet(spec, sets.boundary[2 * j + 1])
        gv, gd = periodic_gaps(spec, lo, hi)
        assert abs(gv) < 1e-12 and abs(gd) < 1e-12
    with pytest.raises(InputError):
        periodic_gaps(make_problem("heat"), lo, hi)


def test_boundary_values_refuses_periodic_problem():
    spec = make_problem("advdiff")
    with pytest.raises(InputError):
        boundary_values(spec, np.array([[1.0, 0.5]]))


def test_make_problem_rejects_unknown_ids_and_coeffs():
    with pytest.raises(ConfigurationError):
        make_problem("poisson3d")
    with pytest.raises(ConfigurationError):
        make_problem("poisson1d", bogus=1.0)


def test_coefficient_overrides_flow_through():
    spec = make_problem("poisson1d", alpha1=2.0, s=3.0)
    assert spec.coeffs["alpha1"] == 2.0
    assert spec.coeffs["s"] == 3.0
    x = np.array([[0.3]])
    want = np.sin(2 * np.pi * 0.3) * np.cos(3 * np.pi * 0.3) + np.tanh(0.9)
    assert exact_values(spec, x)[0] == pytest.approx(want, abs=1e-15)


def test_exact_solution_rejects_outside_domain():
    spec = make_problem("poisson1d")
    assert exact_solution(spec, np.array([0.5])) == pytest.approx(
        np.sin(2.5 * np.pi) * np.cos(1.5 * np.pi) + np.tanh(10.0)
    )
    with pytest.raises(InputError):
        exact_solution(spec, np.array([1.5]))


def test_sample_points_determinism_and_bounds():
    spec = make_problem("heat")
    a = sample_points(spec, 100, 40, 30, seed=11)
    b = sample_points(spec, 100, 40, 30, seed=11)
    c = sample_points(spec, 100, 40, 30, seed=12)
    assert np.array_equal(a.interior, b.interior)
    assert np.array_equal(a.boundary, b.boundary)
    assert np.array_equal(a.initial, b.initial)
    assert not np.array_equal(a.interior, c.interior)
    lo, hi = spec.domain[0]
    assert np.all(a.interior[:, 0] > lo) and np.all(a.interior[:, 0] < hi)
    assert np.all(a.interior[:, 1] > 0.0) and np.all(a.interior[:, 1] <= spec.t_final)
    assert np.all(a.initial[:, 1] == 0.0)
    assert np.all(np.isin(a.boundary[:, 0], [lo, hi]))


def test_sample_points_periodic_pairing():
    spec = make_problem("advdiff")
    sets = sample_points(spec, 10, 25, 10, seed=13)
    assert len(sets.boundary) == 50  # 25 pairs
    lo, hi = spec.domain[0]
    pairs = sets.boundary.reshape(25, 2, 2)
    assert np.all(pairs[:, 0, 0] == lo)
    assert np.all(pairs[:, 1, 0] == hi)
    # both endpoints of a pair share the same time sample
    assert np.array_equal(pairs[:, 0, 1], pairs[:, 1, 1])


def test_sample_points_2d_faces_cycle():
    spec = make_problem("poisson2d")
    sets = sample_points(spec, 10, 8, 0, seed=14)
    assert len(sets.boundary) == 8
    assert set(np.unique(sets.boundary_faces)) == {0, 1, 2, 3}
    (xlo, xhi), (ylo, yhi) = spec.domain
    on_edge = (
        (sets.boundary[:, 0] == xlo)
        | (sets.boundary[:, 0] == xhi)
        | (sets.boundary[:, 1] == ylo)
        | (sets.boundary[:, 1] == yhi)
    )
    assert on_edge.all()


def test_sample_points_count_validation():
    with pytest.raises(InputError):
        sample_points(make_problem("poisson1d"), 10, 2, 5, seed=0)
    with pytest.raises(InputError):
        sample_points(make_problem("heat"), 10, 4, 0, seed=0)


def test_make_test_grid_shapes():
    g1 = make_test_grid(make_problem("poisson1d"), 200)
    assert g1.shape == (200, 1)
    assert g1[0, 0] == 0.0 and g1[-1, 0] == 1.0
    g2 = make_test_grid(make_problem("poisson2d"), 50)
    assert g2.shape == (2500, 2)
    g3 = make_test_grid(make_problem("heat"), 40)
    assert g3.shape == (1600, 2)
    assert g3[:, 1].max() == make_problem("heat").t_final


def test_evaluate_metrics_formulas():
    spec = make_problem("poisson1d")
    grid = make_test_grid(spec, 64)
    params = init_network((1, 6, 1), seed=0)
    m = evaluate_metrics(params, spec, grid)
    from cgmpinn.network import forward_values

    diff = exact_values(spec, grid) - forward_values(params, grid)
    u = exact_values(spec, grid)
    assert m.e2 == pytest.approx(np.sqrt(np.mean(diff**2)), rel=1e-14)
    assert m.rel_e2 == pytest.approx(m.e2 / np.sqrt(np.mean(u**2)), rel=1e-14)
    assert m.e_inf == pytest.approx(np.abs(diff).max(), rel=1e-14)
