"""Manufactured-solution PDE benchmarks.

Six problems, each with a closed-form exact solution, hand-coded analytic
derivatives, the matching source/boundary/initial data, deterministic
collocation sampling and error metrics:

- poisson1d    u_xx = f on (0,1), Dirichlet ends
- poisson2d    u_xx + u_yy = f on (0,1)^2, Dirichlet edges
- heat         u_t = u_xx + f on (0,1) x (0,1], Dirichlet ends, IC at t=0
- damped_wave  u_tt + 2*gamma*u_t = c^2*u_xx, homogeneous source, value and
               velocity initial conditions
- advdiff      u_t + a*u_x = nu*u_xx on (-1,1) x (0,1], periodic in x
               (value gap and derivative gap at the endpoints)
- fisher_kpp   u_t = D*u_xx + r*u*(1-u) on (-5,5) x (0,2], travelling front

Interior residuals are written in the form D[u] - f so a perfect surrogate
gives exactly zero at every point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from .errors import ConfigurationError, InputError
from .network import ApproximatorParams, Jet, forward_values

PROBLEM_IDS = ("poisson1d", "poisson2d", "heat", "damped_wave", "advdiff", "fisher_kpp")


@dataclass(frozen=True)
class ProblemSpec:
    """Benchmark definition: identity, domain, coefficients and defaults.

    For time-dependent problems the last input coordinate is t and the
    domain tuple covers the spatial axes only.  coeffs holds the named PDE
    and solution coefficients; derived quantities (wave speed, front slope
    and speed) are computed in make_problem and stored alongside.
    """

    problem_id: str
    spatial_dim: int
    time_dependent: bool
    domain: tuple[tuple[float, float], ...]
    t_final: float
    coeffs: MappingProxyType = field(repr=False)
    periodic: bool = False
    n_interior: int = 1000
    n_boundary: int = 100
    n_initial: int = 0
    hidden: tuple[int, ...] = (50, 50, 50, 50)
    n_test_axis: int = 100

    @property
    def input_dim(self) -> int:
        return self.spatial_dim + (1 if self.time_dependent else 0)

    def coeff(self, name: str) -> float:
        return self.coeffs[name]


_DEFAULTS = {
    "poisson1d": dict(
        spatial_dim=1,
        time_dependent=False,
        domain=((0.0, 1.0),),
        t_final=0.0,
        coeffs=dict(alpha1=5.0, alpha2=3.0, s=20.0),
        n_interior=1500,
        n_boundary=2,
        n_initial=0,
        hidden=(50, 50, 50, 50),
        n_test_axis=200,
    ),
    "poisson2d": dict(
        spatial_dim=2,
        time_dependent=False,
        domain=((0.0, 1.0), (0.0, 1.0)),
        t_final=0.0,
        coeffs=dict(beta1=3.0, beta2=2.0),
        n_interior=2000,
        n_boundary=250,
        n_initial=0,
        hidden=(50, 50, 50, 50),
        n_test_axis=100,
    ),
    "heat": dict(
        spatial_dim=1,
        time_dependent=True,
        domain=((0.0, 1.0),),
        t_final=1.0,
        coeffs=dict(alpha1=1.0, alpha2=2.0, s=10.0),
        n_interior=1500,
        n_boundary=300,
        n_initial=300,
        hidden=(50, 50, 50, 50),
        n_test_axis=100,
    ),
    "damped_wave": dict(
        spatial_dim=1,
        time_dependent=True,
        domain=((0.0, 1.0),),
        t_final=1.0,
        coeffs=dict(alpha1=1.0, alpha2=1.0, gamma=0.1),
        n_interior=2000,
        n_boundary=300,
        n_initial=300,
        hidden=(50, 50, 50, 50),
        n_test_axis=100,
    ),
    "advdiff": dict(
        spatial_dim=1,
        time_dependent=True,
        domain=((-1.0, 1.0),),
        t_final=1.0,
        coeffs=dict(a=1.0, nu=1e-2),
        periodic=True,
        n_interior=3000,
        n_boundary=300,
        n_initial=300,
        hidden=(50, 50, 50, 50),
        n_test_axis=100,
    ),
    "fisher_kpp": dict(
        spatial_dim=1,
        time_dependent=True,
        domain=((-5.0, 5.0),),
        t_final=2.0,
        coeffs=dict(diffusivity=0.25, growth=4.0),
        n_interior=8000,
        n_boundary=400,
        n_initial=400,
        hidden=(80, 80, 80, 80),
        n_test_axis=100,
    ),
}


def make_problem(problem_id: str, **coeff_overrides) -> ProblemSpec:
    """Build a ProblemSpec from compiled-in defaults plus coefficient overrides."""
    if problem_id not in _DEFAULTS:
        raise ConfigurationError(
            f"unknown problem {problem_id!r}, expected one of {PROBLEM_IDS}"
        )
    base = dict(_DEFAULTS[problem_id])
    coeffs = dict(base.pop("coeffs"))
    for key, val in coeff_overrides.items():
        if key not in coeffs:
            raise ConfigurationError(f"{problem_id} has no coefficient {key!r}")
        coeffs[key] = float(val)
    if problem_id == "damped_wave":
        g = coeffs["gamma"]
        a1, a2 = coeffs["alpha1"], coeffs["alpha2"]
        coeffs["c"] = np.sqrt(g * g + (a2 * np.pi) ** 2) / (a1 * np.pi)
    elif problem_id == "fisher_kpp":
        dcoef, r = coeffs["diffusivity"], coeffs["growth"]
        if dcoef <= 0 or r <= 0:
            raise ConfigurationError("fisher_kpp needs positive diffusivity and growth")
        coeffs["front_slope"] = np.sqrt(r / (6.0 * dcoef))
        coeffs["front_speed"] = 5.0 * np.sqrt(dcoef * r / 6.0)
    spec = ProblemSpec(problem_id=problem_id, coeffs=MappingProxyType(coeffs), **base)
    if spec.time_dependent and spec.t_final <= 0:
        raise ConfigurationError("time-dependent problem needs t_final > 0")
    return spec


def _split_xt(spec: ProblemSpec, pts: np.ndarray):
    if spec.time_dependent:
        return pts[:, 0], pts[:, 1]
    return pts[:, 0], None


def _check_points(spec: ProblemSpec, points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.ndim != 2 or pts.shape[1] != spec.input_dim:
        raise InputError(f"points shape {pts.shape}, expected (*, {spec.input_dim})")
    return pts


def _in_closed_domain(spec: ProblemSpec, pts: np.ndarray) -> np.ndarray:
    ok = np.ones(pts.shape[0], dtype=bool)
    for axis, (lo, hi) in enumerate(spec.domain):
        ok &= (pts[:, axis] >= lo) & (pts[:, axis] <= hi)
    if spec.time_dependent:
        ok &= (pts[:, -1] >= 0.0) & (pts[:, -1] <= spec.t_final)
    return ok


def exact_values(spec: ProblemSpec, points) -> np.ndarray:
    """Exact solution u at a batch of points (vectorized)."""
    pts = _check_points(spec, points)
    c = spec.coeffs
    pid = spec.problem_id
    if pid == "poisson1d":
        x = pts[:, 0]
        return np.sin(c["alpha1"] * np.pi * x) * np.cos(c["alpha2"] * np.pi * x) + np.tanh(
            c["s"] * x
        )
    if pid == "poisson2d":
        x, y = pts[:, 0], pts[:, 1]
        return np.sin(c["beta1"] * np.pi * x) * np.sin(c["beta2"] * np.pi * y) + np.exp(
            -x * x - y * y
        )
    if pid == "heat":
        x, t = _split_xt(spec, pts)
        return (np.sin(c["alpha1"] * np.pi * x) + np.tanh(c["s"] * x)) * np.sin(
            c["alpha2"] * np.pi * t
        )
    if pid == "damped_wave":
        x, t = _split_xt(spec, pts)
        return (
            np.exp(-c["gamma"] * t)
            * np.sin(c["alpha1"] * np.pi * x)
            * np.cos(c["alpha2"] * np.pi * t)
        )
    if pid == "advdiff":
        x, t = _split_xt(spec, pts)
        return np.exp(-c["nu"] * np.pi**2 * t) * np.sin(np.pi * (x - c["a"] * t))
    if pid == "fisher_kpp":
        x, t = _split_xt(spec, pts)
        z = np.clip(c["front_slope"] * (x - c["front_speed"] * t), -500.0, 500.0)
        return (1.0 + np.exp(z)) ** -2.0
    raise ConfigurationError(pid)


def exact_solution(spec: ProblemSpec, point) -> float:
    """Exact solution at one point; the point must lie in the closed domain."""
    pts = _check_points(spec, point)
    if not _in_closed_domain(spec, pts).all():
        raise InputError(f"point {np.asarray(point)} lies outside the {spec.problem_id} domain")
    return float(exact_values(spec, pts)[0])


def exact_jet_arrays(spec: ProblemSpec, points):
    """Exact (u, grad u, hess u) arrays from the closed-form derivatives.

    Returns value (N,), gradient (N, d), Hessian (N, d, d) in the same input
    ordering the network uses.  Only the derivative entries appearing in the
    PDE operators are populated; the rest stay zero.
    """
    pts = _check_points(spec, points)
    n, d = pts.shape
    u = exact_values(spec, pts)
    gu = np.zeros((n, d))
    hu = np.zeros((n, d, d))
    c = spec.coeffs
    pid = spec.problem_id
    if pid == "poisson1d":
        x = pts[:, 0]
        a1p, a2p, s = c["alpha1"] * np.pi, c["alpha2"] * np.pi, c["s"]
        s1, c1 = np.sin(a1p * x), np.cos(a1p * x)
        s2, c2 = np.sin(a2p * x), np.cos(a2p * x)
        th = np.tanh(s * x)
        sech2 = 1.0 - th * th
        gu[:, 0] = a1p * c1 * c2 - a2p * s1 * s2 + s * sech2
        hu[:, 0, 0] = (
            -(a1p * a1p + a2p * a2p) * s1 * c2
            - 2.0 * a1p * a2p * c1 * s2
            - 2.0 * s * s * th * sech2
        )
    elif pid == "poisson2d":
        x, y = pts[:, 0], pts[:, 1]
        b1p, b2p = c["beta1"] * np.pi, c["beta2"] * np.pi
        sx, cx = np.sin(b1p * x), np.cos(b1p * x)
        sy, cy = np.sin(b2p * y), np.cos(b2p * y)
        e = np.exp(-x * x - y * y)
        gu[:, 0] = b1p * cx * sy - 2.0 * x * e
        gu[:, 1] = b2p * sx * cy - 2.0 * y * e
        hu[:, 0, 0] = -b1p * b1p * sx * sy + (4.0 * x * x - 2.0) * e
        hu[:, 1, 1] = -b2p * b2p * sx * sy + (4.0 * y * y - 2.0) * e
        hu[:, 0, 1] = b1p * b2p * cx * cy + 4.0 * x * y * e
        hu[:, 1, 0] = hu[:, 0, 1]
    elif pid == "heat":
        x, t = _split_xt(spec, pts)
        a1p, a2p, s = c["alpha1"] * np.pi, c["alpha2"] * np.pi, c["s"]
        th = np.tanh(s * x)
        sech2 = 1.0 - th * th
        space = np.sin(a1p * x) + th
        dspace = a1p * np.cos(a1p * x) + s * sech2
        d2space = -a1p * a1p * np.sin(a1p * x) - 2.0 * s * s * th * sech2
        st, ct = np.sin(a2p * t), np.cos(a2p * t)
        gu[:, 0] = dspace * st
        gu[:, 1] = space * a2p * ct
        hu[:, 0, 0] = d2space * st
        hu[:, 1, 1] = -space * a2p * a2p * st
        hu[:, 0, 1] = dspace * a2p * ct
        hu[:, 1, 0] = hu[:, 0, 1]
    elif pid == "damped_wave":
        x, t = _split_xt(spec, pts)
        g, a1p, a2p = c["gamma"], c["alpha1"] * np.pi, c["alpha2"] * np.pi
        e = np.exp(-g * t)
        sx, cx = np.sin(a1p * x), np.cos(a1p * x)
        st, ct = np.sin(a2p * t), np.cos(a2p * t)
        gu[:, 0] = e * a1p * cx * ct
        gu[:, 1] = e * sx * (-g * ct - a2p * st)
        hu[:, 0, 0] = -a1p * a1p * u
        hu[:, 1, 1] = e * sx * ((g * g - a2p * a2p) * ct + 2.0 * g * a2p * st)
        hu[:, 0, 1] = e * a1p * cx * (-g * ct - a2p * st)
        hu[:, 1, 0] = hu[:, 0, 1]
    elif pid == "advdiff":
        x, t = _split_xt(spec, pts)
        a, nu = c["a"], c["nu"]
        e = np.exp(-nu * np.pi**2 * t)
        z = np.pi * (x - a * t)
        sz, cz = np.sin(z), np.cos(z)
        gu[:, 0] = np.pi * e * cz
        gu[:, 1] = -nu * np.pi**2 * u - a * np.pi * e * cz
        hu[:, 0, 0] = -np.pi**2 * u
        hu[:, 1, 1] = (
            nu**2 * np.pi**4 * e * sz
            + 2.0 * a * nu * np.pi**3 * e * cz
            - a * a * np.pi**2 * e * sz
        )
        hu[:, 0, 1] = -nu * np.pi**3 * e * cz + a * np.pi**2 * e * sz
        hu[:, 1, 0] = hu[:, 0, 1]
    elif pid == "fisher_kpp":
        x, t = _split_xt(spec, pts)
        lam, speed = c["front_slope"], c["front_speed"]
        z = np.clip(lam * (x - speed * t), -500.0, 500.0)
        ez = np.exp(z)
        p = 1.0 + ez
        uz = -2.0 * ez / p**3
        uzz = (-2.0 * ez * p + 6.0 * ez * ez) / p**4
        gu[:, 0] = lam * uz
        gu[:, 1] = -lam * speed * uz
        hu[:, 0, 0] = lam * lam * uzz
        hu[:, 1, 1] = (lam * speed) ** 2 * uzz
        hu[:, 0, 1] = -lam * lam * speed * uzz
        hu[:, 1, 0] = hu[:, 0, 1]
    else:
        raise ConfigurationError(pid)
    return u, gu, hu


def exact_jet(spec: ProblemSpec, point) -> Jet:
    pts = _check_points(spec, point)
    u, gu, hu = exact_jet_arrays(spec, pts)
    return Jet(float(u[0]), gu[0], hu[0])


def source_values(spec: ProblemSpec, points) -> np.ndarray:
    """PDE source f so that the exact solution satisfies D[u] = f exactly."""
    pts = _check_points(spec, points)
    pid = spec.problem_id
    if pid in ("damped_wave", "advdiff", "fisher_kpp"):
        return np.zeros(pts.shape[0])
    u, gu, hu = exact_jet_arrays(spec, pts)
    if pid == "poisson1d":
        return hu[:, 0, 0]
    if pid == "poisson2d":
        return hu[:, 0, 0] + hu[:, 1, 1]
    if pid == "heat":
        return gu[:, 1] - hu[:, 0, 0]
    raise ConfigurationError(pid)


def boundary_values(spec: ProblemSpec, points) -> np.ndarray:
    """Dirichlet data g on the boundary (exact solution trace)."""
    if spec.periodic:
        raise InputError(f"{spec.problem_id} has periodic boundary, no Dirichlet data")
    return exact_values(spec, points)


def initial_values(spec: ProblemSpec, points) -> np.ndarray:
    """Initial condition u0(x) = u(x, 0)."""
    if not spec.time_dependent:
        raise InputError(f"{spec.problem_id} is stationary, no initial data")
    return exact_values(spec, points)


def initial_velocity(spec: ProblemSpec, points) -> np.ndarray:
    """Initial velocity v0(x) = u_t(x, 0); only the wave problem uses one."""
    if spec.problem_id != "damped_wave":
        raise InputError(f"{spec.problem_id} has no velocity initial condition")
    pts = _check_points(spec, points)
    _, gu, _ = exact_jet_arrays(spec, pts)
    return gu[:, 1]


def source_and_data(spec: ProblemSpec, point, kind: str) -> float:
    """Scalar access to the manufactured data: kind in pde|bc|ic|ic_velocity."""
    pts = _check_points(spec, point)
    if kind == "pde":
        return float(source_values(spec, pts)[0])
    if kind == "bc":
        return float(boundary_values(spec, pts)[0])
    if kind == "ic":
        return float(initial_values(spec, pts)[0])
    if kind == "ic_velocity":
        return float(initial_velocity(spec, pts)[0])
    raise InputError(f"unknown data kind {kind!r}")


def pde_residuals(spec: ProblemSpec, values, grads, hesses, points) -> np.ndarray:
    """Interior residual D[u] - f for batched jets."""
    pts = _check_points(spec, points)
    f = source_values(spec, pts)
    c = spec.coeffs
    pid = spec.problem_id
    if pid == "poisson1d":
        return hesses[:, 0, 0] - f
    if pid == "poisson2d":
        return hesses[:, 0, 0] + hesses[:, 1, 1] - f
    if pid == "heat":
        return grads[:, 1] - hesses[:, 0, 0] - f
    if pid == "damped_wave":
        return (
            hesses[:, 1, 1]
            + 2.0 * c["gamma"] * grads[:, 1]
            - c["c"] ** 2 * hesses[:, 0, 0]
            - f
        )
    if pid == "advdiff":
        return grads[:, 1] + c["a"] * grads[:, 0] - c["nu"] * hesses[:, 0, 0] - f
    if pid == "fisher_kpp":
        u = values
        return (
            grads[:, 1]
            - c["diffusivity"] * hesses[:, 0, 0]
            - c["growth"] * u * (1.0 - u)
            - f
        )
    raise ConfigurationError(pid)


def pde_residual(spec: ProblemSpec, jet: Jet, point) -> float:
    pts = _check_points(spec, point)
    r = pde_residuals(
        spec,
        np.array([jet.value]),
        jet.grad.reshape(1, -1),
        jet.hess.reshape(1, spec.input_dim, spec.input_dim),
        pts,
    )
    return float(r[0])


def residual_jet_bars(spec: ProblemSpec, values, residual_bar):
    """Adjoints of the interior residuals w.r.t. the jets.

    Given rbar = dL/dr per point, returns (value_bar, grad_bar, hess_bar)
    matching the batched jet shapes.  Everything is linear in the jet except
    the fisher_kpp reaction term, whose value adjoint is -growth*(1-2u).
    """
    rbar = np.asarray(residual_bar, dtype=np.float64)
    n = rbar.shape[0]
    d = spec.input_dim
    vb = np.zeros(n)
    gb = np.zeros((n, d))
    hb = np.zeros((n, d, d))
    c = spec.coeffs
    pid = spec.problem_id
    if pid == "poisson1d":
        hb[:, 0, 0] = rbar
    elif pid == "poisson2d":
        hb[:, 0, 0] = rbar
        hb[:, 1, 1] = rbar
    elif pid == "heat":
        gb[:, 1] = rbar
        hb[:, 0, 0] = -rbar
    elif pid == "damped_wave":
        hb[:, 1, 1] = rbar
        gb[:, 1] = 2.0 * c["gamma"] * rbar
        hb[:, 0, 0] = -(c["c"] ** 2) * rbar
    elif pid == "advdiff":
        gb[:, 1] = rbar
        gb[:, 0] = c["a"] * rbar
        hb[:, 0, 0] = -c["nu"] * rbar
    elif pid == "fisher_kpp":
        gb[:, 1] = rbar
        hb[:, 0, 0] = -c["diffusivity"] * rbar
        vb[:] = -c["growth"] * (1.0 - 2.0 * np.asarray(values)) * rbar
    else:
        raise ConfigurationError(pid)
    return vb, gb, hb


def bc_residual(spec: ProblemSpec, value_or_jet, point) -> float:
    """Dirichlet boundary residual u_hat - g at one boundary point."""
    val = value_or_jet.value if isinstance(value_or_jet, Jet) else float(value_or_jet)
    return val - source_and_data(spec, point, "bc")


def periodic_gaps(spec: ProblemSpec, jet_lo: Jet, jet_hi: Jet) -> tuple[float, float]:
    """Periodic boundary residuals: value gap and x-derivative gap."""
    if not spec.periodic:
        raise InputError(f"{spec.problem_id} is not periodic")
    return (jet_lo.value - jet_hi.value, float(jet_lo.grad[0] - jet_hi.grad[0]))


def ic_residual(spec: ProblemSpec, value_or_jet, point) -> float:
    val = value_or_jet.value if isinstance(value_or_jet, Jet) else float(value_or_jet)
    return val - source_and_data(spec, point, "ic")


def ic_velocity_residual(spec: ProblemSpec, jet: Jet, point) -> float:
    return float(jet.grad[-1]) - source_and_data(spec, point, "ic_velocity")


@dataclass(frozen=True)
class PointSets:
    """Collocation points for one run.

    boundary rows carry a face index; for periodic problems consecutive rows
    (2j, 2j+1) are the low/high endpoint pair sharing one time sample, so
    n_boundary counts pairs, not rows.
    """

    interior: np.ndarray
    boundary: np.ndarray
    boundary_faces: np.ndarray
    initial: np.ndarray
    seed: int


def _open_uniform(rng, lo, hi, n):
    x = rng.uniform(lo, hi, n)
    while True:
        bad = (x <= lo) | (x >= hi)
        if not bad.any():
            return x
        x[bad] = rng.uniform(lo, hi, int(bad.sum()))


def sample_points(
    spec: ProblemSpec, n_interior: int, n_boundary: int, n_initial: int, seed: int
) -> PointSets:
    """Deterministic collocation sampling.

    Interior points fall strictly inside the spatial domain, with t drawn
    from (0, t_final] for time-dependent problems.  Boundary samples cycle
    the faces; initial samples sit at t = 0.  A fixed seed reproduces the
    exact same arrays.
    """
    if n_interior < 1 or n_boundary < 1:
        raise InputError("n_interior and n_boundary must be positive")
    if spec.time_dependent:
        if n_initial < 1:
            raise InputError(f"{spec.problem_id} needs n_initial >= 1")
    elif n_initial != 0:
        raise InputError(f"{spec.problem_id} is stationary, n_initial must be 0")

    rng = np.random.default_rng(int(seed))
    dim = spec.input_dim

    interior = np.empty((n_interior, dim))
    for axis, (lo, hi) in enumerate(spec.domain):
        interior[:, axis] = _open_uniform(rng, lo, hi, n_interior)
    if spec.time_dependent:
        interior[:, -1] = spec.t_final - rng.uniform(0.0, spec.t_final, n_interior)

    if spec.periodic:
        lo, hi = spec.domain[0]
        t = rng.uniform(0.0, spec.t_final, n_boundary)
        boundary = np.empty((2 * n_boundary, 2))
        boundary[0::2, 0] = lo
        boundary[1::2, 0] = hi
        boundary[0::2, 1] = t
        boundary[1::2, 1] = t
        faces = np.tile(np.array([0, 1]), n_boundary)
    elif spec.problem_id == "poisson2d":
        faces = np.arange(n_boundary) % 4
        boundary = np.empty((n_boundary, 2))
        (x_lo, x_hi), (y_lo, y_hi) = spec.domain
        along_x = rng.uniform(x_lo, x_hi, n_boundary)
        along_y = rng.uniform(y_lo, y_hi, n_boundary)
        for i in range(n_boundary):
            f = faces[i]
            if f == 0:
                boundary[i] = (x_lo, along_y[i])
            elif f == 1:
                boundary[i] = (x_hi, along_y[i])
            elif f == 2:
                boundary[i] = (along_x[i], y_lo)
            else:
                boundary[i] = (along_x[i], y_hi)
    else:
        lo, hi = spec.domain[0]
        faces = np.arange(n_boundary) % 2
        boundary = np.empty((n_boundary, dim))
        boundary[:, 0] = np.where(faces == 0, lo, hi)
        if spec.time_dependent:
            boundary[:, 1] = rng.uniform(0.0, spec.t_final, n_boundary)

    if spec.time_dependent:
        initial = np.zeros((n_initial, dim))
        lo, hi = spec.domain[0]
        initial[:, 0] = rng.uniform(lo, hi, n_initial)
    else:
        initial = np.zeros((0, dim))

    return PointSets(interior, boundary, faces.astype(np.int64), initial, int(seed))


def make_test_grid(spec: ProblemSpec, n_axis: int | None = None) -> np.ndarray:
    """Uniform tensor evaluation grid over the closed domain."""
    n = int(n_axis) if n_axis else spec.n_test_axis
    if n < 2:
        raise InputError("test grid needs at least 2 points per axis")
    if spec.input_dim == 1:
        lo, hi = spec.domain[0]
        return np.linspace(lo, hi, n).reshape(-1, 1)
    if spec.time_dependent:
        (lo, hi) = spec.domain[0]
        axes = (np.linspace(lo, hi, n), np.linspace(0.0, spec.t_final, n))
    else:
        axes = tuple(np.linspace(lo, hi, n) for lo, hi in spec.domain)
    xx, yy = np.meshgrid(axes[0], axes[1], indexing="ij")
    return np.column_stack([xx.reshape(-1), yy.reshape(-1)])


@dataclass(frozen=True)
class ErrorMetrics:
    """Grid errors; e_loss is filled in by the trainer from the final loss."""

    e_loss: float
    e2: float
    rel_e2: float
    e_inf: float


def evaluate_metrics(params: ApproximatorParams, spec: ProblemSpec, test_grid) -> ErrorMetrics:
    """Discrete L2 (root mean square over the grid), relative L2 and max errors."""
    grid = _check_points(spec, test_grid)
    u = exact_values(spec, grid)
    u_hat = forward_values(params, grid)
    diff = u - u_hat
    e2 = float(np.sqrt(np.mean(diff * diff)))
    norm = float(np.sqrt(np.mean(u * u)))
    rel = e2 / norm if norm > 0 else np.inf
    e_inf = float(np.max(np.abs(diff)))
    return ErrorMetrics(e_loss=float("nan"), e2=e2, rel_e2=rel, e_inf=e_inf)
