"""Run records and their on-disk forms.

train.csv contains only deterministic columns so two runs with the same
config and seed produce byte-identical files; per-run timing lives in the
summary as cpu_s.  All floats are written with 17 significant digits, which
round-trips float64 exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import problems
from .network import ApproximatorParams, forward_values


def fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class IterRow:
    iteration: int
    loss_total: float
    loss_pde_w: float
    loss_pde_unweighted: float
    loss_bc: float
    loss_ic: float
    lambda_pde: float
    lambda_bc: float
    lambda_ic: float
    tau: float
    grad_norm: float
    wall_ms: float


@dataclass(frozen=True)
class RefreshRow:
    iteration: int
    tau: float
    pis: tuple
    mus: tuple
    sigma2s: tuple
    difficulties: tuple
    difficulties_norm: tuple
    component_weights: tuple
    c_minus: float
    c_plus: float
    w_min: float
    w_max: float
    w_mean: float


@dataclass
class RunRecord:
    problem: str
    method: str
    seed: int
    rows: list = field(default_factory=list)
    refreshes: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    params: ApproximatorParams | None = None


TRAIN_COLUMNS = (
    "iter",
    "loss_total",
    "loss_pde_w",
    "loss_pde_unweighted",
    "loss_bc",
    "loss_ic",
    "lambda_pde",
    "lambda_bc",
    "lambda_ic",
    "tau",
    "grad_norm",
)


def write_train_csv(path, rows) -> None:
    lines = [",".join(TRAIN_COLUMNS)]
    for r in rows:
        lines.append(
            ",".join(
                [str(r.iteration)]
                + [
                    fmt(v)
                    for v in (
                        r.loss_total,
                        r.loss_pde_w,
                        r.loss_pde_unweighted,
                        r.loss_bc,
                        r.loss_ic,
                        r.lambda_pde,
                        r.lambda_bc,
                        r.lambda_ic,
                        r.tau,
                        r.grad_norm,
                    )
                ]
            )
        )
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_refresh_csv(path, refreshes, k_components: int) -> None:
    cols = ["iter", "tau"]
    for name in ("pi", "mu", "sigma2", "d", "d_tilde", "w_comp"):
        cols.extend(f"{name}_{m}" for m in range(k_components))
    cols.extend(["c_minus", "c_plus", "w_min", "w_max", "w_mean"])
    lines = [",".join(cols)]
    for r in refreshes:
        vals = [str(r.iteration), fmt(r.tau)]
        for tup in (r.pis, r.mus, r.sigma2s, r.difficulties, r.difficulties_norm, r.component_weights):
            padded = list(tup) + [float("nan")] * (k_components - len(tup))
            vals.extend(fmt(v) for v in padded)
        vals.extend(fmt(v) for v in (r.c_minus, r.c_plus, r.w_min, r.w_max, r.w_mean))
        lines.append(",".join(vals))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_summary(path, summary: dict) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return str(obj)


def write_grid_csv(path, spec, params: ApproximatorParams, grid) -> None:
    grid = np.asarray(grid, dtype=np.float64)
    u = problems.exact_values(spec, grid)
    u_hat = forward_values(params, grid)
    if spec.input_dim == 1:
        coord_names = ["x"]
    elif spec.time_dependent:
        coord_names = ["x", "t"]
    else:
        coord_names = ["x", "y"]
    lines = [",".join(coord_names + ["u_exact", "u_pred", "abs_err"])]
    for i in range(grid.shape[0]):
        vals = [fmt(grid[i, j]) for j in range(grid.shape[1])]
        vals += [fmt(u[i]), fmt(u_hat[i]), fmt(abs(u[i] - u_hat[i]))]
        lines.append(",".join(vals))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def summary_table(summaries) -> str:
    """Aligned text table with one row per completed run."""
    cols = ("problem", "method", "seed", "e_loss", "e2", "rel_e2", "e_inf", "cpu_s")
    rows = [cols]
    for s in summaries:
        rows.append(
            (
                str(s.get("problem", "")),
                str(s.get("method", "")),
                str(s.get("seed", "")),
                _short(s.get("e_loss")),
                _short(s.get("e2")),
                _short(s.get("rel_e2")),
                _short(s.get("e_inf")),
                _short(s.get("cpu_s")),
            )
        )
    widths = [max(len(r[i]) for r in rows) for i in range(len(cols))]
    out = []
    for r in rows:
        out.append("  ".join(val.ljust(w) for val, w in zip(r, widths)).rstrip())
    return "\n".join(out)


def _short(v) -> str:
    if v is None:
        return "-"
    try:
        return format(float(v), ".4g")
    except (TypeError, ValueError):
        return str(v)
