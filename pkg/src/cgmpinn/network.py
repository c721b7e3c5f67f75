"""Tanh network evaluated jointly with its first and second input derivatives.

The approximator is a fully connected network with tanh hidden units and a
linear scalar output.  Every evaluation propagates a second-order jet
(value, gradient, Hessian with respect to the network inputs) through the
layers, so PDE residuals built from ``u``, ``grad u`` and ``hess u`` are
exact up to rounding, with no finite-difference step anywhere.

Parameter gradients of scalar objectives defined on those jets are computed
by a hand-written reverse pass over the jet propagation (``backprop_jets``).
All reductions are fixed-order numpy operations, so identical inputs give
bit-identical outputs on a given platform.

Parameter layout is flat: for each layer, the weight matrix in row-major
order followed by its bias vector.  ``n_parameters`` gives the total count.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Protocol

import numpy as np

from .errors import ConfigurationError, InputError, NumericalError

_ACTIVATIONS = ("tanh",)


def n_parameters(layer_sizes) -> int:
    """Total flat parameter count: sum over layers of fan_in*fan_out + fan_out."""
    sizes = tuple(int(s) for s in layer_sizes)
    return sum(sizes[i] * sizes[i + 1] + sizes[i + 1] for i in range(len(sizes) - 1))


@dataclass(frozen=True)
class ApproximatorParams:
    """Network shape plus the flat parameter vector.

    values has length n_parameters(layer_sizes) and is treated as read-only;
    optimizers build new instances via dataclasses.replace.
    """

    layer_sizes: tuple[int, ...]
    values: np.ndarray
    activation: str = "tanh"

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise ConfigurationError(f"layer_sizes must be >= 2 positive entries, got {sizes}")
        if self.activation not in _ACTIVATIONS:
            raise ConfigurationError(f"unknown activation {self.activation!r}")
        vals = np.asarray(self.values, dtype=np.float64)
        expect = n_parameters(sizes)
        if vals.ndim != 1 or vals.size != expect:
            raise ConfigurationError(
                f"values has {vals.size} entries, layout for {sizes} needs {expect}"
            )
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "layer_sizes", sizes)
        object.__setattr__(self, "values", vals)

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    def with_values(self, values: np.ndarray) -> "ApproximatorParams":
        return replace(self, values=values)


def init_network(layer_sizes, seed: int) -> ApproximatorParams:
    """Deterministic Glorot-uniform init, biases zero.

    Weights for layer l are drawn uniformly from [-a, a] with
    a = sqrt(6 / (fan_in + fan_out)) using numpy's seeded PCG64 generator,
    layer by layer in order, so identical (layer_sizes, seed) reproduce the
    parameter vector bit for bit.
    """
    sizes = tuple(int(s) for s in layer_sizes)
    rng = np.random.default_rng(int(seed))
    chunks = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        a = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-a, a, size=(fan_out, fan_in))
        chunks.append(w.reshape(-1))
        chunks.append(np.zeros(fan_out))
    return ApproximatorParams(sizes, np.concatenate(chunks))


def split_layers(params: ApproximatorParams) -> list[tuple[np.ndarray, np.ndarray]]:
    """Views of the flat vector as per-layer (W, b) pairs."""
    sizes = params.layer_sizes
    out = []
    pos = 0
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        w = params.values[pos : pos + fan_out * fan_in].reshape(fan_out, fan_in)
        pos += fan_out * fan_in
        b = params.values[pos : pos + fan_out]
        pos += fan_out
        out.append((w, b))
    return out


@dataclass(frozen=True)
class Jet:
    """Value, gradient and Hessian of the network output at one point."""

    value: float
    grad: np.ndarray
    hess: np.ndarray


class BatchJets:
    """Jets for a batch of points plus the cached forward intermediates."""

    __slots__ = ("points", "values", "grads", "hesses", "_cache")

    def __init__(self, points, values, grads, hesses, cache):
        self.points = points
        self.values = values      # (N,)
        self.grads = grads        # (N, d)
        self.hesses = hesses      # (N, d, d)
        self._cache = cache

    def __len__(self):
        return self.values.shape[0]


def _as_points(params: ApproximatorParams, points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.ndim != 2 or pts.shape[1] != params.input_dim:
        raise InputError(
            f"points shape {pts.shape} does not match network input dim {params.input_dim}"
        )
    if pts.size and not np.isfinite(pts).all():
        raise InputError("points contain non-finite entries")
    return pts


def forward_jets(params: ApproximatorParams, points) -> BatchJets:
    """Propagate (value, gradient, Hessian) through the network for a batch.

    Shapes carried per layer: A (N, w), G (N, d, w), H (N, d, d, w) where d
    is the input dimension and w the layer width.  Hessians are symmetric
    bit-for-bit because both triangles are produced by the same float ops.
    """
    pts = _as_points(params, points)
    n, d = pts.shape
    layers = split_layers(params)

    a = pts
    g = np.broadcast_to(np.eye(d), (n, d, d)).copy()
    h = np.zeros((n, d, d, d))
    cache = []
    last = len(layers) - 1
    for i, (w, b) in enumerate(layers):
        z = a @ w.T + b
        gz = g @ w.T
        hz = h @ w.T
        if i == last:
            cache.append(("linear", a, g, h))
            a, g, h = z, gz, hz
        else:
            t = np.tanh(z)
            u = 1.0 - t * t
            cache.append(("tanh", a, g, h, t, u, gz, hz))
            a = t
            g = u[:, None, :] * gz
            h = u[:, None, None, :] * hz - (2.0 * t * u)[:, None, None, :] * (
                gz[:, :, None, :] * gz[:, None, :, :]
            )
    if a.shape[1] != 1:
        raise ConfigurationError("output layer must have width 1")
    return BatchJets(pts, a[:, 0], g[:, :, 0], h[:, :, :, 0], cache)


def forward_values(params: ApproximatorParams, points) -> np.ndarray:
    """Values only, for evaluation grids where derivatives are not needed."""
    pts = _as_points(params, points)
    a = pts
    layers = split_layers(params)
    for i, (w, b) in enumerate(layers):
        z = a @ w.T + b
        a = z if i == len(layers) - 1 else np.tanh(z)
    return a[:, 0]


def eval_jet(params: ApproximatorParams, point) -> Jet:
    """Jet of the scalar output at a single point."""
    pt = np.asarray(point, dtype=np.float64).reshape(-1)
    if pt.shape[0] != params.input_dim:
        raise InputError(f"point has dim {pt.shape[0]}, network expects {params.input_dim}")
    jets = forward_jets(params, pt.reshape(1, -1))
    return Jet(float(jets.values[0]), jets.grads[0].copy(), jets.hesses[0].copy())


def backprop_jets(params, jets: BatchJets, value_bar=None, grad_bar=None, hess_bar=None):
    """Exact parameter gradient of sum_n(vb_n*u_n + gb_n.grad_n + hb_n:hess_n).

    The adjoints are with respect to the batch jet outputs; the reverse pass
    mirrors the forward layer rules.  Any adjoint left as None is zero.
    """
    n = len(jets)
    d = jets.points.shape[1]
    ab = np.zeros((n, 1)) if value_bar is None else np.asarray(value_bar, float).reshape(n, 1)
    gb = np.zeros((n, d, 1)) if grad_bar is None else np.asarray(grad_bar, float).reshape(n, d, 1)
    hb = (
        np.zeros((n, d, d, 1))
        if hess_bar is None
        else np.asarray(hess_bar, float).reshape(n, d, d, 1)
    )

    layers = split_layers(params)
    w_grads = [None] * len(layers)
    b_grads = [None] * len(layers)
    for i in range(len(layers) - 1, -1, -1):
        w, _ = layers[i]
        entry = jets._cache[i]
        if entry[0] == "tanh":
            _, a_in, g_in, h_in, t, u, gz, hz = entry
            tu = t * u
            # adjoint of the pre-activation z through value, gradient and
            # Hessian outputs of the tanh layer
            s_hz = (hb * hz).sum(axis=(1, 2))
            s_gg = np.einsum("nabw,naw,nbw->nw", hb, gz, gz)
            zb = (
                ab * u
                - 2.0 * tu * ((gb * gz).sum(axis=1) + s_hz)
                - 2.0 * (u * (1.0 - 3.0 * t * t)) * s_gg
            )
            gzb = u[:, None, :] * gb - (2.0 * tu)[:, None, :] * np.einsum(
                "nabw,nbw->naw", hb + hb.swapaxes(1, 2), gz
            )
            hzb = u[:, None, None, :] * hb
        else:
            _, a_in, g_in, h_in = entry
            zb, gzb, hzb = ab, gb, hb

        wout, win = w.shape
        wg = zb.T @ a_in
        wg += gzb.reshape(n * d, wout).T @ g_in.reshape(n * d, win)
        wg += hzb.reshape(n * d * d, wout).T @ h_in.reshape(n * d * d, win)
        w_grads[i] = wg
        b_grads[i] = zb.sum(axis=0)

        if i > 0:
            ab = zb @ w
            gb = gzb @ w
            hb = hzb @ w

    flat = np.concatenate(
        [np.concatenate([wg.reshape(-1), bg]) for wg, bg in zip(w_grads, b_grads)]
    )
    return flat


class JetObjective(Protocol):
    """Scalar objective built from network jets at fixed point groups.

    point_groups names the batches of points the objective needs jets at.
    value_and_jet_bars returns the objective value, per-group adjoints
    (value_bar, grad_bar, hess_bar) of that value with respect to the jets,
    and an optional direct parameter-space gradient term (for objectives
    such as quadratic penalties on the parameters themselves).
    """

    def point_groups(self) -> dict[str, np.ndarray]: ...

    def value_and_jet_bars(
        self, params: ApproximatorParams, jets: dict[str, BatchJets]
    ) -> tuple[float, dict[str, tuple], np.ndarray | None]: ...


def objective_gradient(params: ApproximatorParams, objective: JetObjective) -> np.ndarray:
    """Exact gradient of a jet-based scalar objective w.r.t. every parameter."""
    jets = {name: forward_jets(params, pts) for name, pts in objective.point_groups().items()}
    value, bars, direct = objective.value_and_jet_bars(params, jets)
    if not np.isfinite(value):
        raise NumericalError(f"objective value is not finite: {value!r}")
    grad = np.zeros_like(params.values)
    for name, (vb, gb, hb) in bars.items():
        grad += backprop_jets(params, jets[name], vb, gb, hb)
    if direct is not None:
        grad += np.asarray(direct, dtype=np.float64).reshape(grad.shape)
    if not np.isfinite(grad).all():
        raise NumericalError("objective gradient contains non-finite entries")
    return grad


_CKPT_HEADER = "cgmpinn-checkpoint-v1"


def save_checkpoint(params: ApproximatorParams, path) -> None:
    """Plain-text checkpoint: header, shape, activation, then one value per line."""
    lines = [
        _CKPT_HEADER,
        "layer_sizes " + " ".join(str(s) for s in params.layer_sizes),
        f"activation {params.activation}",
    ]
    lines.extend(format(v, ".17g") for v in params.values)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(path) -> ApproximatorParams:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _CKPT_HEADER:
        raise InputError(f"{path} is not a {_CKPT_HEADER} file")
    sizes = tuple(int(tok) for tok in lines[1].split()[1:])
    activation = lines[2].split()[1]
    values = np.array([float(tok) for tok in lines[3:] if tok.strip()], dtype=np.float64)
    return ApproximatorParams(sizes, values, activation)
