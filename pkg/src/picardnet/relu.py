"""Explicit ReLU networks and the constructive operations on them.

A network is a list of affine layers ``(W_n, B_n)``; ReLU is applied after
every layer except the last.  Weight matrices are kept in CSR form so the
block-diagonal structure produced by parallel sums stays cheap; the layer
widths, parameter count and realization are those of the dense network.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .dims import DimVector, ShapeError, boxplus_all, odot

__all__ = [
    "Network",
    "realize",
    "dims",
    "param_count",
    "identity_net",
    "affine_wrap",
    "compose",
    "parallel_sum",
    "zero_net",
    "extend_depth",
    "to_dict",
    "from_dict",
    "dumps",
    "loads",
    "save",
    "load",
]


_CHUNK_ENTRIES = 1 << 22  # bound on width * batch rows held at once


def _as_matrix(w) -> sp.csr_array:
    if sp.issparse(w):
        m = sp.csr_array(w, dtype=np.float64)
    else:
        arr = np.asarray(w, dtype=np.float64)
        if arr.ndim != 2:
            raise ShapeError(f"weight must be 2-d, got shape {arr.shape}")
        m = sp.csr_array(arr)
    m.sum_duplicates()
    return m


def _as_vector(b) -> np.ndarray:
    arr = np.array(b, dtype=np.float64).reshape(-1)
    arr.setflags(write=False)
    return arr


class Network:
    """Immutable ReLU network ``((W_1, B_1), ..., (W_{H+1}, B_{H+1}))``."""

    __slots__ = ("_layers", "_dims")

    def __init__(self, layers: Iterable[tuple]):
        built = tuple((_as_matrix(w), _as_vector(b)) for w, b in layers)
        if len(built) < 2:
            raise ShapeError("a network needs at least two layers (one hidden layer)")
        widths = [built[0][0].shape[1]]
        for n, (w, b) in enumerate(built, start=1):
            if w.shape[1] != widths[-1]:
                raise ShapeError(
                    f"layer {n} expects input width {w.shape[1]}, previous width is {widths[-1]}"
                )
            if b.shape[0] != w.shape[0]:
                raise ShapeError(f"layer {n}: bias length {b.shape[0]} != rows {w.shape[0]}")
            widths.append(w.shape[0])
        self._layers = built
        self._dims = DimVector(widths)

    @property
    def layers(self) -> tuple:
        return self._layers

    @property
    def dims(self) -> DimVector:
        return self._dims

    @property
    def n_layers(self) -> int:
        return len(self._layers)

    @property
    def d_in(self) -> int:
        return self._dims[0]

    @property
    def d_out(self) -> int:
        return self._dims[-1]

    def dense_layers(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [(w.toarray(), b.copy()) for w, b in self._layers]

    def __call__(self, x):
        return realize(self, x)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Network) or self._dims != other._dims:
            return False
        for (w1, b1), (w2, b2) in zip(self._layers, other._layers):
            if (w1 != w2).nnz or not np.array_equal(b1, b2):
                return False
        return True

    __hash__ = None

    def __repr__(self) -> str:
        return f"Network(dims={tuple(self._dims)})"


def _forward(net: Network, arr: np.ndarray) -> np.ndarray:
    z = arr.T
    last = net.n_layers - 1
    for n, (w, b) in enumerate(net.layers):
        z = w @ z + b[:, None]
        if n < last:
            np.maximum(z, 0.0, out=z)
    return z.T


def realize(net: Network, x) -> np.ndarray:
    """Forward pass of ``net``.

    ``x`` may be a single input of length ``k_0`` (a bare float when
    ``k_0 == 1``) or a batch of shape ``(npts, k_0)``; the output has the
    matching shape with ``k_0`` replaced by the output width.
    """
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim <= 1
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.shape[1] != net.d_in:
        raise ShapeError(f"input width {arr.shape[1]} != network input width {net.d_in}")
    widest = max(net.dims)
    step = max(1, _CHUNK_ENTRIES // widest)
    out = np.concatenate([_forward(net, arr[i : i + step]) for i in range(0, arr.shape[0], step)])
    return out[0] if single else out


def dims(net: Network) -> DimVector:
    return net.dims


def param_count(net: Network) -> int:
    """Weights plus biases counted densely: ``sum_n k_n (k_{n-1} + 1)``."""
    d = net.dims
    return sum(d[n] * (d[n - 1] + 1) for n in range(1, len(d)))


def identity_net(H: int) -> Network:
    """Scalar network with ``H`` hidden width-2 layers realizing ``x -> x``."""
    if H < 1:
        raise ShapeError(f"identity_net needs H >= 1, got {H}")
    layers = [(np.array([[1.0], [-1.0]]), np.zeros(2))]
    layers += [(np.eye(2), np.zeros(2)) for _ in range(H - 1)]
    layers.append((np.array([[1.0, -1.0]]), np.zeros(1)))
    return Network(layers)


def affine_wrap(net: Network, lam: float, b=None, a=None) -> Network:
    """Network realizing ``y -> lam * (net(y + b) + a)`` with unchanged dims."""
    b = np.zeros(net.d_in) if b is None else np.asarray(b, dtype=np.float64).reshape(-1)
    a = np.zeros(net.d_out) if a is None else np.asarray(a, dtype=np.float64).reshape(-1)
    if b.shape[0] != net.d_in:
        raise ShapeError(f"shift b has length {b.shape[0]}, input width is {net.d_in}")
    if a.shape[0] != net.d_out:
        raise ShapeError(f"offset a has length {a.shape[0]}, output width is {net.d_out}")
    layers = list(net.layers)
    w1, b1 = layers[0]
    layers[0] = (w1, b1 + w1 @ b)
    wl, bl = layers[-1]
    layers[-1] = (lam * wl, lam * bl + lam * a)
    return Network(layers)


def compose(net_f: Network, net_g: Network) -> Network:
    """Network realizing ``net_f o net_g`` with dims ``odot(dims f, dims g)``.

    The output layer of ``g`` is doubled into ``[W; -W]`` and the first layer
    of ``f`` reads it through ``[I | -I]``, using ``v = relu(v) - relu(-v)``.
    """
    if net_f.d_in != net_g.d_out:
        raise ShapeError(
            f"cannot compose: f takes width {net_f.d_in}, g returns width {net_g.d_out}"
        )
    wg, bg = net_g.layers[-1]
    wf, bf = net_f.layers[0]
    glue_out = (sp.vstack([wg, -wg], format="csr"), np.concatenate([bg, -bg]))
    glue_in = (sp.hstack([wf, -wf], format="csr"), bf)
    out = Network(list(net_g.layers[:-1]) + [glue_out, glue_in] + list(net_f.layers[1:]))
    assert out.dims == odot(net_f.dims, net_g.dims)
    return out


def parallel_sum(terms: Sequence[tuple[float, Network]]) -> Network:
    """Network realizing ``sum_i h_i * net_i`` for same-depth, same-endpoint nets.

    First layers are stacked, hidden layers placed block-diagonally, and the
    output layer concatenates the ``h_i``-scaled blocks.
    """
    terms = list(terms)
    if not terms:
        raise ShapeError("parallel_sum needs at least one term")
    hs = [float(h) for h, _ in terms]
    nets = [net for _, net in terms]
    depth = nets[0].n_layers
    for net in nets:
        if net.n_layers != depth:
            raise ShapeError(f"parallel_sum needs equal depth, got {net.n_layers} and {depth}")
        if net.d_in != nets[0].d_in or net.d_out != nets[0].d_out:
            raise ShapeError("parallel_sum needs equal input and output widths")
    target = boxplus_all(net.dims for net in nets)

    layers = [
        (
            sp.vstack([net.layers[0][0] for net in nets], format="csr"),
            np.concatenate([net.layers[0][1] for net in nets]),
        )
    ]
    for n in range(1, depth - 1):
        layers.append(
            (
                sp.block_diag([net.layers[n][0] for net in nets], format="csr"),
                np.concatenate([net.layers[n][1] for net in nets]),
            )
        )
    w_last = sp.hstack([h * net.layers[-1][0] for h, net in zip(hs, nets)], format="csr")
    b_last = np.zeros(nets[0].d_out)
    for h, net in zip(hs, nets):
        b_last = b_last + h * net.layers[-1][1]
    layers.append((w_last, b_last))
    out = Network(layers)
    assert out.dims == target
    return out


def zero_net(d_in: int, d_out: int, depth_layers: int) -> Network:
    """All-zero network with width-1 hidden layers and ``depth_layers`` layers."""
    if depth_layers < 2:
        raise ShapeError(f"zero_net needs depth_layers >= 2, got {depth_layers}")
    widths = [d_in] + [1] * (depth_layers - 1) + [d_out]
    return Network(
        (sp.csr_array((k, k_prev)), np.zeros(k)) for k_prev, k in zip(widths[:-1], widths[1:])
    )


def extend_depth(net: Network, target_layers: int) -> Network:
    """Pad a scalar-output network to ``target_layers`` layers.

    The padding is a width-2 identity chain composed on the output side, so
    the dims become ``neutral(k) odot dims(net)``.  Padding by exactly one
    layer is impossible with this construction and is rejected.
    """
    if net.d_out != 1:
        raise ShapeError("extend_depth needs a scalar-output network")
    extra = target_layers - net.n_layers
    if extra < 0:
        raise ShapeError(f"target depth {target_layers} < current depth {net.n_layers}")
    if extra == 0:
        return net
    if extra == 1:
        raise ShapeError("identity padding adds at least two layers")
    # composing with identity_net(H) adds H + 1 layers
    return compose(identity_net(extra - 1), net)


# -- serialization -----------------------------------------------------------


def to_dict(net: Network) -> dict:
    return {
        "dims": list(net.dims),
        "layers": [{"w": w.toarray().tolist(), "b": b.tolist()} for w, b in net.layers],
    }


def from_dict(payload: dict) -> Network:
    net = Network((layer["w"], layer["b"]) for layer in payload["layers"])
    if "dims" in payload and list(net.dims) != list(payload["dims"]):
        raise ShapeError(f"declared dims {payload['dims']} != layer dims {list(net.dims)}")
    return net


def dumps(net: Network) -> str:
    # repr-based float formatting round-trips every float64 exactly
    return json.dumps(to_dict(net))


def loads(text: str) -> Network:
    return from_dict(json.loads(text))


def save(net: Network, path) -> None:
    Path(path).write_text(dumps(net) + "\n", encoding="utf-8")


def load(path) -> Network:
    return loads(Path(path).read_text(encoding="utf-8"))
