"""Compile a fixed-randomness MLP realization into an explicit ReLU network.

For level ``m`` the network is a single parallel sum of

* ``M^m`` shifted copies of the terminal-value network, padded with identity
  chains to the common depth, weight ``1/M^m``;
* for each ``l < m`` and ``i <= M^(m-l)``: the nonlinearity network composed
  with the (padded, shifted) level-``l`` subnetwork, weight ``(T-t)/M^(m-l)``,
  and for ``l >= 1`` the level-``l-1`` companion with the opposite sign.

Randomness is read from the same :class:`RandTree` indices, in the same
order, as :func:`picardnet.mlp.evaluate`, so the realization reproduces the
estimator for every input point.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from .mlp import DEFAULT_CEILING, Problem, check_ceiling
from .pwl import LipschitzFn
from .randtree import RandTree, as_index
from .relu import (
    Network,
    affine_wrap,
    compose,
    extend_depth,
    param_count,
    parallel_sum,
    realize,
    zero_net,
)

__all__ = [
    "CompileSpec",
    "BoundsReport",
    "compile_mlp",
    "check_bounds",
    "expected_depth",
    "metadata",
    "lipschitz_upper",
    "realized_problem",
]


@dataclass(frozen=True)
class CompileSpec:
    net_f: Network
    net_g: Network
    n: int
    M: int
    t: float
    T: float
    tree: RandTree
    c: float
    theta: tuple = (0,)
    ceiling: int | None = field(default=DEFAULT_CEILING, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "theta", as_index(self.theta))
        if self.net_f.d_in != 1 or self.net_f.d_out != 1:
            raise ValueError(f"net_f must map R -> R, has dims {self.net_f.dims}")
        if self.net_g.d_out != 1:
            raise ValueError(f"net_g must be scalar-valued, has dims {self.net_g.dims}")
        if self.net_g.d_in != self.tree.d:
            raise ValueError(
                f"net_g input width {self.net_g.d_in} != randomness dimension {self.tree.d}"
            )
        if self.n < 0 or self.M < 1:
            raise ValueError(f"need n >= 0 and M >= 1, got n={self.n}, M={self.M}")
        if not 0.0 <= self.t <= self.T:
            raise ValueError(f"time {self.t} outside [0, {self.T}]")
        need = max(2, self.net_f.dims.supnorm(), self.net_g.dims.supnorm())
        if self.c < need:
            raise ValueError(f"width constant c={self.c} below required {need}")

    @property
    def d(self) -> int:
        return self.net_g.d_in


def expected_depth(spec: CompileSpec) -> int:
    """Length of the compiled dims vector: ``n (len f - 1) + len g``."""
    return spec.n * (len(spec.net_f.dims) - 1) + len(spec.net_g.dims)


def compile_mlp(spec: CompileSpec) -> Network:
    """Network whose realization equals ``U_{n,M}^theta(t, .)`` for the draws fixed by ``spec``."""
    check_ceiling(spec.n, spec.M, spec.ceiling)
    net_f, net_g, M, T, tree = spec.net_f, spec.net_g, spec.M, spec.T, spec.tree
    f_layers = net_f.n_layers
    g_layers = net_g.n_layers

    def build(m: int, t: float, theta: tuple) -> Network:
        if m == 0:
            return zero_net(spec.d, 1, g_layers)
        depth = m * f_layers + g_layers
        inner_depth = depth - f_layers
        terms = []
        Mm = M**m
        for i in range(1, Mm + 1):
            shift = tree.brownian_increment(theta + (0, -i), T - t)
            terms.append((1.0 / Mm, extend_depth(affine_wrap(net_g, 1.0, shift), depth)))
        for l in range(m):
            Ml = M ** (m - l)
            h = (T - t) / Ml
            for i in range(1, Ml + 1):
                idx = theta + (l, i)
                r = tree.time_point(idx, t, T)
                shift = tree.brownian_increment(idx, r - t)
                sub = affine_wrap(build(l, r, idx), 1.0, shift)
                terms.append((h, compose(net_f, extend_depth(sub, inner_depth))))
                if l >= 1:
                    sub = affine_wrap(build(l - 1, r, theta + (-l, i)), 1.0, shift)
                    terms.append((-h, compose(net_f, extend_depth(sub, inner_depth))))
        return parallel_sum(terms)

    return build(spec.n, float(spec.t), spec.theta)


@dataclass(frozen=True)
class BoundsReport:
    depth: int
    depth_expected: int
    depth_exact_match: bool
    width_max: int
    width_bound: float
    width_ok: bool
    param_count: int
    param_bound: float
    param_ok: bool

    def ok(self) -> bool:
        return self.depth_exact_match and self.width_ok and self.param_ok

    def as_dict(self) -> dict:
        return asdict(self)


def check_bounds(result: Network, spec: CompileSpec) -> BoundsReport:
    """Compare a compiled network against its depth, width and size guarantees.

    The width bound ``c (3M)^n`` is checked on hidden layers; since ``c`` is at
    least the input width of ``net_g``, the full sup-norm obeys it as well.
    """
    dims = result.dims
    depth = len(dims)
    depth_expected = expected_depth(spec)
    width_max = max(dims.hidden)
    width_bound = spec.c * (3 * spec.M) ** spec.n
    count = param_count(result)
    param_bound = 2 * depth * width_bound * (width_bound + 1)
    return BoundsReport(
        depth=depth,
        depth_expected=depth_expected,
        depth_exact_match=depth == depth_expected,
        width_max=width_max,
        width_bound=width_bound,
        width_ok=width_max <= width_bound and dims.supnorm() <= width_bound,
        param_count=count,
        param_bound=param_bound,
        param_ok=count <= param_bound,
    )


def metadata(result: Network, spec: CompileSpec) -> dict:
    report = check_bounds(result, spec)
    return {
        "n": spec.n,
        "M": spec.M,
        "t": spec.t,
        "T": spec.T,
        "theta": list(spec.theta),
        "seed": spec.tree.master_seed,
        "d": spec.d,
        "c": spec.c,
        "depth": report.depth,
        "width_max": report.width_max,
        "param_count": report.param_count,
    }


def _spectral_upper(w) -> float:
    if min(w.shape) == 1 or max(w.shape) > 2000:
        return float(sp.linalg.norm(w)) if sp.issparse(w) else float(np.linalg.norm(w))
    return float(np.linalg.norm(w.toarray(), 2))


def lipschitz_upper(net: Network) -> float:
    """Product of layer operator norms, a valid Lipschitz constant for the realization."""
    out = 1.0
    for w, _ in net.layers:
        out *= _spectral_upper(w)
    return out


class _ScalarNet:
    def __init__(self, net: Network):
        self.net = net

    def __call__(self, v):
        v = np.asarray(v, dtype=np.float64)
        return realize(self.net, v.reshape(-1, 1))[:, 0].reshape(v.shape)


class _FieldNet:
    def __init__(self, net: Network):
        self.net = net

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = realize(self.net, x.reshape(-1, x.shape[-1]))[:, 0]
        return out.reshape(x.shape[:-1])


def realized_problem(spec: CompileSpec, B: float = 1.0, p: float = 1.0, q: float = 2.0) -> Problem:
    """Problem whose ``f`` and ``g`` are the realizations of ``spec.net_f`` and ``spec.net_g``."""
    f = LipschitzFn(_ScalarNet(spec.net_f), lipschitz_upper(spec.net_f), name="net_f")
    return Problem(spec.d, spec.T, f, _FieldNet(spec.net_g), B=B, p=p, q=q, name="realized")
