"""Multilevel Picard approximations of semilinear heat-equation fixed points.

The target is the fixed point

    u(s, x) = E[ g(x + W_{T-s}) + int_s^T f(u(t, x + W_{t-s})) dt ]

and ``evaluate`` computes one realization of the level-``n`` estimator
``U_{n,M}`` with every random draw taken from a :class:`RandTree`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .pwl import LipschitzFn
from .randtree import RandTree, as_index

__all__ = [
    "Problem",
    "MlpParams",
    "ResourceLimitError",
    "DEFAULT_CEILING",
    "node_count",
    "evaluate",
    "mc_samples",
    "mc_rmse",
    "mlp_error_bound",
    "gaussian_moment_bound",
    "sizing_constant",
    "sizing_rules",
]

DEFAULT_CEILING = 10**8


class ResourceLimitError(RuntimeError):
    """The requested recursion would exceed the configured node ceiling."""


@dataclass(frozen=True)
class Problem:
    """One semilinear fixed-point instance with gradient-free nonlinearity.

    ``g`` maps arrays of shape ``(..., d)`` to shape ``(...)``; ``f`` maps
    arrays elementwise.  ``B``, ``p`` and ``q`` are the growth constant, growth
    exponent and stability exponent used by the error bounds.
    """

    d: int
    T: float
    f: LipschitzFn
    g: Callable
    B: float = 1.0
    p: float = 1.0
    q: float = 2.0
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d}")
        if not self.T > 0:
            raise ValueError(f"horizon must be positive, got {self.T}")
        if self.q < 2:
            raise ValueError(f"stability exponent q must be >= 2, got {self.q}")

    @property
    def L(self) -> float:
        return self.f.L

    def check_assumptions(self, rng=None, trials: int = 200, rtol: float = 1e-9) -> None:
        """Spot-check the Lipschitz and growth assumptions on random inputs."""
        rng = np.random.default_rng(rng)
        v = rng.normal(scale=5.0, size=trials)
        w = rng.normal(scale=5.0, size=trials)
        lhs = np.abs(np.asarray(self.f(v)) - np.asarray(self.f(w)))
        if np.any(lhs > self.L * np.abs(v - w) * (1 + rtol) + 1e-12):
            raise ValueError("f violates its Lipschitz constant")
        x = rng.normal(scale=3.0, size=(trials, self.d))
        growth = self.B * (1 + np.linalg.norm(x, axis=-1)) ** self.p
        if self.f.f0_abs > self.B * (1 + rtol) or np.any(
            np.abs(self.g(x)) > growth * (1 + rtol) + 1e-12
        ):
            raise ValueError("f(0) or g violates the growth bound")


@dataclass(frozen=True)
class MlpParams:
    n: int
    M: int
    t: float = 0.0
    theta: tuple = (0,)

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"level n must be >= 0, got {self.n}")
        if self.M < 1:
            raise ValueError(f"branching M must be >= 1, got {self.M}")
        object.__setattr__(self, "theta", as_index(self.theta))


@lru_cache(maxsize=None)
def node_count(n: int, M: int) -> int:
    """Number of ``g`` and ``f`` evaluations performed by ``U_{n,M}``."""
    if n <= 0:
        return 0
    total = M**n
    for l in range(n):
        inner = 1 + node_count(l, M)
        if l >= 1:
            inner += 1 + node_count(l - 1, M)
        total += M ** (n - l) * inner
    return total


def check_ceiling(n: int, M: int, ceiling: int | None) -> None:
    if ceiling is not None and node_count(n, M) > ceiling:
        raise ResourceLimitError(
            f"U_(n={n}, M={M}) needs {node_count(n, M)} evaluations, ceiling is {ceiling}"
        )


def _recurse(prob: Problem, tree: RandTree, n: int, M: int, t: float, x: np.ndarray, theta: tuple):
    if n <= 0:
        return np.zeros(x.shape[0])
    T = prob.T
    Mn = M**n
    acc = np.zeros(x.shape[0])
    for i in range(1, Mn + 1):
        acc = acc + prob.g(x + tree.brownian_increment(theta + (0, -i), T - t))
    out = acc / Mn
    for l in range(n):
        Ml = M ** (n - l)
        acc = np.zeros(x.shape[0])
        for i in range(1, Ml + 1):
            idx = theta + (l, i)
            r = tree.time_point(idx, t, T)
            y = x + tree.brownian_increment(idx, r - t)
            term = prob.f(_recurse(prob, tree, l, M, r, y, idx))
            if l >= 1:
                term = term - prob.f(_recurse(prob, tree, l - 1, M, r, y, theta + (-l, i)))
            acc = acc + term
        out = out + (T - t) / Ml * acc
    return out


def evaluate(prob: Problem, params: MlpParams, x, tree: RandTree, ceiling: int | None = DEFAULT_CEILING):
    """One realization of ``U_{n,M}^theta(t, x)``.

    ``x`` is a point of length ``d`` (returns a float) or a batch of shape
    ``(npts, d)`` evaluated with the same draws (returns an array).  Sub-terms
    are visited in a fixed order: terminal samples ``(theta, 0, -i)`` first,
    then levels ``l`` ascending, samples ``i`` ascending.
    """
    if tree.d != prob.d:
        raise ValueError(f"randomness dimension {tree.d} != problem dimension {prob.d}")
    if not 0.0 <= params.t <= prob.T:
        raise ValueError(f"time {params.t} outside [0, {prob.T}]")
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != prob.d:
        raise ValueError(f"point has dimension {arr.shape[1]}, problem has {prob.d}")
    check_ceiling(params.n, params.M, ceiling)
    out = _recurse(prob, tree, params.n, params.M, float(params.t), arr, params.theta)
    return float(out[0]) if single else out


def mc_samples(prob: Problem, n: int, M: int, t: float, x, runs: int, tree: RandTree,
               ceiling: int | None = DEFAULT_CEILING) -> np.ndarray:
    """Independent realizations of ``U_{n,M}(t, x)`` at root indices ``(0,), (1,), ...``."""
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    if ceiling is not None and runs * node_count(n, M) > ceiling:
        raise ResourceLimitError(
            f"{runs} runs of U_(n={n}, M={M}) exceed the ceiling of {ceiling} evaluations"
        )
    return np.array(
        [evaluate(prob, MlpParams(n, M, t, (r,)), x, tree, ceiling=None) for r in range(runs)]
    )


def mc_rmse(prob: Problem, n: int, M: int, t: float, x, runs: int, reference: float,
            tree: RandTree, ceiling: int | None = DEFAULT_CEILING) -> float:
    """Root-mean-square distance of ``runs`` independent realizations from ``reference``."""
    if not math.isfinite(reference):
        raise ValueError("reference must be finite")
    samples = mc_samples(prob, n, M, t, x, runs, tree, ceiling)
    return float(np.sqrt(np.mean((samples - reference) ** 2)))


def mlp_error_bound(prob: Problem, N: int, M: int, delta: float, x, gaussian_moment: float) -> float:
    """Upper bound on the L2 error of ``U_{N,M}(0, x)``.

    ``delta`` is the perturbation size of ``(f, g)`` in force and
    ``gaussian_moment`` stands for ``(E ||W_T||^{pq})^{1/(pq)}``.
    """
    if N < 1 or M < 1:
        raise ValueError("N and M must be >= 1")
    if delta < 0:
        raise ValueError("delta must be >= 0")
    L, T, q, p, B = prob.L, prob.T, prob.q, prob.p, prob.B
    xnorm = float(np.linalg.norm(np.asarray(x, dtype=np.float64)))
    stability = (math.exp(L * T) * (T + 1)) ** (q + 1) * (B**q + 1)
    mlp_term = math.exp(M / 2) * (1 + 2 * L * T) ** N / M ** (N / 2)
    return stability * (delta + mlp_term) * (1 + xnorm + gaussian_moment) ** (p * q)


def gaussian_moment_bound(d: int, p: float, q: float, T: float) -> float:
    """Bound on ``(E ||W_T||^{pq})^{1/(pq)}`` for a ``d``-dimensional Brownian motion."""
    if d < 1 or p < 1 or q < 1 or not T > 0:
        raise ValueError("need d, p, q >= 1 and T > 0")
    return math.sqrt(2 * T * (d / 2 + p * q - 1))


def sizing_constant(prob: Problem, measure_moment: float) -> float:
    """The constant ``c_d`` that scales both error contributions.

    ``measure_moment`` is ``(int ||x||^{2pq} nu_d(dx))^{1/(2pq)}`` for the
    measure on which the error is integrated; ``prob.B`` is the
    dimension-free growth constant, multiplied here by ``d^p``.
    """
    L, T, q, p, d = prob.L, prob.T, prob.q, prob.p, prob.d
    Bd = prob.B * d**p
    gm = gaussian_moment_bound(d, p, q, T)
    return (math.exp(L * T) * (T + 1)) ** (q + 1) * (Bd**q + 1) * (1 + measure_moment + gm) ** (p * q)


def sizing_rules(prob: Problem, eps: float, c_d: float) -> tuple[int, float]:
    """Level ``N`` and perturbation size ``delta`` for target accuracy ``eps``.

    ``N`` is the least ``n >= 2`` with ``c_d (sqrt(e)(1 + 2LT)/sqrt(n))^n <= eps/2``;
    ``delta = eps / (4 B d^p c_d)``.
    """
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    if c_d < 1:
        raise ValueError(f"c_d must be >= 1, got {c_d}")
    log_base = 0.5 + math.log1p(2 * prob.L * prob.T)
    log_target = math.log(eps / 2) - math.log(c_d)
    n = 2
    while n * (log_base - 0.5 * math.log(n)) > log_target:
        n += 1
    delta = eps / (4 * prob.B * prob.d**prob.p * c_d)
    return n, delta
