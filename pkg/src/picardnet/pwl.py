"""One-hidden-layer ReLU networks for clipped piecewise-linear interpolants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .relu import Network

__all__ = [
    "Grid",
    "LipschitzFn",
    "PWLFunction",
    "interp_values",
    "interp_net",
    "clipped_grid",
    "clipped_approx",
    "width_bound",
]


@dataclass(frozen=True)
class Grid:
    """Equispaced knots ``a + (b - a) n / N`` for ``n = 0..N``."""

    a: float
    b: float
    N: int

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError(f"grid needs b > a, got a={self.a}, b={self.b}")
        if self.N < 1:
            raise ValueError(f"grid needs N >= 1, got {self.N}")

    @property
    def points(self) -> np.ndarray:
        n = np.arange(self.N + 1, dtype=np.float64)
        pts = self.a + (self.b - self.a) * n / self.N
        pts[-1] = self.b
        return pts


@dataclass(frozen=True)
class LipschitzFn:
    """Scalar function with a known Lipschitz constant ``L`` and ``|f(0)|``."""

    fn: Callable
    L: float
    f0_abs: float = field(default=None)
    name: str = ""

    def __post_init__(self):
        if self.L < 0:
            raise ValueError(f"Lipschitz constant must be >= 0, got {self.L}")
        if self.f0_abs is None:
            object.__setattr__(self, "f0_abs", abs(float(self.fn(0.0))))

    def __call__(self, v):
        return self.fn(v)


@dataclass(frozen=True)
class PWLFunction:
    """Continuous interpolant through ``(knots, values)``, constant outside."""

    knots: np.ndarray
    values: np.ndarray
    slopes: np.ndarray

    def __call__(self, x):
        return np.interp(x, self.knots, self.values)


def interp_values(f: Callable, grid: Grid) -> PWLFunction:
    """Sample ``f`` at the knots and return the clipped linear interpolant."""
    knots = grid.points
    values = np.array([float(f(k)) for k in knots])
    slopes = np.diff(values) / np.diff(knots)
    return PWLFunction(knots, values, slopes)


def interp_net(f: Callable, grid: Grid) -> Network:
    """Network with dims ``(1, N+1, 1)`` realizing the clipped interpolant.

    Hidden unit ``k`` computes ``relu(x - xi_k)``; the output weights are the
    slope increments ``c_k = a_k - a_{k-1}`` with ``a_{-1} = a_N = 0``.
    """
    pwl = interp_values(f, grid)
    padded = np.concatenate([[0.0], pwl.slopes, [0.0]])
    c = np.diff(padded)
    n = grid.N + 1
    w1 = np.ones((n, 1))
    b1 = -pwl.knots
    w2 = c.reshape(1, n)
    b2 = np.array([pwl.values[0]])
    return Network([(w1, b1), (w2, b2)])


def clipped_grid(f: LipschitzFn, q: float, eps: float) -> Grid:
    """Grid ``[-R, R]`` with ``N`` cells sized so the weighted error is ``<= eps``.

    ``R`` solves ``(4L + 2|f(0)|) / R^(q-1) = eps`` and ``N`` is the least
    ``n >= 2`` with ``4 L R / n <= eps``.  When ``4L + 2|f(0)| = 0`` the
    function vanishes and the minimal grid ``R = 1, N = 2`` is used.
    """
    if not q > 1:
        raise ValueError(f"q must exceed 1, got {q}")
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    K = 4 * f.L + 2 * f.f0_abs
    if K == 0:
        return Grid(-1.0, 1.0, 2)
    R = (K / eps) ** (1.0 / (q - 1))
    if f.L == 0:
        return Grid(-R, R, 2)
    n = max(2, math.ceil(4 * f.L * R / eps))
    while n > 2 and 4 * f.L * R / (n - 1) <= eps:
        n -= 1
    while 4 * f.L * R / n > eps:
        n += 1
    return Grid(-R, R, n)


def clipped_approx(f: LipschitzFn, q: float, eps: float) -> Network:
    """ReLU network ``g`` with ``|f - g| <= eps (1 + |x|^q)`` and Lipschitz constant ``L``."""
    return interp_net(f, clipped_grid(f, q, eps))


def width_bound(f: LipschitzFn, q: float, eps: float) -> float:
    """Guaranteed bound on the hidden width of :func:`clipped_approx`."""
    K = f.L * (4 * f.L + 2 * f.f0_abs)
    return 16 * max(1.0, K ** (1.0 / (q - 1))) * eps ** (-q / (q - 1))
