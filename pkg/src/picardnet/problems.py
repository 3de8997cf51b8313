"""Builtin problems, terminal-value network families and reference solutions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .mlp import MlpParams, Problem, evaluate
from .pwl import LipschitzFn
from .randtree import RandTree
from .relu import Network

__all__ = [
    "SCALAR_FUNCTIONS",
    "scalar_function",
    "GFamily",
    "constant_family",
    "affine_family",
    "ReferenceOracle",
    "ode_reference",
    "mlp_reference",
    "BUILTIN_PROBLEMS",
    "Builtin",
    "make_builtin",
]


def _const(value):
    return lambda v: np.full(np.shape(v), value, dtype=np.float64)


SCALAR_FUNCTIONS: dict[str, Callable[..., LipschitzFn]] = {
    "sin": lambda: LipschitzFn(np.sin, 1.0, 0.0, "sin"),
    "abs": lambda: LipschitzFn(np.abs, 1.0, 0.0, "abs"),
    "identity": lambda: LipschitzFn(lambda v: np.asarray(v, dtype=np.float64) * 1.0, 1.0, 0.0, "identity"),
    "clip": lambda: LipschitzFn(lambda v: np.clip(v, -1.0, 1.0), 1.0, 0.0, "clip"),
    "tanh": lambda: LipschitzFn(np.tanh, 1.0, 0.0, "tanh"),
    "zero": lambda: LipschitzFn(_const(0.0), 0.0, 0.0, "zero"),
    "const": lambda value=0.7: LipschitzFn(_const(value), 0.0, abs(value), "const"),
}


def scalar_function(name: str, **kwargs) -> LipschitzFn:
    try:
        factory = SCALAR_FUNCTIONS[name]
    except KeyError:
        raise KeyError(f"unknown scalar function {name!r}; choose from {sorted(SCALAR_FUNCTIONS)}")
    return factory(**kwargs)


@dataclass(frozen=True)
class GFamily:
    """Exactly realizable terminal values with their growth and size constants.

    ``B``, ``p`` bound ``|g(x)| <= B d^p (1 + |x|)^p``; the networks satisfy
    ``width <= B d^p eps^-alpha`` and ``length <= B d^p eps^-beta`` for every
    ``eps`` because they do not depend on ``eps`` at all.
    """

    name: str
    B: float
    p: int
    alpha: float
    beta: float
    network: Callable[[int], Network]
    function: Callable[[int], Callable]


def constant_family(c: float) -> GFamily:
    def network(d):
        return Network([(np.zeros((1, d)), np.zeros(1)), (np.zeros((1, 1)), np.array([c]))])

    def function(d):
        return lambda x: np.full(np.shape(x)[:-1], c, dtype=np.float64)

    return GFamily("constant", max(3.0, abs(c)), 1, 2.0, 0.0, network, function)


def affine_family(slope: float, offset: float) -> GFamily:
    """``g(x) = slope * sum(x) + offset``, realized as ``relu(a.x+b) - relu(-(a.x+b))``."""

    def network(d):
        a = np.full((1, d), slope)
        return Network(
            [(np.vstack([a, -a]), np.array([offset, -offset])), (np.array([[1.0, -1.0]]), np.zeros(1))]
        )

    def function(d):
        return lambda x: slope * np.sum(x, axis=-1) + offset

    # |slope * sum(x)| <= |slope| sqrt(d) |x| <= |slope| d |x|
    return GFamily("affine", max(3.0, abs(slope) + abs(offset)), 1, 2.0, 0.0, network, function)


@dataclass(frozen=True)
class ReferenceOracle:
    kind: str  # "closed-form" | "ode" | "mlp"
    fn: Callable[[float, np.ndarray], float]

    def __call__(self, t: float, x) -> float:
        return float(self.fn(t, np.asarray(x, dtype=np.float64)))


def ode_reference(f: Callable, c: float, T: float, rtol: float = 1e-12, atol: float = 1e-12) -> ReferenceOracle:
    """Solution of ``u' = -f(u)``, ``u(T) = c``: the fixed point for constant terminal values."""

    def fn(t, x):
        if t == T:
            return c
        sol = solve_ivp(lambda s, u: -np.asarray(f(u)), (T, t), [c], method="DOP853", rtol=rtol, atol=atol)
        if not sol.success:
            raise RuntimeError(f"reference integration failed: {sol.message}")
        return sol.y[0, -1]

    return ReferenceOracle("ode", fn)


def mlp_reference(prob: Problem, n: int, M: int, runs: int, tree: RandTree) -> ReferenceOracle:
    """Average of ``runs`` high-level realizations, rooted away from the default roots."""

    def fn(t, x):
        vals = [evaluate(prob, MlpParams(n, M, t, (-1, r)), x, tree, ceiling=None) for r in range(runs)]
        return float(np.mean(vals))

    return ReferenceOracle("mlp", fn)


@dataclass(frozen=True)
class Builtin:
    problem: Problem
    reference: ReferenceOracle
    family: GFamily | None


def _linear_norm2(d, T=1.0, q=2.0, **_):
    f = scalar_function("zero")
    prob = Problem(d, T, f, lambda x: np.sum(np.square(x), axis=-1), B=1.0, p=2, q=q, name="linear-norm2")
    ref = ReferenceOracle("closed-form", lambda t, x: float(np.dot(x, x)) + d * (T - t))
    return Builtin(prob, ref, None)


def _ode_exp(d, T=1.0, c=1.0, q=2.0, **_):
    family = constant_family(c)
    f = scalar_function("identity")
    prob = Problem(d, T, f, family.function(d), B=family.B, p=family.p, q=q, name="ode-exp")
    ref = ReferenceOracle("closed-form", lambda t, x: c * math.exp(T - t))
    return Builtin(prob, ref, family)


def _ode_sin(d, T=1.0, c=0.3, q=2.0, **_):
    family = constant_family(c)
    f = scalar_function("sin")
    prob = Problem(d, T, f, family.function(d), B=family.B, p=family.p, q=q, name="ode-sin")
    return Builtin(prob, ode_reference(np.sin, c, T), family)


BUILTIN_PROBLEMS = {
    "linear-norm2": _linear_norm2,
    "ode-exp": _ode_exp,
    "ode-sin": _ode_sin,
}


def make_builtin(name: str, d: int, **params) -> Builtin:
    """Instantiate a named problem in dimension ``d``; ``params`` override T, c, q."""
    try:
        factory = BUILTIN_PROBLEMS[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; choose from {sorted(BUILTIN_PROBLEMS)}")
    return factory(d, **params)
