"""Layer-dimension vectors and the operators that mirror network assembly.

A dimension vector ``(k_0, k_1, ..., k_{H+1})`` records the input width,
the ``H >= 1`` hidden widths and the output width of a ReLU network.
``odot`` is the dimension-level image of composition, ``boxplus`` the image
of a parallel sum, and ``neutral(n)`` the shape of a scalar identity network
with ``n - 2`` hidden layers.
"""

from __future__ import annotations

from functools import reduce
from typing import Iterable, Sequence


class ShapeError(ValueError):
    """Raised when dimension vectors or weight shapes do not fit together."""


class DimVector(tuple):
    """Immutable tuple of positive layer widths, length at least 3."""

    __slots__ = ()

    def __new__(cls, dims: Iterable[int]):
        values = tuple(int(k) for k in dims)
        if len(values) < 3:
            raise ShapeError(f"dimension vector needs length >= 3, got {values}")
        if any(k < 1 for k in values):
            raise ShapeError(f"dimension vector entries must be >= 1, got {values}")
        return super().__new__(cls, values)

    def __repr__(self) -> str:
        return f"DimVector{tuple(self)}"

    @property
    def hidden(self) -> tuple[int, ...]:
        return tuple(self[1:-1])

    @property
    def n_layers(self) -> int:
        """Number of affine layers, ``H + 1``."""
        return len(self) - 1

    def supnorm(self) -> int:
        return max(self)


def odot(alpha: Sequence[int], beta: Sequence[int]) -> DimVector:
    """Dimensions of ``f o g`` where ``f`` has shape ``alpha`` and ``g`` shape ``beta``.

    ``beta`` comes first; its output width and ``alpha``'s input width merge
    into a single hidden layer of width ``beta[-1] + alpha[0]``.
    """
    alpha, beta = DimVector(alpha), DimVector(beta)
    return DimVector(beta[:-1] + (beta[-1] + alpha[0],) + alpha[1:])


def boxplus(alpha: Sequence[int], beta: Sequence[int]) -> DimVector:
    """Dimensions of a parallel sum: endpoints kept, hidden widths added."""
    alpha, beta = DimVector(alpha), DimVector(beta)
    if len(alpha) != len(beta):
        raise ShapeError(f"boxplus needs equal lengths, got {alpha} and {beta}")
    if alpha[0] != beta[0] or alpha[-1] != beta[-1]:
        raise ShapeError(f"boxplus needs matching endpoints, got {alpha} and {beta}")
    mid = tuple(a + b for a, b in zip(alpha[1:-1], beta[1:-1]))
    return DimVector((alpha[0],) + mid + (beta[-1],))


def boxplus_all(vectors: Iterable[Sequence[int]]) -> DimVector:
    """Left fold of ``boxplus`` over a nonempty collection."""
    vectors = [DimVector(v) for v in vectors]
    if not vectors:
        raise ShapeError("boxplus_all needs at least one vector")
    return reduce(boxplus, vectors)


def neutral(n: int) -> DimVector:
    """``(1, 2, ..., 2, 1)`` of total length ``n``."""
    if n < 3:
        raise ShapeError(f"neutral(n) needs n >= 3, got {n}")
    return DimVector((1,) + (2,) * (n - 2) + (1,))


def param_count(dims: Sequence[int]) -> int:
    """Weights plus biases of a dense network with these layer widths."""
    return sum(k * (k_prev + 1) for k_prev, k in zip(dims[:-1], dims[1:]))
