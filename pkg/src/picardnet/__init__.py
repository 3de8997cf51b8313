"""Multilevel Picard approximations of semilinear heat equations and their
exact compilation into ReLU networks."""

from .dims import DimVector, ShapeError, boxplus, neutral, odot
from .mlp import MlpParams, Problem, ResourceLimitError, evaluate, node_count
from .randtree import RandTree
from .relu import Network, compose, identity_net, parallel_sum, realize

__all__ = [
    "DimVector",
    "ShapeError",
    "odot",
    "boxplus",
    "neutral",
    "Network",
    "realize",
    "identity_net",
    "compose",
    "parallel_sum",
    "RandTree",
    "Problem",
    "MlpParams",
    "evaluate",
    "node_count",
    "ResourceLimitError",
]

__version__ = "0.1.0"
