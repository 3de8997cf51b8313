"""Deterministic randomness keyed by multi-indices.

Every multi-index ``theta`` (a nonempty tuple of integers, entries may be
negative) owns one uniform variate and one standard Gaussian vector of the
spatial dimension.  Draws are produced by a counter-based pseudorandom
function: BLAKE2b keyed with the master seed, applied to a domain tag, the
length-prefixed index and a block counter.  No state is carried between
calls, so draws are identical across runs, platforms and worker threads.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.special import ndtri

__all__ = [
    "MultiIndex",
    "RandTree",
    "as_index",
    "stream_key",
    "uniform",
    "gaussian",
    "time_point",
    "brownian_increment",
]

MultiIndex = tuple

_WORDS_PER_BLOCK = 8  # a 64-byte digest holds eight 64-bit words
_TAG_UNIFORM = b"U"
_TAG_GAUSS = b"G"
_INV_2_53 = 1.0 / (1 << 53)


def as_index(theta) -> MultiIndex:
    if isinstance(theta, (int, np.integer)):
        theta = (theta,)
    theta = tuple(int(i) for i in theta)
    if not theta:
        raise ValueError("multi-index must be nonempty")
    return theta


def stream_key(theta: Iterable[int]) -> bytes:
    """Injective byte encoding of a multi-index: length, then signed 64-bit entries."""
    theta = as_index(theta)
    return struct.pack(f"<Q{len(theta)}q", len(theta), *theta)


@dataclass(frozen=True)
class RandTree:
    """Randomness source for spatial dimension ``d`` under ``master_seed``."""

    master_seed: int = 0
    d: int = 1

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d}")

    def _words(self, tag: bytes, theta, count: int) -> np.ndarray:
        key = struct.pack("<Q", self.master_seed % (1 << 64))
        message = stream_key(theta)
        words = []
        for block in range(-(-count // _WORDS_PER_BLOCK)):
            h = hashlib.blake2b(tag + message + struct.pack("<Q", block), key=key, digest_size=64)
            words.extend(struct.unpack("<8Q", h.digest()))
        return np.array(words[:count], dtype=np.uint64)

    def uniform(self, theta) -> float:
        (word,) = self._words(_TAG_UNIFORM, theta, 1)
        return float(int(word) >> 11) * _INV_2_53

    def gaussian(self, theta) -> np.ndarray:
        words = self._words(_TAG_GAUSS, theta, self.d)
        u = ((words >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53
        return ndtri(u)

    def time_point(self, theta, t: float, T: float) -> float:
        if not 0.0 <= t <= T:
            raise ValueError(f"time {t} outside [0, {T}]")
        return t + (T - t) * self.uniform(theta)

    def brownian_increment(self, theta, dt: float) -> np.ndarray:
        if dt < 0:
            raise ValueError(f"time step must be >= 0, got {dt}")
        return np.sqrt(dt) * self.gaussian(theta)


def uniform(tree: RandTree, theta) -> float:
    return tree.uniform(theta)


def gaussian(tree: RandTree, theta) -> np.ndarray:
    return tree.gaussian(theta)


def time_point(tree: RandTree, theta, t: float, T: float) -> float:
    return tree.time_point(theta, t, T)


def brownian_increment(tree: RandTree, theta, dt: float) -> np.ndarray:
    return tree.brownian_increment(theta, dt)
