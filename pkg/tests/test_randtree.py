import hashlib
import itertools
import struct

import numpy as np
import pytest
from scipy import special, stats

from picardnet.randtree import RandTree, as_index, brownian_increment, stream_key, time_point, uniform


def test_determinism():
    a, b = RandTree(7, 3), RandTree(7, 3)
    for theta in [(0,), (1, 2), (-3, 0, 5)]:
        assert a.uniform(theta) == b.uniform(theta)
        np.testing.assert_array_equal(a.gaussian(theta), b.gaussian(theta))
    assert RandTree(7).uniform((1,)) != RandTree(8).uniform((1,))


def test_frozen_values():
    # pins the stream construction across releases and platforms
    tree = RandTree(0, 2)
    assert [uniform(tree, (i,)) for i in range(3)] == [0.7172517114066893, 0.35254109840439696, 0.6675116787503426]
    np.testing.assert_array_equal(tree.gaussian((0, -1)), [-0.2537508554889024, 1.9340036128319622])


def test_construction_by_hand():
    # keyed BLAKE2b over tag, length-prefixed signed index and block counter
    seed, theta = 42, (3, -1, 7)
    msg = struct.pack("<Q", 3) + struct.pack("<3q", *theta)
    key = struct.pack("<Q", seed)
    word = struct.unpack("<Q", hashlib.blake2b(b"U" + msg + struct.pack("<Q", 0), key=key).digest()[:8])[0]
    assert RandTree(seed).uniform(theta) == (word >> 11) / 2.0**53
    words = struct.unpack("<8Q", hashlib.blake2b(b"G" + msg + struct.pack("<Q", 1), key=key).digest())
    z = RandTree(seed, 10).gaussian(theta)
    assert z[9] == special.ndtri(((words[1] >> 11) + 0.5) / 2.0**53)


def test_index_encoding():
    assert as_index(4) == (4,)
    with pytest.raises(ValueError):
        as_index(())
    keys = set()
    for length in range(1, 5):
        for theta in itertools.product(range(-2, 3), repeat=length):
            keys.add(stream_key(theta))
    assert len(keys) == sum(5**k for k in range(1, 5))
    assert stream_key((1,)) != stream_key((1, 0))


def test_stream_separation():
    tree = RandTree(11)
    a = {tree.uniform((i,)) for i in range(10_000)}
    b = {tree.uniform((i, 1)) for i in range(10_000)}
    assert len(a) == 10_000 and len(b) == 10_000
    assert not a & b


def test_long_paths_injective():
    tree = RandTree(5)
    paths = [tuple(np.random.default_rng(i).integers(-3, 4, size=12)) for i in range(2000)]
    distinct = set(paths)
    assert len({tree.uniform(p) for p in distinct}) == len(distinct)


def test_uniform_distribution():
    tree = RandTree(1)
    u = np.array([tree.uniform((i,)) for i in range(100_000)])
    assert abs(u.mean() - 0.5) < 0.01
    assert 0.0 <= u.min() and u.max() < 1.0
    assert stats.kstest(u[:10_000], "uniform").pvalue > 0.01


def test_gaussian_distribution():
    tree = RandTree(2, 1)
    z = np.array([tree.gaussian((i,))[0] for i in range(100_000)])
    assert abs(z.var() - 1.0) < 0.02
    assert stats.kstest(z[:10_000], "norm").pvalue > 0.01
    assert np.all(np.isfinite(z))


def test_gaussian_components_independent():
    tree = RandTree(3, 4)
    z = np.array([tree.gaussian((i,)) for i in range(20_000)])
    corr = np.corrcoef(z.T)
    assert np.max(np.abs(corr - np.eye(4))) < 0.05


def test_time_point():
    tree = RandTree(4)
    assert time_point(tree, (9,), 2.0, 2.0) == 2.0
    draws = np.array([tree.time_point((i,), 0.0, 3.0) for i in range(10_000)])
    assert abs(draws.mean() - 1.5) < 0.03
    assert tree.time_point((5,), 1.0, 3.0) == 1.0 + 2.0 * tree.uniform((5,))
    with pytest.raises(ValueError):
        tree.time_point((1,), 4.0, 3.0)
    with pytest.raises(ValueError):
        tree.time_point((1,), -0.1, 3.0)


def test_brownian_increment():
    tree = RandTree(6, 3)
    np.testing.assert_array_equal(brownian_increment(tree, (1,), 0.0), np.zeros(3))
    np.testing.assert_array_equal(tree.brownian_increment((1,), 4.0), 2 * tree.brownian_increment((1,), 1.0))
    with pytest.raises(ValueError):
        tree.brownian_increment((1,), -1e-9)


def test_dimension_prefix():
    # a d-dimensional draw extends the lower-dimensional one
    np.testing.assert_array_equal(RandTree(0, 10).gaussian((3,))[:4], RandTree(0, 4).gaussian((3,)))
