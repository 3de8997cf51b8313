import json

import numpy as np
import pytest
from conftest import random_hidden, random_net, rel_err

from picardnet import relu
from picardnet.dims import DimVector, ShapeError, boxplus_all, odot
from picardnet.relu import (
    Network,
    affine_wrap,
    compose,
    extend_depth,
    identity_net,
    parallel_sum,
    param_count,
    realize,
    zero_net,
)


def test_realize_hand_example():
    net = Network([([[2.0]], [1.0]), ([[1.0]], [0.0])])
    assert realize(net, 3.0)[0] == 7.0
    assert realize(net, -3.0)[0] == 0.0


def test_realize_shapes():
    net = random_net(np.random.default_rng(0), 3, 2, [4])
    x = np.arange(6.0).reshape(2, 3)
    assert realize(net, x[0]).shape == (2,)
    batch = realize(net, x)
    assert batch.shape == (2, 2)
    np.testing.assert_array_equal(batch[1], realize(net, x[1]))
    with pytest.raises(ShapeError):
        realize(net, np.zeros(4))


def test_network_rejects_bad_chain():
    with pytest.raises(ShapeError):
        Network([(np.ones((2, 1)), np.zeros(2)), (np.ones((1, 3)), np.zeros(1))])
    with pytest.raises(ValueError):
        Network([(np.ones((1, 1)), np.zeros(1))])


@pytest.mark.parametrize("H", [1, 2, 5])
def test_identity_net(H):
    net = identity_net(H)
    assert net.dims == DimVector([1, *[2] * H, 1])
    for x in (-4.2, -2.5, 0.0, 3.7):
        assert realize(net, x)[0] == x


@pytest.mark.parametrize("d, layers", [(1, 3), (5, 3), (1, 7), (5, 7)])
def test_zero_net(rng, d, layers):
    net = zero_net(d, 1, layers)
    assert net.n_layers == layers
    assert np.all(realize(net, rng.normal(size=(20, d))) == 0)


def test_dims_and_param_count():
    assert identity_net(1).dims == (1, 2, 1)
    net = random_net(np.random.default_rng(1), 1, 1, [4, 7])
    assert net.dims == (1, 4, 7, 1)
    assert param_count(random_net(np.random.default_rng(2), 3, 2, [5, 4])) == 54


def test_affine_wrap_hand_example():
    net = affine_wrap(identity_net(1), 2.0, [3.0], [1.0])
    assert realize(net, 0.0)[0] == 8.0


def test_affine_wrap_identity_transform(rng):
    net = random_net(rng, 3, 2, [5, 4])
    wrapped = affine_wrap(net, 1.0)
    xs = rng.normal(size=(20, 3))
    np.testing.assert_array_equal(realize(wrapped, xs), realize(net, xs))
    assert wrapped.dims == net.dims


def test_affine_wrap_random(rng):
    for _ in range(20):
        d_in, d_out = rng.integers(1, 4, size=2)
        net = random_net(rng, d_in, d_out, random_hidden(rng))
        lam, b, a = rng.normal(), rng.normal(size=d_in), rng.normal(size=d_out)
        xs = rng.normal(size=(50, d_in))
        got = realize(affine_wrap(net, lam, b, a), xs)
        assert rel_err(got, lam * (realize(net, xs + b) + a)) <= 1e-12
    with pytest.raises(ShapeError):
        affine_wrap(net, 1.0, np.zeros(d_in + 1))


def test_compose_examples():
    both = compose(identity_net(1), identity_net(1))
    assert both.dims == (1, 2, 2, 2, 1)
    assert realize(both, -1.5)[0] == -1.5
    double = Network([([[2.0]], [0.0]), ([[1.0]], [0.0])])
    plus_one = affine_wrap(identity_net(1), 1.0, a=[1.0])
    assert realize(compose(double, plus_one), 2.0)[0] == 6.0


def test_compose_random(rng):
    for _ in range(20):
        d0, d1, d2 = rng.integers(1, 4, size=3)
        f = random_net(rng, d1, d2, random_hidden(rng))
        g = random_net(rng, d0, d1, random_hidden(rng))
        fg = compose(f, g)
        assert fg.dims == odot(f.dims, g.dims)
        xs = rng.normal(size=(50, d0))
        assert rel_err(realize(fg, xs), realize(f, realize(g, xs))) <= 1e-12
    with pytest.raises(ShapeError):
        compose(random_net(rng, 2, 1, [2]), random_net(rng, 1, 1, [2]))


def test_parallel_sum_single_term(rng):
    net = random_net(rng, 2, 1, [3, 3])
    xs = rng.normal(size=(20, 2))
    np.testing.assert_allclose(realize(parallel_sum([(1.0, net)]), xs), realize(net, xs), rtol=1e-14)


def test_parallel_sum_random(rng):
    for _ in range(20):
        d_in, d_out = rng.integers(1, 4, size=2)
        depth = int(rng.integers(1, 4))
        nets = [random_net(rng, d_in, d_out, rng.integers(1, 6, size=depth).tolist()) for _ in range(3)]
        hs = rng.normal(size=3)
        total = parallel_sum(list(zip(hs, nets)))
        assert total.dims == boxplus_all([n.dims for n in nets])
        xs = rng.normal(size=(50, d_in))
        expect = sum(h * realize(n, xs) for h, n in zip(hs, nets))
        assert rel_err(realize(total, xs), expect) <= 1e-12


def test_parallel_sum_rejects_mismatch(rng):
    with pytest.raises(ShapeError):
        parallel_sum([(1.0, random_net(rng, 1, 1, [2])), (1.0, random_net(rng, 1, 1, [2, 2]))])
    with pytest.raises(ShapeError):
        parallel_sum([(1.0, random_net(rng, 1, 1, [2])), (1.0, random_net(rng, 2, 1, [2]))])
    with pytest.raises(ValueError):
        parallel_sum([])


def test_extend_depth(rng):
    net = random_net(rng, 3, 1, [4])
    xs = rng.normal(size=(10, 3))
    assert extend_depth(net, 2) is net
    for target in (4, 5, 9):
        longer = extend_depth(net, target)
        assert longer.n_layers == target
        np.testing.assert_allclose(realize(longer, xs), realize(net, xs), rtol=1e-14)
    with pytest.raises(ValueError):
        extend_depth(net, 3)
    with pytest.raises(ValueError):
        extend_depth(net, 1)


def test_serialization_roundtrip(rng, tmp_path):
    net = random_net(rng, 3, 2, [5, 4])
    assert relu.loads(relu.dumps(net)) == net
    relu.save(net, tmp_path / "n.json")
    again = relu.load(tmp_path / "n.json")
    assert again == net
    xs = rng.normal(size=(5, 3))
    np.testing.assert_array_equal(realize(again, xs), realize(net, xs))
    doc = json.loads(relu.dumps(net))
    assert doc["dims"] == [3, 5, 4, 2]
    doc["dims"] = [3, 5, 5, 2]
    with pytest.raises(ShapeError):
        relu.from_dict(doc)
