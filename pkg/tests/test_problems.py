import math

import numpy as np
import pytest

from picardnet.mlp import mc_samples
from picardnet.problems import (
    BUILTIN_PROBLEMS,
    affine_family,
    constant_family,
    make_builtin,
    mlp_reference,
    ode_reference,
    scalar_function,
)
from picardnet.randtree import RandTree
from picardnet.relu import realize


def test_scalar_functions():
    for name in ("sin", "abs", "identity", "clip", "tanh", "zero", "const"):
        f = scalar_function(name)
        v = np.linspace(-5, 5, 101)
        ratio = np.abs(np.diff(f(v))) / np.diff(v)
        assert np.all(ratio <= f.L + 1e-12)
        assert f.f0_abs == pytest.approx(abs(float(f(np.zeros(1))[0])))
    with pytest.raises(KeyError):
        scalar_function("cosh")


@pytest.mark.parametrize("d", [1, 3, 8])
def test_families_realize_their_functions(d):
    xs = np.random.default_rng(d).normal(size=(30, d))
    for fam in (constant_family(0.7), constant_family(-4.0), affine_family(0.5, -1.0)):
        net = fam.network(d)
        np.testing.assert_allclose(realize(net, xs)[:, 0], fam.function(d)(xs), rtol=1e-14, atol=1e-14)
        growth = fam.B * d**fam.p * (1 + np.linalg.norm(xs, axis=1)) ** fam.p
        assert np.all(np.abs(fam.function(d)(xs)) <= growth)


def test_ode_reference_against_closed_form():
    ref = ode_reference(lambda u: u, 1.0, 1.0)
    assert ref(0.0, np.zeros(2)) == pytest.approx(math.e, rel=1e-10)
    assert ref(1.0, np.zeros(2)) == 1.0
    # u' = -u^2 backwards from u(T) = c gives u(t) = c / (1 - c (T - t))
    quad = ode_reference(lambda u: u**2, 0.5, 1.0)
    assert quad(0.0, np.zeros(1)) == pytest.approx(0.5 / (1 - 0.5), rel=1e-10)


def test_builtin_references():
    lin = make_builtin("linear-norm2", 2)
    assert lin.reference(0.0, np.zeros(2)) == 2.0
    assert lin.reference(0.5, np.array([1.0, 1.0])) == 3.0
    exp = make_builtin("ode-exp", 4)
    assert exp.reference(0.0, np.ones(4)) == pytest.approx(math.e, rel=1e-15)
    assert make_builtin("ode-exp", 1, T=0.25, c=2.0).reference(0.0, np.zeros(1)) == pytest.approx(2 * math.exp(0.25))
    sin = make_builtin("ode-sin", 1)
    assert sin.reference.kind == "ode"
    for name in BUILTIN_PROBLEMS:
        b = make_builtin(name, 3)
        b.problem.check_assumptions(rng=1)
    with pytest.raises(KeyError):
        make_builtin("heat", 1)


def test_ode_sin_closed_form():
    # u' = -sin(u) backwards from u(T) = c: tan(u/2) = tan(c/2) e^(T - t)
    b = make_builtin("ode-sin", 1)
    for t in (0.0, 0.4, 0.9):
        exact = 2 * math.atan(math.tan(0.15) * math.exp(1.0 - t))
        assert b.reference(t, np.zeros(1)) == pytest.approx(exact, rel=1e-10)


def test_ode_sin_mlp_converges():
    b = make_builtin("ode-sin", 1)
    tree = RandTree(0, 1)
    ref = b.reference(0.0, np.zeros(1))
    rmse = []
    for k in (1, 3):
        samples = mc_samples(b.problem, k, k, 0.0, np.zeros(1), 40, tree, ceiling=None)
        rmse.append(np.sqrt(np.mean((samples - ref) ** 2)))
    assert rmse[1] < rmse[0]
    high = mlp_reference(b.problem, 3, 3, 10, tree)
    assert abs(high(0.0, np.zeros(1)) - ref) < 0.1
