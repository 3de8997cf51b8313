import numpy as np
import pytest

from picardnet.relu import Network


def random_net(rng, d_in, d_out, hidden):
    widths = [d_in, *hidden, d_out]
    return Network(
        (rng.normal(size=(k, j)), rng.normal(size=k)) for j, k in zip(widths, widths[1:])
    )


def random_hidden(rng, max_layers=3, max_width=6):
    return [int(w) for w in rng.integers(1, max_width + 1, size=rng.integers(1, max_layers + 1))]


def rel_err(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
