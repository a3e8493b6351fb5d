import numpy as np
import pytest

from energysplit.data import Dataset, synth
from energysplit.net import Network, TrainHyper, init_network, loss, train_to_plateau


def random_net(rng, sizes=None, activation=None, loss_head=None):
    if sizes is None:
        depth = rng.integers(1, 3)
        sizes = [int(rng.integers(1, 5))] + [int(rng.integers(1, 5)) for _ in range(depth)] + [int(rng.integers(1, 4))]
    activation = activation or rng.choice(["tanh", "sigmoid", "softplus"])
    loss_head = loss_head or rng.choice(["softmax_ce", "mse"])
    if loss_head == "softmax_ce" and sizes[-1] < 2:
        sizes[-1] = 2
    net = init_network(sizes, str(activation), str(loss_head), seed=int(rng.integers(1 << 30)))
    # widen the weights so activations leave the linear regime
    return Network([2.0 * w for w in net.weights], net.activation, net.loss_head)


def random_batch(rng, net: Network, n=7):
    x = rng.normal(size=(n, net.n_inputs))
    if net.loss_head == "softmax_ce":
        y = rng.integers(0, net.n_outputs, size=n)
    else:
        y = rng.normal(size=(n, net.n_outputs))
    return x, y


def fd_grads(net: Network, x, y, step=1e-5):
    out = []
    for w in net.weights:
        g = np.zeros_like(w)
        for idx in np.ndindex(*w.shape):
            old = w[idx]
            w[idx] = old + step
            up = loss(net, x, y)
            w[idx] = old - step
            down = loss(net, x, y)
            w[idx] = old
            g[idx] = (up - down) / (2 * step)
        out.append(g)
    return out


def rel_err(a, b):
    return np.max(np.abs(a - b) / np.maximum(1.0, np.maximum(np.abs(a), np.abs(b))))


@pytest.fixture(scope="session")
def moons():
    return synth("two_moons", 1000, 0.1, seed=0)


@pytest.fixture(scope="session")
def moons_plateau(moons):
    """Seed 2-2-2 network trained to its parametric plateau (underfits two moons)."""
    net, _ = train_to_plateau(init_network([2, 2, 2], seed=0), moons, TrainHyper(seed=0))
    return net


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def dataset(x, y, n_classes=None) -> Dataset:
    return Dataset.from_arrays(x, y, n_classes)
