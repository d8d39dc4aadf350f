import numpy as np
import pytest

from abruptrl.inventory import DemandModel, InventoryParams, exact_inventory_kernel
from abruptrl.mdp import RngStream, TabularMDP


@pytest.fixture(scope="session")
def params():
    return InventoryParams()


@pytest.fixture(scope="session")
def inv4(params):
    return exact_inventory_kernel(params, DemandModel(4.0))


@pytest.fixture(scope="session")
def inv18(params):
    return exact_inventory_kernel(params, DemandModel(1.8))


@pytest.fixture
def rng():
    return RngStream(12345)


class FixedDraws:
    """Stand-in stream that replays a given list of uniforms."""

    def __init__(self, values):
        self.values = list(values)

    def uniform(self):
        return self.values.pop(0)

    def uniforms(self, size):
        n = int(np.prod(size))
        out = np.array([self.values.pop(0) for _ in range(n)])
        return out.reshape(size)


def bernoulli_mdp(p):
    """Two states, one action; next state is 1 with probability p from either state."""
    row = [1 - p, p]
    return TabularMDP(np.array([[row], [row]]), np.zeros((2, 1, 2)))


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(module.RESULTS):
        title, ok, detail = module.RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}  [{detail}]")
