import numpy as np
import pytest

from sheforge import ann
from sheforge.simulator import InverterConfig
from sheforge.solver import HarmonicSet, sweep_solutions

HSET = HarmonicSet((5, 7, 11))
TABLE_II = InverterConfig()


@pytest.fixture(scope="session")
def hset():
    return HSET


@pytest.fixture(scope="session")
def config():
    return TABLE_II


@pytest.fixture(scope="session")
def ann_sweep():
    """The surrogate's training sweep: m in [0.55, 0.92], step 0.005."""
    return sweep_solutions(0.55, 0.92, 0.005, HSET)


@pytest.fixture(scope="session")
def surrogate(ann_sweep):
    """Surrogate trained with every 5th row withheld; returns (model, held-out set)."""
    train, held = ann.holdout_split(ann_sweep, every=5)
    model = ann.init_mlp(ann.surrogate_layers(4), seed=0)
    model, _ = ann.train(model, train, ann.SURROGATE_EPOCHS, ann.SURROGATE_LR,
                         target_scaling=ann.SURROGATE_SCALING)
    return model, held


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
