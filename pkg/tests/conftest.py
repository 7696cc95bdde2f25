import numpy as np
import pytest

from oqgqsp.potentials import load_uracil_dataset
from oqgqsp.vibronic import build_model


@pytest.fixture(scope="session")
def dataset():
    return load_uracil_dataset()


@pytest.fixture(scope="session")
def morse_26_2(dataset):
    return dataset.diagonal_terms("nu26", "D2")


@pytest.fixture(scope="session")
def setup_a(dataset):
    return build_model(dataset, ["nu21", "nu26"], ["D1", "D3"])


@pytest.fixture(scope="session")
def setup_b(dataset):
    return build_model(dataset, ["nu21", "nu26"], ["D0", "D2"])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
