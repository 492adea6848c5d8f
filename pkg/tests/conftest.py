"""Shared fixtures: technologies, the cached dataset and reference model.

The dataset directory resolves in this order:
  1. $XBARSIM_DATA_DIR (point it at real MNIST IDX files to run against
     MNIST instead of the synthetic digits),
  2. the repo-local ./data directory, generated on first use.

The reference model is the committed weight file when running on the
default synthetic dataset, otherwise it is retrained (seed 42) so that
model and data always match.
"""
import os
from pathlib import Path

import pytest

from xbarsim.devices import BitcellType, FabricConfig, technology_by_name
from xbarsim.digits import ensure_dataset
from xbarsim.mnist import load_split
from xbarsim.training import TrainSpec, load_model, digital_accuracy, train

REPO_ROOT = Path(__file__).resolve().parent.parent
MODEL_FILE = REPO_ROOT / "models" / "reference-400x120x84x10.imacw"


def _data_dir() -> Path:
    env = os.environ.get("XBARSIM_DATA_DIR")
    if env:
        return Path(env)
    return ensure_dataset(REPO_ROOT / "data")


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return _data_dir()


@pytest.fixture(scope="session")
def train_data(data_dir):
    return load_split(data_dir, "train")


@pytest.fixture(scope="session")
def test_data(data_dir):
    return load_split(data_dir, "test")


@pytest.fixture(scope="session")
def reference_model(train_data, test_data):
    if not os.environ.get("XBARSIM_DATA_DIR") and MODEL_FILE.is_file():
        model = load_model(MODEL_FILE)
    else:
        model = train(train_data, test_data, TrainSpec(seed=42))
    assert digital_accuracy(model, test_data) >= 0.85, \
        "reference model does not match the dataset"
    return model


@pytest.fixture
def mram():
    return technology_by_name("MRAM")


@pytest.fixture
def cbram():
    return technology_by_name("CBRAM")


@pytest.fixture
def pcm():
    return technology_by_name("PCM")


@pytest.fixture
def fabric32(mram):
    return FabricConfig(32, 32, mram, BitcellType.ZERO_T_1R)
