import warnings

import numpy as np
import pytest
import torch

warnings.filterwarnings("ignore", message="Converting a tensor with requires_grad")

torch.set_num_threads(2)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(autouse=True)
def _seed_torch():
    torch.manual_seed(0)
