"""Shared test fixtures."""

import numpy as np
import pytest

from fd2k import nn


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def tiny_net(dims, output_activation="sigmoid", seed=0) -> nn.Mlp:
    return nn.init_mlp(dims, output_activation, seed)


def set_params(net: nn.Mlp, values) -> nn.Mlp:
    """Net with the flat parameter vector replaced by ``values``."""
    return net.with_flat(np.asarray(values, dtype=np.float64))
