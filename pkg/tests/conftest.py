import numpy as np
import pytest

from cdasim.presets import THREE_NODE, TWO_NODE
from cdasim.waveform import WaveformSpec


@pytest.fixture
def two_node_spec():
    return TWO_NODE.spec


@pytest.fixture
def three_node_spec():
    return THREE_NODE.spec


@pytest.fixture
def short_spec():
    # single 100 us pulse; keeps Monte-Carlo ranging loops cheap
    return WaveformSpec(n_pulses=1, f1=0.5e6, delta_f_step=11e6, duty_cycle=0.5, pulse_period=100e-6)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
