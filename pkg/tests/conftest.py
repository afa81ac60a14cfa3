import numpy as np
import pytest

from chemoconsume.config import parse_config

GAUSSIAN_32 = """\
[grid]
dims = 32, 32
extent = 1.0, 1.0

[scenario]
preset = gaussian

[scheme]
k = 0.01
m = 100
alpha = 0.1
s = 1

[run]
t_final = 1.0
"""

HOMOGENEOUS = """\
[grid]
dims = 3, 3

[scenario]
preset = homogeneous

[scheme]
k = 0.1
m = 10
alpha = 0.1
s = 1

[run]
t_final = 5.0
"""


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_config(text, **overrides):
    return parse_config(text, {k: str(v) for k, v in overrides.items()})
