"""
Shared fixtures: bundled models and a few small hand-written ones.
"""

from pathlib import Path

import pytest

from momentsdp.models import load_model, loads_model

DATA_DIR = Path(__file__).resolve().parent.parent / 'data'

TWO_STATE_CHAIN = """
[vars]
names = x

[jump.1]
map.x = x + 1
intensity = 1 - x

[jump.2]
map.x = x - 1
intensity = x

[cost]
running = 0
terminal = x

[initial]
kind = dirac
point = 0

[horizon]
T = 1
steps = 100
"""

DECAY = """
[vars]
names = x

[drift]
x = -x

[cost]
running = x^2
terminal = 0

[initial]
kind = dirac
point = 1

[horizon]
T = 1
"""

BROWNIAN = """
[vars]
names = x

[diffusion]
x.1 = 1

[cost]
running = 0
terminal = x^2

[initial]
kind = dirac
point = 0

[horizon]
T = 1
steps = 10
"""

INFEASIBLE = """
# E[x] >= 2 and E[x] <= 1 cannot both hold
[vars]
names = x

[constraints]
above = x - 2
below = 1 - x

[cost]
running = 0
terminal = x

[initial]
kind = dirac
point = 0

[horizon]
T = steady-state
"""

CUBIC_DRIFT = """
[vars]
names = x

[drift]
x = -x^3

[diffusion]
x.1 = 1

[cost]
running = 0
terminal = x^2

[initial]
kind = dirac
point = 0

[horizon]
T = 1
"""


def bundled(name: str):
    return load_model(DATA_DIR / f"{name}.model")


@pytest.fixture
def logistic():
    return bundled('logistic')


@pytest.fixture
def lqr():
    return bundled('lqr')


@pytest.fixture
def fishery():
    return bundled('fishery')


@pytest.fixture
def jump_rate():
    return bundled('jump_rate')


@pytest.fixture
def sampled_feedback():
    return bundled('sampled_feedback')


@pytest.fixture
def two_state_chain():
    return loads_model(TWO_STATE_CHAIN, name='two_state')


@pytest.fixture
def decay():
    return loads_model(DECAY, name='decay')


@pytest.fixture
def brownian():
    return loads_model(BROWNIAN, name='brownian')


@pytest.fixture
def write_model(tmp_path):
    """Write model text under tmp_path and return the file path."""
    def write(text: str, name: str = 'model') -> Path:
        path = tmp_path / f"{name}.model"
        path.write_text(text, encoding='utf-8')
        return path

    return write
