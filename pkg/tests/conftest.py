import random

import pytest

from rnatreedit.tree_model import Label

# Alphabets used across the DP/oracle tests: two node labels with well
# separated sizes plus a single edge label keeps enumerations small while
# exercising size-aware costs.
NODE_LABELS = [Label("h", (1,)), Label("i", (9,))]
EDGE_LABELS = [Label("x", (2,))]


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)
