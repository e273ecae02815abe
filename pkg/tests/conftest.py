import random

import pytest
from hypothesis import settings

settings.register_profile("suite", deadline=None, max_examples=60)
settings.load_profile("suite")


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xC0FFEE)
