import random

import pytest
from hypothesis import settings, strategies as st

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

LABELS = "abcdef"


def label_traces(max_len: int = 8, alphabet: str = LABELS):
    return st.lists(st.sampled_from(alphabet), min_size=1, max_size=max_len).map(tuple)


@pytest.fixture
def rng():
    return random.Random(1234)
