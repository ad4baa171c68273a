import numpy as np
import pytest
from hypothesis import strategies as st

from markov_paging.chain import random_chain


@st.composite
def chain_specs(draw, n_min=2, n_max=6, floor=0.05):
    """Random validated chains, reproducible through the drawn seed."""
    n = draw(st.integers(min_value=n_min, max_value=n_max))
    seed = draw(st.integers(min_value=0, max_value=2**31 - 1))
    return random_chain(n, seed, floor=floor)


@pytest.fixture
def warmup_chain():
    from markov_paging.chain import build_lb_chain

    return build_lb_chain(0.1, 0.05)
