from fractions import Fraction

import pytest
from hypothesis import settings
from hypothesis import strategies as st

from kahlerkit.series import BiSeries

settings.register_profile("default", max_examples=30, deadline=None)
settings.load_profile("default")

small_fraction = st.fractions(min_value=-3, max_value=3, max_denominator=6)


@st.composite
def series_strategy(draw, dim=None, order=4, holomorphic=False, real=False, no_constant=False):
    n = draw(st.integers(1, 2)) if dim is None else dim
    nterms = draw(st.integers(0, 6))
    terms = {}
    for _ in range(nterms):
        j = draw(st.lists(st.integers(0, order), min_size=n, max_size=n))
        k = [0] * n if holomorphic else draw(st.lists(st.integers(0, order), min_size=n, max_size=n))
        if sum(j) + sum(k) > order or (no_constant and sum(j) + sum(k) == 0):
            continue
        terms[tuple(j) + tuple(k)] = draw(small_fraction)
    s = BiSeries(n, order, terms)
    if real:
        s = s + s.conj()
    return s


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(1234)


def rational(x):
    return Fraction(x)
