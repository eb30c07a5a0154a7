"""Hypothesis strategies and random generators for packets."""

import numpy as np
from hypothesis import strategies as st

from rfield.smearing import TestFunction


def vec(d, lo, hi):
    return st.lists(st.floats(lo, hi), min_size=d, max_size=d)


@st.composite
def packets(draw, d=None, time=False):
    d = d or draw(st.integers(1, 3))
    return TestFunction(
        draw(vec(d, -3.0, 3.0)),
        draw(st.floats(0.5, 2.0)),
        draw(vec(d, -2.0, 2.0)),
        draw(st.floats(0.2, 3.0)),
        draw(st.floats(-2.0, 2.0)) if time else 0.0,
    )


@st.composite
def packet_pairs(draw, time=False):
    d = draw(st.integers(1, 3))
    return draw(packets(d, time)), draw(packets(d, time))


def random_packet(rng: np.random.Generator, d: int, time=0.0, spread=3.0) -> TestFunction:
    return TestFunction(
        rng.uniform(-spread, spread, d),
        rng.uniform(0.5, 2.0),
        rng.uniform(-2.0, 2.0, d),
        rng.uniform(0.2, 3.0),
        time,
    )
