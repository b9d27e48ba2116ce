from fractions import Fraction

import numpy as np
from hypothesis import strategies as st

from bethemix.messages import Message, pinned_message


@st.composite
def s1_messages(draw, q=None):
    """Exact messages in S1, built as convex combinations of pinned messages.

    Independent of the package samplers: every point of S1 is such a mixture.
    """
    q = draw(st.integers(3, 6)) if q is None else q
    w = draw(st.lists(st.integers(0, 12), min_size=q, max_size=q).filter(any))
    total = sum(w)
    entries = [Fraction(0)] * q
    for c, wc in enumerate(w, start=1):
        for i, x in enumerate(pinned_message(q, c).entries):
            entries[i] += Fraction(wc, total) * x
    return Message(tuple(entries))


@st.composite
def permutations(draw, q):
    return draw(st.permutations(list(range(q))))


def rng(seed=0):
    return np.random.default_rng(seed)
