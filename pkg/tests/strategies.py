"""Hypothesis strategies shared by the tagscheme tests and the acceptance suite."""
from hypothesis import strategies as st

from seqlab.tagscheme import EntitySpan

LABELS = ["Drug", "Dose", "X", "Y"]


@st.composite
def span_sets(draw, max_length=20):
    """A length and a sorted list of non-overlapping spans within it."""
    length = draw(st.integers(0, max_length))
    spans, at = [], 0
    while at < length:
        gap = draw(st.integers(0, 3))
        start = at + gap
        if start >= length:
            break
        end = draw(st.integers(start + 1, min(length, start + 4)))
        spans.append(EntitySpan(start, end, draw(st.sampled_from(LABELS))))
        at = end
    return length, spans


def tag_strings():
    return st.sampled_from(["O"] + [f"{p}-{lab}" for p in "BI" for lab in LABELS])


def tag_sequences(max_length=20):
    return st.lists(tag_strings(), max_size=max_length)
