"""Synthetic raw-text corpus where two words share exactly the same contexts."""
import itertools

from seqlab.numerics import Rng

TOPICS = 8
WORDS_PER_TOPIC = 8


def topic_words():
    return [[f"t{k}w{i}" for i in range(WORDS_PER_TOPIC)] for k in range(TOPICS)]


def identical_context_corpus(templates: int, seed: int):
    """Each template is three topic words, a slot, three more from the same
    topic; it is emitted once with "alpha" and once with "beta" in the slot,
    so the two words see identical context multisets."""
    r = Rng(seed).child("identical-context")
    words = topic_words()
    out = []
    for _ in range(templates):
        ws = words[int(r.integers(TOPICS))]
        left = [ws[int(r.integers(WORDS_PER_TOPIC))] for _ in range(3)]
        right = [ws[int(r.integers(WORDS_PER_TOPIC))] for _ in range(3)]
        out.append(left + ["alpha"] + right)
        out.append(left + ["beta"] + right)
    return out


def unrelated_pairs():
    """Word pairs drawn from different topics (never share a sentence)."""
    words = topic_words()
    return [(a, b) for k1, k2 in itertools.combinations(range(TOPICS), 2) for a in words[k1] for b in words[k2]]
