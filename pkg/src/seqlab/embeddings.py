"""Skip-gram embeddings: a small negative-sampling trainer and word2vec text I/O."""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractError, DataFormatError
from .numerics import Rng, sigmoid
from .vocab import Vocabulary

log = logging.getLogger(__name__)


@dataclass
class EmbeddingTable:
    vocab: Vocabulary  # closed vocabulary, one row per entry
    vectors: np.ndarray  # |V| x d

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.vocab):
            raise ContractError(f"{len(self.vocab)} words but vectors of shape {self.vectors.shape}")
        if self.vectors.shape[1] < 1:
            raise ContractError("embedding dimension must be positive")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.vocab)

    def __contains__(self, word) -> bool:
        return word in self.vocab

    def vector(self, word: str) -> np.ndarray:
        return self.vectors[self.vocab.index(word)]

    def cosine(self, a: str, b: str) -> float:
        u, v = self.vector(a), self.vector(b)
        return float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))


@dataclass
class SkipGramConfig:
    dim: int = 200
    window: int = 10
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    min_count: int = 1
    subsample: float = 0.0  # 0 disables frequent-word subsampling
    seed: int = 0
    dynamic_window: bool = True

    def __post_init__(self):
        if self.dim < 1 or self.window < 1 or self.negatives < 1 or self.epochs < 1:
            raise ContractError("dim, window, negatives and epochs must all be >= 1")
        if self.learning_rate <= 0:
            raise ContractError("learning_rate must be positive")


def train_skipgram(corpus: Iterable[Sequence[str]], config: SkipGramConfig, callback=None) -> EmbeddingTable:
    """Skip-gram with negative sampling; returns the center (input) vectors.

    Tokens are lowercased on ingestion.  Negatives are drawn from the unigram
    distribution raised to 0.75.  The learning rate decays linearly to 1e-4 of
    its start value.  ``callback(epoch, objective)`` receives the mean
    log-sigmoid objective after each epoch, measured on a fixed sample of
    (center, context) pairs and noise words so epochs are comparable.
    """
    sentences = [[t.lower() for t in s] for s in corpus]
    counts = Counter(t for s in sentences for t in s)
    vocab = Vocabulary.build((t for s in sentences for t in s), min_count=config.min_count, unk=None)
    if len(vocab) == 0:
        raise DataFormatError(f"no token occurs at least min_count={config.min_count} times")
    ids = [np.array([vocab.index(t) for t in s if t in vocab], dtype=np.int64) for s in sentences]
    ids = [s for s in ids if len(s)]
    freq = np.array([counts[w] for w in vocab.tokens], dtype=np.float64)
    noise = freq ** 0.75
    noise_cdf = np.cumsum(noise / noise.sum())
    noise_cdf[-1] = 1.0
    if config.subsample > 0:
        thresh = config.subsample * freq.sum()
        keep_prob = np.minimum(1.0, (np.sqrt(freq / thresh) + 1.0) * thresh / freq)
    else:
        keep_prob = np.ones(len(vocab))

    rng = Rng(config.seed)
    d = config.dim
    syn0 = rng.child("syn0").uniform(-0.5 / d, 0.5 / d, size=(len(vocab), d))
    syn1 = np.zeros((len(vocab), d))
    draw = rng.child("train")
    total_tokens = sum(len(s) for s in ids) * config.epochs
    seen = 0
    lr0 = config.learning_rate
    probe = _probe_pairs(ids, config, noise_cdf, rng.child("probe")) if callback is not None else None

    for epoch in range(config.epochs):
        for sent in ids:
            if config.subsample > 0:
                sent = sent[draw.random(len(sent)) < keep_prob[sent]]
            L = len(sent)
            for i in range(L):
                lr = max(lr0 * (1.0 - seen / total_tokens), lr0 * 1e-4)
                seen += 1
                w = int(draw.integers(1, config.window + 1)) if config.dynamic_window else config.window
                ctx = np.concatenate([sent[max(0, i - w):i], sent[i + 1:i + 1 + w]])
                if ctx.size == 0:
                    continue
                neg = np.searchsorted(noise_cdf, draw.random((ctx.size, config.negatives)), side="right")
                neg = np.minimum(neg, len(vocab) - 1)
                neg = neg[neg != ctx[:, None]]
                targets = np.concatenate([ctx, neg])
                labels = np.concatenate([np.ones(ctx.size), np.zeros(neg.size)])
                center = sent[i]
                h = syn0[center].copy()
                out = syn1[targets]
                p = sigmoid(out @ h)
                g = (labels - p) * lr
                syn0[center] = h + g @ out
                np.add.at(syn1, targets, np.outer(g, h))
        if callback is not None:
            objective = skipgram_objective(syn0, syn1, *probe)
            log.debug("skip-gram epoch %d objective %.6f", epoch, objective)
            callback(epoch, objective)
    return EmbeddingTable(vocab, syn0)


_PROBE_LIMIT = 200_000


def _probe_pairs(ids, config, noise_cdf, rng):
    centers, contexts = [], []
    for sent in ids:
        for i in range(len(sent)):
            ctx = np.concatenate([sent[max(0, i - config.window):i], sent[i + 1:i + 1 + config.window]])
            centers.append(np.full(ctx.size, sent[i]))
            contexts.append(ctx)
    centers = np.concatenate(centers) if centers else np.zeros(0, dtype=np.int64)
    contexts = np.concatenate(contexts) if contexts else np.zeros(0, dtype=np.int64)
    if centers.size > _PROBE_LIMIT:
        keep = np.sort(rng.permutation(centers.size)[:_PROBE_LIMIT])
        centers, contexts = centers[keep], contexts[keep]
    noise = np.searchsorted(noise_cdf, rng.random((centers.size, config.negatives)), side="right")
    return centers, contexts, np.minimum(noise, len(noise_cdf) - 1)


def skipgram_objective(syn0, syn1, centers, contexts, noise) -> float:
    """Mean of log sigma(v_c . u_o) and log sigma(-v_c . u_n) over the given pairs."""
    if centers.size == 0:
        return 0.0
    v = syn0[centers]
    pos = np.einsum("ij,ij->i", v, syn1[contexts])
    neg = np.einsum("ij,ikj->ik", v, syn1[noise])
    # log sigma(x) = -log(1 + exp(-x)), evaluated stably
    total = -np.logaddexp(0.0, -pos).sum() - np.logaddexp(0.0, neg).sum()
    return float(total / (pos.size + neg.size))


def save_word2vec_text(table: EmbeddingTable, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(table)} {table.dim}\n")
        for word, row in zip(table.vocab.tokens, table.vectors):
            fh.write(word + " " + " ".join(format(float(v), ".17g") for v in row) + "\n")


def load_word2vec_text(path) -> EmbeddingTable:
    """Read ``<count> <dim>`` then ``word v1 ... v_dim`` rows."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2:
            raise DataFormatError("header must be '<vocab_count> <dim>'", line=1, path=path)
        try:
            count, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise DataFormatError("header must hold two integers", line=1, path=path) from None
        if count < 0 or dim < 1:
            raise DataFormatError("header counts out of range", line=1, path=path)
        words = []
        seen = set()
        vectors = np.zeros((count, dim))
        lineno = 1
        for lineno, line in enumerate(fh, 2):
            if not line.strip():
                continue
            fields = line.split()
            n = len(words)
            if n >= count:
                raise DataFormatError(f"more rows than the header's {count}", line=lineno, path=path)
            if len(fields) != dim + 1:
                raise DataFormatError(f"expected a word and {dim} values, got {len(fields) - 1} values",
                                      line=lineno, path=path)
            try:
                vectors[n] = [float(v) for v in fields[1:]]
            except ValueError:
                raise DataFormatError("non-numeric vector component", line=lineno, path=path) from None
            if fields[0] in seen:
                raise DataFormatError(f"duplicate word {fields[0]!r}", line=lineno, path=path)
            seen.add(fields[0])
            words.append(fields[0])
    if len(words) != count:
        raise DataFormatError(f"header promises {count} rows, found {len(words)}", line=lineno, path=path)
    return EmbeddingTable(Vocabulary(words, unk=None), vectors)


def init_embedding_layer(vocab: Vocabulary, pretrained: EmbeddingTable | None, seed: int,
                         dim: int | None = None) -> np.ndarray:
    """Embedding matrix for ``vocab``.

    Words whose lowercased form is in ``pretrained`` get that row copied
    exactly; every other row (including the unknown token's) is uniform in
    [-0.5/d, 0.5/d].
    """
    if pretrained is None:
        if dim is None:
            raise ContractError("dim is required without a pretrained table")
    elif dim is not None and dim != pretrained.dim:
        raise ContractError(f"dim {dim} does not match pretrained dimension {pretrained.dim}")
    d = pretrained.dim if pretrained is not None else dim
    # draw every row first so coverage does not shift the random stream
    out = Rng(seed).child("embedding").uniform(-0.5 / d, 0.5 / d, size=(len(vocab), d))
    if pretrained is not None:
        for i, word in enumerate(vocab.tokens):
            key = word.lower()
            if key in pretrained.vocab:
                out[i] = pretrained.vectors[pretrained.vocab.index(key)]
    return out
