"""Linear-chain CRF over dense real-valued token features.

Each factor is log-linear::

    psi_t(y_t, y_{t-1}, x_t) = exp(transition[y_{t-1}, y_t] + emission[y_t] . f(x_t))

with ``start[y_1]`` standing in for the transition at the first position.
Features per token are ``[embedding | before-counts | after-counts | one-hot]``
with the two bag-of-words count blocks present only in the context variant.
"""
from __future__ import annotations

import copy
import logging
from dataclasses import dataclass

import numpy as np

from .corpus import Document, TaggedSequence, to_sequences
from .errors import ContractError, EmptyInputError, NumericError
from .numerics import Rng, logsumexp
from .vocab import TagSet, Vocabulary

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FeatureLayout:
    embedding_dim: int
    vocab_size: int
    context: bool
    normalize_context: bool = False

    @property
    def size(self) -> int:
        return self.embedding_dim + (3 if self.context else 1) * self.vocab_size

    def blocks(self) -> dict[str, tuple[int, int]]:
        """Name -> (start, stop) column range of each block."""
        d, V = self.embedding_dim, self.vocab_size
        out = {"embedding": (0, d)}
        at = d
        if self.context:
            out["before"] = (at, at + V)
            out["after"] = (at + V, at + 2 * V)
            at += 2 * V
        out["identity"] = (at, at + V)
        return out

    def to_dict(self) -> dict:
        return {"embedding_dim": self.embedding_dim, "vocab_size": self.vocab_size,
                "context": self.context, "normalize_context": self.normalize_context}


def featurize_sentence(tokens, vocab: Vocabulary, embeddings: np.ndarray, context: bool,
                       normalize_context: bool = False) -> np.ndarray:
    """Feature matrix (T x F) for a whole sentence."""
    ids = np.asarray(vocab.ids(tokens), dtype=np.int64)
    T, V = len(ids), len(vocab)
    if embeddings.shape[0] != V:
        raise ContractError(f"embedding rows {embeddings.shape[0]} != vocabulary size {V}")
    onehot = np.zeros((T, V))
    onehot[np.arange(T), ids] = 1.0
    blocks = [embeddings[ids]]
    if context:
        cum = np.cumsum(onehot, axis=0)
        before = cum - onehot  # strictly before t
        after = cum[-1] - cum if T else cum  # strictly after t
        if normalize_context:
            before = before / np.maximum(before.sum(axis=1, keepdims=True), 1.0)
            after = after / np.maximum(after.sum(axis=1, keepdims=True), 1.0)
        blocks += [before, after]
    blocks.append(onehot)
    return np.hstack(blocks)


def featurize(sentence, position: int, vocab: Vocabulary, embeddings: np.ndarray, context: bool,
              normalize_context: bool = False) -> np.ndarray:
    if not 0 <= position < len(sentence):
        raise ContractError(f"position {position} outside sentence of length {len(sentence)}")
    return featurize_sentence(sentence, vocab, embeddings, context, normalize_context)[position]


@dataclass
class CrfModel:
    vocab: Vocabulary
    tagset: TagSet
    embedding: np.ndarray  # |V| x d, feature source; not trained
    layout: FeatureLayout
    emission: np.ndarray  # K x F
    transition: np.ndarray  # K x K, [previous, current]
    start: np.ndarray  # K

    def __post_init__(self):
        K, F = len(self.tagset), self.layout.size
        if self.emission.shape != (K, F):
            raise ContractError(f"emission shape {self.emission.shape} != ({K}, {F})")
        if self.transition.shape != (K, K) or self.start.shape != (K,):
            raise ContractError("transition/start shapes do not match the tagset")
        if self.layout.vocab_size != len(self.vocab):
            raise ContractError("feature layout vocabulary size does not match vocabulary")
        if self.embedding.shape != (len(self.vocab), self.layout.embedding_dim):
            raise ContractError("embedding shape does not match feature layout")

    @property
    def cell_kind(self) -> str:
        return "crf" if self.layout.context else "crf-nocontext"

    @property
    def num_tags(self) -> int:
        return len(self.tagset)

    def tensors(self) -> dict[str, np.ndarray]:
        """Trainable weights (live references)."""
        return {"emission": self.emission, "transition": self.transition, "start": self.start}

    def features(self, tokens) -> np.ndarray:
        return featurize_sentence(tokens, self.vocab, self.embedding, self.layout.context,
                                  self.layout.normalize_context)

    def copy(self) -> "CrfModel":
        return copy.deepcopy(self)


def init_crf(vocab: Vocabulary, tagset: TagSet, embedding: np.ndarray, context: bool = True,
             normalize_context: bool = False) -> CrfModel:
    """Zero weights; the objective is concave so no random start is needed."""
    embedding = np.array(embedding, dtype=np.float64)
    layout = FeatureLayout(embedding.shape[1], len(vocab), context, normalize_context)
    K = len(tagset)
    return CrfModel(vocab, tagset, embedding, layout,
                    emission=np.zeros((K, layout.size)), transition=np.zeros((K, K)), start=np.zeros(K))


def _scores(model: CrfModel, features) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model.layout.size:
        raise ContractError(f"features must be T x {model.layout.size}, got {features.shape}")
    return features @ model.emission.T


def _alpha(model, E):
    T, K = E.shape
    alpha = np.empty((T, K))
    alpha[0] = model.start + E[0]
    for t in range(1, T):
        alpha[t] = E[t] + logsumexp(alpha[t - 1][:, None] + model.transition, axis=0)
    return alpha


def _beta(model, E):
    T, K = E.shape
    beta = np.zeros((T, K))
    for t in range(T - 2, -1, -1):
        beta[t] = logsumexp(model.transition + (E[t + 1] + beta[t + 1])[None, :], axis=1)
    return beta


def log_partition(model: CrfModel, features) -> float:
    """ln Z(x) by the forward recursion in log space."""
    E = _scores(model, features)
    if E.shape[0] == 0:
        raise EmptyInputError("log_partition of an empty sequence")
    return float(logsumexp(_alpha(model, E)[-1]))


def sequence_score(model: CrfModel, features, tags) -> float:
    """Unnormalised log score of one tag-id sequence."""
    E = _scores(model, features)
    tags = np.asarray(tags, dtype=np.int64)
    s = model.start[tags[0]] + E[np.arange(len(tags)), tags].sum()
    return float(s + model.transition[tags[:-1], tags[1:]].sum())


def marginals(model: CrfModel, features):
    """Unary (T x K) and pairwise ((T-1) x K x K) posterior marginals."""
    E = _scores(model, features)
    if E.shape[0] == 0:
        raise EmptyInputError("marginals of an empty sequence")
    alpha, beta = _alpha(model, E), _beta(model, E)
    log_z = logsumexp(alpha[-1])
    unary = np.exp(alpha + beta - log_z)
    pair = np.exp(alpha[:-1, :, None] + model.transition[None] + (E[1:] + beta[1:])[:, None, :] - log_z)
    return unary, pair, float(log_z)


def loglik_and_grad(model: CrfModel, features, gold_tags, l2: float = 0.0):
    """``ln p(gold | x) - l2/2 ||theta||^2`` and its gradient by tensor name.

    The gradient is observed minus expected feature counts, using
    forward-backward marginals, minus ``l2 * theta``.
    """
    features = np.asarray(features, dtype=np.float64)
    gold = np.asarray(gold_tags, dtype=np.int64)
    if features.shape[0] != gold.shape[0]:
        raise ContractError(f"{features.shape[0]} feature rows but {gold.shape[0]} tags")
    unary, pair, log_z = marginals(model, features)
    T, K = unary.shape
    observed = np.zeros((T, K))
    observed[np.arange(T), gold] = 1.0
    trans_obs = np.zeros((K, K))
    np.add.at(trans_obs, (gold[:-1], gold[1:]), 1.0)
    grads = {
        "emission": (observed - unary).T @ features,
        "transition": trans_obs - pair.sum(axis=0),
        "start": observed[0] - unary[0],
    }
    ll = sequence_score(model, features, gold) - log_z
    if l2:
        for name, theta in model.tensors().items():
            grads[name] -= l2 * theta
            ll -= 0.5 * l2 * float(np.sum(theta * theta))
    return ll, grads


def viterbi(model: CrfModel, features) -> list[int]:
    """Highest-scoring tag-id sequence; ties go to the lower tag index."""
    E = _scores(model, features)
    T, K = E.shape
    if T == 0:
        return []
    delta = model.start + E[0]
    back = np.zeros((T, K), dtype=np.int64)
    for t in range(1, T):
        cand = delta[:, None] + model.transition
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], np.arange(K)] + E[t]
    best = [int(np.argmax(delta))]
    for t in range(T - 1, 0, -1):
        best.append(int(back[t][best[-1]]))
    return best[::-1]


def predict(model: CrfModel, tokens) -> list[str]:
    if len(tokens) == 0:
        return []
    return [model.tagset.tag(k) for k in viterbi(model, model.features(tokens))]


@dataclass
class CrfTrainConfig:
    learning_rate: float = 0.05
    epochs: int = 10
    seed: int = 0
    l2: float = 1e-3
    shuffle: bool = True

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ContractError("learning_rate must be non-negative")
        if self.epochs < 1:
            raise ContractError("epochs must be >= 1")
        if self.l2 < 0:
            raise ContractError("l2 must be non-negative")


def train_crf(model: CrfModel, corpus, config: CrfTrainConfig, callback=None):
    """Stochastic gradient ascent on sum ln p(y|x) - l2/2 ||theta||^2.

    Per-sentence steps spread the penalty evenly (``l2 / N`` each).  Returns
    ``(trained_model, objective)`` with the full objective evaluated after
    each epoch.
    """
    corpus = list(corpus)
    if corpus and isinstance(corpus[0], Document):
        corpus = to_sequences(corpus, "sentence")
    if not corpus or not all(isinstance(s, TaggedSequence) for s in corpus):
        raise EmptyInputError("CRF training needs a nonempty list of sentences")
    model = model.copy()
    data = [(model.features(s.tokens), np.asarray(model.tagset.ids(s.tags), dtype=np.int64)) for s in corpus]
    N = len(data)
    order_rng = Rng(config.seed).child("crf-shuffle")
    trace = []
    for epoch in range(config.epochs):
        order = order_rng.permutation(N) if config.shuffle else range(N)
        for n in order:
            feats, gold = data[n]
            with np.errstate(over="ignore", invalid="ignore"):  # caught just below
                ll, grads = loglik_and_grad(model, feats, gold, l2=config.l2 / N)
            if not np.isfinite(ll):
                raise NumericError("non-finite CRF objective", epoch=epoch, index=int(n))
            for name, theta in model.tensors().items():
                theta += config.learning_rate * grads[name]
        trace.append(_objective(model, data, config.l2))
        log.debug("crf epoch %d objective %.6f", epoch, trace[-1])
        if callback is not None and callback(epoch, trace[-1], model):
            break
    return model, trace


def _objective(model, data, l2):
    ll = sum(sequence_score(model, f, g) - log_partition(model, f) for f, g in data)
    return ll - 0.5 * l2 * sum(float(np.sum(t * t)) for t in model.tensors().values())
