"""Bidirectional recurrent tagger: embedding -> two recurrent chains -> softmax.

Each token id is looked up in the embedding table, the vectors are run
left-to-right through one cell and right-to-left through another (both from
zero state), the two hidden vectors are concatenated into ``u_t`` and
``softmax(u_t @ softmax_w)`` gives the tag distribution.  There is no
softmax bias.
"""
from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field

import numpy as np

from .cells import (PARAM_TYPES, VARIANTS, gru_step, gru_step_backward, lstm_step, lstm_step_backward,
                    rnn_step, rnn_step_backward)
from .corpus import Document, TaggedSequence, to_sequences
from .embeddings import init_embedding_layer
from .errors import ContractError, EmptyInputError, NumericError
from .numerics import GRAD_FLOOR, Rng, central_difference, glorot_uniform, relative_error, softmax
from .vocab import TagSet, Vocabulary

log = logging.getLogger(__name__)

CELL_KINDS = ("rnn", "lstm", "gru")
SEQ_UNITS = ("sentence", "document")


@dataclass
class SequenceModel:
    vocab: Vocabulary
    tagset: TagSet
    embedding: np.ndarray  # |V| x d
    fwd: object  # RnnParams | LstmParams | GruParams
    bwd: object
    softmax_w: np.ndarray  # 2H x K
    cell_kind: str = "lstm"
    variant: str = "paper"
    seq_unit: str = "sentence"

    def __post_init__(self):
        if self.cell_kind not in CELL_KINDS:
            raise ContractError(f"cell_kind must be one of {CELL_KINDS}")
        if self.variant not in VARIANTS:
            raise ContractError(f"variant must be one of {VARIANTS}")
        self.fwd.validate()
        self.bwd.validate()
        H, d = self.fwd.hidden_size, self.fwd.input_size
        if self.embedding.shape != (len(self.vocab), d):
            raise ContractError(f"embedding shape {self.embedding.shape} != ({len(self.vocab)}, {d})")
        if (self.bwd.hidden_size, self.bwd.input_size) != (H, d):
            raise ContractError("forward and backward cells differ in shape")
        if self.softmax_w.shape != (2 * H, len(self.tagset)):
            raise ContractError(f"softmax_w shape {self.softmax_w.shape} != ({2 * H}, {len(self.tagset)})")

    @property
    def hidden_size(self) -> int:
        return self.fwd.hidden_size

    @property
    def embed_dim(self) -> int:
        return self.embedding.shape[1]

    @property
    def num_tags(self) -> int:
        return len(self.tagset)

    @property
    def use_bias(self) -> bool:
        return self.fwd.use_bias

    def tensors(self) -> dict[str, np.ndarray]:
        """Every trainable array by name (live references, not copies)."""
        out = {"embedding": self.embedding}
        out.update({f"fwd.{k}": v for k, v in self.fwd.tensors().items()})
        out.update({f"bwd.{k}": v for k, v in self.bwd.tensors().items()})
        out["softmax_w"] = self.softmax_w
        return out

    def copy(self) -> "SequenceModel":
        return copy.deepcopy(self)


def init_model(vocab: Vocabulary, tagset: TagSet, cell_kind: str = "lstm", hidden: int = 100, dim: int = 200,
               variant: str = "paper", use_bias: bool = False, seed: int = 0,
               embedding: np.ndarray | None = None) -> SequenceModel:
    """Fresh model.  ``embedding`` (|V| x dim) is used as-is when given,
    otherwise rows are drawn uniformly from [-0.5/dim, 0.5/dim]."""
    if cell_kind not in CELL_KINDS:
        raise ContractError(f"cell_kind must be one of {CELL_KINDS}")
    rng = Rng(seed)
    if embedding is None:
        embedding = init_embedding_layer(vocab, None, seed, dim=dim)
    else:
        embedding = np.array(embedding, dtype=np.float64)
        dim = embedding.shape[1]
    cls = PARAM_TYPES[cell_kind]
    return SequenceModel(
        vocab=vocab,
        tagset=tagset,
        embedding=embedding,
        fwd=cls.init(rng.child("fwd"), dim, hidden, use_bias=use_bias),
        bwd=cls.init(rng.child("bwd"), dim, hidden, use_bias=use_bias),
        softmax_w=glorot_uniform(rng.child("softmax"), 2 * hidden, len(tagset)),
        cell_kind=cell_kind,
        variant=variant,
    )


def embed_lookup(model: SequenceModel, token_ids) -> np.ndarray:
    ids = np.asarray(token_ids, dtype=np.int64).reshape(-1)
    if ids.size and (ids.min() < 0 or ids.max() >= len(model.vocab)):
        raise ContractError(f"token id out of range for vocabulary of size {len(model.vocab)}")
    return model.embedding[ids]


@dataclass
class ForwardCache:
    ids: np.ndarray
    inputs: np.ndarray
    u: np.ndarray  # T x 2H, [h_fwd | h_bwd]
    logits: np.ndarray
    probs: np.ndarray
    fwd_steps: list = field(default_factory=list)
    bwd_steps: list = field(default_factory=list)  # in processing (right-to-left) order


def _run_chain(kind, params, xs, variant):
    H = params.hidden_size
    h = np.zeros(H)
    c = np.zeros(H)
    hs = np.empty((len(xs), H))
    caches = []
    for t, x in enumerate(xs):
        if kind == "lstm":
            h, c, cache = lstm_step(params, x, h, c, variant)
        elif kind == "gru":
            h, cache = gru_step(params, x, h, variant)
        else:
            h, cache = rnn_step(params, x, h)
        hs[t] = h
        caches.append(cache)
    return hs, caches


def _chain_backward(kind, params, caches, dhs):
    """BPTT through one chain; ``dhs[t]`` is the external gradient on h_t."""
    H = params.hidden_size
    grads = {k: np.zeros_like(v) for k, v in params.tensors().items()}
    dxs = np.empty((len(caches), params.input_size))
    dh_next = np.zeros(H)
    dc_next = np.zeros(H)
    for t in range(len(caches) - 1, -1, -1):
        dh = dhs[t] + dh_next
        if kind == "lstm":
            g, dx, dh_next, dc_next = lstm_step_backward(caches[t], params, dh, dc_next)
        elif kind == "gru":
            g, dx, dh_next = gru_step_backward(caches[t], params, dh)
        else:
            g, dx, dh_next = rnn_step_backward(caches[t], params, dh)
        for k, v in g.items():
            grads[k] += v
        dxs[t] = dx
    return grads, dxs


def forward(model: SequenceModel, token_ids):
    """Per-token tag distributions (T x K) and the cache for ``backward``."""
    ids = np.asarray(token_ids, dtype=np.int64).reshape(-1)
    if ids.size == 0:
        raise EmptyInputError("forward needs a nonempty sequence")
    xs = embed_lookup(model, ids)
    hf, fwd_steps = _run_chain(model.cell_kind, model.fwd, xs, model.variant)
    hb_rev, bwd_steps = _run_chain(model.cell_kind, model.bwd, xs[::-1], model.variant)
    u = np.hstack([hf, hb_rev[::-1]])
    logits = u @ model.softmax_w
    probs = softmax(logits, axis=1)
    return probs, ForwardCache(ids, xs, u, logits, probs, fwd_steps, bwd_steps)


def nll_loss(distributions, gold_tag_ids) -> float:
    """Mean over positions of -ln p(gold)."""
    p = np.asarray(distributions, dtype=np.float64)
    gold = np.asarray(gold_tag_ids, dtype=np.int64).reshape(-1)
    if p.ndim != 2 or p.shape[0] != gold.shape[0]:
        raise ContractError(f"{p.shape[0] if p.ndim == 2 else '?'} distributions but {gold.shape[0]} gold tags")
    if gold.size == 0:
        raise EmptyInputError("nll_loss of an empty sequence")
    if gold.min() < 0 or gold.max() >= p.shape[1]:
        raise ContractError("gold tag id out of range")
    with np.errstate(divide="ignore"):
        return float(-np.mean(np.log(p[np.arange(len(gold)), gold])))


def _nll_from_logits(logits, gold) -> float:
    m = logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(logits - m).sum(axis=1)) + m[:, 0]
    return float(np.mean(lse - logits[np.arange(len(gold)), gold]))


def backward(model: SequenceModel, cache: ForwardCache, gold_tag_ids):
    """Gradients of the mean NLL.

    Returns ``(grads, emb_ids, emb_grad)``: ``grads`` holds every tensor but
    the embedding; the embedding gradient is sparse, one row per distinct
    token id in ``emb_ids``.
    """
    gold = np.asarray(gold_tag_ids, dtype=np.int64).reshape(-1)
    T = len(cache.ids)
    if gold.shape[0] != T:
        raise ContractError(f"{T} tokens but {gold.shape[0]} gold tags")
    H = model.hidden_size
    dlogits = cache.probs.copy()
    dlogits[np.arange(T), gold] -= 1.0
    dlogits /= T
    grads = {"softmax_w": cache.u.T @ dlogits}
    du = dlogits @ model.softmax_w.T
    gf, dx_f = _chain_backward(model.cell_kind, model.fwd, cache.fwd_steps, du[:, :H])
    gb, dx_b = _chain_backward(model.cell_kind, model.bwd, cache.bwd_steps, du[::-1, H:])
    grads.update({f"fwd.{k}": v for k, v in gf.items()})
    grads.update({f"bwd.{k}": v for k, v in gb.items()})
    dxs = dx_f + dx_b[::-1]
    emb_ids, inverse = np.unique(cache.ids, return_inverse=True)
    emb_grad = np.zeros((len(emb_ids), model.embed_dim))
    np.add.at(emb_grad, inverse, dxs)
    return grads, emb_ids, emb_grad


def loss_and_grad(model: SequenceModel, token_ids, gold_tag_ids):
    _, cache = forward(model, token_ids)
    gold = np.asarray(gold_tag_ids, dtype=np.int64)
    if gold.shape[0] != len(cache.ids):
        raise ContractError(f"{len(cache.ids)} tokens but {gold.shape[0]} gold tags")
    loss = _nll_from_logits(cache.logits, gold)
    return (loss, *backward(model, cache, gold))


def predict_ids(model: SequenceModel, token_ids) -> list[int]:
    if len(token_ids) == 0:
        return []
    probs, _ = forward(model, token_ids)
    # np.argmax returns the first maximum, i.e. the lowest tag index on ties
    return [int(k) for k in np.argmax(probs, axis=1)]


def predict(model: SequenceModel, tokens) -> list[str]:
    """Most likely tag per token; unknown words go through the unknown row."""
    return [model.tagset.tag(k) for k in predict_ids(model, model.vocab.ids(tokens))]


# ------------------------------------------------------------------ training

@dataclass
class TrainConfig:
    learning_rate: float = 0.5
    epochs: int = 10
    seed: int = 0
    clip_norm: float | None = 5.0
    seq_unit: str = "sentence"
    shuffle: bool = True

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ContractError("learning_rate must be non-negative")
        if self.epochs < 1:
            raise ContractError("epochs must be >= 1")
        if self.clip_norm is not None and not self.clip_norm > 0:
            raise ContractError("clip_norm must be positive")
        if self.seq_unit not in SEQ_UNITS:
            raise ContractError(f"seq_unit must be one of {SEQ_UNITS}")


def encode_sequences(model: SequenceModel, sequences):
    return [(np.asarray(model.vocab.ids(s.tokens), dtype=np.int64),
             np.asarray(model.tagset.ids(s.tags), dtype=np.int64)) for s in sequences]


def _as_sequences(corpus, unit):
    corpus = list(corpus)
    if corpus and isinstance(corpus[0], Document):
        return to_sequences(corpus, unit)
    if all(isinstance(s, TaggedSequence) for s in corpus):
        return corpus
    raise ContractError("corpus must be a list of Documents or TaggedSequences")


def sgd_step(model: SequenceModel, grads, emb_ids, emb_grad, lr, clip_norm=None):
    if clip_norm is not None:
        sq = sum(float(np.sum(g * g)) for g in grads.values()) + float(np.sum(emb_grad * emb_grad))
        norm = np.sqrt(sq)
        if norm > clip_norm:
            scale = clip_norm / norm
            lr = lr * scale
    tensors = model.tensors()
    for name, g in grads.items():
        tensors[name] -= lr * g
    # only rows of tokens present in the sequence are touched
    model.embedding[emb_ids] -= lr * emb_grad


def train(model: SequenceModel, corpus, config: TrainConfig, callback=None):
    """Plain per-sequence SGD with BPTT.  Returns ``(trained_model, losses)``.

    ``losses[e]`` is the mean training loss seen during epoch ``e``.  The
    input model is not modified.  ``callback(epoch, loss, model)`` runs after
    each epoch; returning ``True`` stops training early.
    """
    sequences = _as_sequences(corpus, config.seq_unit)
    if not sequences:
        raise EmptyInputError("training corpus is empty")
    model = model.copy()
    model.seq_unit = config.seq_unit
    data = encode_sequences(model, sequences)
    order_rng = Rng(config.seed).child("shuffle")
    losses = []
    for epoch in range(config.epochs):
        order = order_rng.permutation(len(data)) if config.shuffle else range(len(data))
        total = 0.0
        for n in order:
            ids, gold = data[n]
            loss, grads, emb_ids, emb_grad = loss_and_grad(model, ids, gold)
            if not np.isfinite(loss):
                raise NumericError("non-finite training loss", epoch=epoch, index=int(n))
            sgd_step(model, grads, emb_ids, emb_grad, config.learning_rate, config.clip_norm)
            total += loss
        losses.append(total / len(data))
        log.debug("epoch %d loss %.6f", epoch, losses[-1])
        if callback is not None and callback(epoch, losses[-1], model):
            break
    return model, losses


# ------------------------------------------------------------ gradient check

def gradient_pair(model: SequenceModel, token_ids, gold_tag_ids, eps: float = 1e-5):
    """``(analytic, numeric)`` gradients of the mean NLL for every tensor."""
    ids = np.asarray(token_ids, dtype=np.int64)
    gold = np.asarray(gold_tag_ids, dtype=np.int64)
    model = model.copy()
    _, analytic, emb_ids, emb_grad = loss_and_grad(model, ids, gold)
    dense_emb = np.zeros_like(model.embedding)
    dense_emb[emb_ids] = emb_grad
    analytic["embedding"] = dense_emb

    def f():
        _, cache = forward(model, ids)
        return _nll_from_logits(cache.logits, gold)

    numeric = {name: central_difference(f, theta, eps) for name, theta in model.tensors().items()}
    return analytic, numeric


def gradient_errors(model: SequenceModel, token_ids, gold_tag_ids, eps: float = 1e-5,
                    floor: float = GRAD_FLOOR) -> dict[str, float]:
    """Worst relative error per tensor between BPTT and central differences."""
    analytic, numeric = gradient_pair(model, token_ids, gold_tag_ids, eps)
    return {name: float(relative_error(analytic[name], numeric[name], floor).max(initial=0.0))
            for name in numeric}


def grad_check(model: SequenceModel, sample, eps: float = 1e-5, floor: float = GRAD_FLOOR) -> float:
    """Max relative error over all parameters; ``sample`` is ``(token_ids, gold_ids)``."""
    ids, gold = sample
    return max(gradient_errors(model, ids, gold, eps, floor).values())
