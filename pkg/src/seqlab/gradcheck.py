"""Finite-difference verification of every backward pass.

Each check builds a small seeded instance, computes the analytic gradient and
compares it against central differences entry by entry.  Results are the
worst relative error (see :func:`seqlab.numerics.relative_error`).
"""
from __future__ import annotations

from dataclasses import dataclass

from . import cells as C
from .crf import init_crf, loglik_and_grad
from .model import gradient_pair, init_model
from .numerics import GRAD_FLOOR, Rng, central_difference, relative_error
from .vocab import TagSet, Vocabulary

EPS = 1e-5
TOLERANCE = 1e-6
ARCHES = ("rnn", "lstm", "gru", "crf")


@dataclass
class CheckResult:
    name: str
    seed: int
    max_rel_error: float
    max_plain_rel_error: float  # same comparison without the small-entry floor

    @property
    def passed(self) -> bool:
        return self.max_rel_error < TOLERANCE


def _randomize(tensors: dict, rng: Rng, scale: float = 0.8):
    for name, arr in tensors.items():
        arr[...] = rng.child(name).normal(0.0, scale, arr.shape)


def _compare(analytic: dict, numeric: dict):
    worst = plain = 0.0
    for name in analytic:
        worst = max(worst, float(relative_error(analytic[name], numeric[name], GRAD_FLOOR).max(initial=0.0)))
        plain = max(plain, float(relative_error(analytic[name], numeric[name], 0.0).max(initial=0.0)))
    return worst, plain


def check_cell(kind: str, variant: str = "paper", use_bias: bool = False, seed: int = 0,
               hidden: int = 4, inputs: int = 3) -> CheckResult:
    """Single-step backward against central differences of ``w_h.h + w_c.c``."""
    rng = Rng(seed).child(f"cell/{kind}/{variant}/{use_bias}")
    params = C.PARAM_TYPES[kind].init(rng.child("init"), inputs, hidden, use_bias=use_bias)
    _randomize(params.tensors(), rng.child("params"))
    x = rng.child("x").normal(0.0, 1.0, inputs)
    h = rng.child("h").normal(0.0, 0.5, hidden)
    c = rng.child("c").normal(0.0, 0.5, hidden)
    w_h = rng.child("wh").normal(0.0, 1.0, hidden)
    w_c = rng.child("wc").normal(0.0, 1.0, hidden)

    def loss():
        if kind == "lstm":
            h1, c1, _ = C.lstm_step(params, x, h, c, variant)
            return float(w_h @ h1 + w_c @ c1)
        if kind == "gru":
            return float(w_h @ C.gru_step(params, x, h, variant)[0])
        return float(w_h @ C.rnn_step(params, x, h)[0])

    if kind == "lstm":
        _, _, cache = C.lstm_step(params, x, h, c, variant)
        grads, dx, dh, dc = C.lstm_step_backward(cache, params, w_h, w_c)
        analytic = {**grads, "x": dx, "h_prev": dh, "c_prev": dc}
    elif kind == "gru":
        _, cache = C.gru_step(params, x, h, variant)
        grads, dx, dh = C.gru_step_backward(cache, params, w_h)
        analytic = {**grads, "x": dx, "h_prev": dh}
    else:
        _, cache = C.rnn_step(params, x, h)
        grads, dx, dh = C.rnn_step_backward(cache, params, w_h)
        analytic = {**grads, "x": dx, "h_prev": dh}

    wrt = {**params.tensors(), "x": x, "h_prev": h}
    if kind == "lstm":
        wrt["c_prev"] = c
    numeric = {name: central_difference(loss, arr, EPS) for name, arr in wrt.items()}
    name = f"cell:{kind}" + (f"/{variant}" if kind != "rnn" else "") + ("/bias" if use_bias and kind != "rnn" else "")
    return CheckResult(name, seed, *_compare(analytic, numeric))


def check_model(kind: str, variant: str = "paper", use_bias: bool = False, seed: int = 0,
                hidden: int = 3, dim: int = 3, length: int = 4) -> CheckResult:
    """Whole bidirectional stack: BPTT of the mean NLL, every tensor."""
    rng = Rng(seed).child(f"model/{kind}/{variant}/{use_bias}")
    vocab = Vocabulary(["a", "b", "c", "d"])
    tagset = TagSet(["O", "B-X", "I-X"])
    model = init_model(vocab, tagset, kind, hidden=hidden, dim=dim, variant=variant, use_bias=use_bias, seed=seed)
    _randomize(model.tensors(), rng.child("params"))
    ids = rng.child("ids").integers(0, len(vocab), length)
    gold = rng.child("gold").integers(0, len(tagset), length)
    analytic, numeric = gradient_pair(model, ids, gold, EPS)
    name = f"model:bi{kind}/{variant}" + ("/bias" if use_bias else "")
    return CheckResult(name, seed, *_compare(analytic, numeric))


def check_crf(context: bool = True, seed: int = 0, l2: float = 0.01, dim: int = 3, length: int = 4) -> CheckResult:
    """CRF log-likelihood (with L2 term) against central differences."""
    rng = Rng(seed).child(f"crf/{context}")
    vocab = Vocabulary(["a", "b", "c", "d"])
    tagset = TagSet(["O", "B-X", "I-X"])
    emb = rng.child("emb").normal(0.0, 1.0, (len(vocab), dim))
    model = init_crf(vocab, tagset, emb, context=context)
    _randomize(model.tensors(), rng.child("params"), scale=0.5)
    tokens = [vocab.token(int(i)) for i in rng.child("tokens").integers(0, len(vocab), length)]
    feats = model.features(tokens)
    gold = rng.child("gold").integers(0, len(tagset), length)
    _, analytic = loglik_and_grad(model, feats, gold, l2=l2)
    numeric = {name: central_difference(lambda: loglik_and_grad(model, feats, gold, l2=l2)[0], arr, EPS)
               for name, arr in model.tensors().items()}
    return CheckResult("crf:" + ("context" if context else "nocontext"), seed, *_compare(analytic, numeric))


def suite(arches=ARCHES, seeds=range(10)) -> list[CheckResult]:
    """Every check for the requested architectures over the given seeds."""
    out = []
    for seed in seeds:
        for arch in arches:
            if arch == "crf":
                out += [check_crf(True, seed), check_crf(False, seed)]
                continue
            variants = ("paper",) if arch == "rnn" else C.VARIANTS
            biases = (True,) if arch == "rnn" else (False, True)
            for variant in variants:
                for use_bias in biases:
                    out.append(check_cell(arch, variant, use_bias, seed))
                    out.append(check_model(arch, variant, use_bias, seed))
    return out
