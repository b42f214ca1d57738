"""Independent re-evaluations used as test oracles (plain loops, no shared code)."""
import itertools

import numpy as np


def sig(x):
    return 1.0 / (1.0 + np.exp(-x))


def rnn_oracle(p, x, h):
    H, d = p.W_i.shape
    out = []
    for j in range(H):
        a = sum(p.W_i[j, k] * x[k] for k in range(d)) + sum(p.U_i[j, k] * h[k] for k in range(H)) + p.b_i[j]
        out.append(sig(a))
    return np.array(out)


def lstm_oracle(p, x, h, c, variant):
    H = len(h)

    def pre(Wx, Wh, b, j):
        s = sum(Wx[j, k] * x[k] for k in range(len(x))) + sum(Wh[j, k] * h[k] for k in range(H))
        return s + (0.0 if b is None else b[j])

    hs, cs = [], []
    for j in range(H):
        ai = pre(p.W_xi, p.W_hi, p.b_i, j)
        i = np.tanh(ai) if variant == "paper" else sig(ai)
        f = sig(pre(p.W_xf, p.W_hf, p.b_f, j))
        o = sig(pre(p.W_xo, p.W_ho, p.b_o, j))
        g = np.tanh(pre(p.W_xc, p.W_hc, p.b_c, j))
        cj = f * c[j] + i * g
        cs.append(cj)
        hs.append(o * np.tanh(cj))
    return np.array(hs), np.array(cs)


def gru_oracle(p, x, h, variant):
    H = len(h)

    def dot(W, v, j):
        return sum(W[j, k] * v[k] for k in range(len(v)))

    def b(v, j):
        return 0.0 if v is None else v[j]

    r = np.array([sig(dot(p.W_xr, x, j) + dot(p.W_hr, h, j) + b(p.b_r, j)) for j in range(H)])
    z = np.array([sig(dot(p.W_xz, x, j) + dot(p.W_hz, h, j) + b(p.b_z, j)) for j in range(H)])
    rh = r * h
    out = []
    for j in range(H):
        a = dot(p.W_xh, x, j) + dot(p.W_hh, rh, j) + b(p.b_h, j)
        cand = sig(a) if variant == "paper" else np.tanh(a)
        out.append((1 - z[j]) * h[j] + z[j] * cand)
    return np.array(out)



def step_oracle(kind, p, x, h, c, variant):
    if kind == "lstm":
        return lstm_oracle(p, x, h, c, variant)
    if kind == "gru":
        return gru_oracle(p, x, h, variant), None
    return rnn_oracle(p, x, h), None


def tagger_oracle(model, ids):
    """Distributions of the bidirectional stack, one position at a time."""
    xs = [model.embedding[i] for i in ids]
    H = model.fwd.hidden_size
    T = len(xs)
    fwd, h, c = [], np.zeros(H), np.zeros(H)
    for t in range(T):
        h, c = step_oracle(model.cell_kind, model.fwd, xs[t], h, c, model.variant)
        fwd.append(h)
    bwd, h, c = [None] * T, np.zeros(H), np.zeros(H)
    for t in reversed(range(T)):
        h, c = step_oracle(model.cell_kind, model.bwd, xs[t], h, c, model.variant)
        bwd[t] = h
    out = []
    for t in range(T):
        u = np.concatenate([fwd[t], bwd[t]])
        logits = [sum(u[j] * model.softmax_w[j, k] for j in range(len(u))) for k in range(model.softmax_w.shape[1])]
        e = np.exp(np.array(logits) - max(logits))
        out.append(e / e.sum())
    return np.array(out)


def crf_brute_force(start, transition, E):
    """(log Z, best tag tuple) by enumerating every labelling."""
    T, K = E.shape
    total = 0.0
    best, best_score = None, -np.inf
    for y in itertools.product(range(K), repeat=T):
        s = start[y[0]] + sum(E[t, y[t]] for t in range(T)) + sum(transition[y[t - 1], y[t]] for t in range(1, T))
        total += np.exp(s)
        if s > best_score:  # strict: first (lexicographically lowest) maximum wins
            best, best_score = list(y), s
    return np.log(total), best, total
