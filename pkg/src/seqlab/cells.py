"""Single-timestep recurrent cells and their exact reverse-mode derivatives.

The default ``variant="paper"`` uses two non-standard activations:

* LSTM input gate uses tanh, ``i = tanh(W_xi x + W_hi h)``.  ``"standard"``
  switches it to the usual sigmoid.
* GRU candidate uses a sigmoid, ``h~ = sigmoid(W_xh x + W_hh (r * h))``.
  ``"standard"`` switches it to tanh.

No biases unless the params carry them (LSTM/GRU ``use_bias``); the vanilla
RNN always has ``b_i``.  Matrices are stored (out, in) so a step is ``W @ x``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np

from .errors import ContractError
from .numerics import Rng, activation_grad, glorot_uniform, sigmoid

VARIANTS = ("paper", "standard")


def _check_variant(variant):
    if variant not in VARIANTS:
        raise ContractError(f"variant must be one of {VARIANTS}, got {variant!r}")


class _Params:
    kind: ClassVar[str]
    input_names: ClassVar[tuple[str, ...]]

    def tensors(self) -> dict[str, np.ndarray]:
        """Ordered name -> array for every present (non-None) parameter."""
        out = {}
        for f in dataclasses.fields(self):
            val = getattr(self, f.name)
            if val is not None:
                out[f.name] = val
        return out

    @classmethod
    def from_tensors(cls, tensors):
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in tensors.items() if k in names})

    @property
    def hidden_size(self) -> int:
        return getattr(self, self.input_names[0]).shape[0]

    @property
    def input_size(self) -> int:
        return getattr(self, self.input_names[0]).shape[1]

    @property
    def use_bias(self) -> bool:
        return any(getattr(self, f.name) is not None for f in dataclasses.fields(self) if f.name.startswith("b_"))

    def copy(self):
        return type(self).from_tensors({k: v.copy() for k, v in self.tensors().items()})

    def validate(self):
        H, d = self.hidden_size, self.input_size
        for name, arr in self.tensors().items():
            if name.startswith("b_"):
                want = (H,)
            elif name.startswith(("W_x",)) or name == "W_i":
                want = (H, d)
            else:
                want = (H, H)
            if arr.shape != want:
                raise ContractError(f"{self.kind} param {name} has shape {arr.shape}, expected {want}")
        return self


@dataclass
class RnnParams(_Params):
    W_i: np.ndarray
    U_i: np.ndarray
    b_i: np.ndarray

    kind: ClassVar[str] = "rnn"
    input_names: ClassVar[tuple[str, ...]] = ("W_i",)

    @classmethod
    def init(cls, rng: Rng, input_size: int, hidden_size: int, use_bias: bool = True):
        # the vanilla cell always has a bias
        return cls(
            W_i=glorot_uniform(rng.child("W_i"), hidden_size, input_size),
            U_i=glorot_uniform(rng.child("U_i"), hidden_size, hidden_size),
            b_i=np.zeros(hidden_size),
        )


@dataclass
class LstmParams(_Params):
    W_xi: np.ndarray
    W_xf: np.ndarray
    W_xo: np.ndarray
    W_xc: np.ndarray
    W_hi: np.ndarray
    W_hf: np.ndarray
    W_ho: np.ndarray
    W_hc: np.ndarray
    b_i: np.ndarray | None = None
    b_f: np.ndarray | None = None
    b_o: np.ndarray | None = None
    b_c: np.ndarray | None = None

    kind: ClassVar[str] = "lstm"
    input_names: ClassVar[tuple[str, ...]] = ("W_xi", "W_xf", "W_xo", "W_xc")

    @classmethod
    def init(cls, rng: Rng, input_size: int, hidden_size: int, use_bias: bool = False):
        kw = {}
        for g in "ifoc":
            kw[f"W_x{g}"] = glorot_uniform(rng.child(f"W_x{g}"), hidden_size, input_size)
            kw[f"W_h{g}"] = glorot_uniform(rng.child(f"W_h{g}"), hidden_size, hidden_size)
            if use_bias:
                kw[f"b_{g}"] = np.zeros(hidden_size)
        return cls(**kw)


@dataclass
class GruParams(_Params):
    W_xh: np.ndarray
    W_xr: np.ndarray
    W_xz: np.ndarray
    W_hh: np.ndarray
    W_hr: np.ndarray
    W_hz: np.ndarray
    b_h: np.ndarray | None = None
    b_r: np.ndarray | None = None
    b_z: np.ndarray | None = None

    kind: ClassVar[str] = "gru"
    input_names: ClassVar[tuple[str, ...]] = ("W_xh", "W_xr", "W_xz")

    @classmethod
    def init(cls, rng: Rng, input_size: int, hidden_size: int, use_bias: bool = False):
        kw = {}
        for g in "hrz":
            kw[f"W_x{g}"] = glorot_uniform(rng.child(f"W_x{g}"), hidden_size, input_size)
            kw[f"W_h{g}"] = glorot_uniform(rng.child(f"W_h{g}"), hidden_size, hidden_size)
            if use_bias:
                kw[f"b_{g}"] = np.zeros(hidden_size)
        return cls(**kw)


PARAM_TYPES = {"rnn": RnnParams, "lstm": LstmParams, "gru": GruParams}


@dataclass
class StepCache:
    """Everything a backward step needs from its forward step."""

    kind: str
    variant: str
    x: np.ndarray
    h_prev: np.ndarray
    h: np.ndarray
    c_prev: np.ndarray | None = None
    c: np.ndarray | None = None
    tanh_c: np.ndarray | None = None
    i: np.ndarray | None = None
    f: np.ndarray | None = None
    o: np.ndarray | None = None
    g: np.ndarray | None = None
    r: np.ndarray | None = None
    z: np.ndarray | None = None
    cand: np.ndarray | None = None
    overridden: tuple[str, ...] = field(default=())


def _check_inputs(p: _Params, x, h_prev, c_prev=None):
    H = p.hidden_size
    if x.shape != (p.input_size,) or h_prev.shape != (H,):
        raise ContractError(
            f"{p.kind} step expects x{(p.input_size,)} h{(H,)}, got x{x.shape} h{h_prev.shape}")
    if c_prev is not None and c_prev.shape != (H,):
        raise ContractError(f"lstm step expects c{(H,)}, got {c_prev.shape}")


def _check_cache(cache: StepCache, p: _Params, kind: str):
    if cache.kind != kind or p.kind != kind:
        raise ContractError(f"cache of kind {cache.kind!r} used with {p.kind!r} params in {kind} backward")
    if cache.x.shape != (p.input_size,) or cache.h_prev.shape != (p.hidden_size,):
        raise ContractError("cache shapes do not match params")


def _bias(b):
    return 0.0 if b is None else b


# ---------------------------------------------------------------- vanilla RNN

def rnn_step(p: RnnParams, x_t, h_prev):
    _check_inputs(p, x_t, h_prev)
    h = sigmoid(p.W_i @ x_t + p.U_i @ h_prev + p.b_i)
    return h, StepCache("rnn", "paper", x_t, h_prev, h)


def rnn_step_backward(cache: StepCache, p: RnnParams, dh):
    _check_cache(cache, p, "rnn")
    da = dh * cache.h * (1.0 - cache.h)
    grads = {
        "W_i": np.outer(da, cache.x),
        "U_i": np.outer(da, cache.h_prev),
        "b_i": da.copy(),
    }
    return grads, p.W_i.T @ da, p.U_i.T @ da


# ----------------------------------------------------------------------- LSTM

def lstm_step(p: LstmParams, x_t, h_prev, c_prev, variant: str = "paper", gate_override=None):
    """One LSTM step.  Returns ``(h_t, c_t, cache)``.

    ``gate_override`` maps gate names (``"i"``, ``"f"``, ``"o"``) to fixed
    vectors; it is a forward-only test hook and the resulting cache cannot be
    differentiated.
    """
    _check_variant(variant)
    _check_inputs(p, x_t, h_prev, c_prev)
    a_i = p.W_xi @ x_t + p.W_hi @ h_prev + _bias(p.b_i)
    i = np.tanh(a_i) if variant == "paper" else sigmoid(a_i)
    f = sigmoid(p.W_xf @ x_t + p.W_hf @ h_prev + _bias(p.b_f))
    o = sigmoid(p.W_xo @ x_t + p.W_ho @ h_prev + _bias(p.b_o))
    g = np.tanh(p.W_xc @ x_t + p.W_hc @ h_prev + _bias(p.b_c))
    overridden = ()
    if gate_override:
        gates = {"i": i, "f": f, "o": o}
        for name, val in gate_override.items():
            gates[name] = np.broadcast_to(np.asarray(val, dtype=float), i.shape).copy()
        i, f, o = gates["i"], gates["f"], gates["o"]
        overridden = tuple(sorted(gate_override))
    c = f * c_prev + i * g
    tanh_c = np.tanh(c)
    h = o * tanh_c
    cache = StepCache("lstm", variant, x_t, h_prev, h, c_prev=c_prev, c=c, tanh_c=tanh_c,
                      i=i, f=f, o=o, g=g, overridden=overridden)
    return h, c, cache


def lstm_step_backward(cache: StepCache, p: LstmParams, dh, dc):
    """Returns ``(grads, dx, dh_prev, dc_prev)``; ``dc`` is dL/dc_t from later steps."""
    _check_cache(cache, p, "lstm")
    if cache.overridden:
        raise ContractError("cannot differentiate a step with overridden gates")
    c = cache
    do = dh * c.tanh_c
    dc_total = dc + dh * c.o * (1.0 - c.tanh_c * c.tanh_c)
    da_i = dc_total * c.g * activation_grad("tanh" if c.variant == "paper" else "sigmoid", c.i)
    da_f = dc_total * c.c_prev * c.f * (1.0 - c.f)
    da_o = do * c.o * (1.0 - c.o)
    da_c = dc_total * c.i * (1.0 - c.g * c.g)
    pre = {"i": da_i, "f": da_f, "o": da_o, "c": da_c}

    grads = {}
    dx = np.zeros_like(c.x)
    dh_prev = np.zeros_like(c.h_prev)
    for gname, da in pre.items():
        W_x = getattr(p, f"W_x{gname}")
        W_h = getattr(p, f"W_h{gname}")
        grads[f"W_x{gname}"] = np.outer(da, c.x)
        grads[f"W_h{gname}"] = np.outer(da, c.h_prev)
        dx += W_x.T @ da
        dh_prev += W_h.T @ da
        if getattr(p, f"b_{gname}") is not None:
            grads[f"b_{gname}"] = da.copy()
    # keep the declared field order so grads line up with p.tensors()
    grads = {k: grads[k] for k in p.tensors()}
    return grads, dx, dh_prev, dc_total * c.f


# ------------------------------------------------------------------------ GRU

def gru_step(p: GruParams, x_t, h_prev, variant: str = "paper"):
    """One GRU step.  Returns ``(h_t, cache)``; a single reset gate ``r``."""
    _check_variant(variant)
    _check_inputs(p, x_t, h_prev)
    r = sigmoid(p.W_xr @ x_t + p.W_hr @ h_prev + _bias(p.b_r))
    z = sigmoid(p.W_hz @ h_prev + p.W_xz @ x_t + _bias(p.b_z))
    a = p.W_xh @ x_t + p.W_hh @ (r * h_prev) + _bias(p.b_h)
    cand = sigmoid(a) if variant == "paper" else np.tanh(a)
    h = (1.0 - z) * h_prev + z * cand
    return h, StepCache("gru", variant, x_t, h_prev, h, r=r, z=z, cand=cand)


def gru_step_backward(cache: StepCache, p: GruParams, dh):
    """Returns ``(grads, dx, dh_prev)``."""
    _check_cache(cache, p, "gru")
    c = cache
    h_prev, r, z, cand = c.h_prev, c.r, c.z, c.cand
    da_h = dh * z * activation_grad("sigmoid" if c.variant == "paper" else "tanh", cand)
    da_z = dh * (cand - h_prev) * z * (1.0 - z)
    d_rh = p.W_hh.T @ da_h
    da_r = d_rh * h_prev * r * (1.0 - r)

    rh = r * h_prev
    grads = {
        "W_xh": np.outer(da_h, c.x),
        "W_xr": np.outer(da_r, c.x),
        "W_xz": np.outer(da_z, c.x),
        "W_hh": np.outer(da_h, rh),
        "W_hr": np.outer(da_r, h_prev),
        "W_hz": np.outer(da_z, h_prev),
    }
    if p.b_h is not None:
        grads["b_h"] = da_h.copy()
    if p.b_r is not None:
        grads["b_r"] = da_r.copy()
    if p.b_z is not None:
        grads["b_z"] = da_z.copy()
    dx = p.W_xh.T @ da_h + p.W_xr.T @ da_r + p.W_xz.T @ da_z
    dh_prev = dh * (1.0 - z) + d_rh * r + p.W_hr.T @ da_r + p.W_hz.T @ da_z
    return grads, dx, dh_prev
