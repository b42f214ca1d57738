"""Dense float64 helpers: products, activations, softmax and seeded draws.

Matrices and vectors are plain ``numpy.ndarray`` objects of dtype float64;
the functions here add the shape contracts the models rely on.
"""
from __future__ import annotations

import zlib

import numpy as np

from .errors import ContractError

DTYPE = np.float64


def as_vector(v) -> np.ndarray:
    v = np.asarray(v, dtype=DTYPE)
    if v.ndim != 1:
        raise ContractError(f"expected a vector, got shape {v.shape}")
    return v


def matvec(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    if m.ndim != 2 or v.ndim != 1 or m.shape[1] != v.shape[0]:
        raise ContractError(f"matvec shape mismatch: {m.shape} @ {v.shape}")
    return m @ v


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape != b.shape:
        raise ContractError(f"hadamard shape mismatch: {a.shape} vs {b.shape}")
    return a * b


def sigmoid(x):
    # exp of a non-positive argument only, so large |x| saturates without overflow
    x = np.asarray(x, dtype=DTYPE)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def tanh(x):
    return np.tanh(np.asarray(x, dtype=DTYPE))


_ACTIVATIONS = {"sigmoid": sigmoid, "tanh": tanh}


def activation(kind: str, v):
    try:
        return _ACTIVATIONS[kind](v)
    except KeyError:
        raise ContractError(f"unknown activation {kind!r}") from None


def activation_grad(kind: str, y):
    """Derivative of ``activation(kind, x)`` expressed through its output ``y``."""
    if kind == "sigmoid":
        return y * (1.0 - y)
    if kind == "tanh":
        return 1.0 - y * y
    raise ContractError(f"unknown activation {kind!r}")


def softmax(u, axis: int = -1) -> np.ndarray:
    u = np.asarray(u, dtype=DTYPE)
    z = np.exp(u - np.max(u, axis=axis, keepdims=True))
    return z / np.sum(z, axis=axis, keepdims=True)


def logsumexp(a, axis=None) -> np.ndarray:
    a = np.asarray(a, dtype=DTYPE)
    m = np.max(a, axis=axis, keepdims=True)
    out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return np.squeeze(out, axis=axis) if axis is not None else out.reshape(())[()]


class Rng:
    """Seeded PCG64 stream with named, order-independent sub-streams.

    ``Rng(7).child("fwd")`` always yields the same draws no matter how many
    other children were created or consumed first.
    """

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        if seed < 0:
            raise ContractError("seed must be non-negative")
        self.seed = int(seed)
        self.path = tuple(path)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def child(self, name: str) -> "Rng":
        return Rng(self.seed, self.path + (zlib.crc32(name.encode("utf-8")),))

    def uniform(self, low, high, size=None):
        return self._gen.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def permutation(self, n):
        return self._gen.permutation(n)

    def random(self, size=None):
        return self._gen.random(size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def choice(self, a, size=None, replace=True, p=None):
        return self._gen.choice(a, size=size, replace=replace, p=p)


def glorot_uniform(rng: Rng, rows: int, cols: int) -> np.ndarray:
    r = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-r, r, size=(rows, cols))


# Central differences at step 1e-5 carry a truncation error near 1e-11, so
# entries smaller than this floor are compared on an absolute scale.
GRAD_FLOOR = 1e-4


def relative_error(analytic, numeric, floor: float = GRAD_FLOOR) -> np.ndarray:
    """Elementwise |a - n| / max(|a|, |n|, floor); 0/0 is 0 when floor is 0."""
    a, n = np.asarray(analytic, dtype=DTYPE), np.asarray(numeric, dtype=DTYPE)
    den = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    diff = np.abs(a - n)
    return np.where(den > 0, diff / np.where(den > 0, den, 1.0), 0.0)


def central_difference(f, theta: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Numerical gradient of scalar ``f()`` w.r.t. ``theta``, perturbed in place."""
    grad = np.zeros_like(theta)
    for idx in np.ndindex(theta.shape):
        old = theta[idx]
        theta[idx] = old + eps
        up = f()
        theta[idx] = old - eps
        down = f()
        theta[idx] = old
        grad[idx] = (up - down) / (2 * eps)
    return grad
