"""Dense float64 primitives shared by the plain and decomposed forward passes.

Vectors and matrices are plain ``numpy.ndarray`` objects (1-D and 2-D,
``float64``). Helpers here validate shapes eagerly so downstream code can
assume they hold.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf, expit

DEFAULT_LN_EPS = 1e-5

ACTIVATION_KINDS = ("sigmoid", "tanh", "gelu")


def as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    return v


def as_matrix(x) -> np.ndarray:
    m = np.asarray(x, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    return m


def matvec(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    if m.ndim != 2 or v.ndim != 1:
        raise ValueError(f"matvec needs a matrix and a vector, got {m.shape} / {v.shape}")
    if m.shape[1] != v.shape[0]:
        raise ValueError(f"matvec dimension mismatch: {m.shape} x {v.shape}")
    return m @ v


def sigmoid(v: np.ndarray) -> np.ndarray:
    return expit(v)


def gelu(v: np.ndarray) -> np.ndarray:
    # Exact erf form x * Phi(x), not the tanh approximation.
    return v * 0.5 * (1.0 + erf(v / np.sqrt(2.0)))


_ACTIVATIONS = {
    "sigmoid": sigmoid,
    "tanh": np.tanh,
    "gelu": gelu,
}


def activation(kind: str, v: np.ndarray) -> np.ndarray:
    try:
        fn = _ACTIVATIONS[kind]
    except KeyError:
        raise ValueError(f"unknown activation {kind!r}, expected one of {ACTIVATION_KINDS}")
    return fn(np.asarray(v, dtype=np.float64))


def softmax(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    shifted = v - np.max(v)
    e = np.exp(shifted)
    return e / e.sum()


def layer_norm(a: np.ndarray, alpha: np.ndarray, delta: np.ndarray, eps: float = DEFAULT_LN_EPS) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if alpha.shape != a.shape or delta.shape != a.shape:
        raise ValueError(
            f"layer_norm parameter shapes {alpha.shape}/{delta.shape} do not match input {a.shape}"
        )
    if eps <= 0:
        raise ValueError("layer_norm eps must be positive")
    mu = a.mean()
    var = np.mean((a - mu) ** 2)
    return alpha * (a - mu) / np.sqrt(var + eps) + delta
