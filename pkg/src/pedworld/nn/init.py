"""Seeded weight initialisers."""
from __future__ import annotations

import numpy as np

from .tensor import Tensor, parameter


def glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int, name: str) -> Tensor:
    limit = float(np.sqrt(6.0 / (fan_in + fan_out)))
    return parameter(rng.uniform(-limit, limit, size=shape).astype(np.float32), name)


def dense_params(rng, n_in: int, n_out: int, prefix: str) -> tuple[Tensor, Tensor]:
    w = glorot(rng, (n_in, n_out), n_in, n_out, f"{prefix}/w")
    b = parameter(np.zeros(n_out, np.float32), f"{prefix}/b")
    return w, b


def conv_params(rng, kh: int, kw: int, cin: int, cout: int, prefix: str) -> tuple[Tensor, Tensor]:
    w = glorot(rng, (kh, kw, cin, cout), kh * kw * cin, kh * kw * cout, f"{prefix}/w")
    b = parameter(np.zeros(cout, np.float32), f"{prefix}/b")
    return w, b


def conv_transpose_params(rng, kh: int, kw: int, cout: int, cin: int, prefix: str) -> tuple[Tensor, Tensor]:
    w = glorot(rng, (kh, kw, cout, cin), kh * kw * cin, kh * kw * cout, f"{prefix}/w")
    b = parameter(np.zeros(cout, np.float32), f"{prefix}/b")
    return w, b


def lstm_params(rng, n_in: int, hidden: int, prefix: str) -> tuple[Tensor, Tensor, Tensor]:
    """Input/recurrent kernels plus bias with the forget gate opened (+1)."""
    wx = glorot(rng, (n_in, 4 * hidden), n_in, hidden, f"{prefix}/wx")
    wh = glorot(rng, (hidden, 4 * hidden), hidden, hidden, f"{prefix}/wh")
    bias = np.zeros(4 * hidden, np.float32)
    bias[hidden:2 * hidden] = 1.0
    b = parameter(bias, f"{prefix}/b")
    return wx, wh, b
