"""Dense float32 tensors plus a recording tape for reverse-mode gradients.

Everything is kept deliberately small: a Tensor wraps a numpy float32 array
with an optional gradient slot, a Tape records the primitive ops applied in
order, and ``backward`` replays that record in reverse.  One tape per
training thread; tensors are treated as immutable once an op has consumed
them.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

MAX_RANK = 4


class ShapeError(ValueError):
    """Raised when an op receives incompatible tensor shapes."""


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: str = "", dtype=np.float32):
        arr = np.asarray(data, dtype=dtype)
        if arr.ndim > MAX_RANK:
            raise ShapeError(f"tensor rank {arr.ndim} exceeds {MAX_RANK}: shape {arr.shape}")
        self.data = arr
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        else:
            self.grad[...] = 0.0

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        tag = f" '{self.name}'" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, requires_grad={self.requires_grad})"


def parameter(data, name: str) -> Tensor:
    """A trainable tensor; its gradient slot starts at zero."""
    t = Tensor(data, requires_grad=True, name=name)
    t.zero_grad()
    return t


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def accumulate(t: Tensor, g: np.ndarray) -> None:
    """Add a gradient contribution to ``t`` (no-op for constants)."""
    if not t.requires_grad:
        return
    if g.shape != t.data.shape:
        raise ShapeError(f"gradient shape {g.shape} does not match tensor {t.data.shape}")
    if t.grad is None:
        t.grad = g.astype(t.data.dtype, copy=True)
    else:
        t.grad += g


class Tape:
    """Ordered record of primitive ops; append order is topological order."""

    def __init__(self):
        self._entries: list[tuple[tuple[Tensor, ...], Callable[[list[np.ndarray]], None]]] = []

    def record(self, outputs: Sequence[Tensor], backward_fn: Callable[[list[np.ndarray]], None]) -> None:
        self._entries.append((tuple(outputs), backward_fn))

    def __len__(self) -> int:
        return len(self._entries)


def backward(tape: Tape, loss: Tensor) -> None:
    """Populate gradients of everything on the tape that leads to ``loss``.

    Seeds d(loss)/d(loss) = 1 and walks the tape once in reverse.  Nodes
    whose outputs received no gradient are skipped (they do not reach the
    loss), which leaves unreachable parameters with their zero gradient.
    """
    if loss.data.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    accumulate(loss, np.ones_like(loss.data))
    for outputs, backward_fn in reversed(tape._entries):
        grads = [o.grad for o in outputs]
        if all(g is None for g in grads):
            continue
        backward_fn([np.zeros_like(o.data) if g is None else g for o, g in zip(outputs, grads)])
