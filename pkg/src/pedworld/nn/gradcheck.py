"""Central finite-difference verification of tape gradients."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tape, Tensor, backward


def finite_difference_check(
    fn: Callable[[Tape, Sequence[Tensor]], Tensor],
    params: Sequence[Tensor],
    h: float = 1e-3,
) -> float:
    """Max elementwise relative error between tape and central-difference grads.

    ``fn`` must build a scalar loss on the given tape from ``params``.  The
    analytic gradients come from the float32 engine; the difference-quotient
    oracle re-evaluates the same function at float64 so the reference is not
    drowned in single-precision roundoff.
    """
    tape = Tape()
    loss = fn(tape, params)
    for p in params:
        p.zero_grad()
    backward(tape, loss)
    analytic = [p.grad.copy() for p in params]

    probes = [Tensor(p.data.astype(np.float64), name=p.name, dtype=np.float64) for p in params]
    worst = 0.0
    for pi, p in enumerate(probes):
        flat = p.data.reshape(-1)
        fd = np.zeros(flat.shape, dtype=np.float64)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            hi = float(fn(None, probes).data)
            flat[i] = orig - h
            lo = float(fn(None, probes).data)
            flat[i] = orig
            fd[i] = (hi - lo) / (2.0 * h)
        a = analytic[pi].reshape(-1).astype(np.float64)
        rel = np.abs(a - fd) / (np.maximum(np.abs(a), np.abs(fd)) + 1e-4)
        worst = max(worst, float(rel.max()) if rel.size else 0.0)
    return worst
