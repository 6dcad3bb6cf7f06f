"""Differentiable primitives on float32 tensors.

Every op takes the tape first (pass None for inference: no graph is built),
checks shapes up front, computes the forward result with plain numpy, and
records a closure that scatters output gradients back to its inputs.
Reductions use numpy's fixed left-to-right summation order, so repeated runs
are bit-identical.
"""
from __future__ import annotations

import numpy as np

from .tensor import ShapeError, Tape, Tensor, accumulate, as_tensor


def _emit(tape: Tape | None, data: np.ndarray, inputs, backward_fn) -> Tensor:
    out = Tensor(data, dtype=np.asarray(data).dtype)
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        tape.record((out,), backward_fn)
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise


def add(tape, a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data + b.data

    def bwd(gs):
        accumulate(a, _unbroadcast(gs[0], a.shape))
        accumulate(b, _unbroadcast(gs[0], b.shape))

    return _emit(tape, data, (a, b), bwd)


def mul(tape, a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data * b.data

    def bwd(gs):
        accumulate(a, _unbroadcast(gs[0] * b.data, a.shape))
        accumulate(b, _unbroadcast(gs[0] * a.data, b.shape))

    return _emit(tape, data, (a, b), bwd)


def scale(tape, a, k: float) -> Tensor:
    a = as_tensor(a)
    k = float(k)
    data = a.data * np.float32(k)

    def bwd(gs):
        accumulate(a, gs[0] * np.float32(k))

    return _emit(tape, data, (a,), bwd)


def sub(tape, a, b) -> Tensor:
    return add(tape, a, scale(tape, b, -1.0))


def square(tape, a) -> Tensor:
    return mul(tape, a, a)


def relu(tape, x) -> Tensor:
    x = as_tensor(x)
    data = np.maximum(x.data, 0.0)

    def bwd(gs):
        accumulate(x, gs[0] * (x.data > 0.0))

    return _emit(tape, data, (x,), bwd)


def sigmoid(tape, x) -> Tensor:
    x = as_tensor(x)
    data = _sigmoid_np(x.data)

    def bwd(gs):
        accumulate(x, gs[0] * data * (1.0 - data))

    return _emit(tape, data, (x,), bwd)


def _sigmoid_np(x: np.ndarray) -> np.ndarray:
    # clip keeps exp() finite in float32; saturation is exact there anyway
    z = np.clip(x, -60.0, 60.0)
    return np.where(z >= 0.0, 1.0 / (1.0 + np.exp(-z)), np.exp(z) / (1.0 + np.exp(z))).astype(x.dtype)


def tanh(tape, x) -> Tensor:
    x = as_tensor(x)
    data = np.tanh(x.data)

    def bwd(gs):
        accumulate(x, gs[0] * (1.0 - data * data))

    return _emit(tape, data, (x,), bwd)


def log(tape, x) -> Tensor:
    x = as_tensor(x)
    data = np.log(x.data)

    def bwd(gs):
        accumulate(x, gs[0] / x.data)

    return _emit(tape, data, (x,), bwd)


def exp(tape, x) -> Tensor:
    x = as_tensor(x)
    data = np.exp(x.data)

    def bwd(gs):
        accumulate(x, gs[0] * data)

    return _emit(tape, data, (x,), bwd)


def clamp(tape, x, lo: float, hi: float) -> Tensor:
    x = as_tensor(x)
    data = np.clip(x.data, lo, hi)
    mask = ((x.data >= lo) & (x.data <= hi)).astype(x.data.dtype)

    def bwd(gs):
        accumulate(x, gs[0] * mask)

    return _emit(tape, data, (x,), bwd)


# ---------------------------------------------------------------------------
# shape plumbing


def reshape(tape, x, shape) -> Tensor:
    x = as_tensor(x)
    data = x.data.reshape(shape)

    def bwd(gs):
        accumulate(x, gs[0].reshape(x.shape))

    return _emit(tape, data, (x,), bwd)


def concat(tape, parts, axis: int = -1) -> Tensor:
    parts = [as_tensor(p) for p in parts]
    data = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.shape[axis] for p in parts]

    def bwd(gs):
        offset = 0
        for p, n in zip(parts, sizes):
            idx = [slice(None)] * gs[0].ndim
            idx[axis] = slice(offset, offset + n)
            accumulate(p, gs[0][tuple(idx)])
            offset += n

    return _emit(tape, data, parts, bwd)


# ---------------------------------------------------------------------------
# reductions


def reduce_sum(tape, x, axis=None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    data = x.data.sum(axis=axis, keepdims=keepdims, dtype=x.data.dtype)
    data = np.asarray(data, dtype=x.data.dtype)

    def bwd(gs):
        g = gs[0]
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        accumulate(x, np.broadcast_to(g, x.shape).astype(x.data.dtype))

    return _emit(tape, data, (x,), bwd)


def softmax(tape, x, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    data = (e / e.sum(axis=axis, keepdims=True)).astype(x.data.dtype)

    def bwd(gs):
        dot = (gs[0] * data).sum(axis=axis, keepdims=True)
        accumulate(x, data * (gs[0] - dot))

    return _emit(tape, data, (x,), bwd)


def logsumexp(tape, x, axis: int = -1, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    m = x.data.max(axis=axis, keepdims=True)
    e = np.exp(x.data - m)
    s = e.sum(axis=axis, keepdims=True)
    data = m + np.log(s)
    weights = e / s
    if not keepdims:
        data = np.squeeze(data, axis=axis)

    def bwd(gs):
        g = gs[0] if keepdims else np.expand_dims(gs[0], axis)
        accumulate(x, (weights * g).astype(x.data.dtype))

    return _emit(tape, np.asarray(data, dtype=x.data.dtype), (x,), bwd)


# ---------------------------------------------------------------------------
# dense / convolution / recurrence


def dense(tape, x, w, b=None) -> Tensor:
    x, w = as_tensor(x), as_tensor(w)
    if x.data.ndim != 2 or w.data.ndim != 2 or x.shape[1] != w.shape[0]:
        raise ShapeError(f"dense: x {x.shape} incompatible with w {w.shape}")
    data = x.data @ w.data
    if b is not None:
        b = as_tensor(b)
        if b.shape != (w.shape[1],):
            raise ShapeError(f"dense: bias {b.shape} incompatible with w {w.shape}")
        data = data + b.data

    def bwd(gs):
        accumulate(x, gs[0] @ w.data.T)
        accumulate(w, x.data.T @ gs[0])
        if b is not None:
            accumulate(b, gs[0].sum(axis=0))

    inputs = (x, w) if b is None else (x, w, b)
    return _emit(tape, data, inputs, bwd)


def _im2col(xp: np.ndarray, kh: int, kw: int, stride: int) -> np.ndarray:
    """Padded NHWC image -> [B, OH, OW, kh, kw, C] patch view (copied)."""
    v = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(1, 2))
    v = v[:, ::stride, ::stride]  # [B, OH, OW, C, kh, kw]
    return np.ascontiguousarray(v.transpose(0, 1, 2, 4, 5, 3))


def _col2im(gcols: np.ndarray, padded_shape, kh: int, kw: int, stride: int) -> np.ndarray:
    gx = np.zeros(padded_shape, dtype=gcols.dtype)
    oh, ow = gcols.shape[1], gcols.shape[2]
    for i in range(kh):
        for j in range(kw):
            gx[:, i:i + stride * oh:stride, j:j + stride * ow:stride, :] += gcols[:, :, :, i, j, :]
    return gx


def conv2d(tape, x, w, b=None, stride: int = 1, padding: int = 0) -> Tensor:
    """NHWC convolution with square stride/padding and kernel layout [kh,kw,Cin,Cout]."""
    x, w = as_tensor(x), as_tensor(w)
    if x.data.ndim != 4 or w.data.ndim != 4 or x.shape[3] != w.shape[2]:
        raise ShapeError(f"conv2d: x {x.shape} incompatible with w {w.shape}")
    kh, kw, cin, cout = w.shape
    bsz, h, wd, _ = x.shape
    oh = (h + 2 * padding - kh) // stride + 1
    ow = (wd + 2 * padding - kw) // stride + 1
    if oh < 1 or ow < 1:
        raise ShapeError(f"conv2d: x {x.shape} too small for kernel {w.shape} at stride {stride}")
    xp = np.pad(x.data, ((0, 0), (padding, padding), (padding, padding), (0, 0))) if padding else x.data
    cols = _im2col(xp, kh, kw, stride).reshape(bsz * oh * ow, kh * kw * cin)
    wmat = w.data.reshape(kh * kw * cin, cout)
    data = (cols @ wmat).reshape(bsz, oh, ow, cout)
    if b is not None:
        b = as_tensor(b)
        if b.shape != (cout,):
            raise ShapeError(f"conv2d: bias {b.shape} incompatible with w {w.shape}")
        data = data + b.data

    def bwd(gs):
        g2 = gs[0].reshape(bsz * oh * ow, cout)
        accumulate(w, (cols.T @ g2).reshape(w.shape))
        if b is not None:
            accumulate(b, gs[0].sum(axis=(0, 1, 2)))
        gcols = (g2 @ wmat.T).reshape(bsz, oh, ow, kh, kw, cin)
        gxp = _col2im(gcols, xp.shape, kh, kw, stride)
        if padding:
            gxp = gxp[:, padding:-padding, padding:-padding, :]
        accumulate(x, gxp)

    inputs = (x, w) if b is None else (x, w, b)
    return _emit(tape, data, inputs, bwd)


def conv2d_transpose(tape, x, w, b=None, stride: int = 1, padding: int = 0, out_hw=None) -> Tensor:
    """Adjoint of conv2d: kernel layout [kh,kw,Cout,Cin]; out_hw pins odd sizes."""
    x, w = as_tensor(x), as_tensor(w)
    if x.data.ndim != 4 or w.data.ndim != 4 or x.shape[3] != w.shape[3]:
        raise ShapeError(f"conv2d_transpose: x {x.shape} incompatible with w {w.shape}")
    kh, kw, cout, cin = w.shape
    bsz, h, wd, _ = x.shape
    if out_hw is None:
        out_hw = (stride * (h - 1) + kh - 2 * padding, stride * (wd - 1) + kw - 2 * padding)
    oh, ow = out_hw
    if (oh + 2 * padding - kh) // stride + 1 != h or (ow + 2 * padding - kw) // stride + 1 != wd:
        raise ShapeError(
            f"conv2d_transpose: out_hw {out_hw} inconsistent with x {x.shape} "
            f"kernel {w.shape} stride {stride} padding {padding}")

    ypad = np.zeros((bsz, oh + 2 * padding, ow + 2 * padding, cout), dtype=x.data.dtype)
    for i in range(kh):
        for j in range(kw):
            ypad[:, i:i + stride * h:stride, j:j + stride * wd:stride, :] += x.data @ w.data[i, j].T
    data = ypad[:, padding:padding + oh, padding:padding + ow, :]
    if b is not None:
        b = as_tensor(b)
        if b.shape != (cout,):
            raise ShapeError(f"conv2d_transpose: bias {b.shape} incompatible with w {w.shape}")
        data = data + b.data

    def bwd(gs):
        gpad = np.pad(gs[0], ((0, 0), (padding, padding), (padding, padding), (0, 0))) if padding else gs[0]
        gx = np.zeros(x.shape, dtype=x.data.dtype)
        gw = np.zeros(w.shape, dtype=w.data.dtype)
        for i in range(kh):
            for j in range(kw):
                gslice = gpad[:, i:i + stride * h:stride, j:j + stride * wd:stride, :]
                gx += gslice @ w.data[i, j]
                gw[i, j] = np.einsum("bhwo,bhwi->oi", gslice, x.data, optimize=True)
        accumulate(x, gx)
        accumulate(w, gw)
        if b is not None:
            accumulate(b, gs[0].sum(axis=(0, 1, 2)))

    inputs = (x, w) if b is None else (x, w, b)
    return _emit(tape, np.ascontiguousarray(data), inputs, bwd)


def lstm_cell(tape, x, h, c, wx, wh, b) -> tuple[Tensor, Tensor]:
    """One canonical gated step: gates (i, f, g, o), tanh activations.

    Returns (new hidden, new cell).  The forget-gate slice of ``b`` is
    expected to be initialised to +1.0 by the caller.
    """
    x, h, c, wx, wh, b = map(as_tensor, (x, h, c, wx, wh, b))
    hidden = h.shape[1] if h.data.ndim == 2 else 0
    if (x.data.ndim != 2 or h.data.ndim != 2 or c.shape != h.shape
            or wx.shape != (x.shape[1], 4 * hidden) or wh.shape != (hidden, 4 * hidden)
            or b.shape != (4 * hidden,)):
        raise ShapeError(
            f"lstm_cell: x {x.shape} h {h.shape} c {c.shape} wx {wx.shape} wh {wh.shape} b {b.shape}")
    z = x.data @ wx.data + h.data @ wh.data + b.data
    gi = _sigmoid_np(z[:, :hidden])
    gf = _sigmoid_np(z[:, hidden:2 * hidden])
    gg = np.tanh(z[:, 2 * hidden:3 * hidden])
    go = _sigmoid_np(z[:, 3 * hidden:])
    c_new = gf * c.data + gi * gg
    tc = np.tanh(c_new)
    h_new = go * tc

    out_h, out_c = Tensor(h_new, dtype=h_new.dtype), Tensor(c_new, dtype=c_new.dtype)
    if tape is not None and any(t.requires_grad for t in (x, h, c, wx, wh, b)):
        out_h.requires_grad = True
        out_c.requires_grad = True

        def bwd(gs):
            gh, gc_in = gs
            dc = gc_in + gh * go * (1.0 - tc * tc)
            dz = np.concatenate([
                dc * gg * gi * (1.0 - gi),
                dc * c.data * gf * (1.0 - gf),
                dc * gi * (1.0 - gg * gg),
                gh * tc * go * (1.0 - go),
            ], axis=1)
            accumulate(x, dz @ wx.data.T)
            accumulate(h, dz @ wh.data.T)
            accumulate(c, dc * gf)
            accumulate(wx, x.data.T @ dz)
            accumulate(wh, h.data.T @ dz)
            accumulate(b, dz.sum(axis=0))

        tape.record((out_h, out_c), bwd)
    return out_h, out_c
